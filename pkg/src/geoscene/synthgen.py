"""Deterministic synthetic scenes with analytically known geometric relations.

Ground-truth triplets are produced by a naive, comparison-based
reimplementation of the bucket rules (no arctangent, no square roots in the
classifications), kept here solely to cross-check the main geometry module.

The seeded generator is splitmix64 (Vigna's constants; seed 0 produces
0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, ... per the published reference
vectors), so identical specs yield byte-identical dumps on any platform.
Draw order: per object in id order, layout coordinates (random layout only:
width, height, x, y) then a detection score; per ground-truth triplet, one
drop decision. Kept model triplets are the ground-truth triplets verbatim,
so a drop rate of zero reproduces the ground truth exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import LayoutOverflow
from .geometry import BucketMode, Direction, Proximity, RefBoxMode
from .model import (
    BoundingBox,
    ObjectInstance,
    PredicateVocabulary,
    SceneGraph,
    Triplet,
)
from .refine import DIRECTION_PREDICATE, PROXIMITY_PREDICATE, resolve_bucket_predicate

_MASK64 = (1 << 64) - 1

# Grid geometry: 180x135 boxes (half-diagonal 112.5) on a 100x96 pitch.
# Lateral/vertical neighbours sit well inside the near threshold, diagonal
# neighbours well outside, and the unequal pitches keep every pair angle
# off the +-45/+-135 bucket boundaries.
_GRID_BOX_W = 180.0
_GRID_BOX_H = 135.0
_GRID_PITCH_X = 100.0
_GRID_PITCH_Y = 96.0

_LABELS = ("person", "car", "dog", "tree", "chair", "bike", "horse", "table")


class SplitMix64:
    """splitmix64 PRNG; tiny, portable, with published reference outputs."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()


class Layout(Enum):
    GRID = "grid"
    UNIFORM_RANDOM = "random"


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one reproducible synthetic scene."""

    seed: int
    n_objects: int
    canvas: tuple[int, int] = (800, 800)
    layout: Layout = Layout.GRID
    drop_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.n_objects < 1:
            raise ValueError(f"n_objects must be >= 1, got {self.n_objects}")
        if self.canvas[0] <= 0 or self.canvas[1] <= 0:
            raise ValueError(f"canvas must be positive, got {self.canvas}")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError(f"drop_rate {self.drop_rate} outside [0, 1]")


def naive_direction(
    box_i: BoundingBox, box_j: BoundingBox, bucket_mode: BucketMode = BucketMode.CORRECTED
) -> Direction:
    """Quadrant test by sign comparisons only; no trigonometry involved.

    In image coordinates the four half-open angle intervals correspond to:
    right: dx > 0 and -dx < dy <= dx; down-quadrant (45, 135]: dy > 0 and
    -dy <= dx < dy; top-quadrant (-135, -45]: dy < 0 and dy < dx <= -dy;
    everything else is the left quadrant.
    """
    dx = (box_j.x_min + box_j.x_max) / 2.0 - (box_i.x_min + box_i.x_max) / 2.0
    dy = (box_j.y_min + box_j.y_max) / 2.0 - (box_i.y_min + box_i.y_max) / 2.0
    if dx == 0.0 and dy == 0.0:
        return Direction.NONE
    if dx > 0.0 and -dx < dy <= dx:
        return Direction.RIGHT
    if dy > 0.0 and -dy <= dx < dy:
        return Direction.DOWN if bucket_mode is BucketMode.CORRECTED else Direction.LEFT
    if dy < 0.0 and dy < dx <= -dy:
        return Direction.TOP
    return Direction.LEFT if bucket_mode is BucketMode.CORRECTED else Direction.DOWN


def naive_proximity(
    box_i: BoundingBox, box_j: BoundingBox, ref_box_mode: RefBoxMode = RefBoxMode.SUBJECT
) -> Proximity:
    """Near/far by squared-distance comparison; square roots only for MEAN mode."""
    dx = (box_j.x_min + box_j.x_max) / 2.0 - (box_i.x_min + box_i.x_max) / 2.0
    dy = (box_j.y_min + box_j.y_max) / 2.0 - (box_i.y_min + box_i.y_max) / 2.0
    dist_sq = dx * dx + dy * dy
    if ref_box_mode is RefBoxMode.SUBJECT:
        w, h = box_i.width, box_i.height
        return Proximity.NEAR if 4.0 * dist_sq < w * w + h * h else Proximity.FAR
    half_diag = (
        math.sqrt(box_i.width ** 2 + box_i.height ** 2)
        + math.sqrt(box_j.width ** 2 + box_j.height ** 2)
    ) / 4.0
    return Proximity.NEAR if math.sqrt(dist_sq) < half_diag else Proximity.FAR


def naive_relations(
    box_i: BoundingBox,
    box_j: BoundingBox,
    bucket_mode: BucketMode = BucketMode.CORRECTED,
    ref_box_mode: RefBoxMode = RefBoxMode.SUBJECT,
) -> tuple[Proximity, Direction]:
    return (
        naive_proximity(box_i, box_j, ref_box_mode),
        naive_direction(box_i, box_j, bucket_mode),
    )


def _round6(value: float) -> float:
    return float(f"{value:.6f}")


def _grid_boxes(spec: SynthSpec) -> list[BoundingBox]:
    cols = math.ceil(math.sqrt(spec.n_objects))
    rows = math.ceil(spec.n_objects / cols)
    need_w = _GRID_BOX_W + (cols - 1) * _GRID_PITCH_X
    need_h = _GRID_BOX_H + (rows - 1) * _GRID_PITCH_Y
    if need_w > spec.canvas[0] or need_h > spec.canvas[1]:
        raise LayoutOverflow(
            f"{spec.n_objects} objects need a {need_w:.0f}x{need_h:.0f} canvas, "
            f"got {spec.canvas[0]}x{spec.canvas[1]}"
        )
    boxes = []
    for k in range(spec.n_objects):
        col, row = k % cols, k // cols
        x_min = col * _GRID_PITCH_X
        y_min = row * _GRID_PITCH_Y
        boxes.append(BoundingBox(x_min, y_min, x_min + _GRID_BOX_W, y_min + _GRID_BOX_H))
    return boxes


def _random_box(rng: SplitMix64, canvas: tuple[int, int]) -> BoundingBox:
    cw, ch = float(canvas[0]), float(canvas[1])
    w = _round6(rng.uniform(0.08 * cw, 0.35 * cw))
    h = _round6(rng.uniform(0.08 * ch, 0.35 * ch))
    x = _round6(rng.uniform(0.0, cw - w))
    y = _round6(rng.uniform(0.0, ch - h))
    return BoundingBox.from_xywh(x, y, w, h)


def generate_scene(
    spec: SynthSpec,
    vocab: PredicateVocabulary | None = None,
    bucket_mode: BucketMode = BucketMode.CORRECTED,
    ref_box_mode: RefBoxMode = RefBoxMode.SUBJECT,
) -> tuple[SceneGraph, SceneGraph]:
    """Build (model_dump, ground_truth) graphs for a spec.

    Ground truth holds the exact proximity+direction triplet for every
    ordered pair (computed by the naive reimplementation above); the model
    dump drops each of them independently with probability ``drop_rate``.
    """
    if vocab is None:
        from .model import GEOMETRIC_EXTENSION, extend_vocabulary
        from .vg_io import default_vocabulary

        vocab = extend_vocabulary(default_vocabulary(), GEOMETRIC_EXTENSION)

    rng = SplitMix64(spec.seed)
    boxes: list[BoundingBox] = [] if spec.layout is Layout.UNIFORM_RANDOM else _grid_boxes(spec)
    det_scores: list[float] = []
    for i in range(spec.n_objects):
        if spec.layout is Layout.UNIFORM_RANDOM:
            boxes.append(_random_box(rng, spec.canvas))
        det_scores.append(_round6(rng.uniform(0.6, 1.0)))

    image_id = f"synth-{spec.seed:08d}-n{spec.n_objects}-{spec.layout.value}"
    gt_objects = tuple(
        ObjectInstance(id=i, label=_LABELS[i % len(_LABELS)], box=boxes[i], score=1.0)
        for i in range(spec.n_objects)
    )
    model_objects = tuple(
        ObjectInstance(id=i, label=_LABELS[i % len(_LABELS)], box=boxes[i], score=det_scores[i])
        for i in range(spec.n_objects)
    )

    gt_triplets: list[Triplet] = []
    for i in range(spec.n_objects):
        for j in range(spec.n_objects):
            if i == j:
                continue
            proximity, direction = naive_relations(
                boxes[i], boxes[j], bucket_mode, ref_box_mode
            )
            gt_triplets.append(
                Triplet(i, resolve_bucket_predicate(vocab, PROXIMITY_PREDICATE[proximity]), j, 1.0)
            )
            if direction is not Direction.NONE:
                gt_triplets.append(
                    Triplet(i, resolve_bucket_predicate(vocab, DIRECTION_PREDICATE[direction]), j, 1.0)
                )

    model_triplets: list[Triplet] = []
    for t in gt_triplets:
        dropped = rng.random() < spec.drop_rate
        if not dropped:
            model_triplets.append(t)

    width, height = spec.canvas
    gt = SceneGraph(image_id, width, height, gt_objects, tuple(gt_triplets))
    model = SceneGraph(image_id, width, height, model_objects, tuple(model_triplets))
    return model, gt
