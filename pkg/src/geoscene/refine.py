"""Post-processing stage: compute geometric triplets and merge them into model output.

For every ordered object pair the geometry buckets yield up to two candidate
triplets (one proximity, one direction). The merge policy, per pair:

  (a) pair absent from the model's predictions: candidates are appended;
  (b) the model predicted one of the six bucket predicates, it disagrees with
      the computed bucket of the same kind, and its score is below
      ``conflict_threshold``: the model triplet is replaced by the computed one;
  (c) the model predicted a non-geometric predicate with score at or above
      ``suppress_threshold``: candidates for the pair are suppressed;
  (d) otherwise model triplets are kept and candidates appended.

Rule (c) gates additions only; a rule-(b) replacement still fires on a pair
that also carries a confident non-geometric prediction. A candidate whose
(subject, predicate, object) already exists in the scene is dropped, which
makes refinement idempotent.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CrossSceneMerge, MissingPredicate
from .geometry import BucketMode, Direction, Proximity, RefBoxMode, geometric_relations
from .model import (
    PredicateVocabulary,
    RelationCategory,
    SceneGraph,
    Triplet,
    TripletSource,
)

log = logging.getLogger(__name__)

# Bucket -> predicate query name; "top"/"down" resolve via vocabulary aliases.
DIRECTION_PREDICATE = {
    Direction.RIGHT: "right",
    Direction.TOP: "top",
    Direction.LEFT: "left",
    Direction.DOWN: "down",
}
PROXIMITY_PREDICATE = {Proximity.NEAR: "near", Proximity.FAR: "far"}
# accepted spellings per bucket, tried in order (alias first, canonical second)
_BUCKET_SPELLINGS = {
    "near": ("near",),
    "far": ("far",),
    "right": ("right",),
    "left": ("left",),
    "top": ("top", "above"),
    "down": ("down", "under"),
}


def resolve_bucket_predicate(vocab: PredicateVocabulary, name: str) -> int:
    for spelling in _BUCKET_SPELLINGS[name]:
        if vocab.contains(spelling):
            return vocab.index_of(spelling)
    raise MissingPredicate(f"vocabulary lacks geometric predicate {name!r}")


# Default score base when a scene has no model triplets to anchor against.
_SCORELESS_BASE = 0.5


@dataclass(frozen=True)
class RefineConfig:
    """Knobs for the geometric refinement stage."""

    geo_score_factor: float = 0.5
    conflict_threshold: float = 0.3
    suppress_threshold: float = 0.7
    emit_direction: bool = True
    emit_proximity: bool = True
    bucket_mode: BucketMode = BucketMode.CORRECTED
    ref_box_mode: RefBoxMode = RefBoxMode.SUBJECT

    def __post_init__(self) -> None:
        if not 0.0 < self.geo_score_factor <= 1.0:
            raise ValueError(f"geo_score_factor {self.geo_score_factor} outside (0, 1]")
        for name in ("conflict_threshold", "suppress_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} outside [0, 1]")
        if self.conflict_threshold > self.suppress_threshold:
            raise ValueError(
                f"conflict_threshold {self.conflict_threshold} exceeds "
                f"suppress_threshold {self.suppress_threshold}"
            )


@dataclass
class MergeStats:
    """Counts of what the merge did; a refinement summary for logs and the CLI."""

    added: int = 0
    replaced: int = 0
    suppressed: int = 0

    def accumulate(self, other: "MergeStats") -> None:
        self.added += other.added
        self.replaced += other.replaced
        self.suppressed += other.suppressed


def _bucket_indices(vocab: PredicateVocabulary) -> dict[int, str]:
    """Resolve the six bucket predicates to canonical indices, tagged by kind."""
    kinds = {resolve_bucket_predicate(vocab, name): "proximity" for name in PROXIMITY_PREDICATE.values()}
    kinds.update(
        {resolve_bucket_predicate(vocab, name): "direction" for name in DIRECTION_PREDICATE.values()}
    )
    return kinds


def geo_triplet_score(scene: SceneGraph, cfg: RefineConfig) -> float:
    """Derived confidence for appended triplets: a fraction of the weakest model score.

    Keeping appended scores at or below the model's minimum preserves the
    model's top-K ranking.
    """
    model_scores = [t.score for t in scene.triplets if t.source is TripletSource.MODEL]
    base = min(model_scores) if model_scores else _SCORELESS_BASE
    return cfg.geo_score_factor * base


def compute_geo_triplets(
    scene: SceneGraph,
    cfg: RefineConfig,
    vocab: PredicateVocabulary,
) -> list[Triplet]:
    """Bucketed proximity/direction triplets for every ordered object pair.

    Pairs with coincident centroids have no direction and emit proximity only.
    """
    _bucket_indices(vocab)  # fail fast on missing predicates
    score = geo_triplet_score(scene, cfg)
    objects = sorted(scene.objects, key=lambda o: o.id)
    out: list[Triplet] = []
    for subj in objects:
        for obj in objects:
            if subj.id == obj.id:
                continue
            params = geometric_relations(
                subj.box, obj.box, cfg.bucket_mode, cfg.ref_box_mode
            )
            if cfg.emit_proximity:
                out.append(
                    Triplet(
                        subject_id=subj.id,
                        predicate=resolve_bucket_predicate(vocab, PROXIMITY_PREDICATE[params.proximity]),
                        object_id=obj.id,
                        score=score,
                        source=TripletSource.GEOMETRIC,
                    )
                )
            if cfg.emit_direction and params.direction is not Direction.NONE:
                out.append(
                    Triplet(
                        subject_id=subj.id,
                        predicate=resolve_bucket_predicate(vocab, DIRECTION_PREDICATE[params.direction]),
                        object_id=obj.id,
                        score=score,
                        source=TripletSource.GEOMETRIC,
                    )
                )
    return out


def sort_merged(triplets: Iterable[Triplet]) -> list[Triplet]:
    """Deterministic output order: score descending, model before geometric on ties."""
    return sorted(
        triplets,
        key=lambda t: (
            -t.score,
            0 if t.source is TripletSource.MODEL else 1,
            t.subject_id,
            t.object_id,
            t.predicate,
        ),
    )


def merge_triplets_with_stats(
    model: Sequence[Triplet],
    geo: Sequence[Triplet],
    cfg: RefineConfig,
    vocab: PredicateVocabulary,
    valid_ids: set[int] | None = None,
) -> tuple[list[Triplet], MergeStats]:
    """Apply the merge policy and report what happened."""
    if valid_ids is not None:
        for t in list(model) + list(geo):
            if t.subject_id not in valid_ids or t.object_id not in valid_ids:
                raise CrossSceneMerge(
                    f"triplet {t.key} references objects outside the scene"
                )

    kinds = _bucket_indices(vocab)

    model_by_pair: dict[tuple[int, int], list[Triplet]] = defaultdict(list)
    for t in model:
        model_by_pair[t.pair].append(t)
    geo_by_pair: dict[tuple[int, int], list[Triplet]] = defaultdict(list)
    for t in geo:
        geo_by_pair[t.pair].append(t)

    stats = MergeStats()
    merged: list[Triplet] = []
    for pair in set(model_by_pair) | set(geo_by_pair):
        model_p = model_by_pair.get(pair, [])
        geo_p = geo_by_pair.get(pair, [])
        computed_by_kind = {kinds[g.predicate]: g for g in geo_p if g.predicate in kinds}

        suppressed = any(
            vocab.category_of(m.predicate) is not RelationCategory.GEOMETRIC
            and m.score >= cfg.suppress_threshold
            for m in model_p
        )

        kept: list[Triplet] = []
        replacements: list[Triplet] = []
        for m in model_p:
            computed = (
                computed_by_kind.get(kinds[m.predicate]) if m.predicate in kinds else None
            )
            if (
                computed is not None
                and computed.predicate != m.predicate
                and m.score < cfg.conflict_threshold
            ):
                replacements.append(computed)
                stats.replaced += 1
                continue
            kept.append(m)

        additions = [] if suppressed else list(geo_p)
        if suppressed and geo_p:
            stats.suppressed += len(geo_p)

        seen = {t.key for t in kept}
        out_p = list(kept)
        for g in replacements + additions:
            if g.key in seen:
                continue
            seen.add(g.key)
            out_p.append(g)
            stats.added += 1
        merged.extend(out_p)

    return sort_merged(merged), stats


def merge_triplets(
    model: Sequence[Triplet],
    geo: Sequence[Triplet],
    cfg: RefineConfig,
    vocab: PredicateVocabulary,
    valid_ids: set[int] | None = None,
) -> list[Triplet]:
    """Merge geometric candidates into the model's predictions (see module policy)."""
    merged, _ = merge_triplets_with_stats(model, geo, cfg, vocab, valid_ids)
    return merged


def refine_with_stats(
    scene: SceneGraph,
    cfg: RefineConfig,
    vocab: PredicateVocabulary,
) -> tuple[SceneGraph, MergeStats]:
    geo = compute_geo_triplets(scene, cfg, vocab)
    ids = {o.id for o in scene.objects}
    merged, stats = merge_triplets_with_stats(scene.triplets, geo, cfg, vocab, ids)
    log.debug(
        "refined %s: +%d added, %d replaced, %d suppressed",
        scene.image_id,
        stats.added,
        stats.replaced,
        stats.suppressed,
    )
    return scene.with_triplets(merged), stats


def refine_scene_graph(
    scene: SceneGraph,
    cfg: RefineConfig,
    vocab: PredicateVocabulary,
) -> SceneGraph:
    """Return the scene with geometric triplets merged in; objects untouched."""
    refined, _ = refine_with_stats(scene, cfg, vocab)
    return refined
