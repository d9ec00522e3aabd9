"""Ingestion and serialization of scene dumps, vocabularies, and DOT renderings.

One JSON schema serves both ground truth and model predictions:

    {"images": [{"image_id": str, "width": int, "height": int,
                 "detections": [{"label": str, "score": float, "box": [x, y, w, h]}],
                 "triplets": [{"s": int, "p": str, "o": int, "score": float}]}]}

Triplets may carry an optional "source" ("model" | "geometric"); written
files always include it. Ground-truth loads force triplet scores to 1.0.
Output is byte-deterministic: keys sorted, floats fixed at 6 decimals.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import DegenerateBox, SchemaError, UnknownPredicate
from .model import (
    BoundingBox,
    ObjectInstance,
    PredicateVocabulary,
    SceneGraph,
    Triplet,
    TripletSource,
    vocabulary_from_json,
    vocabulary_to_json,
)

_DEFAULT_VOCAB_RESOURCE = "vg_predicates.json"


def default_vocabulary() -> PredicateVocabulary:
    """The packaged Visual Genome 50-predicate vocabulary."""
    text = resources.files("geoscene.data").joinpath(_DEFAULT_VOCAB_RESOURCE).read_text()
    return vocabulary_from_json(json.loads(text))


def load_vocabulary(path: str | Path) -> PredicateVocabulary:
    """Read a vocabulary file: JSON array of {name, category, aliases[]}."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a JSON array at /")
    try:
        return vocabulary_from_json(data)
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed vocabulary entry: {exc}") from exc


def write_vocabulary(vocab: PredicateVocabulary, path: str | Path) -> None:
    Path(path).write_text(dumps_fixed(vocabulary_to_json(vocab)) + "\n")


def _require(record: Mapping, key: str, pointer: str):
    if key not in record:
        raise SchemaError(f"missing key {key!r} at {pointer}")
    return record[key]


def _convert_image(record: Mapping, pointer: str, vocab: PredicateVocabulary,
                   ground_truth: bool) -> SceneGraph:
    image_id = str(_require(record, "image_id", pointer))
    width = _require(record, "width", pointer)
    height = _require(record, "height", pointer)

    objects = []
    for i, det in enumerate(_require(record, "detections", pointer)):
        ptr = f"{pointer}/detections/{i}"
        box = _require(det, "box", ptr)
        if not isinstance(box, (list, tuple)) or len(box) != 4:
            raise SchemaError(f"box must be [x, y, w, h] at {ptr}/box")
        try:
            bbox = BoundingBox.from_xywh(*(float(v) for v in box))
        except DegenerateBox as exc:
            raise DegenerateBox(f"image {image_id!r} at {ptr}/box: {exc}") from exc
        score = float(_require(det, "score", ptr))
        if not 0.0 <= score <= 1.0:
            raise SchemaError(f"score {score} outside [0, 1] at {ptr}/score")
        objects.append(
            ObjectInstance(id=i, label=str(_require(det, "label", ptr)), box=bbox, score=score)
        )

    triplets = []
    for i, rel in enumerate(_require(record, "triplets", pointer)):
        ptr = f"{pointer}/triplets/{i}"
        name = str(_require(rel, "p", ptr))
        try:
            predicate = vocab.index_of(name)
        except UnknownPredicate as exc:
            raise UnknownPredicate(f"image {image_id!r} at {ptr}/p: {exc}") from exc
        score = 1.0 if ground_truth else float(_require(rel, "score", ptr))
        if not 0.0 <= score <= 1.0:
            raise SchemaError(f"score {score} outside [0, 1] at {ptr}/score")
        source = TripletSource(rel.get("source", "model"))
        try:
            triplets.append(
                Triplet(
                    subject_id=int(_require(rel, "s", ptr)),
                    predicate=predicate,
                    object_id=int(_require(rel, "o", ptr)),
                    score=score,
                    source=source,
                )
            )
        except ValueError as exc:
            raise SchemaError(f"image {image_id!r} at {ptr}: {exc}") from exc

    try:
        return SceneGraph(
            image_id=image_id,
            width=int(width),
            height=int(height),
            objects=tuple(objects),
            triplets=tuple(triplets),
        )
    except ValueError as exc:
        raise SchemaError(f"image {image_id!r} at {pointer}: {exc}") from exc


def iter_scene_dump(
    path: str | Path,
    vocab: PredicateVocabulary | None = None,
    ground_truth: bool = False,
) -> Iterator[SceneGraph]:
    """Yield scene graphs one image at a time from a dump file.

    When no vocabulary is passed, the dump's optional top-level "vocab_ref"
    (a path relative to the dump file) is loaded instead.
    """
    path = Path(path)
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "images" not in data:
        raise SchemaError(f"{path}: expected an object with an 'images' array at /")
    if vocab is None:
        ref = data.get("vocab_ref")
        if ref is None:
            raise SchemaError(f"{path}: no vocabulary given and no vocab_ref at /")
        vocab = load_vocabulary(path.parent / ref)
    for i, record in enumerate(data["images"]):
        yield _convert_image(record, f"/images/{i}", vocab, ground_truth)


def load_scene_dump(
    path: str | Path, vocab: PredicateVocabulary | None = None
) -> list[SceneGraph]:
    """Read a prediction dump; see the module docstring for the schema."""
    return list(iter_scene_dump(path, vocab, ground_truth=False))


def load_ground_truth(
    path: str | Path, vocab: PredicateVocabulary | None = None
) -> list[SceneGraph]:
    """Read a ground-truth dump; triplet scores are forced to 1.0."""
    return list(iter_scene_dump(path, vocab, ground_truth=True))


def dumps_fixed(obj) -> str:
    """Deterministic JSON: sorted keys, compact separators, floats at 6 decimals."""
    if isinstance(obj, float):
        return f"{obj:.6f}"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, str)) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        items = ",".join(f"{json.dumps(k)}:{dumps_fixed(v)}" for k, v in sorted(obj.items()))
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps_fixed(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def scene_to_record(scene: SceneGraph, vocab: PredicateVocabulary) -> dict:
    id_to_index = {o.id: i for i, o in enumerate(scene.objects)}
    return {
        "image_id": scene.image_id,
        "width": scene.width,
        "height": scene.height,
        "detections": [
            {"label": o.label, "score": float(o.score), "box": [float(v) for v in o.box.as_xywh()]}
            for o in scene.objects
        ],
        "triplets": [
            {
                "s": id_to_index[t.subject_id],
                "p": vocab.name_of(t.predicate),
                "o": id_to_index[t.object_id],
                "score": float(t.score),
                "source": t.source.value,
            }
            for t in scene.triplets
        ],
    }


def write_refined(
    scenes: Iterable[SceneGraph],
    path: str | Path,
    vocab: PredicateVocabulary,
) -> None:
    """Write scenes in the dump schema; byte-stable for identical inputs."""
    payload = {"images": [scene_to_record(s, vocab) for s in scenes]}
    Path(path).write_text(dumps_fixed(payload) + "\n")


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _object_correspondence(
    pred: SceneGraph, gt: SceneGraph, iou_threshold: float = 0.5
) -> dict[int, int]:
    """Greedy pred-object -> gt-object map by label equality and IoU."""
    from .metrics import iou as box_iou

    taken: set[int] = set()
    mapping: dict[int, int] = {}
    for obj in sorted(pred.objects, key=lambda o: (-o.score, o.id)):
        best, best_iou = None, iou_threshold
        for g in gt.objects:
            if g.id in taken or g.label != obj.label:
                continue
            value = box_iou(obj.box, g.box)
            if value >= best_iou:
                best, best_iou = g.id, value
        if best is not None:
            taken.add(best)
            mapping[obj.id] = best
    return mapping


def export_dot(
    scene: SceneGraph,
    vocab: PredicateVocabulary,
    gt: SceneGraph | None = None,
) -> str:
    """Render a scene as a Graphviz digraph.

    Nodes are objects labeled with class names; edges are triplets labeled
    with predicate names. With ground truth, correctly predicted nodes and
    edges are green and missed ground-truth elements are added in red.
    """
    lines = [f'digraph "{_dot_escape(scene.image_id)}" {{']
    lines.append("  rankdir=LR;")
    lines.append("  node [shape=box];")

    matched_objects: dict[int, int] = {}
    matched_edges: set[tuple[int, int, int]] = set()
    if gt is not None:
        matched_objects = _object_correspondence(scene, gt)
        gt_index = {
            (t.subject_id, t.predicate, t.object_id): i for i, t in enumerate(gt.triplets)
        }
        taken: set[int] = set()
        for t in sorted(scene.triplets, key=lambda t: (-t.score, t.subject_id, t.object_id)):
            gs = matched_objects.get(t.subject_id)
            go = matched_objects.get(t.object_id)
            if gs is None or go is None:
                continue
            gi = gt_index.get((gs, t.predicate, go))
            if gi is not None and gi not in taken:
                taken.add(gi)
                matched_edges.add(t.key)

    for obj in scene.objects:
        label = _dot_escape(f"{obj.label} #{obj.id}")
        attrs = f'label="{label}"'
        if gt is not None and obj.id in matched_objects:
            attrs += ", color=green"
        lines.append(f"  n{obj.id} [{attrs}];")

    for t in scene.triplets:
        label = _dot_escape(vocab.name_of(t.predicate))
        attrs = f'label="{label}"'
        if gt is not None and t.key in matched_edges:
            attrs += ", color=green"
        lines.append(f"  n{t.subject_id} -> n{t.object_id} [{attrs}];")

    if gt is not None:
        matched_gt_ids = set(matched_objects.values())
        node_of_gt = {g: f"n{p}" for p, g in matched_objects.items()}
        for obj in gt.objects:
            if obj.id in matched_gt_ids:
                continue
            label = _dot_escape(f"{obj.label} #{obj.id}")
            lines.append(f'  g{obj.id} [label="{label}", color=red];')
            node_of_gt[obj.id] = f"g{obj.id}"
        matched_gt_edges = {
            (matched_objects[s], p, matched_objects[o])
            for (s, p, o) in matched_edges
        }
        for g in gt.triplets:
            if g.key in matched_gt_edges:
                continue
            label = _dot_escape(vocab.name_of(g.predicate))
            lines.append(
                f"  {node_of_gt[g.subject_id]} -> {node_of_gt[g.object_id]} "
                f'[label="{label}", color=red];'
            )

    lines.append("}")
    return "\n".join(lines) + "\n"
