"""Scene-graph evaluation: triplet matching, Recall@K, mean Recall@K, report tables.

Three task protocols are supported. PredCls matches on object ids and the
predicate; SGCls additionally requires both object labels to be correct;
SGGen drops ids and matches boxes by IoU plus labels. Matching is greedy in
descending prediction-score order, one-to-one on both sides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import EmptyGroundTruth, ProtocolViolation
from .model import (
    BoundingBox,
    ObjectInstance,
    PredicateVocabulary,
    SceneGraph,
    Triplet,
    TripletSource,
)

log = logging.getLogger(__name__)

DEFAULT_REPORT_PREDICATES = ("above", "near", "at", "has", "wearing")


class Task(Enum):
    PREDCLS = "predcls"
    SGCLS = "sgcls"
    SGGEN = "sggen"


@dataclass(frozen=True)
class EvalMode:
    """One evaluation setting: task protocol, K, constraint, IoU threshold."""

    task: Task
    k: int
    constrained: bool = True
    iou_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold {self.iou_threshold} outside (0, 1]")


@dataclass
class EvalReport:
    """Aggregated results for one (task, K) setting."""

    per_image_recall: dict[str, float] = field(default_factory=dict)
    recall_at_k: float = 0.0
    mean_recall_at_k: float = 0.0
    per_predicate: dict[str, float] = field(default_factory=dict)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def sort_predictions(triplets: Iterable[Triplet]) -> list[Triplet]:
    """Score-descending order with a full deterministic tie-break."""
    return sorted(
        triplets,
        key=lambda t: (
            -t.score,
            t.subject_id,
            t.object_id,
            t.predicate,
            0 if t.source is TripletSource.MODEL else 1,
        ),
    )


def apply_constraint(triplets: Sequence[Triplet]) -> list[Triplet]:
    """Graph constraint: keep only the top-scored triplet per ordered pair.

    Expects the input already sorted by descending score (see
    ``sort_predictions``); the first triplet seen for a pair wins.
    """
    seen: set[tuple[int, int]] = set()
    kept: list[Triplet] = []
    for t in triplets:
        if t.pair in seen:
            continue
        seen.add(t.pair)
        kept.append(t)
    return kept


def _check_protocol(pred: SceneGraph, gt: SceneGraph, mode: EvalMode) -> None:
    if mode.task is Task.SGGEN:
        return
    gt_ids = {o.id for o in gt.objects}
    for t in pred.triplets:
        if t.subject_id not in gt_ids or t.object_id not in gt_ids:
            raise ProtocolViolation(
                f"{mode.task.value}: prediction {t.key} in image {pred.image_id!r} "
                f"references object ids absent from ground truth"
            )


def _triplet_compatible(
    p: Triplet,
    g: Triplet,
    pred_objs: dict[int, ObjectInstance],
    gt_objs: dict[int, ObjectInstance],
    mode: EvalMode,
) -> bool:
    if p.predicate != g.predicate:
        return False
    if mode.task is Task.PREDCLS:
        return p.subject_id == g.subject_id and p.object_id == g.object_id
    if mode.task is Task.SGCLS:
        if p.subject_id != g.subject_id or p.object_id != g.object_id:
            return False
        return (
            pred_objs[p.subject_id].label == gt_objs[g.subject_id].label
            and pred_objs[p.object_id].label == gt_objs[g.object_id].label
        )
    ps, po = pred_objs[p.subject_id], pred_objs[p.object_id]
    gs, go = gt_objs[g.subject_id], gt_objs[g.object_id]
    if ps.label != gs.label or po.label != go.label:
        return False
    return (
        iou(ps.box, gs.box) >= mode.iou_threshold
        and iou(po.box, go.box) >= mode.iou_threshold
    )


def _greedy_match_ranks(
    predictions: Sequence[Triplet],
    pred: SceneGraph,
    gt: SceneGraph,
    mode: EvalMode,
) -> dict[int, int]:
    """Greedy one-to-one assignment; returns gt index -> 1-based prediction rank.

    ``predictions`` must already be in evaluation order (sorted, constraint
    applied if requested). Each prediction consumes at most one gt triplet,
    scanning gt indices in ascending order.
    """
    pred_objs = pred.objects_by_id()
    gt_objs = gt.objects_by_id()
    matched: dict[int, int] = {}
    for rank, p in enumerate(predictions, start=1):
        for gi, g in enumerate(gt.triplets):
            if gi in matched:
                continue
            if _triplet_compatible(p, g, pred_objs, gt_objs, mode):
                matched[gi] = rank
                break
    return matched


def match_triplets(pred: SceneGraph, gt: SceneGraph, mode: EvalMode) -> set[int]:
    """Indices of gt triplets matched by the predictions, over the full list.

    No constraint or top-K truncation is applied here; see ``recall_at_k``
    for the protocol composition.
    """
    _check_protocol(pred, gt, mode)
    predictions = sort_predictions(pred.triplets)
    return set(_greedy_match_ranks(predictions, pred, gt, mode))


def _evaluation_order(pred: SceneGraph, mode: EvalMode) -> list[Triplet]:
    predictions = sort_predictions(pred.triplets)
    if mode.constrained:
        predictions = apply_constraint(predictions)
    return predictions


def recall_at_k(pred: SceneGraph, gt: SceneGraph, mode: EvalMode) -> float:
    """Fraction of gt triplets recovered among the top-K predictions."""
    if not gt.triplets:
        raise EmptyGroundTruth(f"image {gt.image_id!r} has no ground-truth triplets")
    _check_protocol(pred, gt, mode)
    predictions = _evaluation_order(pred, mode)[: mode.k]
    matched = _greedy_match_ranks(predictions, pred, gt, mode)
    return len(matched) / len(gt.triplets)


def _image_stats(
    pred: SceneGraph,
    gt: SceneGraph,
    mode: EvalMode,
    ks: Sequence[int],
    vocab: PredicateVocabulary,
) -> dict:
    """Per-image match ranks folded into per-K recall and per-predicate counts."""
    _check_protocol(pred, gt, mode)
    predictions = _evaluation_order(pred, mode)
    ranks = _greedy_match_ranks(predictions, pred, gt, mode)
    gt_names = [vocab.name_of(t.predicate) for t in gt.triplets]
    out: dict = {"image_id": gt.image_id, "n_gt": len(gt.triplets), "by_k": {}}
    for k in ks:
        matched = [gi for gi, rank in ranks.items() if rank <= k]
        per_pred: dict[str, list[int]] = {}
        for name in gt_names:
            per_pred.setdefault(name, [0, 0])[0] += 1
        for gi in matched:
            per_pred[gt_names[gi]][1] += 1
        out["by_k"][k] = {
            "matched": len(matched),
            "recall": len(matched) / len(gt.triplets),
            "per_predicate": per_pred,
        }
    return out


def _eval_image_worker(args: tuple) -> dict:
    pred, gt, mode, ks, vocab = args
    return _image_stats(pred, gt, mode, ks, vocab)


def evaluate_dataset(
    per_image: Sequence[tuple[SceneGraph, SceneGraph]],
    mode: EvalMode,
    ks: Sequence[int],
    vocab: PredicateVocabulary,
    average: str = "macro",
    jobs: int = 1,
) -> dict[int, EvalReport]:
    """Aggregate per-image matching into one EvalReport per K.

    Dataset R@K averages per-image recalls (``average="macro"``, the usual
    protocol) or pools matched/total counts (``"micro"``). Per-predicate
    recall always pools gt triplets dataset-wide; mR@K is the unweighted
    mean over predicates with at least one gt instance. Images without gt
    triplets are excluded. With ``jobs > 1`` images are matched in a process
    pool; results are independent of the pool size.
    """
    if average not in ("macro", "micro"):
        raise ValueError(f"average must be 'macro' or 'micro', got {average!r}")
    usable = [(p, g) for p, g in per_image if g.triplets]
    skipped = len(per_image) - len(usable)
    if skipped:
        log.info("excluded %d image(s) without ground-truth triplets", skipped)
    if not usable:
        raise EmptyGroundTruth("no image has ground-truth triplets")

    payloads = [(p, g, mode, tuple(ks), vocab) for p, g in usable]
    if jobs > 1 and len(payloads) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            stats = list(pool.map(_eval_image_worker, payloads, chunksize=8))
    else:
        stats = [_image_stats(*payload) for payload in payloads]

    reports: dict[int, EvalReport] = {}
    for k in ks:
        report = EvalReport()
        pooled_matched = 0
        pooled_total = 0
        per_pred: dict[str, list[int]] = {}
        for s in stats:
            by_k = s["by_k"][k]
            report.per_image_recall[s["image_id"]] = by_k["recall"]
            pooled_total += s["n_gt"]
            pooled_matched += by_k["matched"]
            for name, (total, matched) in by_k["per_predicate"].items():
                acc = per_pred.setdefault(name, [0, 0])
                acc[0] += total
                acc[1] += matched
        if average == "macro":
            recalls = report.per_image_recall.values()
            report.recall_at_k = sum(recalls) / len(report.per_image_recall)
        else:
            report.recall_at_k = pooled_matched / pooled_total
        report.per_predicate = {
            name: matched / total for name, (total, matched) in sorted(per_pred.items())
        }
        report.mean_recall_at_k = sum(report.per_predicate.values()) / len(
            report.per_predicate
        )
        reports[k] = report
    return reports


def mean_recall_at_k(
    per_image: Sequence[tuple[SceneGraph, SceneGraph]],
    mode: EvalMode,
    vocab: PredicateVocabulary,
    average: str = "macro",
) -> EvalReport:
    """EvalReport for the single K carried by ``mode`` (see evaluate_dataset)."""
    return evaluate_dataset(per_image, mode, [mode.k], vocab, average=average)[mode.k]


def _fmt_cell(report: EvalReport | None, predicate: str) -> str:
    if report is None:
        return "N/A"
    value = report.per_predicate.get(predicate)
    return "N/A" if value is None else f"{value * 100:.1f}"


def per_predicate_report(
    reports: Mapping[int, EvalReport],
    baseline: Mapping[int, EvalReport] | None = None,
    predicates: Sequence[str] = DEFAULT_REPORT_PREDICATES,
    vocab: PredicateVocabulary | None = None,
) -> str:
    """Aligned per-predicate recall table, one row per predicate.

    Recall is rendered in percentage points with one decimal; predicates
    without gt instances render as N/A. With a baseline, rows carry both
    column groups (baseline first); K columns follow the sorted keys of
    ``reports``.
    """
    if vocab is not None:
        for name in predicates:
            vocab.resolve(name)  # raises UnknownPredicate

    ks = sorted(reports)
    if baseline is not None and sorted(baseline) != ks:
        raise ValueError("baseline reports must cover the same K values")

    groups = [("Refined", reports)]
    if baseline is not None:
        groups.insert(0, ("Baseline", baseline))

    name_w = max([len("Predicate")] + [len(p) for p in predicates])
    cell_w = 7
    group_w = cell_w * len(ks) + 2 * (len(ks) - 1)

    header_1 = f"{'Predicate':<{name_w}}"
    header_2 = f"{'':<{name_w}}"
    for title, _ in groups:
        header_1 += f" | {title:<{group_w}}"
        header_2 += " | " + "  ".join(f"{f'R@{k}':<{cell_w}}" for k in ks)
    rule = "-" * name_w + ("-+-" + "-" * group_w) * len(groups)

    lines = [header_1.rstrip(), header_2.rstrip(), rule]
    for predicate in predicates:
        row = f"{predicate:<{name_w}}"
        for _, group in groups:
            cells = "  ".join(f"{_fmt_cell(group.get(k), predicate):<{cell_w}}" for k in ks)
            row += f" | {cells}"
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"


def per_predicate_csv_rows(
    reports: Mapping[int, EvalReport],
    baseline: Mapping[int, EvalReport] | None = None,
    predicates: Sequence[str] | None = None,
) -> list[list[str]]:
    """Rows for the delimited per-predicate table (fractions, 6 decimals)."""
    ks = sorted(reports)
    if predicates is None:
        names: set[str] = set()
        for r in reports.values():
            names.update(r.per_predicate)
        if baseline:
            for r in baseline.values():
                names.update(r.per_predicate)
        predicates = sorted(names)
    header = ["predicate"]
    if baseline is not None:
        header += [f"baseline_r@{k}" for k in ks]
    header += [f"r@{k}" for k in ks]
    rows = [header]
    for predicate in predicates:
        row = [predicate]
        if baseline is not None:
            for k in ks:
                value = baseline[k].per_predicate.get(predicate)
                row.append("" if value is None else f"{value:.6f}")
        for k in ks:
            value = reports[k].per_predicate.get(predicate)
            row.append("" if value is None else f"{value:.6f}")
        rows.append(row)
    return rows


def format_summary(
    reports: Mapping[int, EvalReport],
    task: Task,
    constrained: bool,
    iou_threshold: float,
) -> str:
    """Aligned R@K / mR@K summary for one task."""
    n_images = len(next(iter(reports.values())).per_image_recall) if reports else 0
    lines = [
        f"task={task.value} constrained={'yes' if constrained else 'no'} "
        f"iou={iou_threshold:.2f} images={n_images}",
        f"{'K':<6}{'R@K':<10}{'mR@K':<10}",
    ]
    for k in sorted(reports):
        r = reports[k]
        lines.append(f"{k:<6}{r.recall_at_k:<10.4f}{r.mean_recall_at_k:<10.4f}")
    return "\n".join(lines) + "\n"


def report_payload(
    reports: Mapping[int, EvalReport],
    task: Task,
    constrained: bool,
    iou_threshold: float,
    average: str,
) -> dict:
    """JSON-serializable structure mirroring the text summary plus per-image detail."""
    return {
        "task": task.value,
        "constrained": constrained,
        "iou_threshold": iou_threshold,
        "average": average,
        "k": {
            str(k): {
                "recall": r.recall_at_k,
                "mean_recall": r.mean_recall_at_k,
                "per_predicate": dict(r.per_predicate),
                "per_image": dict(r.per_image_recall),
            }
            for k, r in reports.items()
        },
    }
