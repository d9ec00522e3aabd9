"""Command-line entry point: refine, eval, synth, dot, taxonomy.

Human-readable tables go to stdout; machine output (JSON, CSV, figures)
goes to the paths named by flags. Identical invocations produce
byte-identical files. The GEOSCENE_LOG environment variable sets the log
level (e.g. DEBUG, INFO, WARNING).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from . import metrics, plots, refine, synthgen, vg_io
from .errors import GeoSceneError, ProtocolViolation
from .geometry import BucketMode, RefBoxMode
from .model import (
    GEOMETRIC_EXTENSION,
    PredicateVocabulary,
    RelationCategory,
    extend_vocabulary,
)

log = logging.getLogger("geoscene")


def _load_vocab(path: str | None) -> PredicateVocabulary:
    vocab = vg_io.load_vocabulary(path) if path else vg_io.default_vocabulary()
    return extend_vocabulary(vocab, GEOMETRIC_EXTENSION)


def _refine_config(args: argparse.Namespace) -> refine.RefineConfig:
    return refine.RefineConfig(
        geo_score_factor=args.geo_score_factor,
        conflict_threshold=args.tau_replace,
        suppress_threshold=args.tau_keep,
        bucket_mode=BucketMode.LITERAL if args.paper_literal_buckets else BucketMode.CORRECTED,
        ref_box_mode=RefBoxMode(args.ref_box),
    )


def cmd_refine(args: argparse.Namespace) -> int:
    vocab = _load_vocab(args.vocab)
    cfg = _refine_config(args)
    scenes = []
    totals = refine.MergeStats()
    for scene in vg_io.iter_scene_dump(args.dump, vocab):
        refined, stats = refine.refine_with_stats(scene, cfg, vocab)
        totals.accumulate(stats)
        scenes.append(refined)
    vg_io.write_refined(scenes, args.out, vocab)
    print(
        f"refined {len(scenes)} image(s): added={totals.added} "
        f"replaced={totals.replaced} suppressed={totals.suppressed}"
    )
    return 0


def _pair_scenes(pred_scenes, gt_scenes):
    pred_by_id = {s.image_id: s for s in pred_scenes}
    missing = [g.image_id for g in gt_scenes if g.image_id not in pred_by_id]
    if missing:
        raise ProtocolViolation(
            f"prediction dump lacks image(s): {', '.join(missing[:5])}"
        )
    return [(pred_by_id[g.image_id], g) for g in gt_scenes]


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_suffix(suffix) if path.suffix else Path(str(path) + suffix)


def cmd_eval(args: argparse.Namespace) -> int:
    vocab = _load_vocab(args.vocab)
    ks = args.k if args.k else [50, 100]
    mode = metrics.EvalMode(
        task=metrics.Task(args.task),
        k=max(ks),
        constrained=not args.no_constraint,
        iou_threshold=args.iou,
    )
    gt_scenes = vg_io.load_ground_truth(args.gt, vocab)
    pairs = _pair_scenes(vg_io.load_scene_dump(args.pred, vocab), gt_scenes)
    jobs = args.jobs if args.jobs else ((os.cpu_count() or 1) if len(pairs) >= 32 else 1)
    reports = metrics.evaluate_dataset(
        pairs, mode, ks, vocab, average=args.average, jobs=jobs
    )

    baseline = None
    if args.baseline:
        base_pairs = _pair_scenes(vg_io.load_scene_dump(args.baseline, vocab), gt_scenes)
        baseline = metrics.evaluate_dataset(
            base_pairs, mode, ks, vocab, average=args.average, jobs=jobs
        )

    print(metrics.format_summary(reports, mode.task, mode.constrained, mode.iou_threshold), end="")
    if baseline is not None or args.predicates:
        predicates = args.predicates or list(metrics.DEFAULT_REPORT_PREDICATES)
        print()
        print(
            metrics.per_predicate_report(reports, baseline, predicates, vocab),
            end="",
        )

    if args.report:
        report_path = Path(args.report)
        payload = metrics.report_payload(
            reports, mode.task, mode.constrained, mode.iou_threshold, args.average
        )
        report_path.write_text(vg_io.dumps_fixed(payload) + "\n")
        csv_path = _sibling(report_path, ".csv")
        with open(csv_path, "w", newline="") as fh:
            csv.writer(fh).writerows(metrics.per_predicate_csv_rows(reports, baseline))
        fig_path = _sibling(report_path, ".png")
        plots.render_recall_figure(reports, fig_path, baseline=baseline)
        log.info("wrote %s, %s, %s", report_path, csv_path, fig_path)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    vocab = _load_vocab(args.vocab)
    try:
        width, height = (int(v) for v in args.canvas.lower().split("x"))
    except ValueError:
        raise GeoSceneError(f"--canvas expects WxH, got {args.canvas!r}")
    spec = synthgen.SynthSpec(
        seed=args.seed,
        n_objects=args.objects,
        canvas=(width, height),
        layout=synthgen.Layout(args.layout),
        drop_rate=args.drop,
    )
    model, gt = synthgen.generate_scene(spec, vocab)
    vg_io.write_refined([model], args.out_pred, vocab)
    vg_io.write_refined([gt], args.out_gt, vocab)
    print(
        f"synthesized {spec.n_objects} objects (seed={spec.seed}, layout={spec.layout.value}): "
        f"{len(model.triplets)} model / {len(gt.triplets)} gt triplets"
    )
    return 0


def cmd_dot(args: argparse.Namespace) -> int:
    vocab = _load_vocab(args.vocab)
    scenes = vg_io.load_scene_dump(args.dump, vocab)
    if not scenes:
        raise GeoSceneError(f"{args.dump}: dump contains no images")
    if args.image_id:
        by_id = {s.image_id: s for s in scenes}
        if args.image_id not in by_id:
            raise GeoSceneError(f"image {args.image_id!r} not found in {args.dump}")
        scene = by_id[args.image_id]
    else:
        scene = scenes[0]
    gt = None
    if args.gt:
        for candidate in vg_io.load_ground_truth(args.gt, vocab):
            if candidate.image_id == scene.image_id:
                gt = candidate
                break
        if gt is None:
            raise GeoSceneError(f"image {scene.image_id!r} not found in {args.gt}")
    Path(args.out).write_text(vg_io.export_dot(scene, vocab, gt))
    print(f"wrote {args.out}")
    return 0


def cmd_taxonomy(args: argparse.Namespace) -> int:
    vocab = vg_io.load_vocabulary(args.vocab) if args.vocab else vg_io.default_vocabulary()
    class_counts = Counter(category for _, category in vocab.entries)

    instance_counts: Counter[RelationCategory] = Counter()
    predicate_counts: Counter[str] = Counter()
    total = 0
    if args.dump:
        # parse with the bucket predicates available so refined dumps load
        extended = extend_vocabulary(vocab, GEOMETRIC_EXTENSION)
        for scene in vg_io.iter_scene_dump(args.dump, extended):
            for t in scene.triplets:
                instance_counts[extended.category_of(t.predicate)] += 1
                predicate_counts[extended.name_of(t.predicate)] += 1
                total += 1

    examples = {c: [] for c in RelationCategory}
    for name, category in vocab.entries:
        if len(examples[category]) < 3:
            examples[category].append(name)

    print(f"{'Type':<12}{'Classes':<9}{'Instances':<11}{'Share':<8}Examples")
    for category in RelationCategory:
        if args.dump and total:
            instances = str(instance_counts[category])
            share = f"{100.0 * instance_counts[category] / total:.1f}%"
        else:
            instances, share = "-", "-"
        print(
            f"{category.value:<12}{class_counts.get(category, 0):<9}"
            f"{instances:<11}{share:<8}{', '.join(examples[category])}"
        )

    if args.plot:
        if not args.dump:
            raise GeoSceneError("--plot requires --dump to count instances")
        plots.render_frequency_figure(predicate_counts, args.plot)
        print(f"wrote {args.plot}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoscene",
        description="Geometric refinement and evaluation of scene graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", help="add/refine geometric relations in a prediction dump")
    p.add_argument("--dump", required=True, help="prediction dump (JSON)")
    p.add_argument("--vocab", help="predicate vocabulary (default: packaged VG-50)")
    p.add_argument("--out", required=True, help="output path for the refined dump")
    p.add_argument("--geo-score-factor", type=float, default=0.5)
    p.add_argument("--tau-replace", type=float, default=0.3,
                   help="replace conflicting geometric predictions below this score")
    p.add_argument("--tau-keep", type=float, default=0.7,
                   help="suppress additions on pairs with a non-geometric prediction at or above this score")
    p.add_argument("--paper-literal-buckets", action="store_true",
                   help="use the uncorrected direction-label table (left/down swapped)")
    p.add_argument("--ref-box", choices=["subject", "mean"], default="subject",
                   help="box supplying the near/far threshold diagonal")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="evaluate a prediction dump against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--task", choices=[t.value for t in metrics.Task], required=True)
    p.add_argument("--k", type=int, action="append",
                   help="recall cut-off; repeatable (default: 50 and 100)")
    p.add_argument("--no-constraint", action="store_true",
                   help="allow multiple predicted relationships per ordered pair")
    p.add_argument("--iou", type=float, default=0.5, help="sggen box-match threshold")
    p.add_argument("--report", help="write JSON report here, plus sibling .csv and .png")
    p.add_argument("--baseline", help="second prediction dump for side-by-side tables")
    p.add_argument("--predicates", nargs="*",
                   help="predicates for the per-predicate table")
    p.add_argument("--average", choices=["macro", "micro"], default="macro",
                   help="dataset R@K aggregation across images")
    p.add_argument("--vocab")
    p.add_argument("--jobs", type=int, default=0,
                   help="worker processes (default: auto)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a deterministic synthetic scene pair")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--objects", type=int, required=True)
    p.add_argument("--drop", type=float, default=0.0,
                   help="probability a true relation is missing from the model dump")
    p.add_argument("--out-pred", required=True)
    p.add_argument("--out-gt", required=True)
    p.add_argument("--layout", choices=[l.value for l in synthgen.Layout], default="grid")
    p.add_argument("--canvas", default="800x800")
    p.add_argument("--vocab")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dot", help="export a scene as a Graphviz digraph")
    p.add_argument("--dump", required=True)
    p.add_argument("--gt", help="ground truth for green/red match coloring")
    p.add_argument("--out", required=True)
    p.add_argument("--image-id", help="image to render (default: first)")
    p.add_argument("--vocab")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("taxonomy", help="relation-type breakdown of a vocabulary")
    p.add_argument("--vocab", help="vocabulary file (default: packaged VG-50)")
    p.add_argument("--dump", help="count triplet instances from this dump")
    p.add_argument("--plot", help="write a predicate-frequency figure here (needs --dump)")
    p.set_defaults(func=cmd_taxonomy)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("GEOSCENE_LOG", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GeoSceneError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
