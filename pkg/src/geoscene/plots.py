"""Figure rendering for evaluation reports and taxonomy summaries."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import EvalReport

_PNG_METADATA = {"Software": "geoscene"}


def render_recall_figure(
    reports: Mapping[int, EvalReport],
    path: str | Path,
    baseline: Mapping[int, EvalReport] | None = None,
    predicates: Sequence[str] | None = None,
    title: str = "Per-predicate recall",
) -> None:
    """Horizontal grouped bars of per-predicate R@K, written as a PNG."""
    ks = sorted(reports)
    if predicates is None:
        names: set[str] = set()
        for r in reports.values():
            names.update(r.per_predicate)
        predicates = sorted(names)
    series: list[tuple[str, list[float]]] = []
    for k in ks:
        if baseline is not None:
            series.append(
                (f"baseline R@{k}", [baseline[k].per_predicate.get(p, 0.0) for p in predicates])
            )
        series.append((f"R@{k}", [reports[k].per_predicate.get(p, 0.0) for p in predicates]))

    fig, ax = plt.subplots(figsize=(7, max(2.5, 0.45 * len(predicates) + 1)))
    n = len(series)
    bar_h = 0.8 / max(n, 1)
    for si, (label, values) in enumerate(series):
        offsets = [i + (si - (n - 1) / 2) * bar_h for i in range(len(predicates))]
        ax.barh(offsets, values, height=bar_h, label=label)
    ax.set_yticks(range(len(predicates)))
    ax.set_yticklabels(predicates)
    ax.invert_yaxis()
    ax.set_xlim(0, 1)
    ax.set_xlabel("recall")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def render_frequency_figure(
    counts: Mapping[str, int],
    path: str | Path,
    title: str = "Predicate frequency",
) -> None:
    """Bar chart of triplet counts per predicate, most frequent first."""
    items = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    names = [name for name, _ in items]
    values = [value for _, value in items]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.35 * len(names) + 1), 4))
    ax.bar(range(len(names)), values)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=75, ha="right", fontsize="small")
    ax.set_ylabel("instances")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
