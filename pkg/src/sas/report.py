"""Selection quality metrics and the sweep harness.

Reports recompute every metric from the raw features and the score table
rather than trusting the numbers cached inside a Selection; the cached vs
recomputed gap is part of the report so bookkeeping bugs surface.
"""

import csv
import json
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .floatfmt import fmt_float, round_float
from .pool_io import EmbeddingPool
from .sampler import (
    Selection,
    SelectionConfig,
    config_to_doc,
    filter_candidates,
    run_selection,
)
from .scoring import ScoreTable, clamped_arccos, score_pool


def intra_set_distance(pool: EmbeddingPool, indices: Sequence[int]) -> float | None:
    """Mean pairwise angular distance within a set of images (None if < 2)."""
    idx = np.asarray(sorted(indices), dtype=np.int64)
    if idx.size < 2:
        return None
    feats = pool.unit_features()[idx]
    dists = clamped_arccos(feats @ feats.T)
    n = idx.size
    return float((dists.sum() - np.trace(dists)) / (n * (n - 1)))


def selection_report(
    pool: EmbeddingPool, table: ScoreTable, selection: Selection
) -> dict:
    """Per-class and overall quality metrics for a selection.

    Raises ValueError if the selection references an image_id the pool does
    not contain.
    """
    index_of = {image_id: i for i, image_id in enumerate(pool.image_ids)}
    config = selection.config
    candidates = (
        filter_candidates(pool, table, config) if config.selector == "sas" else None
    )
    # For the random selector the cached diversity is the pool-static score,
    # not an intra-set quantity, so it is not compared against recomputation.
    check_diversity = config.selector != "random"

    class_rows = []
    all_margins: list[float] = []
    intra_values: list[float] = []
    margin_diff_overall = 0.0
    div_diff_overall: float | None = 0.0 if check_diversity else None

    for cls in selection.classes:
        indices = []
        for entry in cls.selected:
            i = index_of.get(entry.image_id)
            if i is None:
                raise ValueError(f"unknown image_id {entry.image_id!r} in selection")
            indices.append(i)

        margins = [float(table.margin[i]) for i in indices]
        all_margins.extend(margins)
        intra = intra_set_distance(pool, indices)
        if intra is not None:
            intra_values.append(intra)

        margin_diff = max(
            (abs(entry.margin - table.margin[index_of[entry.image_id]])
             for entry in cls.selected),
            default=0.0,
        )
        margin_diff_overall = max(margin_diff_overall, margin_diff)

        div_diff: float | None = None
        if check_diversity:
            div_diff = _diversity_gap(pool, cls.selected, indices)
            if div_diff is not None and div_diff_overall is not None:
                div_diff_overall = max(div_diff_overall, div_diff)

        row = {
            "class_name": cls.class_name,
            "n_selected": len(indices),
            "margin_mean": _mean(margins),
            "margin_min": min(margins) if margins else None,
            "margin_max": max(margins) if margins else None,
            "intra_set_distance": intra,
            "margin_consistency_max_diff": margin_diff,
            "diversity_consistency_max_diff": div_diff,
            "external_accuracy": None,
        }
        if candidates is not None:
            cand = set(candidates[cls.class_index])
            kept = sum(1 for i in indices if i in cand)
            row["candidate_count"] = len(cand)
            row["candidates_selected"] = kept
            row["candidate_retention"] = kept / len(cand) if cand else None
        else:
            row["candidate_count"] = None
            row["candidates_selected"] = None
            row["candidate_retention"] = None
        class_rows.append(row)

    overall = {
        "n_selected": len(all_margins),
        "margin_mean": _mean(all_margins),
        "margin_min": min(all_margins) if all_margins else None,
        "margin_max": max(all_margins) if all_margins else None,
        "intra_set_distance_mean": _mean(intra_values),
        "margin_consistency_max_diff": margin_diff_overall,
        "diversity_consistency_max_diff": div_diff_overall,
        "external_accuracy": None,
    }
    return {
        "config": config_to_doc(config, selection.warnings),
        "overall": overall,
        "classes": class_rows,
    }


def _diversity_gap(pool, selected_entries, indices) -> float | None:
    """Max |cached dynamic diversity - recomputed intra-set mean| for one class."""
    if len(indices) < 2:
        return None
    feats = pool.unit_features()
    idx = np.asarray(sorted(indices), dtype=np.int64)
    dists = clamped_arccos(feats[idx] @ feats[idx].T)
    per_member = (dists.sum(axis=1) - np.diag(dists)) / (idx.size - 1)
    recomputed = {int(i): float(v) for i, v in zip(idx, per_member)}
    gaps = [
        abs(entry.dynamic_diversity - recomputed[i])
        for entry, i in zip(selected_entries, indices)
        if entry.dynamic_diversity is not None
    ]
    return max(gaps) if gaps else None


def _mean(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


def report_to_doc(report: dict) -> dict:
    """Report with floats rounded for JSON output."""

    def walk(node):
        if isinstance(node, dict):
            return {k: walk(v) for k, v in node.items()}
        if isinstance(node, list):
            return [walk(v) for v in node]
        if isinstance(node, float):
            return round_float(node)
        return node

    return walk(report)


def report_to_json(report: dict) -> str:
    return json.dumps(report_to_doc(report), indent=2) + "\n"


def report_to_text(report: dict) -> str:
    """Aligned human-readable table of the per-class metrics."""
    header = f"{'class':<20} {'n':>4} {'margin mean':>12} {'min':>10} {'max':>10} {'intra-set':>10}"
    lines = [header, "-" * len(header)]
    for row in report["classes"] + [dict(report["overall"], class_name="(overall)")]:
        intra = row.get("intra_set_distance", row.get("intra_set_distance_mean"))
        lines.append(
            f"{row['class_name']:<20} {row['n_selected']:>4} "
            f"{_cell(row['margin_mean']):>12} {_cell(row['margin_min']):>10} "
            f"{_cell(row['margin_max']):>10} {_cell(intra):>10}"
        )
    warnings = report["config"].get("warnings", [])
    for warning in warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines)


def _cell(value) -> str:
    if value is None:
        return "undefined"
    return f"{value:.6f}"


REPORT_CSV_FIELDS = [
    "class_name", "n_selected", "margin_mean", "margin_min", "margin_max",
    "intra_set_distance", "candidate_count", "candidates_selected",
    "candidate_retention", "margin_consistency_max_diff",
    "diversity_consistency_max_diff", "external_accuracy",
]


def write_report_csv(report: dict, sink: IO[str]) -> None:
    writer = csv.DictWriter(sink, fieldnames=REPORT_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in report["classes"]:
        writer.writerow({k: _csv_cell(row.get(k)) for k in REPORT_CSV_FIELDS})
    overall = dict(report["overall"], class_name="__overall__")
    overall["intra_set_distance"] = overall.pop("intra_set_distance_mean")
    writer.writerow({k: _csv_cell(overall.get(k)) for k in REPORT_CSV_FIELDS})


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def write_report(report: dict, path: str | Path) -> None:
    """Write .json or .csv depending on the extension."""
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(report_to_json(report))
    elif path.suffix == ".csv":
        with open(path, "w", newline="") as handle:
            write_report_csv(report, handle)
    else:
        raise ValueError(f"unsupported report extension {path.suffix!r} (use .json or .csv)")


# --- sweep -------------------------------------------------------------------

SWEEP_CSV_FIELDS = [
    "grid_index", "selector", "ipc", "ratio", "lambda", "seed",
    "use_rel", "use_sep", "use_div", "scope", "n_selected",
    "margin_mean", "margin_min", "margin_max", "intra_set_distance",
    "status", "error",
]


def sweep(pool: EmbeddingPool, grid: Sequence[SelectionConfig]) -> list[dict]:
    """Run every config against the pool; failures become rows, not crashes.

    Returns one row per (config, class) plus an overall row per config,
    ordered by grid index.
    """
    rows: list[dict] = []
    table = score_pool(pool) if grid else None
    for grid_index, config in enumerate(grid):
        base = {
            "grid_index": grid_index,
            "selector": config.selector,
            "ipc": config.ipc,
            "ratio": config.candidate_ratio,
            "lambda": config.lambda_,
            "seed": config.seed,
            "use_rel": config.use_rel,
            "use_sep": config.use_sep,
            "use_div": config.use_div,
        }
        try:
            selection = run_selection(pool, table, config)
            report = selection_report(pool, table, selection)
        except Exception as exc:  # per-config isolation is the contract
            rows.append(
                dict(base, scope="__overall__", n_selected=None, margin_mean=None,
                     margin_min=None, margin_max=None, intra_set_distance=None,
                     status="failed", error=str(exc))
            )
            continue
        overall = report["overall"]
        rows.append(
            dict(base, scope="__overall__", n_selected=overall["n_selected"],
                 margin_mean=overall["margin_mean"], margin_min=overall["margin_min"],
                 margin_max=overall["margin_max"],
                 intra_set_distance=overall["intra_set_distance_mean"],
                 status="ok", error="")
        )
        for row in report["classes"]:
            rows.append(
                dict(base, scope=row["class_name"], n_selected=row["n_selected"],
                     margin_mean=row["margin_mean"], margin_min=row["margin_min"],
                     margin_max=row["margin_max"],
                     intra_set_distance=row["intra_set_distance"],
                     status="ok", error="")
            )
    return rows


def write_sweep_csv(rows: Sequence[dict], sink: IO[str]) -> None:
    writer = csv.DictWriter(sink, fieldnames=SWEEP_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in SWEEP_CSV_FIELDS})


def load_grid(path: str | Path) -> list[SelectionConfig]:
    """Parse a grid JSON file: a list of config objects using CLI flag names."""
    from .sampler import config_from_doc

    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list):
        raise ValueError("grid JSON must be a list of config objects")
    return [config_from_doc(entry) for entry in doc]
