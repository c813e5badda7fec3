"""Write an :class:`~glrfair.experiment.ExperimentReport` to disk as CSV + manifest."""
from __future__ import annotations

import csv
import json
import math
import os

from . import __version__
from .exceptions import GlrfairError
from .stats import TUKEY_COLUMNS

__all__ = ["emit_report", "ReportIOError", "wide_table_rows"]

METRIC_LABELS = {"auc": "AUC", "fnr": "FNR", "fpr": "FPR", "fg": "FG", "nfg": "NFG"}


class ReportIOError(GlrfairError, OSError):
    """Writing a report file failed; the message names the path."""


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    return str(v)


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                if isinstance(row, dict):
                    row = [row[h] for h in header]
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _label(metric):
    if metric.startswith("pc_"):
        return f"PC {metric[3:]}"
    return METRIC_LABELS.get(metric, metric)


def wide_table_rows(report):
    """Wide results table: one row per variant with ``mean±std`` cells, then ANOVA p-values."""
    header = ["model"] + [_label(m) for m in report.metrics]
    cells = {(r["variant"], r["metric"]): r for r in report.summary}
    rows = []
    for v in report.variants:
        row = [v]
        for m in report.metrics:
            c = cells.get((v, m))
            row.append("-" if c is None else f"{c['mean']:.3f}±{c['std']:.3f}")
        rows.append(row)
    if report.anova:
        row = ["ANOVA p-value"]
        for m in report.metrics:
            a = report.anova.get(m)
            row.append("-" if a is None else f"{a.p_value:.3g}")
        rows.append(row)
    return header, rows


def emit_report(report, directory):
    """Write every section of ``report`` under ``directory``; return the paths.

    Files: ``summary.csv`` (long), ``results_table.csv`` (wide, display-rounded),
    ``folds.csv`` (per-fold long), ``fits.csv``, ``anova.csv``,
    ``tukey_<metric>.csv``, ``trace_<variant>.csv`` (covariate shift only),
    ``weights.csv`` / ``fold_assignment.csv`` when present, and
    ``manifest.json``. No timestamps are written, so reruns are byte-identical.
    """
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create {directory}: {exc.strerror}") from exc
    out = []
    p = lambda name: os.path.join(directory, name)  # noqa: E731

    out.append(_write_csv(p("folds.csv"), ["variant", "fold", "metric", "value"],
                          report.records))
    out.append(_write_csv(p("summary.csv"), ["variant", "metric", "mean", "std", "n"],
                          report.summary))
    header, rows = wide_table_rows(report)
    out.append(_write_csv(p("results_table.csv"), header, rows))
    if report.fits:
        out.append(_write_csv(p("fits.csv"), list(report.fits[0]), report.fits))

    if report.anova:
        rows = []
        for m in report.metrics:
            a = report.anova.get(m)
            if a is None:
                rows.append([m, "", "", "", "", "skipped"])
            else:
                rows.append([m, a.F, a.p_value, a.df_between, a.df_within,
                             "reject" if a.rejects() else "retain"])
        out.append(_write_csv(p("anova.csv"),
                              ["metric", "F", "p_value", "df_between", "df_within", "decision"],
                              rows))
    for m, trows in report.tukey.items():
        out.append(_write_csv(p(f"tukey_{m}.csv"), list(TUKEY_COLUMNS),
                              [r.as_record() for r in trows]))

    for v, trows in report.traces.items():
        out.append(_write_csv(p(f"trace_{v}.csv"), list(trows[0]), trows))

    if report.weights is not None:
        out.append(_write_csv(p("weights.csv"), ["row_index", "weight"],
                              [[i, float(w)] for i, w in enumerate(report.weights)]))
    if report.fold_of is not None:
        out.append(_write_csv(p("fold_assignment.csv"), ["row_index", "fold"],
                              [[i, int(f)] for i, f in enumerate(report.fold_of)]))

    manifest = {
        "package": "glrfair",
        "version": __version__,
        "kind": report.kind,
        "config": report.config,
        "files": sorted(os.path.basename(f) for f in out) + ["manifest.json"],
        "notes": report.notes,
        "warnings": report.warnings,
    }
    path = p("manifest.json")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror}") from exc
    out.append(path)
    return out
