"""End-to-end experiments: IID cross-validation and the covariate-shift split."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Scaler, SensitiveSpec, load_csv, perturb_matrix, split_by_attribute, \
    stratified_kfold
from .exceptions import ExperimentError, GlrfairError
from .graph import pairwise_kernel
from .metrics import auc, eligible_pairs, fairness_gain_from_labels, fnr, fpr
from .model import add_intercept, fit_counterpart, fit_variant, forward
from .reweighting import propensity_weights, uniform_weights
from .stats import one_way_anova, tukey_hsd

__all__ = [
    "ExperimentReport",
    "run_experiment",
    "run_iid_experiment",
    "run_covariate_shift_experiment",
    "summarize",
]

log = logging.getLogger(__name__)

BASE_METRICS = ("auc", "fnr", "fpr")
GAIN_METRICS = ("fg", "nfg")
WORKERS_ENV = "GLRFAIR_WORKERS"


@dataclass
class ExperimentReport:
    """Everything an experiment produced, in deterministic order.

    ``records`` is the long-format per-fold table (variant, fold, metric,
    value); ``summary`` aggregates it. ``anova`` maps metric to
    :class:`~glrfair.stats.AnovaResult` (``None`` when skipped, with the
    reason in ``notes``).
    """

    kind: str
    config: dict
    variants: tuple
    metrics: tuple
    records: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    anova: dict = field(default_factory=dict)
    tukey: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    weights: np.ndarray | None = None
    fold_of: np.ndarray | None = None
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def mean(self, variant, metric):
        for row in self.summary:
            if row["variant"] == variant and row["metric"] == metric:
                return row["mean"]
        raise KeyError((variant, metric))

    def values(self, variant, metric):
        return [r["value"] for r in self.records
                if r["variant"] == variant and r["metric"] == metric]


# ---------------------------------------------------------------------------
# shared pieces

def _specs(config, feature_names):
    return [SensitiveSpec.from_names(name, groups, feature_names)
            for name, groups in config.data.sensitive]


def _metric_names(config):
    names = list(BASE_METRICS)
    if any(v != "LR" for v in config.variants):
        names += GAIN_METRICS
    names += [f"pc_{name}" for name, _ in config.data.sensitive]
    return tuple(names)


class _Evaluator:
    """Scores parameter vectors on one evaluation set.

    Precomputes the selected pairs, the perturbed copies of the features
    and the counterpart's fairness gain so per-epoch traces stay cheap.
    """

    def __init__(self, dataset, specs, config, counterpart=None):
        self.X = add_intercept(dataset.features)
        self.y = dataset.labels
        self.specs = specs
        self.selection = config.pairs
        self.pairs = eligible_pairs(pairwise_kernel(dataset.features, config.kernel).K,
                                    dataset.labels, config.pairs)
        self.perturbed = [(s.name, add_intercept(perturb_matrix(dataset.features, s)))
                          for s in specs]
        self.fg_zero = None
        if counterpart is not None:
            self.fg_zero = self.fairness_gain(self.labels(counterpart.theta))[0]

    def labels(self, theta, X=None):
        X = self.X if X is None else X
        return (forward(X, theta) >= 0.5).astype(np.int64)

    def fairness_gain(self, labels):
        return fairness_gain_from_labels(labels, self.pairs, self.selection)

    def score(self, theta, gains=True):
        proba = forward(self.X, theta)
        lab = (proba >= 0.5).astype(np.int64)
        out = {"auc": auc(proba, self.y), "fnr": fnr(lab, self.y), "fpr": fpr(lab, self.y)}
        if gains:
            fg = self.fairness_gain(lab)[0]
            out["fg"] = fg
            out["nfg"] = fg - self.fg_zero
        for name, Xp in self.perturbed:
            out[f"pc_{name}"] = float(np.mean(lab == self.labels(theta, Xp)))
        return out


def _fit_record(variant, fold, model):
    return {
        "variant": variant,
        "fold": fold,
        "trained_epochs": model.trained_epochs,
        "converged": model.converged,
        "tuned_epochs": model.tuned_epochs,
        "tune_converged": "" if model.tune_converged is None else model.tune_converged,
        "final_loss": model.loss_history[-1] if model.loss_history else float("nan"),
        "final_target_risk": model.tune_history[-1] if model.tune_history else float("nan"),
    }


def _monotone_warnings(variant, fold, model):
    out = []
    for label, hist in (("training loss", model.loss_history),
                        ("target regularizer", model.tune_history)):
        h = np.asarray(hist)
        if h.size > 1:
            ups = np.flatnonzero(np.diff(h) > 0)
            if ups.size:
                out.append(f"{variant} fold {fold}: {label} increased at "
                           f"{ups.size} epoch(s), first at epoch {int(ups[0]) + 1}")
    return out


def summarize(records, variants, metrics):
    """Mean and sample standard deviation per (variant, metric), in fixed order."""
    rows = []
    for v in variants:
        for m in metrics:
            vals = np.array([r["value"] for r in records
                             if r["variant"] == v and r["metric"] == m])
            if vals.size == 0:
                continue
            rows.append({
                "variant": v,
                "metric": m,
                "mean": float(np.mean(vals)),
                "std": float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0,
                "n": int(vals.size),
            })
    return rows


def _statistics(report, config):
    for metric in report.metrics:
        groups = [(v, report.values(v, metric)) for v in report.variants]
        groups = [(v, vals) for v, vals in groups if vals]
        if len(groups) < 2:
            report.anova[metric] = None
            report.notes.append(f"ANOVA skipped for {metric}: fewer than two variants")
            continue
        if min(len(vals) for _, vals in groups) < 2:
            report.anova[metric] = None
            report.notes.append(f"ANOVA skipped for {metric}: fewer than two folds")
            continue
        res = one_way_anova(groups)
        report.anova[metric] = res
        if config.stats.tukey == "all" or res.rejects(config.stats.level):
            report.tukey[metric] = tukey_hsd(groups, config.stats.confidence)


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# IID cross-validation

def _run_fold(config, dataset, specs, fold, train_idx, test_idx):
    scaler = Scaler(config.data.scaling).fit(dataset.features[train_idx])
    train = scaler.apply(dataset.subset(train_idx))
    test = scaler.apply(dataset.subset(test_idx))
    weights = uniform_weights(train.n)
    variant = None
    try:
        counterpart = None
        if any(v != "LR" for v in config.variants):
            variant = "alpha=0 counterpart"
            counterpart = fit_counterpart(train, config.train, weights=weights)
        ev = _Evaluator(test, specs, config, counterpart)
        records, fits, warns = [], [], []
        for variant in config.variants:
            model = fit_variant(variant, train, test, config.train, config.kernel,
                                weights=weights)
            scores = ev.score(model.theta, gains=variant != "LR")
            records += [{"variant": variant, "fold": fold, "metric": m, "value": float(v)}
                        for m, v in scores.items()]
            fits.append(_fit_record(variant, fold, model))
            warns += _monotone_warnings(variant, fold, model)
        return records, fits, warns
    except GlrfairError as exc:
        raise ExperimentError(f"fold {fold}, {variant}: {exc}", fold=fold, variant=variant,
                              cause=exc) from exc


def run_iid_experiment(config):
    """Stratified k-fold comparison of the configured variants.

    Each fold scales on its training rows, fits every variant (IFDA and IFRT
    see the validation features as their target), and scores AUC, FNR, FPR,
    fairness gain against a per-fold ``alpha = 0`` counterpart, and
    prediction consistency for each sensitive spec on the validation rows.
    """
    if config.kind != "iid_cv":
        raise ExperimentError(f"config kind is {config.kind!r}, expected 'iid_cv'")
    dataset = load_csv(config.data.path, config.data.schema)
    specs = _specs(config, dataset.feature_names)
    folds = stratified_kfold(dataset, config.folds, config.seed)
    report = ExperimentReport("iid_cv", config.to_dict(), tuple(config.variants),
                              _metric_names(config), fold_of=np.array(folds.fold_of))
    jobs = list(folds.splits())
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda j: _run_fold(config, dataset, specs, *j), jobs))
    else:
        results = [_run_fold(config, dataset, specs, *j) for j in jobs]
    # deterministic order: variant, then fold
    records = [r for res in results for r in res[0]]
    order = {v: i for i, v in enumerate(config.variants)}
    report.records = sorted(records, key=lambda r: (order[r["variant"]], r["fold"],
                                                    report.metrics.index(r["metric"])))
    report.fits = sorted((f for res in results for f in res[1]),
                         key=lambda f: (order[f["variant"]], f["fold"]))
    report.warnings = [w for res in results for w in res[2]]
    report.summary = summarize(report.records, report.variants, report.metrics)
    _statistics(report, config)
    return report


# ---------------------------------------------------------------------------
# covariate shift

def run_covariate_shift_experiment(config):
    """Train on one attribute value, deploy on the rest, and trace every epoch.

    Source rows are reweighted by inverse propensity. Traces score the
    target set at every iterate: training epochs for each variant and, for
    IFRT, the fine-tuning epochs (``phase == "tune"``, epoch 0 being the
    untuned model). The ``objective`` column holds the training loss or,
    while tuning, the target regularizer. Trace rows always include FG and
    NFG, measured against the weighted ``alpha = 0`` counterpart.
    """
    if config.kind != "covariate_shift":
        raise ExperimentError(f"config kind is {config.kind!r}, expected 'covariate_shift'")
    dataset = load_csv(config.data.path, config.data.schema)
    specs = _specs(config, dataset.feature_names)
    source_raw, target_raw = split_by_attribute(dataset, config.shift.column,
                                                config.shift.source_value)
    scaler = Scaler(config.data.scaling).fit(source_raw.features)
    source, target = scaler.apply(source_raw), scaler.apply(target_raw)
    report = ExperimentReport("covariate_shift", config.to_dict(), tuple(config.variants),
                              _metric_names(config))
    variant = "propensity weights"
    try:
        weights = propensity_weights(source.features, target.features, config.shift.clip,
                                     config.train)
        report.weights = weights
        variant = "alpha=0 counterpart"
        counterpart = fit_counterpart(source, config.train, weights=weights)
        ev = _Evaluator(target, specs, config, counterpart)
        for variant in config.variants:
            gains = variant != "LR"
            rows = []

            # traces carry FG/NFG for every variant so all trace files share columns
            def trace(phase):
                def cb(epoch, theta):
                    rows.append({"phase": phase, "epoch": epoch, **ev.score(theta)})
                return cb

            model = fit_variant(variant, source, target, config.train, config.kernel,
                                weights=weights, callback=trace("train"),
                                tune_callback=trace("tune"))
            train_rows = [r for r in rows if r["phase"] == "train"]
            for r, obj in zip(train_rows, model.loss_history):
                r["objective"] = obj
            tune_rows = [r for r in rows if r["phase"] == "tune"]
            for r, obj in zip(tune_rows, model.tune_history):
                r["objective"] = obj
            report.traces[variant] = rows
            scores = ev.score(model.theta, gains)
            report.records += [{"variant": variant, "fold": 0, "metric": m, "value": float(v)}
                               for m, v in scores.items()]
            report.fits.append(_fit_record(variant, 0, model))
            report.warnings += _monotone_warnings(variant, 0, model)
    except GlrfairError as exc:
        raise ExperimentError(f"covariate shift, {variant}: {exc}", variant=variant,
                              cause=exc) from exc
    report.summary = summarize(report.records, report.variants, report.metrics)
    report.notes.append(
        f"source {config.shift.column}=={config.shift.source_value}: n={source.n}; "
        f"target n={target.n}")
    return report


def run_experiment(config):
    if config.kind == "iid_cv":
        return run_iid_experiment(config)
    return run_covariate_shift_experiment(config)
