"""Classification metrics, prediction consistency and the fairness gain scores."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data import perturb_matrix
from .exceptions import DataError, UndefinedMetricError
from .model import predict_labels

__all__ = [
    "PairSelection",
    "FairnessGainReport",
    "auc",
    "fnr",
    "fpr",
    "confusion_counts",
    "prediction_consistency",
    "eligible_pairs",
    "fairness_gain",
    "fairness_gain_from_labels",
    "normalized_fairness_gain",
]


@dataclass(frozen=True)
class PairSelection:
    """Which pairs ``i < j`` enter the fairness gain.

    ``mode="at_most"`` keeps pairs with ``K[i, j] <= sigma``; ``"at_least"``
    keeps ``K[i, j] >= sigma``. With ``sigma = 1`` and ``at_most`` every pair
    is selected.

    ``denominator`` picks what the gained-pair count is divided by:
    ``"mixed"`` counts selected pairs with different true labels,
    ``"selected"`` counts every selected pair.
    """

    sigma: float = 1.0
    mode: str = "at_most"
    denominator: str = "mixed"

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise DataError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.mode not in ("at_most", "at_least"):
            raise DataError(f"unknown selection mode {self.mode!r}")
        if self.denominator not in ("mixed", "selected"):
            raise DataError(f"unknown denominator {self.denominator!r}")

    def mask(self, k_values):
        if self.mode == "at_most":
            return k_values <= self.sigma
        return k_values >= self.sigma


@dataclass(frozen=True)
class FairnessGainReport:
    i_alpha: float
    i_zero: float
    nfg: float
    eligible_pairs: int
    gained_pairs: int
    gained_pairs_zero: int

    @property
    def enforces_fairness(self):
        return self.nfg > 0

    @property
    def degenerate(self):
        return self.eligible_pairs == 0


def _binary(labels, name="labels"):
    y = np.asarray(labels)
    if not np.all((y == 0) | (y == 1)):
        raise DataError(f"{name} must be 0/1")
    return y.astype(np.int64)


def auc(probabilities, labels):
    """Mann-Whitney ROC AUC; tied scores contribute one half."""
    s = np.asarray(probabilities, dtype=float)
    y = _binary(labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = rankdata(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def confusion_counts(predicted, labels):
    p = _binary(predicted, "predicted labels")
    y = _binary(labels)
    return {
        "tp": int(np.sum((p == 1) & (y == 1))),
        "fp": int(np.sum((p == 1) & (y == 0))),
        "tn": int(np.sum((p == 0) & (y == 0))),
        "fn": int(np.sum((p == 0) & (y == 1))),
    }


def fnr(predicted, labels):
    c = confusion_counts(predicted, labels)
    if c["fn"] + c["tp"] == 0:
        raise UndefinedMetricError("FNR undefined: no positive labels")
    return c["fn"] / (c["fn"] + c["tp"])


def fpr(predicted, labels):
    c = confusion_counts(predicted, labels)
    if c["fp"] + c["tn"] == 0:
        raise UndefinedMetricError("FPR undefined: no negative labels")
    return c["fp"] / (c["fp"] + c["tn"])


def prediction_consistency(model, dataset, spec):
    """Share of rows whose predicted label survives swapping ``spec``'s columns.

    ``dataset`` must be in the same feature space the model was trained on.
    """
    before = predict_labels(model, dataset.features)
    after = predict_labels(model, perturb_matrix(dataset.features, spec))
    return float(np.mean(before == after))


def eligible_pairs(K, labels, selection):
    """Upper-triangle index arrays of selected pairs, and of those with mixed labels.

    Returns ``(ii, jj, mixed)`` where ``mixed`` is a boolean mask over the
    selected pairs.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(labels)
    ii, jj = np.triu_indices(K.shape[0], k=1)
    keep = selection.mask(K[ii, jj])
    ii, jj = ii[keep], jj[keep]
    return ii, jj, y[ii] != y[jj]


def fairness_gain_from_labels(predicted, pairs, selection):
    """Fairness gain for precomputed pairs (see :func:`eligible_pairs`).

    Returns ``(score, denominator_count, gained_count)``; the score is 0 when
    the denominator is empty.
    """
    ii, jj, mixed = pairs
    p = np.asarray(predicted)
    gained = int(np.count_nonzero(mixed & (p[ii] == p[jj])))
    denom = int(np.count_nonzero(mixed)) if selection.denominator == "mixed" else int(ii.size)
    return (gained / denom if denom else 0.0), denom, gained


def fairness_gain(model, dataset, K, selection=PairSelection()):
    """Share of selected pairs with different true labels but equal predicted labels.

    Returns ``(i_alpha, eligible, gained)``. ``eligible == 0`` flags the
    degenerate case (score reported as 0).
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (dataset.n, dataset.n):
        raise DataError(f"kernel shape {K.shape} does not match n={dataset.n}")
    pairs = eligible_pairs(K, dataset.labels, selection)
    return fairness_gain_from_labels(predict_labels(model, dataset.features), pairs, selection)


def normalized_fairness_gain(model_alpha, model_zero, dataset, K, selection=PairSelection()):
    """Fairness gain of the regularized model minus that of its ``alpha = 0`` twin."""
    K = np.asarray(K, dtype=float)
    pairs = eligible_pairs(K, dataset.labels, selection)
    i_a, denom, gained = fairness_gain_from_labels(
        predict_labels(model_alpha, dataset.features), pairs, selection)
    i_0, _, gained_0 = fairness_gain_from_labels(
        predict_labels(model_zero, dataset.features), pairs, selection)
    return FairnessGainReport(i_a, i_0, i_a - i_0, denom, gained, gained_0)
