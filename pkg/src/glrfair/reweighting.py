"""Instance weights: uniform for IID data, inverse propensity under covariate shift."""
import numpy as np
from scipy.special import expit

from .exceptions import DataError, NumericalError
from .model import TrainConfig, add_intercept, train

__all__ = ["uniform_weights", "propensity_weights", "clip_normalize", "write_weights_csv"]


def uniform_weights(n):
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    return np.ones(int(n))


def clip_normalize(w, clip):
    """Find ``c`` with ``mean(clip(c * w, 1/clip, clip)) == 1`` and return the result.

    Every output entry lies in ``[1/clip, clip]`` and the mean is 1 to
    rounding. ``clip == 1`` gives all ones. Zero weights map to ``1/clip``
    and infinite ones to ``clip``.
    """
    if not clip >= 1:
        raise DataError(f"clip must be >= 1, got {clip}")
    w = np.asarray(w, dtype=float)
    if w.size == 0 or np.any(w < 0) or np.any(np.isnan(w)):
        raise DataError("weights must be a nonempty nonnegative vector")
    if clip == 1:
        return np.ones_like(w)
    lo, hi = 1.0 / clip, float(clip)
    n = w.size
    free = np.isfinite(w) & (w > 0)
    out = np.where(np.isinf(w), hi, lo)
    if not free.any():
        return out
    wf = w[free]
    fixed = out[~free].sum()
    # the clipped sum is piecewise linear and nondecreasing in c with kinks at
    # lo/w and hi/w; locate the segment where it crosses n and solve exactly
    knots = np.unique(np.r_[lo / wf, hi / wf])
    totals = np.clip(np.outer(knots, wf), lo, hi).sum(axis=1) + fixed
    k = int(np.searchsorted(totals, n))
    if k == len(knots):
        c = knots[-1]
    elif k == 0 or totals[k] == n:
        c = knots[k]
    else:
        a = knots[k - 1]
        centre = 0.5 * (a + knots[k]) * wf
        c = a + (n - totals[k - 1]) / wf[(centre > lo) & (centre < hi)].sum()
    out[free] = np.clip(c * wf, lo, hi)
    inner = (out > lo) & (out < hi)
    if inner.any():
        # absorb the residual rounding into the unclipped entries
        out[inner] *= (n - out[~inner].sum()) / out[inner].sum()
    return out


def propensity_weights(X_s, X_t, clip=10.0, config=None):
    """Density-ratio weights for source rows from a source-vs-target classifier.

    An unregularized logistic regression (the same gradient-descent trainer
    used for the fairness models, ``alpha = 0``) separates source (0) from
    target (1) rows. Each source row gets ``p/(1-p) * n_s/n_t``; the vector is
    then scaled and clipped to ``[1/clip, clip]`` with mean one.
    """
    X_s = np.asarray(X_s, dtype=float)
    X_t = np.asarray(X_t, dtype=float)
    if X_s.ndim != 2 or X_t.ndim != 2 or X_s.shape[1] != X_t.shape[1]:
        raise DataError(f"incompatible shapes {X_s.shape} and {X_t.shape}")
    if len(X_s) == 0 or len(X_t) == 0:
        raise DataError("propensity weights need nonempty source and target")
    config = config or TrainConfig()
    X = add_intercept(np.vstack([X_s, X_t]))
    d = np.r_[np.zeros(len(X_s)), np.ones(len(X_t))]
    try:
        clf = train(X, d, None, None, config, alpha=0.0, variant="LR")
    except NumericalError as exc:
        raise NumericalError(f"domain classifier diverged: {exc}", epoch=exc.epoch) from exc
    p = np.clip(expit(add_intercept(X_s) @ clf.theta), 1e-12, 1 - 1e-12)
    ratio = p / (1.0 - p) * (len(X_s) / len(X_t))
    return clip_normalize(ratio, clip)


def write_weights_csv(w, path):
    with open(path, "w") as fh:
        fh.write("row_index,weight\n")
        for i, v in enumerate(np.asarray(w, dtype=float)):
            fh.write(f"{i},{float(v)!r}\n")
