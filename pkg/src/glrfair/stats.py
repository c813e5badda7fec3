"""One-way ANOVA and Tukey HSD with a self-contained studentized range distribution.

The studentized range CDF is evaluated from its integral representation,

    P(Q <= q) = int_0^inf g_nu(s) W_k(q s) ds,
    W_k(w)    = k int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz,

where ``g_nu`` is the density of ``sqrt(chi2_nu / nu)``, using adaptive
quadrature; the quantile is found by bracketing root search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special, stats

from .exceptions import DataError

__all__ = [
    "AnovaResult",
    "TukeyRow",
    "one_way_anova",
    "tukey_hsd",
    "studentized_range_cdf",
    "studentized_range_sf",
    "studentized_range_ppf",
    "TUKEY_COLUMNS",
]

TUKEY_COLUMNS = ("Comparison", "Statistic", "p-value", "Lower CI", "Upper CI")
_QUAD = dict(epsabs=1e-13, epsrel=1e-11, limit=200)


def _range_cdf_normal(w, k):
    """CDF of the range of ``k`` iid standard normals at ``w``."""
    if w <= 0:
        return 0.0

    def integrand(z):
        return math.exp(-0.5 * z * z) * (special.ndtr(z) - special.ndtr(z - w)) ** (k - 1)

    val, _ = integrate.quad(integrand, -10.0, 10.0, points=[0.0, w / 2, w], **_QUAD)
    return min(1.0, k * val / math.sqrt(2 * math.pi))


def _range_sf_normal(w, k):
    """``1 - _range_cdf_normal`` computed without cancellation for large ``w``.

    Uses ``1 - W(w) = k int phi(z) (Phi(z)^(k-1) - (Phi(z) - Phi(z-w))^(k-1)) dz``.
    """
    if w <= 0:
        return 1.0

    def integrand(z):
        a = special.ndtr(z)
        b = a - special.ndtr(z - w)
        return math.exp(-0.5 * z * z) * (a ** (k - 1) - b ** (k - 1))

    val, _ = integrate.quad(integrand, -10.0, 10.0 + w, points=[0.0, w / 2, w], **_QUAD)
    return min(1.0, max(0.0, k * val / math.sqrt(2 * math.pi)))


def _log_scale_density(s, nu):
    return (0.5 * nu * math.log(nu) - special.gammaln(0.5 * nu) - (0.5 * nu - 1) * math.log(2)
            + (nu - 1) * math.log(s) - 0.5 * nu * s * s)


def _outer(func, q, k, nu):
    def integrand(s):
        if s <= 0:
            return 0.0
        return math.exp(_log_scale_density(s, nu)) * func(q * s, k)

    # the scale density concentrates around 1 with spread ~ 1/sqrt(2 nu)
    hi = 1.0 + 12.0 / math.sqrt(nu) + 6.0
    val, _ = integrate.quad(integrand, 0.0, hi, points=[1.0], **_QUAD)
    return val


@lru_cache(maxsize=4096)
def studentized_range_cdf(q, k, nu):
    """``P(Q <= q)`` for ``k`` groups and ``nu`` error degrees of freedom."""
    _check_kn(k, nu)
    if q <= 0:
        return 0.0
    return min(1.0, max(0.0, _outer(_range_cdf_normal, q, k, nu)))


@lru_cache(maxsize=4096)
def studentized_range_sf(q, k, nu):
    _check_kn(k, nu)
    if q <= 0:
        return 1.0
    return min(1.0, max(0.0, _outer(_range_sf_normal, q, k, nu)))


@lru_cache(maxsize=256)
def studentized_range_ppf(p, k, nu):
    """Quantile of the studentized range distribution."""
    _check_kn(k, nu)
    if not 0 < p < 1:
        raise DataError(f"probability must be in (0, 1), got {p}")
    hi = 10.0
    while studentized_range_cdf(hi, k, nu) < p:
        hi *= 2
    return optimize.brentq(lambda q: studentized_range_cdf(q, k, nu) - p, 0.0, hi,
                           xtol=1e-12, rtol=1e-12)


def _check_kn(k, nu):
    if k < 2 or nu < 1:
        raise DataError(f"studentized range needs k >= 2 and nu >= 1, got k={k}, nu={nu}")


# ---------------------------------------------------------------------------

def _as_groups(groups):
    if isinstance(groups, dict):
        groups = list(groups.items())
    out = []
    for label, scores in groups:
        a = np.asarray(scores, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise DataError(f"group {label!r} needs at least two observations")
        out.append((label, a))
    if len(out) < 2:
        raise DataError("need at least two groups")
    return out


@dataclass(frozen=True)
class AnovaResult:
    F: float
    p_value: float
    df_between: int
    df_within: int
    ss_between: float
    ss_within: float

    @property
    def infinite(self):
        return math.isinf(self.F)

    def rejects(self, level=0.05):
        return self.p_value < level


def one_way_anova(groups):
    """Classical one-way ANOVA.

    ``groups`` is a list of ``(label, scores)`` or a dict. With zero
    within-group variance and distinct means ``F`` is ``inf`` and ``p`` 0;
    when every observation is equal ``F`` is 0 and ``p`` 1.
    """
    groups = _as_groups(groups)
    data = [a for _, a in groups]
    allv = np.concatenate(data)
    grand = allv.mean()
    ssb = float(sum(a.size * (a.mean() - grand) ** 2 for a in data))
    ssw = float(sum(((a - a.mean()) ** 2).sum() for a in data))
    dfb, dfw = len(data) - 1, allv.size - len(data)
    if ssw == 0.0:
        F, p = (math.inf, 0.0) if ssb > 0 else (0.0, 1.0)
    else:
        F = (ssb / dfb) / (ssw / dfw)
        p = float(stats.f.sf(F, dfb, dfw))
    return AnovaResult(float(F), p, dfb, dfw, ssb, ssw)


@dataclass(frozen=True)
class TukeyRow:
    pair: tuple
    statistic: float
    p_value: float
    ci_low: float
    ci_high: float

    @property
    def comparison(self):
        return f"({self.pair[0]} - {self.pair[1]})"

    def as_record(self):
        return dict(zip(TUKEY_COLUMNS, (self.comparison, self.statistic, self.p_value,
                                        self.ci_low, self.ci_high)))


def tukey_hsd(groups, confidence=0.95):
    """Tukey HSD over every ordered pair of groups (equal group sizes).

    Rows come in the order (0-1), (0-2), ..., (1-0), (1-2), ... with
    ``statistic = mean(a) - mean(b)``.
    """
    groups = _as_groups(groups)
    if not 0 < confidence < 1:
        raise DataError(f"confidence must be in (0, 1), got {confidence}")
    sizes = {a.size for _, a in groups}
    if len(sizes) != 1:
        raise DataError(f"Tukey HSD here needs equal group sizes, got {sorted(sizes)}")
    k = sizes.pop()
    g = len(groups)
    nu = g * k - g
    msw = sum(((a - a.mean()) ** 2).sum() for _, a in groups) / nu
    se = math.sqrt(msw / k)
    q_crit = studentized_range_ppf(confidence, g, nu)
    half = q_crit * se
    means = [a.mean() for _, a in groups]
    rows = []
    for i, (la, _) in enumerate(groups):
        for j, (lb, _) in enumerate(groups):
            if i == j:
                continue
            diff = float(means[i] - means[j])
            if diff == 0.0:
                p = 1.0
            elif se == 0.0:
                p = 0.0
            else:
                p = studentized_range_sf(abs(diff) / se, g, nu)
            rows.append(TukeyRow((la, lb), diff, p, diff - half, diff + half))
    return rows
