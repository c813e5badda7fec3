"""Similarity kernels, the unnormalized graph Laplacian and its quadratic form."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import DataError

__all__ = [
    "KernelParams",
    "SimilarityMatrix",
    "GraphLaplacian",
    "pairwise_kernel",
    "laplacian",
    "graph_laplacian",
    "quadratic_form",
    "lipschitz_violations",
    "export_matrix_csv",
]

# identifiers accepted by scipy.spatial.distance.pdist that are true metrics
DISTANCES = ("euclidean", "cityblock", "chebyshev", "minkowski")


@dataclass(frozen=True)
class KernelParams:
    delta: float = 5.0
    distance: str = "euclidean"

    def __post_init__(self):
        if not self.delta > 0:
            raise DataError(f"kernel temperature delta must be > 0, got {self.delta}")
        if self.distance not in DISTANCES:
            raise DataError(f"unsupported distance {self.distance!r}; choose from {DISTANCES}")


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    K: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.K if dtype is None else self.K.astype(dtype)

    @property
    def n(self):
        return self.K.shape[0]


@dataclass(frozen=True, eq=False)
class GraphLaplacian:
    L: np.ndarray
    degree: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.L if dtype is None else self.L.astype(dtype)

    @property
    def n(self):
        return self.L.shape[0]


def _readonly(a):
    a.setflags(write=False)
    return a


def _distances(X, distance):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")
    return pdist(X, metric=distance)


def pairwise_kernel(X, params=KernelParams()):
    """Similarity matrix ``K[i, j] = exp(-delta * d(x_i, x_j))``.

    Each unordered pair is evaluated once and mirrored, so ``K`` is exactly
    symmetric with an exact unit diagonal.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise DataError("pairwise_kernel needs at least two rows")
    d = _distances(X, params.distance)
    K = squareform(np.exp(-params.delta * d))
    np.fill_diagonal(K, 1.0)
    return SimilarityMatrix(_readonly(K))


def laplacian(K):
    """Unnormalized Laplacian ``L = M - K`` with ``M = diag(K.sum(axis=1))``.

    The degree includes the self-similarity ``K[i, i]``; it cancels against the
    diagonal of ``K`` so ``L`` is the same either way.
    """
    K = np.asarray(K, dtype=float)
    degree = K.sum(axis=1)
    L = -K.copy()
    L[np.diag_indices_from(L)] += degree
    # exact zero row sums are not guaranteed by the subtraction above
    return GraphLaplacian(_readonly(L), _readonly(degree))


def graph_laplacian(X, params=KernelParams()):
    """Convenience: ``laplacian(pairwise_kernel(X, params))``.

    A single row yields the 1x1 zero Laplacian.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 1:
        return GraphLaplacian(_readonly(np.zeros((1, 1))), _readonly(np.ones(1)))
    return laplacian(pairwise_kernel(X, params))


def quadratic_form(L, f):
    """Return ``0.5 * f @ L @ f``."""
    L = np.asarray(L, dtype=float)
    f = np.asarray(f, dtype=float)
    if L.shape != (f.shape[0], f.shape[0]):
        raise DataError(f"dimension mismatch: L {L.shape}, f {f.shape}")
    return 0.5 * float(f @ (L @ f))


def lipschitz_violations(outputs, X, tau, distance="euclidean"):
    """Pairs breaking ``|f_i - f_j| <= tau * d(x_i, x_j)``.

    Returns ``(count, pairs)`` with ``pairs`` a list of ``(i, j)``, ``i < j``.
    Pairs at zero input distance violate whenever their outputs differ.
    """
    if not tau > 0:
        raise DataError(f"tau must be > 0, got {tau}")
    f = np.asarray(outputs, dtype=float).reshape(-1, 1)
    X = np.asarray(X, dtype=float)
    if X.shape[0] != f.shape[0]:
        raise DataError(f"{f.shape[0]} outputs for {X.shape[0]} rows")
    if f.shape[0] < 2:
        return 0, []
    d = _distances(X, distance)
    D = pdist(f, metric="cityblock")
    bad = D > tau * d
    ii, jj = np.triu_indices(f.shape[0], k=1)
    pairs = list(zip(ii[bad].tolist(), jj[bad].tolist()))
    return len(pairs), pairs


def export_matrix_csv(matrix, path):
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")
