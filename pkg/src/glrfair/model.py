"""Logistic regression with graph-Laplacian regularization.

Three variants share one gradient-descent core:

* ``LR``   - plain (optionally instance-weighted) logistic regression.
* ``IFDA`` - the regularizer is built on the source and target rows stacked
  together, so target features must be available at train time.
* ``IFRT`` - the regularizer is built on the source alone; at inference the
  trained parameters are fine-tuned on a second regularizer built on the
  target features.

Design matrices carry the intercept in column 0. Kernels and Laplacians are
always built on the raw feature columns, never on the intercept.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .exceptions import ConfigError, DataError, NumericalError
from .graph import KernelParams, graph_laplacian

__all__ = [
    "VARIANTS",
    "TrainConfig",
    "ModelParams",
    "add_intercept",
    "forward",
    "source_loss",
    "source_gradient",
    "target_loss",
    "target_gradient",
    "train",
    "train_converged",
    "fine_tune",
    "fit_variant",
    "fit_counterpart",
    "predict_proba",
    "predict_labels",
    "save_model",
    "load_model",
]

VARIANTS = ("LR", "IFDA", "IFRT")
EPS = 1e-12
MODEL_FORMAT = "glrfair.model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings. Defaults are the German Credit experiment values.

    ``baseline_solver`` selects how the ``LR`` variant is fitted: ``"gd"`` runs
    the same fixed-step loop as the regularized variants with ``alpha = 0``;
    ``"lbfgs"`` minimizes the unpenalized cross-entropy to convergence.
    """

    alpha: float = 10.0
    lr_train: float = 0.1
    lr_tune: float = 0.1
    tol_train: float = 1e-7
    tol_tune: float = 1e-10
    max_epochs: int = 200
    seed: int = 0
    baseline_solver: str = "gd"

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        for name in ("lr_train", "tol_train", "tol_tune"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.lr_tune < 0:
            raise ConfigError(f"lr_tune must be >= 0, got {self.lr_tune}")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be a positive integer, got {self.max_epochs}")
        if self.baseline_solver not in ("gd", "lbfgs"):
            raise ConfigError(f"baseline_solver must be 'gd' or 'lbfgs', got {self.baseline_solver!r}")


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Fitted parameters plus the record of how they were obtained.

    ``loss_history`` holds the training objective at every visited iterate
    (``trained_epochs + 1`` values for gradient descent). ``tune_history``
    holds the target regularizer across fine-tuning iterates, empty unless
    the model was fine-tuned.
    """

    theta: np.ndarray
    trained_epochs: int
    converged: bool
    variant: str
    alpha_used: float
    loss_history: tuple = ()
    tuned_epochs: int = 0
    tune_converged: bool | None = None
    tune_history: tuple = ()
    config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, copy=True)
        if theta.ndim != 1 or not np.all(np.isfinite(theta)):
            raise NumericalError("model parameters must be a finite 1-D vector")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self):
        return self.theta.shape[0] - 1

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "variant": self.variant,
            "alpha_used": self.alpha_used,
            "theta": self.theta.tolist(),
            "trained_epochs": self.trained_epochs,
            "converged": self.converged,
            "loss_history": list(self.loss_history),
            "tuned_epochs": self.tuned_epochs,
            "tune_converged": self.tune_converged,
            "tune_history": list(self.tune_history),
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise DataError(f"not a serialized model: format={d.get('format')!r}")
        if d.get("version") != MODEL_VERSION:
            raise DataError(f"unsupported model version {d.get('version')!r}")
        return cls(
            theta=np.asarray(d["theta"], dtype=float),
            trained_epochs=int(d["trained_epochs"]),
            converged=bool(d["converged"]),
            variant=d["variant"],
            alpha_used=float(d["alpha_used"]),
            loss_history=tuple(d.get("loss_history", ())),
            tuned_epochs=int(d.get("tuned_epochs", 0)),
            tune_converged=d.get("tune_converged"),
            tune_history=tuple(d.get("tune_history", ())),
            config=TrainConfig(**d.get("config", {})),
        )


def save_model(params, path):
    with open(path, "w") as fh:
        json.dump(params.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return ModelParams.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# losses and gradients

def add_intercept(X):
    X = np.asarray(X, dtype=float)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def forward(X, theta):
    """Sigmoid outputs ``1 / (1 + exp(-X @ theta))`` for a design matrix."""
    X = np.asarray(X, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if X.shape[1] != theta.shape[0]:
        raise DataError(f"dimension mismatch: X {X.shape}, theta {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise NumericalError("non-finite parameters")
    return expit(X @ theta)


def _check(X, y, W, L, X_graph):
    n = X.shape[0]
    if y.shape != (n,):
        raise DataError(f"labels shape {y.shape} does not match {n} rows")
    if W is not None and (W.shape != (n,) or np.any(W < 0)):
        raise DataError("weights must be a nonnegative vector with one entry per row")
    if L is not None:
        ng = n if X_graph is None else X_graph.shape[0]
        if L.shape != (ng, ng):
            raise DataError(f"Laplacian shape {L.shape} does not match {ng} graph rows")


def _prepare(X, y, W, L, X_graph):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    W = np.ones(X.shape[0]) if W is None else np.asarray(W, dtype=float)
    L = None if L is None else np.asarray(L, dtype=float)
    X_graph = None if X_graph is None else np.asarray(X_graph, dtype=float)
    _check(X, y, W, L, X_graph)
    return X, y, W, L, X_graph


def _cross_entropy(f, y, W):
    p = np.clip(f, EPS, 1.0 - EPS)
    return float(np.mean(W * -(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def source_loss(X, y, theta, W=None, L=None, alpha=0.0, X_graph=None):
    """Weighted mean cross-entropy plus ``alpha * 0.5 * f^T L f``.

    The regularizer is evaluated on ``X_graph`` when given (the stacked
    source+target design used by IFDA), otherwise on ``X``. It is not divided
    by the sample count.
    """
    X, y, W, L, X_graph = _prepare(X, y, W, L, X_graph)
    f = forward(X, theta)
    loss = _cross_entropy(f, y, W)
    if alpha and L is not None:
        fg = f if X_graph is None else forward(X_graph, theta)
        loss += alpha * 0.5 * float(fg @ (L @ fg))
    return loss


def _reg_gradient(Xg, L, f):
    return Xg.T @ (f * (1.0 - f) * (L @ f))


def source_gradient(X, y, theta, W=None, L=None, alpha=0.0, X_graph=None):
    """Gradient of :func:`source_loss` with respect to ``theta``.

    ``(1/n) X^T (W * (f - y)) + alpha * Xg^T J L f`` with ``J = diag(f (1 - f))``.
    """
    X, y, W, L, X_graph = _prepare(X, y, W, L, X_graph)
    f = forward(X, theta)
    g = X.T @ (W * (f - y)) / X.shape[0]
    if alpha and L is not None:
        if X_graph is None:
            g = g + alpha * _reg_gradient(X, L, f)
        else:
            g = g + alpha * _reg_gradient(X_graph, L, forward(X_graph, theta))
    return g


def target_loss(X_t, theta, L_t):
    """Target regularizer ``0.5 * f^T L_t f`` at ``f = forward(X_t, theta)``."""
    f = forward(X_t, theta)
    L_t = np.asarray(L_t, dtype=float)
    if L_t.shape != (f.shape[0], f.shape[0]):
        raise DataError(f"Laplacian shape {L_t.shape} does not match {f.shape[0]} rows")
    return 0.5 * float(f @ (L_t @ f))


def target_gradient(X_t, theta_hat, L_t):
    X_t = np.asarray(X_t, dtype=float)
    L_t = np.asarray(L_t, dtype=float)
    f = forward(X_t, theta_hat)
    if L_t.shape != (f.shape[0], f.shape[0]):
        raise DataError(f"Laplacian shape {L_t.shape} does not match {f.shape[0]} rows")
    return _reg_gradient(X_t, L_t, f)


# ---------------------------------------------------------------------------
# optimizers

def train(X, y, W=None, L=None, config=TrainConfig(), *, alpha=None, X_graph=None,
          variant="IFRT", callback=None):
    """Full-batch fixed-step gradient descent from zero on :func:`source_loss`.

    Stops when the gradient's infinity norm drops below ``config.tol_train``
    or after ``config.max_epochs`` updates. ``callback(epoch, theta)`` is
    called at every visited iterate, starting with the zero vector at epoch 0.

    Raises :class:`NumericalError` carrying the epoch index if the loss
    becomes non-finite.
    """
    alpha = config.alpha if alpha is None else alpha
    X, y, W, L, X_graph = _prepare(X, y, W, L, X_graph)
    use_reg = bool(alpha) and L is not None
    n = X.shape[0]
    theta = np.zeros(X.shape[1])
    history = []
    converged = False
    epoch = 0
    while True:
        f = expit(X @ theta)
        loss = _cross_entropy(f, y, W)
        g = X.T @ (W * (f - y)) / n
        if use_reg:
            fg = f if X_graph is None else expit(X_graph @ theta)
            Lf = L @ fg
            loss += alpha * 0.5 * float(fg @ Lf)
            g = g + alpha * ((X if X_graph is None else X_graph).T @ (fg * (1.0 - fg) * Lf))
        if not (np.isfinite(loss) and np.all(np.isfinite(g))):
            raise NumericalError(f"training diverged at epoch {epoch}", epoch=epoch)
        history.append(loss)
        if callback is not None:
            callback(epoch, theta.copy())
        if np.max(np.abs(g)) < config.tol_train:
            converged = True
            break
        if epoch == config.max_epochs:
            break
        theta = theta - config.lr_train * g
        epoch += 1
    return ModelParams(theta, epoch, converged, variant, float(alpha) if use_reg else 0.0,
                       tuple(history), config=config)


def train_converged(X, y, W=None, config=TrainConfig(), *, callback=None):
    """Unpenalized weighted logistic regression minimized to convergence (L-BFGS)."""
    X, y, W, _, _ = _prepare(X, y, W, None, None)
    n = X.shape[0]

    def fun(theta):
        f = expit(X @ theta)
        return _cross_entropy(f, y, W), X.T @ (W * (f - y)) / n

    res = minimize(fun, np.zeros(X.shape[1]), jac=True, method="L-BFGS-B",
                   options={"maxiter": 10_000, "gtol": config.tol_train, "ftol": 0.0})
    if not np.all(np.isfinite(res.x)):
        raise NumericalError("L-BFGS produced non-finite parameters", epoch=int(res.nit))
    if callback is not None:
        callback(int(res.nit), res.x.copy())
    return ModelParams(res.x, int(res.nit), bool(res.success), "LR", 0.0,
                       (float(res.fun),), config=config)


def fine_tune(params, X_t, L_t, config=None, *, callback=None):
    """Descend the target regularizer starting from trained parameters.

    ``params`` is a :class:`ModelParams` (or a bare parameter vector). Stops
    on ``config.tol_tune`` or after ``config.max_epochs`` updates.
    ``callback(epoch, theta)`` sees every iterate, epoch 0 being the untuned
    parameters.
    """
    if isinstance(params, ModelParams):
        base = params
        config = config or params.config
    else:
        config = config or TrainConfig()
        base = ModelParams(params, 0, True, "IFRT", 0.0, config=config)
    X_t = np.asarray(X_t, dtype=float)
    L_t = np.asarray(L_t, dtype=float)
    if L_t.shape != (X_t.shape[0], X_t.shape[0]):
        raise DataError(f"Laplacian shape {L_t.shape} does not match {X_t.shape[0]} rows")
    theta = np.array(base.theta)
    history = []
    converged = False
    epoch = 0
    while True:
        f = expit(X_t @ theta)
        Lf = L_t @ f
        risk = 0.5 * float(f @ Lf)
        g = X_t.T @ (f * (1.0 - f) * Lf)
        if not (np.isfinite(risk) and np.all(np.isfinite(g))):
            raise NumericalError(f"fine-tuning diverged at epoch {epoch}", epoch=epoch)
        history.append(risk)
        if callback is not None:
            callback(epoch, theta.copy())
        if np.max(np.abs(g)) < config.tol_tune:
            converged = True
            break
        if epoch == config.max_epochs or config.lr_tune == 0:
            break
        theta = theta - config.lr_tune * g
        epoch += 1
    return replace(base, theta=theta, variant="IFRT", tuned_epochs=epoch,
                   tune_converged=converged, tune_history=tuple(history))


def fit_variant(variant, source, target=None, config=TrainConfig(),
                kernel_params=KernelParams(), *, weights=None, callback=None,
                tune_callback=None):
    """Fit one of ``LR``, ``IFDA`` or ``IFRT`` on scaled datasets.

    ``IFDA`` needs ``target`` at train time. ``IFRT`` trains on the source
    regularizer and, when ``target`` is given, fine-tunes on the target
    regularizer. ``LR`` ignores ``alpha`` and ``target``.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    Xs = add_intercept(source.features)
    y = source.labels
    if variant == "LR":
        if config.baseline_solver == "lbfgs":
            return train_converged(Xs, y, weights, config, callback=callback)
        return train(Xs, y, weights, None, config, alpha=0.0, variant="LR", callback=callback)
    if variant == "IFDA":
        if target is None:
            raise ConfigError("IFDA needs the target features at train time")
        stacked = np.vstack([source.features, target.features])
        L = graph_laplacian(stacked, kernel_params).L
        return train(Xs, y, weights, L, config, X_graph=add_intercept(stacked),
                     variant="IFDA", callback=callback)
    L_s = graph_laplacian(source.features, kernel_params).L
    params = train(Xs, y, weights, L_s, config, variant="IFRT", callback=callback)
    if target is None:
        return params
    L_t = graph_laplacian(target.features, kernel_params).L
    return fine_tune(params, add_intercept(target.features), L_t, config,
                     callback=tune_callback)


def fit_counterpart(source, config=TrainConfig(), *, weights=None, callback=None):
    """The ``alpha = 0`` model a regularized variant is compared against.

    Gradient descent from zero to its own convergence (or the epoch cap),
    with no regularizer and no fine-tuning.
    """
    return train(add_intercept(source.features), source.labels, weights, None, config,
                 alpha=0.0, variant="LR", callback=callback)


def predict_proba(model, X):
    theta = model.theta if isinstance(model, ModelParams) else np.asarray(model, dtype=float)
    return forward(add_intercept(X), theta)


def predict_labels(model, X):
    """Threshold probabilities at 0.5; an exact 0.5 maps to 1."""
    return (predict_proba(model, X) >= 0.5).astype(np.int64)
