"""PCA whitening plus a one-class SVM fitted by sequential minimal optimization.

The dual problem is the Schoelkopf one-class formulation with an RBF kernel:

    minimize   (1/2) sum_ij alpha_i alpha_j k(x_i, x_j)
    subject to 0 <= alpha_i <= 1/(nu n),  sum_i alpha_i = 1

solved by two-coordinate SMO with working-set selection by maximal KKT
violation.  The decision value is f(x) = sum_i alpha_i k(sv_i, x) - rho,
positive inside the estimated support of the training data.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    NonPositiveBandwidth,
    RankDeficient,
    SolverNonConvergence,
    TableTooSmall,
)
from .scores import ScoreVector, make_scores
from .stat_tables import StatTable

# Relative eigenvalue floor below which a direction counts as degenerate.
EIG_FLOOR = 1e-12

DEFAULT_NU = 0.5
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class WhitenTransform:
    """Affine map sending the training data to zero mean, identity covariance."""

    mean: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)  # columns are principal directions
    scale: np.ndarray = field(repr=False)  # inverse square-root eigenvalues

    def __post_init__(self):
        for name in ("mean", "basis", "scale"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.dim:
            raise DimensionMismatch(f"points have {x.shape[1]} dims, whitener has {self.dim}")
        out = (x - self.mean) @ self.basis * self.scale
        return out[0] if squeeze else out


def fit_whitener(train: StatTable | np.ndarray) -> WhitenTransform:
    """Eigendecompose the sample covariance and rescale to unit variance.

    Requires more rows than columns.  Directions whose eigenvalue falls below
    1e-12 times the covariance trace are reported as rank deficient.  Sign
    and order are made deterministic: eigenvalues sorted descending, each
    eigenvector flipped so its largest-magnitude entry is positive.
    """
    x = train.values if isinstance(train, StatTable) else np.asarray(train, dtype=np.float64)
    n, dim = x.shape
    if n <= dim:
        raise RankDeficient(
            list(range(dim)),
            f"need more rows than columns to whiten, got {n} rows x {dim} columns",
        )
    mean = x.mean(axis=0)
    cov = np.cov(x, rowvar=False, ddof=1).reshape(dim, dim)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    floor = EIG_FLOOR * float(np.trace(cov))
    bad = [int(d) for d in range(dim) if eigvals[d] < floor]
    if bad:
        raise RankDeficient(bad)
    for d in range(dim):
        pivot = int(np.argmax(np.abs(eigvecs[:, d])))
        if eigvecs[pivot, d] < 0:
            eigvecs[:, d] = -eigvecs[:, d]
    return WhitenTransform(mean, eigvecs, 1.0 / np.sqrt(eigvals))


@dataclass(frozen=True)
class FittedOcsvm:
    """Support vectors, dual coefficients, offset, and kernel width."""

    support_vectors: np.ndarray = field(repr=False)
    dual_coefs: np.ndarray = field(repr=False)
    offset: float
    gamma: float
    nu: float

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=np.float64).copy()
        al = np.asarray(self.dual_coefs, dtype=np.float64).copy()
        if sv.ndim != 2 or al.shape != (sv.shape[0],):
            raise DimensionMismatch("support vectors and dual coefficients disagree")
        sv.setflags(write=False)
        al.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", al)

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def resolve_gamma(x: np.ndarray, gamma: float | str) -> float:
    """``"scale"`` maps to 1/(D * var(x)), which is ~1/D after whitening."""
    if gamma == "scale":
        var = float(np.var(x))
        if var <= 0.0:
            raise NonPositiveBandwidth("cannot scale gamma on constant data")
        return 1.0 / (x.shape[1] * var)
    value = float(gamma)
    if value <= 0.0 or not math.isfinite(value):
        raise NonPositiveBandwidth(f"gamma must be positive, got {gamma!r}")
    return value


def _smo(kernel: np.ndarray, box: float, tol: float, max_iter: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Minimize (1/2) a'Ka over {0 <= a <= box, sum a = 1}.

    Returns (alpha, gradient, iterations).  Each step moves mass between the
    pair with the largest KKT violation; ties resolve to the lowest index so
    runs are deterministic.
    """
    n = kernel.shape[0]
    alpha = np.zeros(n, dtype=np.float64)
    # Feasible start: fill floor(1/box) entries to the box, remainder next.
    n_full = min(n, int(math.floor(1.0 / box + 1e-12)))
    alpha[:n_full] = box
    remainder = 1.0 - n_full * box
    if remainder > 0.0 and n_full < n:
        alpha[n_full] = remainder
    grad = kernel @ alpha

    snap = box * 1e-12
    for iteration in range(max_iter):
        can_grow = alpha < box - snap
        can_shrink = alpha > snap
        if not can_grow.any() or not can_shrink.any():
            return alpha, grad, iteration
        i = int(np.argmin(np.where(can_grow, grad, np.inf)))
        j = int(np.argmax(np.where(can_shrink, grad, -np.inf)))
        violation = grad[j] - grad[i]
        if violation < tol:
            return alpha, grad, iteration
        denom = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        step = violation / max(denom, 1e-12)
        step = min(step, box - alpha[i], alpha[j])
        alpha[i] += step
        alpha[j] -= step
        if alpha[i] > box - snap:
            alpha[i] = box
        if alpha[j] < snap:
            alpha[j] = 0.0
        grad += step * (kernel[:, i] - kernel[:, j])
    raise SolverNonConvergence(f"SMO did not converge within {max_iter} steps")


def _offset_from_gradient(alpha: np.ndarray, grad: np.ndarray, box: float) -> float:
    free = (alpha > box * 1e-8) & (alpha < box * (1.0 - 1e-8))
    if free.any():
        return float(grad[free].mean())
    at_zero = alpha <= box * 1e-8
    at_box = alpha >= box * (1.0 - 1e-8)
    upper = float(grad[at_zero].min()) if at_zero.any() else math.inf
    lower = float(grad[at_box].max()) if at_box.any() else -math.inf
    if math.isinf(upper):
        return lower
    if math.isinf(lower):
        return upper
    return 0.5 * (upper + lower)


def fit_ocsvm(
    train_whitened: np.ndarray,
    nu: float = DEFAULT_NU,
    gamma: float | str = "scale",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FittedOcsvm:
    """Fit the one-class SVM on (already whitened) row vectors."""
    x = np.asarray(train_whitened, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TableTooSmall("one-class SVM needs at least 2 training rows")
    if not 0.0 < nu <= 1.0:
        raise NonPositiveBandwidth(f"nu must be in (0, 1], got {nu}")
    n = x.shape[0]
    gamma_value = resolve_gamma(x, gamma)
    kernel = rbf_kernel(x, x, gamma_value)
    box = 1.0 / (nu * n)
    alpha, grad, _ = _smo(kernel, box, tol, max_iter)
    rho = _offset_from_gradient(alpha, grad, box)
    keep = alpha > box * 1e-8
    return FittedOcsvm(x[keep], alpha[keep], rho, gamma_value, float(nu))


def decision_values(model: FittedOcsvm, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    squeeze = points.ndim == 1
    if squeeze:
        points = points[None, :]
    if points.shape[1] != model.support_vectors.shape[1]:
        raise DimensionMismatch(
            f"points have {points.shape[1]} dims, model has "
            f"{model.support_vectors.shape[1]}"
        )
    k = rbf_kernel(points, model.support_vectors, model.gamma)
    values = k @ model.dual_coefs - model.offset
    return values[0] if squeeze else values


def dual_objective(model_alpha: np.ndarray, kernel: np.ndarray) -> float:
    return 0.5 * float(model_alpha @ kernel @ model_alpha)


def dose_svm_score(
    whitener: WhitenTransform,
    model: FittedOcsvm,
    table: StatTable,
    statistic_names: tuple[str, ...] | None = None,
) -> ScoreVector:
    """Whiten the table rows and evaluate the SVM decision function.

    ``statistic_names`` reorders the table columns to the fit-time order;
    when omitted, column order is taken as-is.
    """
    if statistic_names is not None:
        if set(statistic_names) != set(table.column_names):
            raise DimensionMismatch(
                f"table columns {table.column_names} do not match "
                f"fitted statistics {tuple(statistic_names)}"
            )
        order = [table.column_names.index(name) for name in statistic_names]
        values = table.values[:, order]
    else:
        values = table.values
    whitened = whitener.apply(values)
    return make_scores("dose_svm", table.sample_ids, decision_values(model, whitened))


def svm_model_to_dict(
    whitener: WhitenTransform, model: FittedOcsvm, statistic_names
) -> dict:
    return {
        "kind": "svm",
        "statistic_names": list(statistic_names),
        "whitener": {
            "mean": whitener.mean.tolist(),
            "basis": whitener.basis.tolist(),
            "scale": whitener.scale.tolist(),
        },
        "support_vectors": model.support_vectors.tolist(),
        "dual_coefs": model.dual_coefs.tolist(),
        "offset": float(model.offset),
        "gamma": float(model.gamma),
        "nu": float(model.nu),
    }


def svm_model_from_dict(payload: dict) -> tuple[WhitenTransform, FittedOcsvm, tuple[str, ...]]:
    if payload.get("kind") != "svm":
        raise DimensionMismatch("payload is not a serialized one-class SVM")
    whitener = WhitenTransform(
        np.array(payload["whitener"]["mean"]),
        np.array(payload["whitener"]["basis"]),
        np.array(payload["whitener"]["scale"]),
    )
    model = FittedOcsvm(
        np.array(payload["support_vectors"]),
        np.array(payload["dual_coefs"]),
        float(payload["offset"]),
        float(payload["gamma"]),
        float(payload["nu"]),
    )
    return whitener, model, tuple(payload["statistic_names"])


def save_svm_model(
    whitener: WhitenTransform, model: FittedOcsvm, statistic_names, path: str | Path
) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(svm_model_to_dict(whitener, model, statistic_names), indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    return path


def load_svm_model(path: str | Path):
    return svm_model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
