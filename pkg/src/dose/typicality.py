"""Typical-set membership, the bias/variance bound, and its estimators.

The central inequality bounds the probability that a length-s window of
samples from p falls outside the typical set defined through a scoring
distribution q:

    P(window atypical) * eps^2  <=  KL[p, q]^2 + Var_p[log q(X)] / s

Everything here works in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadWindowing, EmptyEvaluationSet, BadBinCount
from .rng import normals
from .scores import ScoreVector

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Gaussian1D:
    """Univariate normal with closed-form entropy and cross moments."""

    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.std <= 0:
            raise BadWindowing(f"std must be positive, got {self.std}")

    def entropy(self) -> float:
        return 0.5 * (_LOG_2PI + 1.0) + math.log(self.std)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, dtype=np.float64) - self.mean) / self.std
        return -0.5 * z * z - math.log(self.std) - 0.5 * _LOG_2PI

    def sample(self, seed: int, shape, stream: int = 0) -> np.ndarray:
        return self.mean + self.std * normals(seed, shape, stream)

    def label(self) -> str:
        return f"N({self.mean:g},{self.std:g})"


def gaussian_cross_entropy(p: Gaussian1D, q: Gaussian1D) -> float:
    """E_p[-log q(X)]."""
    delta = p.mean - q.mean
    return (
        0.5 * _LOG_2PI
        + math.log(q.std)
        + (p.std**2 + delta**2) / (2.0 * q.std**2)
    )


def gaussian_kl(p: Gaussian1D, q: Gaussian1D) -> float:
    return gaussian_cross_entropy(p, q) - p.entropy()


def gaussian_var_logq(p: Gaussian1D, q: Gaussian1D) -> float:
    """Var_p[log q(X)] in closed form.

    With Y = X - q.mean ~ N(delta, sigma_p^2), log q(X) is an affine map of
    Y^2 and Var[Y^2] = 4 delta^2 sigma_p^2 + 2 sigma_p^4.
    """
    delta = p.mean - q.mean
    var_y2 = 4.0 * delta**2 * p.std**2 + 2.0 * p.std**4
    return var_y2 / (4.0 * q.std**4)


@dataclass(frozen=True)
class BoundTerms:
    kl_sq: float
    var_logq: float
    s: int
    epsilon: float

    def __post_init__(self):
        if self.s < 1 or self.epsilon <= 0:
            raise BadWindowing("need s >= 1 and epsilon > 0")
        if self.kl_sq < 0 or self.var_logq < 0:
            raise BadWindowing("bound terms must be nonnegative")

    @property
    def rhs(self) -> float:
        return self.kl_sq + self.var_logq / self.s


def bound_terms(p: Gaussian1D, q: Gaussian1D, s: int, epsilon: float) -> BoundTerms:
    return BoundTerms(gaussian_kl(p, q) ** 2, gaussian_var_logq(p, q), s, epsilon)


def typical_membership(
    logq_values: np.ndarray, entropy: float, s: int, epsilon: float
) -> np.ndarray:
    """Boolean per window: |-(1/s) sum log q - H| <= epsilon.

    ``logq_values`` must divide evenly into windows of length s.
    """
    values = np.asarray(logq_values, dtype=np.float64)
    if s < 1 or values.ndim != 1 or values.size == 0 or values.size % s != 0:
        raise BadWindowing(
            f"{values.size} values do not divide into windows of length {s}"
        )
    window_nll = -values.reshape(-1, s).mean(axis=1)
    return np.abs(window_nll - entropy) <= epsilon


def verify_bound_mc(
    p: Gaussian1D,
    q: Gaussian1D,
    s: int,
    epsilon: float,
    n_mc: int,
    seed: int,
) -> dict:
    """Monte Carlo check of the typicality bound on analytic Gaussians.

    Draws ``n_mc`` windows of length s from p, measures the atypicality
    frequency against the exact H[p], and reports the empirical left side
    next to the closed-form right side with the standard error of the left.
    """
    terms = bound_terms(p, q, s, epsilon)
    draws = p.sample(seed, (n_mc, s))
    atypical = ~typical_membership(q.logpdf(draws).ravel(), p.entropy(), s, epsilon)
    p_hat = float(atypical.mean())
    lhs = p_hat * epsilon**2
    se = epsilon**2 * math.sqrt(p_hat * (1.0 - p_hat) / n_mc)
    return {
        "lhs": lhs,
        "rhs": terms.rhs,
        "se": se,
        "params": {
            "p": p.label(),
            "q": q.label(),
            "s": s,
            "epsilon": epsilon,
            "n_mc": n_mc,
            "seed": seed,
        },
    }


@dataclass(frozen=True)
class EntropyPlugin:
    """How to obtain H[p] for the empirical bound estimator.

    ``resubstitution`` resolves to the negated mean of the train scores of
    the fitted scoring model itself; ``fixed`` carries a known value;
    ``discrete_bounds`` carries the [0, h*w*c*log k] range available when a
    schema declares its pixel domain.
    """

    kind: str
    value: float | None = None
    high: float | None = None

    @staticmethod
    def resubstitution() -> "EntropyPlugin":
        return EntropyPlugin("resubstitution")

    @staticmethod
    def fixed(value: float) -> "EntropyPlugin":
        return EntropyPlugin("fixed", value=float(value))

    @staticmethod
    def discrete_bounds(domain_meta: dict | None) -> "EntropyPlugin":
        if not domain_meta:
            raise BadBinCount("discrete entropy bounds need schema domain_meta")
        high = (
            domain_meta["height"]
            * domain_meta["width"]
            * domain_meta["channels"]
            * math.log(domain_meta["levels"])
        )
        return EntropyPlugin("discrete_bounds", value=0.0, high=high)

    def candidates(self, train_scores: ScoreVector | None = None) -> tuple[tuple[str, float], ...]:
        if self.kind == "fixed":
            return (("fixed", float(self.value)),)
        if self.kind == "resubstitution":
            if train_scores is None or len(train_scores) == 0:
                raise EmptyEvaluationSet("resubstitution entropy needs train scores")
            return (("resubstitution", -float(np.mean(train_scores.scores))),)
        if self.kind == "discrete_bounds":
            return (("low", float(self.value)), ("high", float(self.high)))
        raise BadWindowing(f"unknown entropy plugin kind {self.kind!r}")


def estimate_bound_empirical(
    eval_scores: ScoreVector | np.ndarray,
    entropy: EntropyPlugin | float,
    train_scores: ScoreVector | None = None,
) -> float:
    """Computable part of the bound estimate over held-out log-densities:

        (1/m) sum (log q)^2 + 2 H (1/m) sum log q

    The additive constant shared by every q is dropped, so values are only
    comparable across candidate statistics and estimator settings (lower is
    a tighter typicality bound).  A plugin resolving to a range is
    evaluated at its low endpoint; use ``candidates()`` to sweep both.
    """
    values = (
        eval_scores.scores if isinstance(eval_scores, ScoreVector) else np.asarray(eval_scores)
    )
    if values.size == 0:
        raise EmptyEvaluationSet("empirical bound estimate needs scores")
    if isinstance(entropy, EntropyPlugin):
        entropy_value = entropy.candidates(train_scores)[0][1]
    else:
        entropy_value = float(entropy)
    mean_sq = float(np.mean(values**2))
    mean = float(np.mean(values))
    return mean_sq + 2.0 * entropy_value * mean
