"""Analytic data generators with closed-form reference answers.

Three families:

* an isotropic unit Gaussian in D dimensions, whose negative log-likelihood
  has the shifted-Gamma density of states p(u) = Gamma(D/2, 1) at u - c
  with c = (D/2) log 2pi;
* a two-statistic toy mimicking a flow model, where the in-distribution and
  out-of-distribution clusters are offset along the (+1, -1) diagonal so the
  summed "log-likelihood" is identically distributed across classes;
* superfluous statistic injection, which appends standard-normal statistics
  whose exact log-density is added to existing scores.

Stream allocation (Philox key = (seed, stream)): the Gaussian oracle uses
stream 0; the flow toy uses streams 0/1/2 for train/test/ood; superfluous
statistic with absolute index j uses stream 3j + tag with tag 0 for the
in-distribution set, 1 for the OOD set, and 2 for training data.  Keying by
absolute index makes injection additive: applying k1 statistics and then k2
more (start_index=k1) equals applying k1+k2 at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma as gamma_dist

from .errors import BadParams, OutOfSupport
from .rng import normals
from .scores import ScoreVector
from .stat_tables import StatSchema, StatTable

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

GAUSSIAN_STATISTICS = ("nll", "norm", "coord0", "coordmax")
FLOW_TOY_STATISTICS = ("latent", "jac", "nll")

_TAG_IN = 0
_TAG_OOD = 1
_TAG_TRAIN = 2


@dataclass(frozen=True)
class GaussianOracle:
    """Isotropic unit Gaussian in ``dim`` dimensions."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise BadParams(f"dimension must be positive, got {self.dim}")

    @property
    def log_norm_constant(self) -> float:
        """c = (D/2) log 2pi, the NLL of the origin."""
        return 0.5 * self.dim * math.log(2.0 * math.pi)

    @property
    def mean_nll(self) -> float:
        return 0.5 * self.dim + self.log_norm_constant

    @property
    def annulus_radius(self) -> float:
        return math.sqrt(self.dim)


def sample_gaussian_stats(
    oracle: GaussianOracle, n: int, seed: int, role: str = "train"
) -> StatTable:
    """Summary statistics of n seeded draws: nll, norm, coord0, coordmax."""
    if n < 1:
        raise BadParams(f"need n >= 1 samples, got {n}")
    x = normals(seed, (n, oracle.dim), stream=0)
    sq_norm = np.einsum("ij,ij->i", x, x)
    values = np.column_stack(
        [
            0.5 * sq_norm + oracle.log_norm_constant,
            np.sqrt(sq_norm),
            x[:, 0],
            x.max(axis=1),
        ]
    )
    schema = StatSchema(GAUSSIAN_STATISTICS)
    ids = tuple(f"s{i:07d}" for i in range(n))
    return StatTable(schema, role, ids, values)


def gaussian_dos_pdf(oracle: GaussianOracle, u) -> float | np.ndarray:
    """Density of states of the NLL statistic: Gamma(D/2, 1) at u - c."""
    u_arr = np.asarray(u, dtype=np.float64)
    c = oracle.log_norm_constant
    if np.any(u_arr <= c):
        raise OutOfSupport(f"density of states is supported on u > {c:.6g}")
    pdf = gamma_dist.pdf(u_arr - c, a=0.5 * oracle.dim)
    return float(pdf) if np.isscalar(u) or u_arr.ndim == 0 else pdf


@dataclass(frozen=True)
class FlowToySpec:
    """Two-statistic scenario where the summed likelihood carries no signal.

    In-distribution samples are N(in_center, spread^2 I); OOD samples are
    shifted by (+offset, -offset), so latent + jac has the same law in both
    classes while the plane coordinates separate them completely for
    offset >> spread.
    """

    in_center: tuple[float, float] = (-100.0, 50.0)
    ood_offset: float = 6.0
    spread: float = 1.0
    n_per_class: int = 2000

    def __post_init__(self):
        if self.spread <= 0 or self.n_per_class < 2:
            raise BadParams("spread must be positive and n_per_class >= 2")
        if self.ood_offset < 4.0 * self.spread:
            raise BadParams(
                f"ood_offset {self.ood_offset} below 4 x spread {self.spread}; "
                "the scenario would not separate"
            )


def _toy_table(spec: FlowToySpec, seed: int, stream: int, role: str, shift, prefix: str) -> StatTable:
    z = normals(seed, (spec.n_per_class, 2), stream=stream)
    latent = spec.in_center[0] + shift[0] + spec.spread * z[:, 0]
    jac = spec.in_center[1] + shift[1] + spec.spread * z[:, 1]
    values = np.column_stack([latent, jac, -(latent + jac)])
    ids = tuple(f"{prefix}{i:06d}" for i in range(spec.n_per_class))
    return StatTable(StatSchema(FLOW_TOY_STATISTICS), role, ids, values)


def sample_flow_toy(spec: FlowToySpec, seed: int) -> tuple[StatTable, StatTable, StatTable]:
    """(train, test, ood) tables with columns latent, jac, nll."""
    train = _toy_table(spec, seed, 0, "train", (0.0, 0.0), "tr")
    test = _toy_table(spec, seed, 1, "test", (0.0, 0.0), "te")
    ood = _toy_table(spec, seed, 2, "ood", (spec.ood_offset, -spec.ood_offset), "ood")
    return train, test, ood


def toy_loglik(table: StatTable) -> np.ndarray:
    """The toy model's log-likelihood column, latent + jac = -nll."""
    return table.column("latent") + table.column("jac")


def superfluous_statistics(
    seed: int, k: int, n: int, class_tag: int, start_index: int = 0
) -> np.ndarray:
    """(n, k) matrix of standard-normal statistic draws, one stream each."""
    if k < 0:
        raise BadParams(f"k must be nonnegative, got {k}")
    out = np.empty((n, k), dtype=np.float64)
    for j in range(k):
        stream = 3 * (start_index + j) + class_tag
        out[:, j] = normals(seed, n, stream=stream)
    return out


def superfluous_train_statistics(seed: int, k: int, n: int, start_index: int = 0) -> np.ndarray:
    return superfluous_statistics(seed, k, n, _TAG_TRAIN, start_index)


def superfluous_log_density(t: np.ndarray) -> np.ndarray:
    """Row sums of the exact N(0,1) log-density of each injected statistic."""
    return -0.5 * np.einsum("ij,ij->i", t, t) - t.shape[1] * _LOG_SQRT_2PI


def inject_superfluous(
    scores_in: ScoreVector,
    scores_out: ScoreVector,
    k: int,
    mode: str,
    seed: int,
    start_index: int = 0,
) -> tuple[ScoreVector, ScoreVector]:
    """Add the log-densities of k superfluous statistics to both score sets.

    ``uninformative`` draws T ~ N(0,1) for both classes.  ``obfuscatory``
    instead hands the OOD set the maximal per-statistic value -log sqrt(2pi)
    (the log-density at T = 0), making OOD samples look maximally typical
    under the injected statistics.
    """
    if mode not in ("uninformative", "obfuscatory"):
        raise BadParams(f"unknown injection mode {mode!r}")
    if k < 0:
        raise BadParams(f"k must be nonnegative, got {k}")
    if k == 0:
        return scores_in, scores_out
    t_in = superfluous_statistics(seed, k, len(scores_in), _TAG_IN, start_index)
    add_in = superfluous_log_density(t_in)
    if mode == "uninformative":
        t_out = superfluous_statistics(seed, k, len(scores_out), _TAG_OOD, start_index)
        add_out = superfluous_log_density(t_out)
    else:
        add_out = np.full(len(scores_out), -k * _LOG_SQRT_2PI)
    return (
        scores_in.with_scores(scores_in.scores + add_in),
        scores_out.with_scores(scores_out.scores + add_out),
    )
