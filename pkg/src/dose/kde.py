"""Product-of-experts Gaussian kernel density estimation over statistics.

Each statistic gets its own univariate KDE; the joint log-density is the sum
of the per-statistic log-densities.  Evaluation is exact O(n) per point and
dimension, with a log-sum-exp reduction so far-tail queries stay finite.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DegenerateStatistic,
    DimensionMismatch,
    NonPositiveBandwidth,
    TableTooSmall,
)
from .scores import ScoreVector, make_scores
from .stat_tables import StatTable

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

BANDWIDTH_RULES = ("scott", "silverman")


@dataclass(frozen=True)
class FittedKde:
    """Per-statistic bandwidths plus the retained training values."""

    statistic_names: tuple[str, ...]
    bandwidths: np.ndarray = field(repr=False)
    train_values: np.ndarray = field(repr=False)  # shape (n, D)

    def __post_init__(self):
        object.__setattr__(self, "statistic_names", tuple(self.statistic_names))
        bw = np.asarray(self.bandwidths, dtype=np.float64)
        tv = np.asarray(self.train_values, dtype=np.float64)
        if tv.ndim != 2 or tv.shape[0] < 2:
            raise TableTooSmall("KDE needs at least 2 training rows")
        if bw.shape != (tv.shape[1],) or len(self.statistic_names) != tv.shape[1]:
            raise DimensionMismatch("bandwidths, names, and training columns disagree")
        if np.any(bw <= 0) or not np.all(np.isfinite(bw)):
            raise NonPositiveBandwidth(f"bandwidths must be positive, got {bw.tolist()}")
        bw = bw.copy()
        tv = tv.copy()
        bw.setflags(write=False)
        tv.setflags(write=False)
        object.__setattr__(self, "bandwidths", bw)
        object.__setattr__(self, "train_values", tv)

    @property
    def n(self) -> int:
        return self.train_values.shape[0]

    @property
    def dim(self) -> int:
        return self.train_values.shape[1]


def _rule_bandwidth(values: np.ndarray, rule: str, name: str) -> float:
    n = values.shape[0]
    sigma = float(np.std(values, ddof=1))
    if sigma == 0.0:
        raise DegenerateStatistic(name)
    factor = n ** (-1.0 / 5.0)
    if rule == "scott":
        return sigma * factor
    # silverman
    q75, q25 = np.percentile(values, [75.0, 25.0])
    spread = min(sigma, (q75 - q25) / 1.34)
    if spread <= 0.0:
        raise DegenerateStatistic(name)
    return 0.9 * spread * factor


def fit_kde(
    train: StatTable, bandwidth_rule: str | Sequence[float] = "scott"
) -> FittedKde:
    """Fit one univariate Gaussian KDE per table column.

    ``bandwidth_rule`` is ``"scott"`` (h = sigma * n^(-1/5)),
    ``"silverman"`` (h = 0.9 * min(sigma, IQR/1.34) * n^(-1/5)), or a
    sequence of fixed positive bandwidths, one per column.
    """
    if train.n < 2:
        raise TableTooSmall(f"KDE needs at least 2 rows, got {train.n}")
    names = train.column_names
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule not in BANDWIDTH_RULES:
            raise NonPositiveBandwidth(f"unknown bandwidth rule {bandwidth_rule!r}")
        bw = np.array(
            [
                _rule_bandwidth(train.values[:, d], bandwidth_rule, names[d])
                for d in range(len(names))
            ]
        )
    else:
        bw = np.asarray(list(bandwidth_rule), dtype=np.float64)
        if bw.shape != (len(names),):
            raise DimensionMismatch(
                f"expected {len(names)} fixed bandwidths, got {bw.shape}"
            )
        if np.any(bw <= 0) or not np.all(np.isfinite(bw)):
            raise NonPositiveBandwidth(f"fixed bandwidths must be positive, got {bw.tolist()}")
    return FittedKde(names, bw, train.values)


def log_density(kde: FittedKde, points: np.ndarray) -> np.ndarray:
    """Joint log-density at ``points`` (m, D); returns shape (m,).

    Per dimension: log[(1/(n h)) sum_i phi((t - t_i)/h)] computed as a
    log-sum-exp over the training values, then summed over dimensions.  When
    every kernel term underflows, the log-sum-exp reduces to the dominant
    term -z_min^2/2 - log(n h sqrt(2 pi)) from the nearest training point,
    which keeps tail scores finite.
    """
    points = np.asarray(points, dtype=np.float64)
    squeeze = points.ndim == 1
    if squeeze:
        points = points[None, :]
    if points.ndim != 2 or points.shape[1] != kde.dim:
        raise DimensionMismatch(
            f"points have {points.shape[-1]} dims, KDE has {kde.dim}"
        )
    m = points.shape[0]
    out = np.zeros(m, dtype=np.float64)
    # Chunk the (m, n) kernel matrix per dimension to bound peak memory.
    chunk = max(1, int(4_000_000 // max(kde.n, 1)))
    for d in range(kde.dim):
        h = kde.bandwidths[d]
        train_d = kde.train_values[:, d]
        norm = math.log(kde.n) + math.log(h) + _LOG_SQRT_2PI
        for start in range(0, m, chunk):
            stop = min(start + chunk, m)
            z = (points[start:stop, d, None] - train_d[None, :]) / h
            out[start:stop] += logsumexp(-0.5 * z * z, axis=1) - norm
    return out[0] if squeeze else out


def kde_log_density(kde: FittedKde, point: Sequence[float]) -> float:
    """Log-density of a single statistic vector."""
    return float(log_density(kde, np.asarray(point, dtype=np.float64)))


def dose_kde_score(kde: FittedKde, table: StatTable) -> ScoreVector:
    """Per-sample sum of per-statistic KDE log-densities (higher = typical)."""
    order = _match_columns(kde.statistic_names, table.column_names)
    values = table.values[:, order]
    return make_scores("dose_kde", table.sample_ids, log_density(kde, values))


def _match_columns(wanted: tuple[str, ...], available: tuple[str, ...]) -> list[int]:
    if set(wanted) != set(available) or len(wanted) != len(available):
        raise DimensionMismatch(
            f"table columns {available} do not match fitted statistics {wanted}"
        )
    return [available.index(name) for name in wanted]


def kde_to_dict(kde: FittedKde) -> dict:
    return {
        "kind": "kde",
        "statistic_names": list(kde.statistic_names),
        "bandwidths": [float(b) for b in kde.bandwidths],
        "train_values": [[float(v) for v in row] for row in kde.train_values],
    }


def kde_from_dict(payload: dict) -> FittedKde:
    if payload.get("kind") != "kde":
        raise DimensionMismatch("payload is not a serialized KDE")
    return FittedKde(
        tuple(payload["statistic_names"]),
        np.array(payload["bandwidths"], dtype=np.float64),
        np.array(payload["train_values"], dtype=np.float64),
    )


def save_kde(kde: FittedKde, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(kde_to_dict(kde), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path


def load_kde(path: str | Path) -> FittedKde:
    return kde_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
