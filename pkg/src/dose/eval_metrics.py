"""Detection quality metrics: AUROC, calibration check, threshold selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import BadBinCount, EmptyScores, OrientationMismatch
from .scores import ScoreVector


@dataclass(frozen=True)
class EvalReport:
    method: str
    auroc: float
    ece: float
    threshold: float
    flagged_fraction: float
    n_in: int
    n_out: int

    def to_dict(self) -> dict:
        return asdict(self)


def _tied_ranks(values: np.ndarray) -> np.ndarray:
    """Average 1-based ranks, ties sharing their mean rank."""
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts
    average = starts + (counts + 1) / 2.0
    return average[inverse]


def auroc_values(in_values: np.ndarray, out_values: np.ndarray) -> float:
    """P(in > out) + 0.5 P(in = out) over all pairs, by rank statistics.

    Inputs must already be oriented higher = in-distribution.  Runs in
    O((n+m) log(n+m)) and gives ties half credit.  The win counts of the
    two orderings are exact complements, so values above one half are
    derived from the complementary count; that makes the orientation-flip
    identity auroc(in, out) = 1 - auroc(out, in) exact in floating point.
    """
    return _u_to_auroc(*_u_statistic(in_values, out_values))


def _u_statistic(in_values, out_values) -> tuple[float, int]:
    in_values = np.asarray(in_values, dtype=np.float64)
    out_values = np.asarray(out_values, dtype=np.float64)
    if in_values.size == 0 or out_values.size == 0:
        raise EmptyScores("AUROC needs non-empty score sets")
    n_in, n_out = in_values.size, out_values.size
    ranks = _tied_ranks(np.concatenate([in_values, out_values]))
    u = ranks[:n_in].sum() - n_in * (n_in + 1) / 2.0
    return float(u), n_in * n_out


def _u_to_auroc(u: float, n_pairs: int) -> float:
    if 2.0 * u <= n_pairs:
        return u / n_pairs
    return 1.0 - (n_pairs - u) / n_pairs


def auroc(in_scores: ScoreVector, out_scores: ScoreVector) -> float:
    if in_scores.method != out_scores.method:
        raise OrientationMismatch(
            f"cannot compare methods {in_scores.method!r} and {out_scores.method!r}"
        )
    if in_scores.orientation != out_scores.orientation:
        raise OrientationMismatch("score vectors carry different orientations")
    return auroc_values(in_scores.oriented(), out_scores.oriented())


def ece_memorization(
    train_scores: ScoreVector, val_scores: ScoreVector, n_bins: int = 10
) -> float:
    """Bin-mass discrepancy between train and validation score distributions.

    Bins are equal-mass quantile bins of the train scores, so each expects
    mass 1/n_bins; the statistic is sum_b |observed_b - 1/n_bins|, which
    is 0 for identical distributions and 2(1 - 1/n_bins) when all the
    validation mass escapes to one bin.
    """
    if n_bins < 2:
        raise BadBinCount(f"need at least 2 bins, got {n_bins}")
    if train_scores.method != val_scores.method:
        raise OrientationMismatch(
            f"cannot compare methods {train_scores.method!r} and {val_scores.method!r}"
        )
    train = train_scores.oriented()
    val = val_scores.oriented()
    if train.size == 0 or val.size == 0:
        raise EmptyScores("ECE needs non-empty score sets")
    edges = np.quantile(train, np.arange(1, n_bins) / n_bins)
    # side="left": a value equal to an edge belongs to the bin on its left.
    bins = np.searchsorted(edges, val, side="left")
    observed = np.bincount(bins, minlength=n_bins) / val.size
    return float(np.abs(observed - 1.0 / n_bins).sum())


def choose_threshold(val_scores: ScoreVector, discard_fraction: float) -> float:
    """k-th smallest oriented validation score with k = ceil(fraction * m).

    The decision rule downstream is: flag as out-of-distribution iff
    oriented score <= threshold.  fraction 0 returns -inf (nothing flagged).
    """
    if not 0.0 <= discard_fraction < 1.0:
        raise BadBinCount(f"discard_fraction must be in [0, 1), got {discard_fraction}")
    values = val_scores.oriented()
    if values.size == 0:
        raise EmptyScores("threshold selection needs a non-empty validation set")
    m = values.size
    k = math.ceil(discard_fraction * m - 1e-9)
    if k <= 0:
        return -math.inf
    return float(np.partition(values, k - 1)[k - 1])


def flagged_fraction(scores: ScoreVector, threshold: float) -> float:
    values = scores.oriented()
    if values.size == 0:
        raise EmptyScores("cannot flag an empty score set")
    return float(np.mean(values <= threshold))


def build_eval_report(
    in_scores: ScoreVector,
    out_scores: ScoreVector,
    train_scores: ScoreVector,
    val_scores: ScoreVector,
    n_bins: int = 10,
    discard_fraction: float = 0.1,
) -> EvalReport:
    threshold = choose_threshold(val_scores, discard_fraction)
    return EvalReport(
        method=in_scores.method,
        auroc=auroc(in_scores, out_scores),
        ece=ece_memorization(train_scores, val_scores, n_bins),
        threshold=threshold,
        flagged_fraction=flagged_fraction(val_scores, threshold),
        n_in=len(in_scores),
        n_out=len(out_scores),
    )
