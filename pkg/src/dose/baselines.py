"""Unsupervised baseline scoring rules computed from statistic tables.

All four baselines consume log-likelihood style columns:

* ``likelihood``: the column verbatim, higher = in-distribution.
* ``tt``: |loglik - mean train loglik|, the single-sample typicality test,
  lower = in-distribution.
* ``waic``: per-row ensemble mean minus population variance of the
  per-model columns.
* ``llr``: semantic minus background column.
"""
from __future__ import annotations

import numpy as np

from .errors import NeedsEnsemble, UnknownStatistic
from .scores import ScoreVector, make_scores
from .stat_tables import StatTable


def likelihood_score(table: StatTable, loglik_column: str) -> ScoreVector:
    return make_scores("likelihood", table.sample_ids, table.column(loglik_column))


def tt_score(table: StatTable, loglik_column: str, train: StatTable) -> ScoreVector:
    """Absolute gap between each log-likelihood and the training-set mean.

    The entropy of the fitted model is estimated as the negated empirical
    average of the train log-likelihood column.
    """
    entropy_hat = -float(np.mean(train.column(loglik_column)))
    gaps = np.abs(table.column(loglik_column) + entropy_hat)
    return make_scores("tt", table.sample_ids, gaps)


def waic_score(table: StatTable, loglik_statistic: str) -> ScoreVector:
    """Ensemble mean minus population variance of per-model log-likelihoods."""
    if loglik_statistic not in table.schema.statistic_names:
        raise UnknownStatistic(f"unknown statistic {loglik_statistic!r}")
    columns = table.schema.columns_for(loglik_statistic)
    if len(columns) < 2:
        raise NeedsEnsemble(
            f"WAIC needs >= 2 model columns for {loglik_statistic!r}, got {len(columns)}"
        )
    stacked = np.column_stack([table.column(c) for c in columns])
    scores = stacked.mean(axis=1) - stacked.var(axis=1)  # population variance
    return make_scores("waic", table.sample_ids, scores)


def llr_score(
    table: StatTable, semantic_column: str, background_column: str
) -> ScoreVector:
    diff = table.column(semantic_column) - table.column(background_column)
    return make_scores("llr", table.sample_ids, diff)
