"""Density-of-states scoring toolkit for out-of-distribution detection.

Fits nonparametric density estimators (product-of-experts KDE, whitened
one-class SVM) over per-sample summary statistics of a generative model,
scores new samples by typicality, and evaluates detection quality against
likelihood-based baselines on analytically verifiable synthetic oracles.
"""

from .baselines import likelihood_score, llr_score, tt_score, waic_score
from .errors import DoseError
from .eval_metrics import (
    EvalReport,
    auroc,
    auroc_values,
    build_eval_report,
    choose_threshold,
    ece_memorization,
)
from .kde import FittedKde, dose_kde_score, fit_kde, kde_log_density, log_density
from .oracles import (
    FlowToySpec,
    GaussianOracle,
    gaussian_dos_pdf,
    inject_superfluous,
    sample_flow_toy,
    sample_gaussian_stats,
)
from .scores import ScoreVector, make_scores, read_scores, write_scores
from .stat_tables import (
    StatSchema,
    StatTable,
    read_stat_table,
    select_columns,
    split_holdout,
    write_stat_table,
)
from .svm import (
    FittedOcsvm,
    WhitenTransform,
    decision_values,
    dose_svm_score,
    fit_ocsvm,
    fit_whitener,
)
from .typicality import (
    BoundTerms,
    EntropyPlugin,
    Gaussian1D,
    estimate_bound_empirical,
    typical_membership,
    verify_bound_mc,
)

__version__ = "0.1.0"
