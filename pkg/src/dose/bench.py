"""Benchmark reproductions on the synthetic oracles.

Each runner returns plain data (dicts, arrays, tables) so the CLI layer can
serialize results and render figures without re-deriving anything, and the
test suite can call the same code paths the CLI exercises.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import likelihood_score, tt_score
from .errors import BadParams
from .eval_metrics import EvalReport, auroc, build_eval_report, choose_threshold
from .kde import FittedKde, dose_kde_score, fit_kde, log_density
from .oracles import (
    FlowToySpec,
    GaussianOracle,
    gaussian_dos_pdf,
    inject_superfluous,
    sample_flow_toy,
    sample_gaussian_stats,
    superfluous_statistics,
    superfluous_train_statistics,
    toy_loglik,
)
from .scores import ScoreVector
from .stat_tables import StatSchema, StatTable, select_columns, split_holdout
from .svm import FittedOcsvm, WhitenTransform, decision_values, dose_svm_score, fit_ocsvm, fit_whitener
from .typicality import Gaussian1D, verify_bound_mc

TOY_FEATURES = ("latent", "jac")

DEGRADE_KS = (10, 100, 1000)
DEGRADE_MODES = ("uninformative", "obfuscatory")

GRID_SIDE = 200
GRID_MARGIN_SIGMAS = 2.0


# ---------------------------------------------------------------------------
# Gaussian annulus bench


def run_gaussian_bench(
    dim: int = 100,
    n: int = 100_000,
    seed: int = 0,
    n_bins: int = 80,
    kde_fit_cap: int = 10_000,
) -> dict:
    """Histograms of the four Gaussian statistics plus the analytic p(u).

    The density-of-states curve pairs the closed form with a KDE fitted on
    the first ``kde_fit_cap`` nll values, evaluated on the central 98% of
    the nll quantile range.
    """
    oracle = GaussianOracle(dim)
    table = sample_gaussian_stats(oracle, n, seed)
    histograms = {}
    for stat in table.column_names:
        counts, edges = np.histogram(table.column(stat), bins=n_bins)
        histograms[stat] = {"edges": edges, "counts": counts}

    nll = table.column("nll")
    fit_values = nll[: min(kde_fit_cap, n)]
    kde = fit_kde(
        StatTable(
            StatSchema(("nll",)),
            "train",
            tuple(f"k{i:07d}" for i in range(fit_values.size)),
            fit_values[:, None],
        ),
        "scott",
    )
    lo, hi = np.quantile(nll, [0.01, 0.99])
    u_grid = np.linspace(lo, hi, 400)
    dos_curve = {
        "u": u_grid,
        "analytic": np.asarray(gaussian_dos_pdf(oracle, u_grid)),
        "kde": np.exp(log_density(kde, u_grid[:, None])),
    }
    origin_reference = {"nll": oracle.log_norm_constant, "norm": 0.0, "coord0": 0.0}
    summary = {
        "dim": dim,
        "n": n,
        "seed": seed,
        "mean_nll": float(nll.mean()),
        "mean_norm": float(table.column("norm").mean()),
        "expected_mean_nll": oracle.mean_nll,
        "annulus_radius": oracle.annulus_radius,
        "annulus_mass_within_3": float(
            np.mean(np.abs(table.column("norm") - oracle.annulus_radius) <= 3.0)
        ),
        "origin_reference": origin_reference,
    }
    return {
        "table": table,
        "histograms": histograms,
        "dos_curve": dos_curve,
        "summary": summary,
    }


# ---------------------------------------------------------------------------
# Flow-toy bench (likelihood decomposition scenario)


def _toy_loglik_table(table: StatTable) -> StatTable:
    return StatTable(
        StatSchema(("loglik",)),
        table.role,
        table.sample_ids,
        toy_loglik(table)[:, None],
    )


@dataclass
class ToyModels:
    kde: FittedKde
    whitener: WhitenTransform
    svm: FittedOcsvm
    train_features: StatTable


def fit_toy_models(
    train: StatTable,
    bandwidth_rule: str = "scott",
    nu: float = 0.5,
    gamma: float | str = "scale",
) -> ToyModels:
    features = select_columns(train, TOY_FEATURES)
    kde = fit_kde(features, bandwidth_rule)
    whitener = fit_whitener(features)
    svm = fit_ocsvm(whitener.apply(features.values), nu=nu, gamma=gamma)
    return ToyModels(kde, whitener, svm, features)


def score_toy_methods(
    models: ToyModels, train_ref: StatTable, table: StatTable, methods
) -> dict[str, ScoreVector]:
    """Score one table under each requested method."""
    out: dict[str, ScoreVector] = {}
    features = select_columns(table, TOY_FEATURES)
    loglik = _toy_loglik_table(table)
    train_loglik = _toy_loglik_table(train_ref)
    for method in methods:
        if method == "likelihood":
            out[method] = likelihood_score(loglik, "loglik")
        elif method == "tt":
            out[method] = tt_score(loglik, "loglik", train_loglik)
        elif method == "dose_kde":
            out[method] = dose_kde_score(models.kde, features)
        elif method == "dose_svm":
            out[method] = dose_svm_score(
                models.whitener, models.svm, features, TOY_FEATURES
            )
        else:
            raise BadParams(f"unknown toy method {method!r}")
    return out


def run_flow_toy_bench(
    spec: FlowToySpec | None = None,
    seed: int = 0,
    holdout_fraction: float = 0.1,
    bandwidth_rule: str = "scott",
    nu: float = 0.5,
    gamma: float | str = "scale",
    ece_bins: int = 10,
    discard_fraction: float = 0.1,
    methods=("likelihood", "tt", "dose_kde", "dose_svm"),
    with_grid: bool = True,
) -> dict:
    """Fit on the toy training cloud and compare methods on test vs OOD."""
    spec = spec or FlowToySpec()
    full_train, test, ood = sample_flow_toy(spec, seed)
    train, val = split_holdout(full_train, holdout_fraction, seed)
    models = fit_toy_models(train, bandwidth_rule, nu, gamma)

    scored = {
        name: score_toy_methods(models, train, table, methods)
        for name, table in (("train", train), ("val", val), ("test", test), ("ood", ood))
    }
    reports: dict[str, EvalReport] = {}
    for method in methods:
        reports[method] = build_eval_report(
            scored["test"][method],
            scored["ood"][method],
            scored["train"][method],
            scored["val"][method],
            n_bins=ece_bins,
            discard_fraction=discard_fraction,
        )

    grid = None
    if with_grid:
        grid = toy_decision_grid(models, train, test, ood, methods, discard_fraction)

    return {
        "spec": spec,
        "seed": seed,
        "tables": {"train": train, "val": val, "test": test, "ood": ood},
        "scores": scored,
        "reports": reports,
        "grid": grid,
    }


def toy_decision_grid(
    models: ToyModels,
    train: StatTable,
    test: StatTable,
    ood: StatTable,
    methods=("likelihood", "tt", "dose_kde", "dose_svm"),
    discard_fraction: float = 0.1,
) -> dict:
    """Oriented method scores on a 200x200 raster over (latent, jac).

    Axis ranges span [min - 2 sigma, max + 2 sigma] of the pooled test and
    OOD samples.  Per-method thresholds are chosen to exclude
    ``discard_fraction`` of the test scores; a raster cell is flagged OOD
    when its oriented score falls at or below the threshold.
    """
    axes = {}
    for idx, axis in enumerate(TOY_FEATURES):
        pooled = np.concatenate([test.column(axis), ood.column(axis)])
        sigma = float(pooled.std())
        lo = float(pooled.min()) - GRID_MARGIN_SIGMAS * sigma
        hi = float(pooled.max()) + GRID_MARGIN_SIGMAS * sigma
        axes[axis] = np.linspace(lo, hi, GRID_SIDE)
    xs, ys = np.meshgrid(axes["latent"], axes["jac"], indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel()])

    train_loglik_mean = float(toy_loglik(train).mean())
    grid_scores: dict[str, np.ndarray] = {}
    for method in methods:
        if method == "likelihood":
            oriented = points.sum(axis=1)
        elif method == "tt":
            oriented = -np.abs(points.sum(axis=1) - train_loglik_mean)
        elif method == "dose_kde":
            oriented = log_density(models.kde, points)
        elif method == "dose_svm":
            oriented = decision_values(models.svm, models.whitener.apply(points))
        else:
            raise BadParams(f"unknown toy method {method!r}")
        grid_scores[method] = oriented

    models_scores = score_toy_methods(models, train, test, methods)
    thresholds = {
        method: choose_threshold(models_scores[method], discard_fraction)
        for method in methods
    }
    return {
        "latent": axes["latent"],
        "jac": axes["jac"],
        "scores": grid_scores,
        "thresholds": thresholds,
    }


# ---------------------------------------------------------------------------
# Superfluous-statistic degradation bench


def run_degrade_bench(
    spec: FlowToySpec | None = None,
    seed: int = 0,
    ks=DEGRADE_KS,
    modes=DEGRADE_MODES,
    bandwidth_rule: str = "scott",
    nu: float = 0.5,
    gamma: float | str = "scale",
) -> dict:
    """AUROC versus the number of injected superfluous statistics.

    The KDE scorer degrades by adding the injected statistics' exact
    log-densities to its scores, the direct form of appending independent
    experts to a product-of-experts score.  The SVM scorer degrades by
    appending the injected statistics as feature columns and refitting the
    whitener and the one-class SVM, since its score is not a sum over
    statistics.  Both share the same statistic draws per (seed, k).
    """
    spec = spec or FlowToySpec()
    ks = tuple(int(k) for k in ks)
    if any(k < 0 for k in ks):
        raise BadParams(f"ks must be nonnegative, got {ks}")
    train, test, ood = sample_flow_toy(spec, seed)
    features_train = select_columns(train, TOY_FEATURES)
    features_test = select_columns(test, TOY_FEATURES)
    features_ood = select_columns(ood, TOY_FEATURES)

    kde = fit_kde(features_train, bandwidth_rule)
    kde_in = dose_kde_score(kde, features_test)
    kde_out = dose_kde_score(kde, features_ood)

    whitener = fit_whitener(features_train)
    svm = fit_ocsvm(whitener.apply(features_train.values), nu=nu, gamma=gamma)
    svm_in = decision_values(svm, whitener.apply(features_test.values))
    svm_out = decision_values(svm, whitener.apply(features_ood.values))

    rows = [
        {"scorer": "dose_kde", "mode": "base", "k": 0,
         "auroc": auroc(kde_in, kde_out)},
        {"scorer": "dose_svm", "mode": "base", "k": 0,
         "auroc": _auroc_raw(svm_in, svm_out)},
    ]
    n = spec.n_per_class
    for mode in modes:
        for k in ks:
            inj_in, inj_out = inject_superfluous(kde_in, kde_out, k, mode, seed)
            rows.append(
                {"scorer": "dose_kde", "mode": mode, "k": k,
                 "auroc": auroc(inj_in, inj_out)}
            )
            z_train = superfluous_train_statistics(seed, k, n)
            z_test = superfluous_statistics(seed, k, n, 0)
            if mode == "uninformative":
                z_ood = superfluous_statistics(seed, k, n, 1)
            else:
                # Maximally typical feature values for the OOD set.
                z_ood = np.zeros((n, k))
            x_train = np.hstack([features_train.values, z_train])
            w_k = fit_whitener(x_train)
            svm_k = fit_ocsvm(w_k.apply(x_train), nu=nu, gamma=gamma)
            in_vals = decision_values(svm_k, w_k.apply(np.hstack([features_test.values, z_test])))
            out_vals = decision_values(svm_k, w_k.apply(np.hstack([features_ood.values, z_ood])))
            rows.append(
                {"scorer": "dose_svm", "mode": mode, "k": k,
                 "auroc": _auroc_raw(in_vals, out_vals)}
            )
    return {"spec": spec, "seed": seed, "rows": rows}


def _auroc_raw(in_values: np.ndarray, out_values: np.ndarray) -> float:
    from .eval_metrics import auroc_values

    return auroc_values(in_values, out_values)


# ---------------------------------------------------------------------------
# Typicality bound bench


def default_bound_grid() -> dict:
    return {
        "pairs": (
            (Gaussian1D(0.0, 1.0), Gaussian1D(0.0, 1.0)),
            (Gaussian1D(0.0, 1.0), Gaussian1D(0.5, 1.0)),
            (Gaussian1D(0.0, 1.0), Gaussian1D(0.0, 2.0)),
        ),
        "s_values": (1, 4, 16),
        "epsilons": (0.1, 0.5, 1.0),
    }


def run_bound_bench(
    pairs=None,
    s_values=None,
    epsilons=None,
    n_mc: int = 100_000,
    seed: int = 0,
) -> dict:
    """Monte Carlo left side against the analytic right side on a grid.

    Cell index orders as (pair, s, epsilon); each cell uses seed + index so
    cells are independent yet reproducible.
    """
    grid = default_bound_grid()
    pairs = pairs if pairs is not None else grid["pairs"]
    s_values = s_values if s_values is not None else grid["s_values"]
    epsilons = epsilons if epsilons is not None else grid["epsilons"]
    records = []
    idx = 0
    for p, q in pairs:
        for s in s_values:
            for eps in epsilons:
                records.append(verify_bound_mc(p, q, s, eps, n_mc, seed + idx))
                idx += 1
    return {"records": records, "n_mc": n_mc, "seed": seed}
