"""Command-line pipeline: ``dose fit | score | eval | bench``.

Runs are driven by a JSON config overridable by flags (flags win) and every
report echoes the resolved configuration.  Commands stage their outputs in
memory and only touch the filesystem once all computation has succeeded, so
a failing run leaves no partial files.  Exit codes: 0 success, 1 internal
error, 2 input or contract error (with a machine-readable JSON payload on
stderr).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .bench import (
    DEGRADE_KS,
    run_bound_bench,
    run_degrade_bench,
    run_flow_toy_bench,
    run_gaussian_bench,
)
from .errors import BadParams, DimensionMismatch, DoseError
from .eval_metrics import build_eval_report, flagged_fraction
from .kde import dose_kde_score, fit_kde, kde_from_dict, kde_to_dict
from .oracles import FlowToySpec
from .scores import read_scores, scores_to_csv_bytes
from .stat_tables import read_stat_table, select_columns, table_to_csv_bytes, manifest_dict
from .svm import (
    dose_svm_score,
    fit_ocsvm,
    fit_whitener,
    svm_model_from_dict,
    svm_model_to_dict,
)

_EXIT_OK = 0
_EXIT_INTERNAL = 1
_EXIT_CONTRACT = 2


@dataclass
class PipelineConfig:
    """Free parameters of the end-to-end detection pipeline."""

    paths: dict = field(default_factory=dict)  # train/val/test/ood table files
    statistics: list | None = None  # None = every statistic in the schema
    reducer: str = "ensemble_mean"
    model_id: str | None = None
    estimator: dict = field(default_factory=lambda: {"kind": "kde", "bandwidth_rule": "scott"})
    baselines: list = field(default_factory=lambda: ["likelihood", "tt"])
    ece_bins: int = 10
    discard_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.discard_fraction < 1.0:
            raise BadParams(f"discard_fraction must be in [0, 1), got {self.discard_fraction}")
        if self.ece_bins < 2:
            raise BadParams(f"ece_bins must be >= 2, got {self.ece_bins}")
        if self.estimator.get("kind") not in ("kde", "svm"):
            raise BadParams(f"estimator kind must be kde or svm, got {self.estimator}")

    @staticmethod
    def load(path: str | None, overrides: dict) -> "PipelineConfig":
        payload = {}
        if path:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        payload.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in PipelineConfig.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise BadParams(f"unknown config keys {sorted(unknown)}")
        return PipelineConfig(**payload)

    def to_dict(self) -> dict:
        return {
            "paths": dict(self.paths),
            "statistics": list(self.statistics) if self.statistics is not None else None,
            "reducer": self.reducer,
            "model_id": self.model_id,
            "estimator": dict(self.estimator),
            "baselines": list(self.baselines),
            "ece_bins": self.ece_bins,
            "discard_fraction": self.discard_fraction,
            "seed": self.seed,
        }


class StagedOutputs:
    """Collects output files as bytes; writes only after success."""

    def __init__(self, outdir: str | Path):
        self.outdir = Path(outdir)
        self.files: dict[str, bytes] = {}

    def add_bytes(self, name: str, payload: bytes) -> None:
        self.files[name] = payload

    def add_json(self, name: str, payload) -> None:
        self.add_bytes(
            name, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
        )

    def add_csv_rows(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
        self.add_bytes(name, buf.getvalue().encode("utf-8"))

    def add_figure(self, name: str, render) -> None:
        import tempfile, os

        with tempfile.TemporaryDirectory() as tmp:
            tmp_path = os.path.join(tmp, name)
            render(tmp_path)
            with open(tmp_path, "rb") as fh:
                self.add_bytes(name, fh.read())

    def write_all(self) -> list[Path]:
        self.outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, payload in self.files.items():
            target = self.outdir / name
            target.write_bytes(payload)
            written.append(target)
        return written


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def _select(table, config: PipelineConfig):
    names = tuple(config.statistics) if config.statistics else table.schema.statistic_names
    return select_columns(table, names, config.reducer, config.model_id)


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    config = PipelineConfig.load(args.config, _config_overrides(args))
    train_path = args.train or config.paths.get("train")
    if not train_path:
        raise BadParams("no training table: set paths.train in the config or pass --train")
    table = _select(read_stat_table(train_path, expected_role="train"), config)
    estimator = config.estimator
    out = StagedOutputs(args.out)
    if estimator["kind"] == "kde":
        rule = estimator.get("bandwidth_rule", "scott")
        if isinstance(rule, str) and rule.startswith("fixed:"):
            rule = [float(tok) for tok in rule.split(":", 1)[1].split(",")]
        kde = fit_kde(table, rule)
        out.add_json("model.json", kde_to_dict(kde))
        fit_info = {
            "estimator": "kde",
            "statistics": list(kde.statistic_names),
            "bandwidths": {
                name: float(bw) for name, bw in zip(kde.statistic_names, kde.bandwidths)
            },
            "n_train": kde.n,
        }
    else:
        whitener = fit_whitener(table)
        model = fit_ocsvm(
            whitener.apply(table.values),
            nu=float(estimator.get("nu", 0.5)),
            gamma=estimator.get("gamma", "scale"),
        )
        out.add_json("model.json", svm_model_to_dict(whitener, model, table.column_names))
        fit_info = {
            "estimator": "svm",
            "statistics": list(table.column_names),
            "n_support_vectors": model.n_support,
            "nu": model.nu,
            "gamma": model.gamma,
            "offset": model.offset,
            "n_train": table.n,
        }
    out.add_json("fit_report.json", {"config": config.to_dict(), "fit": fit_info})
    written = out.write_all()
    print("\n".join(str(p) for p in written))
    return _EXIT_OK


# ---------------------------------------------------------------------------
# score


def _load_model(path: str):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = payload.get("kind")
    if kind == "kde":
        return "kde", kde_from_dict(payload)
    if kind == "svm":
        return "svm", svm_model_from_dict(payload)
    raise DimensionMismatch(f"unrecognized model kind {kind!r} in {path}")


def score_table_with_model(model_path: str, table_path: str):
    kind, model = _load_model(model_path)
    table = read_stat_table(table_path)
    if kind == "kde":
        kde = model
        ordered = select_columns(table, kde.statistic_names)
        return dose_kde_score(kde, ordered)
    whitener, svm, names = model
    ordered = select_columns(table, names)
    return dose_svm_score(whitener, svm, ordered, names)


def cmd_score(args) -> int:
    scores = score_table_with_model(args.model, args.table)
    name = args.name or f"scores_{Path(args.table).stem}"
    out = StagedOutputs(args.out)
    out.add_bytes(f"{name}.csv", scores_to_csv_bytes(scores))
    out.add_json(
        f"{name}.csv.meta.json",
        {"method": scores.method, "orientation": scores.orientation},
    )
    written = out.write_all()
    print("\n".join(str(p) for p in written))
    return _EXIT_OK


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    config = PipelineConfig.load(args.config, _config_overrides(args))
    in_scores = read_scores(args.in_scores)
    out_scores = read_scores(args.out_scores)
    train_scores = read_scores(args.train_scores)
    val_scores = read_scores(args.val_scores)
    report = build_eval_report(
        in_scores,
        out_scores,
        train_scores,
        val_scores,
        n_bins=config.ece_bins,
        discard_fraction=config.discard_fraction,
    )
    dataset = args.dataset or Path(args.in_scores).stem
    ood_dataset = args.ood_dataset or Path(args.out_scores).stem
    payload = {
        "config": config.to_dict(),
        "dataset": dataset,
        "ood_dataset": ood_dataset,
        "report": report.to_dict(),
        "flagged_fraction_in": flagged_fraction(in_scores, report.threshold),
        "flagged_fraction_ood": flagged_fraction(out_scores, report.threshold),
    }
    out = StagedOutputs(args.out)
    out.add_json("eval_report.json", payload)
    out.add_csv_rows(
        "eval_report.csv",
        ["dataset", "ood_dataset", "method", "auroc"],
        [[dataset, ood_dataset, report.method, report.auroc]],
    )
    out.add_figure(
        "eval_figure.png",
        lambda p: plotting.plot_eval(in_scores, out_scores, report.threshold, p),
    )
    written = out.write_all()
    print("\n".join(str(p) for p in written))
    return _EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _bench_gaussian(args, out: StagedOutputs) -> None:
    result = run_gaussian_bench(dim=args.dim, n=args.n, seed=args.seed)
    rows = []
    for stat, h in result["histograms"].items():
        for left, right, count in zip(h["edges"][:-1], h["edges"][1:], h["counts"]):
            rows.append([stat, float(left), float(right), int(count)])
    out.add_csv_rows("gaussian_histograms.csv", ["statistic", "bin_left", "bin_right", "count"], rows)
    dos = result["dos_curve"]
    out.add_csv_rows(
        "gaussian_dos.csv",
        ["u", "analytic_pdf", "kde_pdf"],
        [[float(u), float(a), float(k)] for u, a, k in zip(dos["u"], dos["analytic"], dos["kde"])],
    )
    out.add_json("gaussian_report.json", {"summary": result["summary"]})
    table = result["table"]
    out.add_bytes("gaussian_stats.csv", table_to_csv_bytes(table))
    out.add_json("gaussian_stats.csv.manifest.json", manifest_dict(table))
    out.add_figure("gaussian_figure.png", lambda p: plotting.plot_gaussian_summary(result, p))


def _bench_flow_toy(args, out: StagedOutputs) -> None:
    spec = FlowToySpec(
        ood_offset=args.delta, spread=args.sigma, n_per_class=args.n
    )
    result = run_flow_toy_bench(
        spec=spec,
        seed=args.seed,
        holdout_fraction=args.holdout_fraction,
        nu=args.nu,
        gamma="scale" if args.gamma is None else args.gamma,
        ece_bins=args.ece_bins,
        discard_fraction=args.discard_fraction,
    )
    reports = result["reports"]
    out.add_csv_rows(
        "flow_toy_aurocs.csv",
        ["method", "auroc", "ece", "threshold", "flagged_fraction"],
        [
            [m, r.auroc, r.ece, r.threshold, r.flagged_fraction]
            for m, r in reports.items()
        ],
    )
    grid = result["grid"]
    methods = list(grid["scores"])
    grid_rows = []
    side = len(grid["latent"])
    for i in range(side):
        for j in range(side):
            row = [float(grid["latent"][i]), float(grid["jac"][j])]
            row.extend(float(grid["scores"][m][i * side + j]) for m in methods)
            grid_rows.append(row)
    out.add_csv_rows("flow_toy_grid.csv", ["latent", "jac", *methods], grid_rows)
    for name, table in result["tables"].items():
        out.add_bytes(f"flow_toy_{name}.csv", table_to_csv_bytes(table))
        out.add_json(f"flow_toy_{name}.csv.manifest.json", manifest_dict(table))
    out.add_json(
        "flow_toy_report.json",
        {
            "spec": {
                "in_center": list(result["spec"].in_center),
                "ood_offset": result["spec"].ood_offset,
                "spread": result["spec"].spread,
                "n_per_class": result["spec"].n_per_class,
            },
            "seed": result["seed"],
            "thresholds": {m: float(t) for m, t in grid["thresholds"].items()},
            "reports": {m: r.to_dict() for m, r in reports.items()},
        },
    )
    out.add_figure("flow_toy_figure.png", lambda p: plotting.plot_flow_toy(result, p))


def _bench_degrade(args, out: StagedOutputs) -> None:
    spec = FlowToySpec(ood_offset=args.delta, spread=args.sigma, n_per_class=args.n)
    ks = [int(tok) for tok in args.ks.split(",")] if isinstance(args.ks, str) else list(args.ks)
    modes = ("uninformative", "obfuscatory") if args.mode == "both" else (args.mode,)
    result = run_degrade_bench(spec=spec, seed=args.seed, ks=ks, modes=modes, nu=args.nu)
    out.add_csv_rows(
        "degrade.csv",
        ["scorer", "mode", "k", "auroc"],
        [[r["scorer"], r["mode"], r["k"], r["auroc"]] for r in result["rows"]],
    )
    out.add_json(
        "degrade_report.json",
        {
            "spec": {
                "in_center": list(spec.in_center),
                "ood_offset": spec.ood_offset,
                "spread": spec.spread,
                "n_per_class": spec.n_per_class,
            },
            "seed": args.seed,
            "ks": ks,
            "modes": list(modes),
            "rows": result["rows"],
        },
    )
    out.add_figure("degrade_figure.png", lambda p: plotting.plot_degrade(result, p))


def _bench_bound(args, out: StagedOutputs) -> None:
    result = run_bound_bench(n_mc=args.n_mc, seed=args.seed)
    out.add_csv_rows(
        "bound.csv",
        ["p", "q", "s", "epsilon", "lhs", "rhs", "se", "n_mc"],
        [
            [
                r["params"]["p"],
                r["params"]["q"],
                r["params"]["s"],
                r["params"]["epsilon"],
                r["lhs"],
                r["rhs"],
                r["se"],
                r["params"]["n_mc"],
            ]
            for r in result["records"]
        ],
    )
    out.add_json("bound_report.json", {"records": result["records"], "seed": args.seed})
    out.add_figure("bound_figure.png", lambda p: plotting.plot_bound(result, p))


_BENCHES = {
    "gaussian": _bench_gaussian,
    "flow_toy": _bench_flow_toy,
    "degrade": _bench_degrade,
    "bound": _bench_bound,
}


def cmd_bench(args) -> int:
    out = StagedOutputs(args.out)
    _BENCHES[args.which](args, out)
    written = out.write_all()
    print("\n".join(str(p) for p in written))
    return _EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _config_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "statistics", None):
        overrides["statistics"] = args.statistics.split(",")
    if getattr(args, "reducer", None):
        overrides["reducer"] = args.reducer
    if getattr(args, "model_id", None):
        overrides["model_id"] = args.model_id
    if getattr(args, "estimator", None):
        estimator = {"kind": args.estimator}
        if args.estimator == "kde" and getattr(args, "bandwidth_rule", None):
            estimator["bandwidth_rule"] = args.bandwidth_rule
        if args.estimator == "svm":
            if getattr(args, "nu", None) is not None:
                estimator["nu"] = args.nu
            if getattr(args, "gamma", None) is not None:
                estimator["gamma"] = args.gamma
        overrides["estimator"] = estimator
    if getattr(args, "ece_bins", None) is not None:
        overrides["ece_bins"] = args.ece_bins
    if getattr(args, "discard_fraction", None) is not None:
        overrides["discard_fraction"] = args.discard_fraction
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dose",
        description="Density-of-states scoring pipeline for OOD detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a KDE or one-class SVM on a training table")
    fit.add_argument("--config", default=None)
    fit.add_argument("--train", default=None, help="training table CSV (overrides config)")
    fit.add_argument("--out", default="dose_out")
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--estimator", choices=("kde", "svm"), default=None)
    fit.add_argument("--bandwidth-rule", dest="bandwidth_rule", default=None,
                     help="scott, silverman, or fixed:<h1,h2,...>")
    fit.add_argument("--nu", type=float, default=None)
    fit.add_argument("--gamma", default=None)
    fit.add_argument("--statistics", default=None, help="comma-separated statistic names")
    fit.add_argument("--reducer", choices=("ensemble_mean", "single_model"), default=None)
    fit.add_argument("--model-id", dest="model_id", default=None)
    fit.set_defaults(func=cmd_fit)

    score = sub.add_parser("score", help="score a table with a fitted model")
    score.add_argument("--model", required=True)
    score.add_argument("--table", required=True)
    score.add_argument("--out", default="dose_out")
    score.add_argument("--name", default=None)
    score.set_defaults(func=cmd_score)

    ev = sub.add_parser("eval", help="AUROC, calibration, and threshold report")
    ev.add_argument("--config", default=None)
    ev.add_argument("--in-scores", dest="in_scores", required=True)
    ev.add_argument("--out-scores", dest="out_scores", required=True)
    ev.add_argument("--train-scores", dest="train_scores", required=True)
    ev.add_argument("--val-scores", dest="val_scores", required=True)
    ev.add_argument("--dataset", default=None)
    ev.add_argument("--ood-dataset", dest="ood_dataset", default=None)
    ev.add_argument("--ece-bins", dest="ece_bins", type=int, default=None)
    ev.add_argument("--discard-fraction", dest="discard_fraction", type=float, default=None)
    ev.add_argument("--out", default="dose_out")
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="synthetic oracle benchmarks")
    bench_sub = bench.add_subparsers(dest="which", required=True)

    g = bench_sub.add_parser("gaussian", help="high-dimensional Gaussian statistics")
    g.add_argument("--dim", type=int, default=100)
    g.add_argument("--n", type=int, default=100_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="dose_out")
    g.set_defaults(func=cmd_bench)

    f = bench_sub.add_parser("flow_toy", help="two-statistic likelihood-confound scenario")
    f.add_argument("--delta", type=float, default=6.0)
    f.add_argument("--sigma", type=float, default=1.0)
    f.add_argument("--n", type=int, default=2000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--holdout-fraction", dest="holdout_fraction", type=float, default=0.1)
    f.add_argument("--nu", type=float, default=0.5)
    f.add_argument("--gamma", type=float, default=None)
    f.add_argument("--ece-bins", dest="ece_bins", type=int, default=10)
    f.add_argument("--discard-fraction", dest="discard_fraction", type=float, default=0.1)
    f.add_argument("--out", default="dose_out")
    f.set_defaults(func=cmd_bench)

    d = bench_sub.add_parser("degrade", help="superfluous statistic injection")
    d.add_argument("--delta", type=float, default=6.0)
    d.add_argument("--sigma", type=float, default=1.0)
    d.add_argument("--n", type=int, default=2000)
    d.add_argument("--ks", default=",".join(str(k) for k in DEGRADE_KS))
    d.add_argument("--mode", choices=("uninformative", "obfuscatory", "both"), default="both")
    d.add_argument("--nu", type=float, default=0.5)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="dose_out")
    d.set_defaults(func=cmd_bench)

    b = bench_sub.add_parser("bound", help="typicality bound Monte Carlo grid")
    b.add_argument("--n-mc", dest="n_mc", type=int, default=100_000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="dose_out")
    b.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DoseError as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)},
            sys.stderr,
            sort_keys=True,
        )
        sys.stderr.write("\n")
        return _EXIT_CONTRACT
    except Exception as exc:  # noqa: BLE001 - surface internal failures as exit 1
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)},
            sys.stderr,
            sort_keys=True,
        )
        sys.stderr.write("\n")
        return _EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
