"""Monte-Carlo evaluation harness: mean squared error of fitted rules at
fixed parameter points, compared against the Cramér-Rao bounds, plus CSV
emission of the result table and of scatter data (true vs. estimated).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import estimator as est
from .crlb import crlb
from .parallel import indexed_map
from .priors import PriorKind, PriorSpec, prior_inverse_cdf
from .rng import SeedSpec, stream
from .weibull import WeibullParams, weibull_quantile

TABLE_POINTS = ((2.0, 2.0), (2.0, 8.0), (4.0, 2.0), (4.0, 8.0), (8.0, 2.0), (8.0, 8.0))
EMIT_KINDS = frozenset({"scatter", "table", "model"})

_TABLE_HEADER = (
    "method,true_eta,true_gamma,crlb_eta,crlb_gamma,"
    "mse_eta,mse_gamma,efficiency_eta,efficiency_gamma"
)
_SCATTER_HEADER = "true_eta,true_gamma,est_eta,est_gamma"


@dataclass(frozen=True)
class ExperimentConfig:
    training: est.TrainingConfig = field(default_factory=est.TrainingConfig)
    eval_points: tuple = TABLE_POINTS
    mc_runs: int = 1000
    output_dir: Path = Path("results")
    emit: frozenset = EMIT_KINDS

    def __post_init__(self):
        points = tuple((float(a), float(b)) for a, b in self.eval_points)
        object.__setattr__(self, "eval_points", points)
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "emit", frozenset(self.emit))
        if self.mc_runs < 1:
            raise ValueError("mc_runs must be >= 1")
        if not points:
            raise ValueError("eval_points must be non-empty")
        dist = self.training.theta_distribution
        for eta, gam in points:
            if not (dist.contains(eta) and dist.contains(gam)):
                raise ValueError(
                    f"eval point ({eta}, {gam}) outside the parameter "
                    f"distribution support [{dist.lower}, {dist.upper}]"
                )
        unknown = self.emit - EMIT_KINDS
        if unknown:
            raise ValueError(f"unknown emit kinds: {sorted(unknown)}")


@dataclass(frozen=True)
class RiskRow:
    true_eta: float
    true_gamma: float
    mse_eta: float
    mse_gamma: float
    crlb_eta: float
    crlb_gamma: float
    efficiency_eta: float
    efficiency_gamma: float

    def __post_init__(self):
        if self.mse_eta < 0 or self.mse_gamma < 0:
            raise ValueError("mse must be non-negative")
        if not (self.crlb_eta > 0 and self.crlb_gamma > 0):
            raise ValueError("crlb must be positive")


@dataclass(frozen=True)
class RiskReport:
    """Per-point risk estimates for one method; ``errors`` optionally keeps
    the raw per-run estimation errors (never serialized)."""

    method: str
    rows: tuple
    errors: tuple | None = field(default=None, compare=False)


def run_mse_experiment(
    config: ExperimentConfig,
    model: est.TSModel,
    label: str | None = None,
    workers: int | None = None,
    keep_errors: bool = False,
) -> RiskReport:
    """Estimate the rule's MSE at each eval point from fresh simulations.

    Every (point, run) pair has its own sub-stream under the training seed,
    disjoint from the training streams, so results are reproducible and a
    longer run extends a shorter one run-for-run.
    """
    train = config.training
    if model.n_quantiles != train.n_quantiles:
        raise ValueError(
            f"model has {model.n_quantiles} quantiles, config expects "
            f"{train.n_quantiles}"
        )
    rows = []
    all_errors = []
    for p_idx, (eta, gam) in enumerate(config.eval_points):
        params = WeibullParams(eta, gam)
        errors = np.empty((config.mc_runs, 2))

        def run_one(r: int, _params=params, _errors=errors, _p=p_idx) -> None:
            u = stream(train.seed, est.EVAL_STREAM, _p, r).random(train.n_obs)
            y = weibull_quantile(u, _params)
            eta_hat, gamma_hat = est.estimate(model, y)
            _errors[r, 0] = eta_hat - _params.scale
            _errors[r, 1] = gamma_hat - _params.shape

        indexed_map(run_one, config.mc_runs, workers)
        mse = np.mean(errors * errors, axis=0)
        bound_eta, bound_gamma = crlb(params, train.n_obs)
        rows.append(
            RiskRow(
                true_eta=eta,
                true_gamma=gam,
                mse_eta=float(mse[0]),
                mse_gamma=float(mse[1]),
                crlb_eta=bound_eta,
                crlb_gamma=bound_gamma,
                efficiency_eta=float(mse[0]) / bound_eta,
                efficiency_gamma=float(mse[1]) / bound_gamma,
            )
        )
        all_errors.append(errors)
    return RiskReport(
        method=label if label is not None else model.method,
        rows=tuple(rows),
        errors=tuple(all_errors) if keep_errors else None,
    )


def reproduce_table(
    config: ExperimentConfig, workers: int | None = None
) -> tuple[RiskReport, RiskReport, RiskReport]:
    """Run the full benchmark protocol: Bayes fit under the uniform and the
    reciprocal prior plus the minimax fit under the uniform proposal, each
    evaluated at every configured point.

    Emits the combined table (and per-method models/scatter files) into
    output_dir according to config.emit.
    """
    base = config.training
    variants = (
        ("bayes-uniform", est.METHOD_BAYES, PriorKind.UNIFORM),
        ("bayes-reciprocal", est.METHOD_BAYES, PriorKind.RECIPROCAL),
        ("minimax", est.METHOD_MINIMAX, PriorKind.UNIFORM),
    )
    out = config.output_dir
    if config.emit:
        out.mkdir(parents=True, exist_ok=True)

    reports = []
    for label, method, kind in variants:
        dist = PriorSpec(kind, base.theta_distribution.lower, base.theta_distribution.upper)
        training = replace(base, theta_distribution=dist)
        sub_config = replace(config, training=training)
        if method == est.METHOD_BAYES:
            model = est.fit_bayes(training, workers)
        else:
            model = est.fit_minimax(training, workers=workers)
        reports.append(run_mse_experiment(sub_config, model, label, workers))
        if "model" in config.emit:
            est.save_model(model, out / f"model_{label}.txt")
        if "scatter" in config.emit:
            emit_scatter(model, sub_config, label=label, workers=workers)
    if "table" in config.emit:
        write_risk_reports(reports, out / "table1.csv")
    return tuple(reports)


def emit_scatter(
    model: est.TSModel,
    config: ExperimentConfig,
    label: str | None = None,
    workers: int | None = None,
) -> Path:
    """Simulate fresh parameter draws, estimate them, and write the scatter
    rows (true_eta, true_gamma, est_eta, est_gamma) behind the method's
    true-vs-estimated plots.  Returns the written path."""
    train = config.training
    if model.n_quantiles != train.n_quantiles:
        raise ValueError("model/config n_quantiles mismatch")
    dist, seed, m = train.theta_distribution, train.seed, train.m_theta

    true_eta = prior_inverse_cdf(stream(seed, est.SCATTER_STREAM, 0).random(m), dist)
    true_gamma = prior_inverse_cdf(stream(seed, est.SCATTER_STREAM, 1).random(m), dist)
    estimates = np.empty((m, 2))

    def run_one(i: int) -> None:
        params = WeibullParams(true_eta[i], true_gamma[i])
        u = stream(seed, est.SCATTER_STREAM, 2, i).random(train.n_obs)
        estimates[i] = est.estimate(model, weibull_quantile(u, params))

    indexed_map(run_one, m, workers)

    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / f"scatter_{label if label else model.method}.csv"
    lines = [_SCATTER_HEADER]
    for i in range(m):
        lines.append(
            f"{true_eta[i]:.17g},{true_gamma[i]:.17g},"
            f"{estimates[i, 0]:.17g},{estimates[i, 1]:.17g}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def read_scatter(path) -> np.ndarray:
    """Parse a scatter file back into its (rows, 4) array."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _SCATTER_HEADER:
        raise ValueError(f"{path}: not a scatter file")
    return np.array([[float(tok) for tok in line.split(",")] for line in lines[1:]])


def write_risk_reports(reports, path) -> Path:
    """Write one or more reports as a combined CSV at 6 significant digits."""
    path = Path(path)
    lines = [_TABLE_HEADER]
    for report in reports:
        for row in report.rows:
            fields = ",".join(
                f"{v:.5e}"
                for v in (
                    row.true_eta,
                    row.true_gamma,
                    row.crlb_eta,
                    row.crlb_gamma,
                    row.mse_eta,
                    row.mse_gamma,
                    row.efficiency_eta,
                    row.efficiency_gamma,
                )
            )
            lines.append(f"{report.method},{fields}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_risk_reports(path) -> tuple[RiskReport, ...]:
    """Parse a combined table CSV back into reports (grouped by method)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _TABLE_HEADER:
        raise ValueError(f"{path}: not a risk table file")
    reports: list[tuple[str, list[RiskRow]]] = []
    for line in lines[1:]:
        tokens = line.split(",")
        if len(tokens) != 9:
            raise ValueError(f"{path}: malformed row {line!r}")
        method = tokens[0]
        vals = [float(tok) for tok in tokens[1:]]
        row = RiskRow(
            true_eta=vals[0],
            true_gamma=vals[1],
            crlb_eta=vals[2],
            crlb_gamma=vals[3],
            mse_eta=vals[4],
            mse_gamma=vals[5],
            efficiency_eta=vals[6],
            efficiency_gamma=vals[7],
        )
        if not reports or reports[-1][0] != method:
            reports.append((method, []))
        reports[-1][1].append(row)
    return tuple(RiskReport(method=m, rows=tuple(rows)) for m, rows in reports)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON-style dict mirroring the
    dataclass field names; unknown keys are rejected."""

    def take(d: dict, allowed: set[str], what: str) -> dict:
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown {what} keys: {sorted(unknown)}")
        return d

    data = dict(
        take(data, {"training", "eval_points", "mc_runs", "output_dir", "emit"}, "config")
    )
    kwargs: dict = {}
    if "training" in data:
        tdata = dict(
            take(
                data["training"],
                {
                    "m_theta",
                    "m_y",
                    "n_obs",
                    "n_quantiles",
                    "ridge",
                    "theta_distribution",
                    "seed",
                },
                "training",
            )
        )
        if "theta_distribution" in tdata:
            ddata = take(
                tdata["theta_distribution"], {"kind", "lower", "upper"}, "distribution"
            )
            tdata["theta_distribution"] = PriorSpec(**ddata)
        if "seed" in tdata:
            sdata = take(tdata["seed"], {"root_seed", "stream_index"}, "seed")
            tdata["seed"] = SeedSpec(**sdata)
        kwargs["training"] = est.TrainingConfig(**tdata)
    for key in ("eval_points", "mc_runs", "output_dir", "emit"):
        if key in data:
            kwargs[key] = data[key]
    return ExperimentConfig(**kwargs)
