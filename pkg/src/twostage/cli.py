"""Command-line harness: fit models, evaluate risk, print bounds, reproduce
the benchmark table, and dump scatter data.

Configuration comes from an optional JSON file (mirroring the experiment
config field names) with flags overriding individual values.  Exit codes:
0 success, 2 invalid configuration, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import estimator as est
from . import experiment as exp
from . import solvers
from .crlb import crlb
from .priors import PriorSpec
from .rng import SeedSpec
from .weibull import WeibullParams


def _common_options(fn):
    @click.option("--config", "config_path", type=click.Path(), default=None,
                  help="JSON config file mirroring the experiment config fields.")
    @click.option("--seed", type=int, default=None, help="Root seed override.")
    @click.option("--m-theta", type=int, default=None, help="Parameter draws (M).")
    @click.option("--n-obs", type=int, default=None, help="Observations per dataset (N).")
    @click.option("--n-quantiles", type=int, default=None, help="Compression size (n).")
    @click.option("--ridge", type=float, default=None, help="Ridge weight.")
    @click.option("--prior", type=click.Choice(["uniform", "reciprocal"]), default=None,
                  help="Parameter distribution kind.")
    @click.option("--method", type=click.Choice(["bayes", "minimax"]), default=None,
                  help="Fitting method.")
    @click.option("--mc-runs", type=int, default=None, help="Monte-Carlo runs per point.")
    @click.option("--out", "out_path", type=click.Path(), default=None,
                  help="Output file (fit/evaluate/crlb) or directory (table/scatter).")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)

    return wrapper


def _load_config(config_path, seed, m_theta, n_obs, n_quantiles, ridge, prior,
                 mc_runs, out_dir=None) -> exp.ExperimentConfig:
    data = {}
    if config_path is not None:
        data = json.loads(Path(config_path).read_text())
    config = exp.config_from_dict(data)

    train = config.training
    train_kwargs = {}
    if seed is not None:
        train_kwargs["seed"] = SeedSpec(seed)
    if m_theta is not None:
        train_kwargs["m_theta"] = m_theta
    if n_obs is not None:
        train_kwargs["n_obs"] = n_obs
    if n_quantiles is not None:
        train_kwargs["n_quantiles"] = n_quantiles
    if ridge is not None:
        train_kwargs["ridge"] = ridge
    if prior is not None:
        dist = train.theta_distribution
        train_kwargs["theta_distribution"] = PriorSpec(prior, dist.lower, dist.upper)
    if train_kwargs:
        train = replace(train, **train_kwargs)

    config_kwargs = {"training": train}
    if mc_runs is not None:
        config_kwargs["mc_runs"] = mc_runs
    if out_dir is not None:
        config_kwargs["output_dir"] = Path(out_dir)
    return replace(config, **config_kwargs)


def _run(action):
    """Run a command body and map failures to the documented exit codes."""
    try:
        action()
    except solvers.SolverError as err:
        click.echo(f"solver failure: {err}", err=True)
        sys.exit(3)
    except (ValueError, KeyError, TypeError) as err:
        click.echo(f"invalid configuration: {err}", err=True)
        sys.exit(2)
    except OSError as err:
        click.echo(f"i/o failure: {err}", err=True)
        sys.exit(4)


@click.group()
def main():
    """Two-stage likelihood-free estimation toolkit (Weibull benchmark)."""


@main.command()
@_common_options
def fit(config_path, seed, m_theta, n_obs, n_quantiles, ridge, prior, method,
        mc_runs, out_path):
    """Fit a model and write it to --out (default model_<method>.txt)."""

    def action():
        config = _load_config(config_path, seed, m_theta, n_obs, n_quantiles,
                              ridge, prior, mc_runs)
        chosen = method or est.METHOD_BAYES
        if chosen == est.METHOD_BAYES:
            model = est.fit_bayes(config.training)
        else:
            model = est.fit_minimax(config.training)
        target = Path(out_path) if out_path else Path(f"model_{chosen}.txt")
        est.save_model(model, target)
        click.echo(
            f"fitted {chosen} model (fingerprint {model.config_fingerprint}) "
            f"-> {target}"
        )

    _run(action)


@main.command()
@_common_options
@click.option("--model", "model_path", type=click.Path(), required=True,
              help="Model file written by `fit`.")
def evaluate(config_path, seed, m_theta, n_obs, n_quantiles, ridge, prior, method,
             mc_runs, out_path, model_path):
    """Run the Monte-Carlo risk evaluation for a fitted model."""

    def action():
        config = _load_config(config_path, seed, m_theta, n_obs, n_quantiles,
                              ridge, prior, mc_runs)
        model = est.load_model(model_path)
        report = exp.run_mse_experiment(config, model)
        target = Path(out_path) if out_path else Path("report.csv")
        exp.write_risk_reports([report], target)
        click.echo(Path(target).read_text(), nl=False)
        click.echo(f"report written to {target}")

    _run(action)


@main.command(name="crlb")
@_common_options
def crlb_command(config_path, seed, m_theta, n_obs, n_quantiles, ridge, prior,
                 method, mc_runs, out_path):
    """Print the Cramér-Rao bounds at the configured evaluation points."""

    def action():
        config = _load_config(config_path, seed, m_theta, n_obs, n_quantiles,
                              ridge, prior, mc_runs)
        n = config.training.n_obs
        lines = ["true_eta,true_gamma,crlb_eta,crlb_gamma"]
        for eta, gam in config.eval_points:
            b_eta, b_gam = crlb(WeibullParams(eta, gam), n)
            lines.append(f"{eta:.5e},{gam:.5e},{b_eta:.5e},{b_gam:.5e}")
        text = "\n".join(lines) + "\n"
        click.echo(text, nl=False)
        if out_path:
            Path(out_path).write_text(text)

    _run(action)


@main.command(name="reproduce-table1")
@_common_options
def reproduce_table1(config_path, seed, m_theta, n_obs, n_quantiles, ridge, prior,
                     method, mc_runs, out_path):
    """Fit and evaluate all three rule variants and emit the combined table."""

    def action():
        config = _load_config(config_path, seed, m_theta, n_obs, n_quantiles,
                              ridge, prior, mc_runs, out_dir=out_path)
        reports = exp.reproduce_table(config)
        table = config.output_dir / "table1.csv"
        if table.exists():
            click.echo(table.read_text(), nl=False)
        click.echo(
            f"{sum(len(r.rows) for r in reports)} rows evaluated; "
            f"outputs in {config.output_dir}"
        )

    _run(action)


@main.command()
@_common_options
@click.option("--model", "model_path", type=click.Path(), required=True,
              help="Model file written by `fit`.")
def scatter(config_path, seed, m_theta, n_obs, n_quantiles, ridge, prior, method,
            mc_runs, out_path, model_path):
    """Write true-vs-estimated scatter data for a fitted model."""

    def action():
        config = _load_config(config_path, seed, m_theta, n_obs, n_quantiles,
                              ridge, prior, mc_runs, out_dir=out_path)
        model = est.load_model(model_path)
        path = exp.emit_scatter(model, config)
        click.echo(f"scatter data written to {path}")

    _run(action)


if __name__ == "__main__":
    main()
