"""Command line front end: ``run``, ``table`` and ``risk``."""

from __future__ import annotations

import sys

import click
import numpy as np

from . import experiment as ex
from .estimators import EstimatorId
from .loss import LinexShape
from .risk import DEFAULT_REPLICATIONS, Scenario, estimate_risk


def _numbers(values: tuple[str, ...], cast):
    out = []
    for chunk in values:
        out += [cast(v) for v in chunk.replace(",", " ").split()]
    return out


def _report_flags(rows) -> bool:
    msgs = ex.summarize_flags(rows)
    for m in msgs:
        click.echo(f"warning: {m}", err=True)
    return bool(msgs)


workers_option = click.option(
    "--workers", default=1, show_default=True, type=click.IntRange(min=1),
    help="Threads for Monte Carlo replications; results do not depend on it.",
)


@click.group()
def main():
    """Ordered exponential scale estimation under linex loss."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@workers_option
def run(config_path, workers):
    """Run the scenario grid described in a YAML config."""
    try:
        config = ex.load_config(config_path)
    except ex.ConfigError as exc:
        raise click.ClickException(str(exc))
    result = ex.run_experiment(config, workers=workers)
    for idx, msg in result.failures:
        click.echo(f"scenario {idx} failed: {msg}", err=True)
    if result.rows:
        try:
            ex.emit(result.rows, config.output_format, config.output_path)
        except OSError as exc:
            raise click.ClickException(str(exc))
    flagged = _report_flags(result.rows)
    sys.exit(1 if result.failures or flagged else 0)


@main.command()
@click.option("--id", "table_id", required=True, type=click.IntRange(1, 4))
@click.option("--reps", default=DEFAULT_REPLICATIONS, show_default=True, envvar=ex.REPS_ENV,
              type=click.IntRange(min=1))
@click.option("--seed", default=ex.DEFAULT_SEED, show_default=True, envvar=ex.SEED_ENV,
              type=click.IntRange(min=0))
@click.option("--format", "fmt", default="csv", show_default=True, type=click.Choice(["csv", "md"]))
@click.option("--out", default="-", show_default=True, help="Output path, '-' for stdout.")
@workers_option
def table(table_id, reps, seed, fmt, out, workers):
    """Reproduce one of the four PRRI tables."""
    rows = ex.run_table(table_id, reps, seed, workers)
    try:
        ex.emit(rows, fmt, out, title=ex.table_title(table_id))
    except OSError as exc:
        raise click.ClickException(str(exc))
    sys.exit(1 if _report_flags(rows) else 0)


@main.command()
@click.option("--estimator", required=True, type=click.Choice([e.value for e in EstimatorId]))
@click.option("--n", "n_values", required=True, multiple=True, help="Sample sizes, e.g. 3,5")
@click.option("--sigma", "sigma_values", required=True, multiple=True, help="True scales, e.g. 0.2,0.5")
@click.option("--mu", "mu_values", multiple=True, help="Locations (default all zero).")
@click.option("--p", "p", required=True, type=float, help="Linex asymmetry, nonzero.")
@click.option("--reps", default=DEFAULT_REPLICATIONS, show_default=True, envvar=ex.REPS_ENV,
              type=click.IntRange(min=1))
@click.option("--seed", default=ex.DEFAULT_SEED, show_default=True, envvar=ex.SEED_ENV,
              type=click.IntRange(min=0))
@workers_option
def risk(estimator, n_values, sigma_values, mu_values, p, reps, seed, workers):
    """Monte Carlo risk of a single estimator in a single scenario."""
    try:
        n = _numbers(n_values, int)
        sigma = _numbers(sigma_values, float)
        mu = _numbers(mu_values, float) or None
        scenario = Scenario(tuple(n), tuple(sigma), LinexShape(p), mu, reps, seed)
        est = estimate_risk(EstimatorId(estimator), scenario, workers=workers)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo("component,risk,se")
    for i, (m, s) in enumerate(zip(est.mean_loss, est.std_error), start=1):
        click.echo(f"{i},{m:.10g},{s:.10g}")
    flagged = est.overflow_count > 0 or est.redraw_count > ex.MAX_REDRAW_FRACTION * reps
    if flagged:
        click.echo(
            f"warning: {est.redraw_count} redraw(s), {est.overflow_count} saturated loss(es)", err=True
        )
    sys.exit(1 if flagged else 0)


if __name__ == "__main__":
    main()
