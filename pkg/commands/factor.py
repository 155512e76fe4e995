"""
factor command: lattice sieving with p-bit collection, then the GF(2) phase.
"""

import json

import click
from flask import Blueprint, current_app
from sqlalchemy.exc import SQLAlchemyError

from algebra import factor
from commands import echo_json, handle_errors, parse_n, worker_pool
from config import CliConfig
from errors import BudgetExhaustedError
from extensions import db
from models import FactoringRun
from sieve import CampaignParams, EngineParams

factor_bp = Blueprint("factor", __name__, cli_group=None)


def build_params(cfg: CliConfig, bits: int, budget=None) -> CampaignParams:
    app_config = current_app.config
    m = cfg.dimension(bits)
    engine = EngineParams(
        beta=cfg.beta,
        sweeps_per_dimension=cfg.setting(app_config, "SWEEPS_PER_DIMENSION"),
        sweeps=cfg.sweeps,
        update_order=cfg.extra.get("order") or "sweep",
        priority_order=bool(cfg.extra.get("by_cost")),
        delta=app_config.get("LLL_DELTA", 0.99),
    )
    return CampaignParams(
        m=m,
        big_m=cfg.smoothness_bound(m),
        c=cfg.c,
        lattice_budget=budget,
        budget_factor=app_config.get("LATTICE_BUDGET_FACTOR", 200),
        escalate=bool(app_config.get("ESCALATE_FAMILIES", True)),
        engine=engine,
    )


def record_run(report):
    """Store the run in the history database; failures here never fail the command."""
    if not current_app.config.get("RECORD_RUNS", True):
        return None
    try:
        db.create_all()
        run = FactoringRun.from_report(report)
        db.session.add(run)
        db.session.commit()
        return run.id
    except SQLAlchemyError:
        db.session.rollback()
        current_app.logger.warning("could not record run for N=%s", report.n, exc_info=True)
        return None


def print_report(report, as_json: bool):
    if as_json:
        echo_json(report.to_dict())
        return
    click.echo(f"N = {report.n}")
    if report.factors:
        p, q = report.factors
        click.echo(f"p={p} q={q}")
    click.echo(f"status: {report.status} ({report.method})")
    click.echo(f"m={report.m} M={report.big_m} seed={report.seed}")
    click.echo(f"lattices consumed: {report.lattices_consumed}")
    click.echo(f"relations used: {report.relations_used}")
    click.echo(f"collisions: {report.collisions} (rate {report.collision_rate:.3f})")
    click.echo(f"tau trials: {report.tau_trials}")
    click.echo(f"elapsed: {report.elapsed:.2f}s")


@factor_bp.cli.command("factor")
@click.argument("n")
@click.option("-m", "--dimension", "m", type=click.IntRange(min=2), help="Lattice dimension (default from bit length).")
@click.option("-M", "--smoothness-bound", "big_m", type=click.IntRange(min=2), help="Factor base size (default m^2).")
@click.option("-c", "--precision", "c", type=click.IntRange(min=1), help="Decimal precision of the log row.")
@click.option("--rule", "dimension_rule", type=click.Choice(["linear", "sublinear"]))
@click.option("--scale", "dimension_scale", help="k of the linear mapping, e.g. 1/3.")
@click.option("--beta", type=click.FloatRange(min=0, min_open=True), help="Collection inverse temperature.")
@click.option("--sweeps", type=click.IntRange(min=1), help="Sweeps per lattice (default 20m).")
@click.option("--order", type=click.Choice(["sweep", "random"]), help="p-bit update order.")
@click.option("--by-cost", is_flag=True, help="Check candidates closest to the target first.")
@click.option("--budget", type=click.IntRange(min=1), help="Lattice budget (default 200(M+2)).")
@click.option("--seed", type=int)
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--paper-scale", is_flag=True, help="Use the published parameters, ignoring config overrides.")
@click.option("--relations-out", type=click.File("w"), help="Write the kept sr-pairs as JSON lines.")
@click.option("--json", "as_json", is_flag=True, help="Print the run report as JSON.")
@handle_errors
def cmd_factor(n, budget, relations_out, as_json, **options):
    """Factor the semiprime N."""
    cfg = CliConfig.resolve(current_app.config, "factor", n=n, **options)
    value = parse_n(cfg.n)
    params = build_params(cfg, value.bit_length(), budget)
    current_app.logger.info("factoring N=%d with m=%d M=%d seed=%d", value, params.m, params.big_m, cfg.seed)

    with worker_pool(cfg.workers) as executor:
        try:
            report = factor(
                value,
                params,
                seed=cfg.seed,
                executor=executor,
                batch_size=cfg.workers,
                tau_trial_cap=current_app.config.get("TAU_TRIAL_CAP", 256),
            )
        except BudgetExhaustedError as exc:
            if exc.report is not None:
                record_run(exc.report)
                print_report(exc.report, as_json)
            raise

    record_run(report)
    if relations_out is not None:
        for pair in report.relations:
            relations_out.write(json.dumps(pair.to_record(), sort_keys=True) + "\n")
    print_report(report, as_json)
