"""
refine command: one CVP instance, refined by annealing the p-bit network.
"""

import math

import click
from flask import Blueprint, current_app

import config
from commands import echo_json, handle_errors, parse_n
from config import CliConfig
from lattice import prepare_instance
from oracle import DEFAULT_WEIGHT_BOUND, FULL_ENUMERATION_LIMIT, enumerate_neighborhood
from pbit import RefinementProblem, Schedule, StoppingCriterion, run_refinement, write_trace_csv

refine_bp = Blueprint("refine", __name__, cli_group=None)

REFINE_SCHEMA_VERSION = 2


def refinement_report(cfg, n, m, result, oracle=None) -> dict:
    doc = {
        "schema_version": REFINE_SCHEMA_VERSION,
        "N": str(n),
        "m": m,
        "c": cfg.c,
        "seed": cfg.seed,
        "babai_distance_sq": str(result.initial_energy),
        "babai_distance": math.sqrt(result.initial_energy),
        "best_distance_sq": str(result.best_energy),
        "best_distance": math.sqrt(result.best_energy),
        "improvement_percent": result.improvement_percent,
        "best_state": "".join(str(b) for b in result.best_state),
        "first_hit_sweep": result.first_hit_sweep,
        "sweeps_run": result.sweeps_run,
        "energy_unit": result.energy_unit,
        "oracle": None,
    }
    if oracle is not None:
        doc["oracle"] = {
            "best_distance_sq": str(oracle.best_distance_sq),
            "best_state": "".join(str(b) for b in oracle.best_state),
            "states_visited": oracle.states_visited,
            "weight_bound": oracle.weight_bound,
            "verdict": "MATCH" if result.best_energy <= oracle.best_distance_sq else "MISS",
        }
    return doc


@refine_bp.cli.command("refine")
@click.argument("n")
@click.option("-m", "--dimension", "m", type=click.IntRange(min=2))
@click.option("-c", "--precision", "c", type=click.IntRange(min=1))
@click.option("--rule", "dimension_rule", type=click.Choice(["linear", "sublinear"]))
@click.option("--scale", "dimension_scale")
@click.option("--schedule", "schedule_kind", type=click.Choice(["linear", "constant"]), default="linear", show_default=True)
@click.option("--beta", type=click.FloatRange(min=0, min_open=True), help="Beta of the constant schedule.")
@click.option("--beta-start", type=click.FloatRange(min=0, min_open=True))
@click.option("--beta-end", type=click.FloatRange(min=0, min_open=True))
@click.option("--sweeps", type=click.IntRange(min=0), help="Sweep budget (default 50m).")
@click.option("--order", type=click.Choice(["sweep", "random"]), default="sweep", show_default=True)
@click.option("--oracle", "use_oracle", is_flag=True, help="Enumerate the neighbourhood and report MATCH/MISS.")
@click.option("--weight-bound", type=click.IntRange(min=0), help="Enumerate only states with this many ones or fewer.")
@click.option("--trace", type=click.File("w"), help="Write the per-sweep trace as CSV.")
@click.option("--seed", type=int)
@click.option("--paper-scale", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def cmd_refine(n, schedule_kind, order, use_oracle, weight_bound, trace, as_json, **options):
    """Refine Babai's approximation for one prime lattice of N."""
    cfg = CliConfig.resolve(current_app.config, "refine", n=n, **options)
    value = parse_n(cfg.n)
    m = cfg.dimension(value.bit_length())
    delta = current_app.config.get("LLL_DELTA", 0.99)
    instance = prepare_instance(value, m, cfg.c, config.child_rng(cfg.seed, config.STREAM_LATTICE, 0), delta)
    problem = RefinementProblem.from_instance(instance)

    sweeps = cfg.sweeps
    if sweeps is None:
        sweeps = current_app.config.get("REFINE_SWEEPS_PER_DIMENSION", 50) * m
    if schedule_kind == "constant":
        schedule = Schedule.constant(cfg.beta, sweeps)
    else:
        schedule = Schedule.linear(sweeps, cfg.beta_start, cfg.beta_end)

    oracle = None
    stop = StoppingCriterion()
    if use_oracle:
        if weight_bound is None and m > FULL_ENUMERATION_LIMIT:
            weight_bound = DEFAULT_WEIGHT_BOUND
            current_app.logger.info("m=%d: enumerating states of weight <= %d only", m, weight_bound)
        oracle = enumerate_neighborhood(problem, weight_bound)
        stop = StoppingCriterion(oracle.best_distance_sq)

    result = run_refinement(
        problem, schedule, stop, config.child_rng(cfg.seed, config.STREAM_NETWORK, 0), update_order=order
    )
    if trace is not None:
        write_trace_csv(result.trace, trace)

    doc = refinement_report(cfg, value, m, result, oracle)
    if as_json:
        echo_json(doc)
        return
    click.echo(f"N = {value}, m = {m}, c = {cfg.c}, seed = {cfg.seed}")
    click.echo(f"babai distance: {doc['babai_distance']:.4f}")
    click.echo(f"best distance:  {doc['best_distance']:.4f}")
    click.echo(f"improvement: {doc['improvement_percent']:.2f}%")
    click.echo(f"sweeps to best: {result.first_hit_sweep} of {result.sweeps_run} run")
    if oracle is not None:
        bound = "" if oracle.weight_bound is None else f" (weight <= {oracle.weight_bound})"
        click.echo(f"oracle optimum: {math.sqrt(oracle.best_distance_sq):.4f}{bound}")
        click.echo(doc["oracle"]["verdict"])
