"""
enumerate command: brute-force census of the neighbourhood of b_op.
"""

import math

import click
from flask import Blueprint, current_app

import config
from commands import echo_json, handle_errors, parse_n, worker_pool
from config import CliConfig
from lattice import prepare_instance
from numtheory import FactorBase
from oracle import SrClassifier, enumerate_neighborhood, neighborhood_census, write_census_csv
from pbit import RefinementProblem, energy

enumerate_bp = Blueprint("enumerate", __name__, cli_group=None)


@enumerate_bp.cli.command("enumerate")
@click.argument("n")
@click.option("-m", "--dimension", "m", type=click.IntRange(min=2))
@click.option("-M", "--smoothness-bound", "big_m", type=click.IntRange(min=2))
@click.option("-c", "--precision", "c", type=click.IntRange(min=1))
@click.option("--rule", "dimension_rule", type=click.Choice(["linear", "sublinear"]))
@click.option("--scale", "dimension_scale")
@click.option("--weight-bound", type=click.IntRange(min=0), help="Only states with at most this many ones.")
@click.option("--seed", type=int)
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--format", "output_format", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--output", type=click.File("w"), default="-", help="CSV destination (default stdout).")
@handle_errors
def cmd_enumerate(n, weight_bound, output, **options):
    """List every sr-pair reachable from Babai's point for one prime lattice of N."""
    cfg = CliConfig.resolve(current_app.config, "enumerate", n=n, **options)
    value = parse_n(cfg.n)
    m = cfg.dimension(value.bit_length())
    big_m = cfg.smoothness_bound(m)
    delta = current_app.config.get("LLL_DELTA", 0.99)
    instance = prepare_instance(value, m, cfg.c, config.child_rng(cfg.seed, config.STREAM_LATTICE, 0), delta)
    base = FactorBase.of_size(big_m)

    if cfg.output_format == "csv":
        _, entries = neighborhood_census(instance, base, weight_bound)
        write_census_csv(entries, output)
        return

    problem = RefinementProblem.from_instance(instance)
    with worker_pool(cfg.workers) as executor:
        report = enumerate_neighborhood(
            problem,
            weight_bound,
            executor=executor,
            parts=cfg.workers,
            classify=SrClassifier(instance, base),
        )
    echo_json(
        {
            "schema_version": 1,
            "N": str(value),
            "m": m,
            "M": big_m,
            "c": cfg.c,
            "seed": cfg.seed,
            "weight_bound": report.weight_bound,
            "states_visited": report.states_visited,
            "babai_distance": math.sqrt(energy(problem, (0,) * m)),
            "best_state": "".join(str(b) for b in report.best_state),
            "best_distance_sq": str(report.best_distance_sq),
            "sr_pairs": [
                {
                    "state": e.bitstring,
                    "distance_sq": str(e.distance_sq),
                    "u": str(e.u),
                    "v": str(e.v),
                }
                for e in report.sr_pairs
            ],
        }
    )

