"""
experiment command: run one measurement campaign and write its datasets.
"""

import click
from flask import Blueprint, current_app

from commands import INT_RANGE, handle_errors, parse_n, worker_pool
from config import CliConfig
from experiments import EXPERIMENTS, ExperimentConfig, load_reference_series, run_experiment, write_experiment
from sieve import EngineParams

experiment_bp = Blueprint("experiment", __name__, cli_group=None)


@experiment_bp.cli.command("experiment")
@click.argument("name", type=click.Choice(EXPERIMENTS))
@click.option("--bits", type=INT_RANGE, default="20:40", show_default=True, help="Bit-length range LOW:HIGH.")
@click.option("--step", "bit_step", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--lattices", type=click.IntRange(min=1), help="Lattices per data point (default 50, published 500).")
@click.option("--semiprimes", type=click.IntRange(min=1), help="Semiprimes per bit length (default 5, published 25).")
@click.option("--dimensions", type=INT_RANGE, default="8:14", show_default=True, help="Dimension range for fig2a.")
@click.option("--n", "fixed_n", help="Fixed semiprime for fig2a (default: a seeded 30-bit one).")
@click.option("--weight-bound", type=click.IntRange(min=0), default=6, show_default=True)
@click.option("--full-census-limit", type=click.IntRange(min=2, max=26), default=14, show_default=True)
@click.option("--reference", type=click.File("r"), help="CSV of published CVP counts to add to fig4.")
@click.option("-c", "--precision", "c", type=click.IntRange(min=1))
@click.option("--rule", "dimension_rule", type=click.Choice(["linear", "sublinear"]))
@click.option("--scale", "dimension_scale")
@click.option("--beta", type=click.FloatRange(min=0, min_open=True))
@click.option("--beta-start", type=click.FloatRange(min=0, min_open=True))
@click.option("--beta-end", type=click.FloatRange(min=0, min_open=True))
@click.option("--seed", type=int)
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--output-dir", type=click.Path(file_okay=False))
@click.option("--paper-scale", is_flag=True, help="Published dataset sizes and parameters.")
@handle_errors
def cmd_experiment(name, bits, bit_step, lattices, semiprimes, dimensions, fixed_n, weight_bound,
                   full_census_limit, reference, **options):
    """Run experiment NAME and write CSV datasets plus a JSON manifest."""
    app_config = current_app.config
    cfg = CliConfig.resolve(app_config, "experiment", n=fixed_n, **options)
    engine = EngineParams(
        beta=cfg.beta,
        sweeps_per_dimension=cfg.setting(app_config, "SWEEPS_PER_DIMENSION"),
        delta=app_config.get("LLL_DELTA", 0.99),
    )
    experiment = ExperimentConfig(
        experiment=name,
        bits=bits,
        bit_step=bit_step,
        lattices=lattices,
        semiprimes=semiprimes,
        seed=cfg.seed,
        paper_scale=cfg.paper_scale,
        n=parse_n(cfg.n) if cfg.n else None,
        dimensions=dimensions,
        rule=cfg.dimension_rule,
        scale=str(cfg.dimension_scale),
        c=cfg.c,
        delta=engine.delta,
        engine=engine,
        beta_start=cfg.beta_start,
        beta_end=cfg.beta_end,
        refine_sweeps_per_dimension=app_config.get("REFINE_SWEEPS_PER_DIMENSION", 50),
        full_census_limit=full_census_limit,
        weight_bound=weight_bound,
        budget_factor=app_config.get("LATTICE_BUDGET_FACTOR", 200),
        tau_trial_cap=app_config.get("TAU_TRIAL_CAP", 256),
        batch_size=cfg.workers,
        reference=load_reference_series(reference) if reference is not None else (),
    )
    current_app.logger.info("experiment %s: %d lattices per point, seed %d", name, experiment.lattice_count, cfg.seed)

    with worker_pool(cfg.workers) as executor:
        result = run_experiment(experiment, executor)
    for path in write_experiment(result, cfg.output_dir):
        click.echo(path)
