"""
history command: recorded factoring runs.
"""

import json

import click
from flask import Blueprint

from commands import echo_json, handle_errors
from errors import InvalidInputError
from extensions import db
from models import FactoringRun

history_bp = Blueprint("history", __name__, cli_group=None)


@history_bp.cli.command("history")
@click.option("--limit", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--run", "run_id", type=int, help="Print the sr-pairs of one run as JSON lines.")
@click.option("--json", "as_json", is_flag=True)
@handle_errors
def cmd_history(limit, run_id, as_json):
    """Show the most recent factoring runs."""
    db.create_all()
    if run_id is not None:
        run = db.session.get(FactoringRun, run_id)
        if run is None:
            raise InvalidInputError(f"no recorded run with id {run_id}")
        for relation in run.relations:
            click.echo(json.dumps(relation.to_record(), sort_keys=True))
        return

    runs = FactoringRun.query.order_by(FactoringRun.id.desc()).limit(limit).all()
    if as_json:
        echo_json([r.to_dict() for r in runs])
        return
    if not runs:
        click.echo("no recorded runs")
        return
    for r in runs:
        factors = f"{r.p} * {r.q}" if r.p else "-"
        click.echo(
            f"#{r.id} N={r.n} {r.status} factors={factors} lattices={r.lattices_consumed} "
            f"collision_rate={r.collision_rate:.3f} seed={r.seed}"
        )
