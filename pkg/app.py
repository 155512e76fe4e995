"""
Application object for the pbit-factor command line.

Configuration is layered: ``config.DEFAULTS``, then an optional TOML file,
then ``PBITFACTOR_*`` environment variables, then command-line flags.
"""

import logging
import os
import tomllib

import click
from flask import Flask
from flask.cli import FlaskGroup

import config
from extensions import db

ENV_PREFIX = "PBITFACTOR"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _load_toml(handle) -> dict:
    # keys are case-insensitive in the file; Flask only keeps upper-case ones
    return {str(k).upper(): v for k, v in tomllib.load(handle).items()}


def load_config_file(flask_app: Flask, path: str):
    """Apply a TOML config file, keeping environment overrides on top of it."""
    flask_app.config.from_file(os.path.abspath(path), load=_load_toml, text=False)
    flask_app.config.from_prefixed_env(ENV_PREFIX)


def configure_logging(flask_app: Flask, verbosity: int = 0):
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.getLevelName(str(flask_app.config.get("LOG_LEVEL", "WARNING")).upper())
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
    flask_app.logger.setLevel(level)


# FLASK + DB SETUP

app = Flask(__name__)
app.config.from_mapping(config.DEFAULTS)
app.config.from_prefixed_env(ENV_PREFIX)
if app.config.get("CONFIG_FILE"):
    load_config_file(app, app.config["CONFIG_FILE"])

db.init_app(app)


def create_app() -> Flask:
    return app


# =========================
# BLUEPRINTS
# =========================

from commands.enumerate import enumerate_bp  # noqa: E402
from commands.experiment import experiment_bp  # noqa: E402
from commands.factor import factor_bp  # noqa: E402
from commands.history import history_bp  # noqa: E402
from commands.refine import refine_bp  # noqa: E402

app.register_blueprint(factor_bp)
app.register_blueprint(refine_bp)
app.register_blueprint(enumerate_bp)
app.register_blueprint(experiment_bp)
app.register_blueprint(history_bp)


@click.group(cls=FlaskGroup, create_app=create_app, add_default_commands=False, add_version_option=False)
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    help="TOML file of configuration keys (e.g. SEED = 7).",
)
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output.")
def cli(config_file, verbose):
    """Integer factoring with prime lattices and a simulated p-bit CVP refinement."""
    if config_file:
        load_config_file(app, config_file)
    configure_logging(app, verbose)


if __name__ == "__main__":
    cli()
