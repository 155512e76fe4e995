"""
Shared plumbing for the CLI blueprints: error-to-exit-code mapping, the
worker pool and parsing of big-integer and range arguments.
"""

import contextlib
import functools
import json
from concurrent.futures import ProcessPoolExecutor

import click
from flask import current_app

from errors import FactoringError, InvalidInputError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID_INPUT = 2
EXIT_BUDGET_EXHAUSTED = 3


def handle_errors(fn):
    """Report package errors on stderr and exit with their code; anything else exits 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FactoringError as exc:
            code, message = exc.exit_code, str(exc)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as exc:  # noqa: BLE001
            current_app.logger.exception("unexpected failure in %s", fn.__name__)
            code, message = EXIT_INTERNAL, f"internal error: {exc}"
        click.echo(f"error: {message}", err=True)
        click.get_current_context().exit(code)

    return wrapper


def parse_n(text) -> int:
    """N as a positive decimal integer."""
    value = str(text).strip()
    if not value.isdigit():
        raise InvalidInputError(f"N must be a positive decimal integer, got {text!r}")
    n = int(value)
    if n < 1:
        raise InvalidInputError(f"N must be positive, got {n}")
    return n


class IntRange(click.ParamType):
    """``LOW:HIGH`` (inclusive) or a single ``VALUE``."""

    name = "low:high"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            low, _, high = str(value).partition(":")
            bounds = (int(low), int(high or low))
        except ValueError:
            self.fail(f"{value!r} is not a range like 20:40", param, ctx)
        if bounds[1] < bounds[0]:
            self.fail(f"range {value!r} is empty", param, ctx)
        return bounds


INT_RANGE = IntRange()


@contextlib.contextmanager
def worker_pool(workers):
    """A process pool for more than one worker, else ``None`` (run inline)."""
    if workers is None or workers <= 1:
        yield None
        return
    with ProcessPoolExecutor(max_workers=workers) as executor:
        yield executor


def echo_json(doc):
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
