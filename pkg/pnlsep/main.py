"""
Main command line application module.
"""

import logging
import sys

import click
import structlog

from pnlsep import __version__
from pnlsep.commands.evaluate import evaluate
from pnlsep.commands.generate import generate
from pnlsep.commands.schema import schema
from pnlsep.commands.separate import separate
from pnlsep.config import get_log_level, settings


def configure_logging(level: int, json_logs: bool = False):
    """
    Route structlog through stdlib logging on stderr.

    Args:
        level: stdlib logging level
        json_logs: Render one JSON object per event instead of console lines
    """
    logging.basicConfig(
        level=level,
        format=settings.LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
    renderer = structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name=settings.APP_NAME)
def cli():
    """Post-nonlinear blind source separation toolkit."""
    configure_logging(get_log_level(), settings.LOG_JSON)


cli.add_command(generate)
cli.add_command(separate)
cli.add_command(evaluate)
cli.add_command(schema)


def main():
    cli(prog_name=settings.APP_NAME)


if __name__ == "__main__":
    main()
