"""
Command line subcommands.
"""

import click
import structlog

from pnlsep.exceptions import PnlError

logger = structlog.get_logger(__name__)


def fail(error: PnlError):
    """Log a handled error, echo it to stderr and exit with its exit code."""
    logger.error("command failed", error=error.error_code, message=error.message)
    click.echo(f"error: {error.message}", err=True)
    click.get_current_context().exit(error.exit_code)
