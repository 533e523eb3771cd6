"""
Evaluate command: compare recovered outputs with the true sources.
"""

import click
import numpy as np

from pnlsep import __version__
from pnlsep.commands import fail
from pnlsep.exceptions import PnlError
from pnlsep.models.schemas import EvalReport
from pnlsep.models.signals import SignalRole
from pnlsep.services.evaluation import evaluate as evaluate_outputs
from pnlsep.services.storage import ensure_directory, read_signal_csv, write_json


@click.command("evaluate", short_help="Score separated outputs against the sources")
@click.argument("outputs_path", metavar="OUTPUTS_CSV")
@click.argument("sources_path", metavar="SOURCES_CSV")
@click.option("--out-dir", default=".", show_default=True, help="Directory receiving eval.json")
def evaluate(outputs_path, sources_path, out_dir):
    """Write eval.json (Amari index, aligned SIR) and print a one-line summary."""
    try:
        outputs = read_signal_csv(outputs_path, SignalRole.OUTPUT)
        sources = read_signal_csv(sources_path, SignalRole.SOURCE)
        amari, sir, alignment = evaluate_outputs(outputs, sources)
        report = EvalReport(
            amari_index=amari,
            sir_db=sir.tolist(),
            mean_sir_db=float(np.mean(sir)),
            permutation=alignment.permutation.tolist(),
            scales=alignment.scales.tolist(),
            tool_version=__version__,
        )
        write_json(report, ensure_directory(out_dir) / "eval.json")
    except PnlError as e:
        fail(e)

    channels = " ".join(f"{value:.2f}" for value in report.sir_db)
    click.echo(f"amari={report.amari_index:.6f} mean_sir_db={report.mean_sir_db:.2f} sir_db=[{channels}]")
