"""
Separate command: fit a separator on observations and write its outputs.
"""

import time

import click
import structlog

from pnlsep import __version__
from pnlsep.commands import fail
from pnlsep.config import load_run_config
from pnlsep.exceptions import PnlError, RejectedInputError
from pnlsep.models.schemas import MAX_SEED, GroundTruth, RunReport, SeparatorModel
from pnlsep.models.signals import SignalRole
from pnlsep.services.datagen import gen_sources
from pnlsep.services.estimation import fit
from pnlsep.services.evaluation import amari_index, evaluate, global_map
from pnlsep.services.model_core import separate as run_separator
from pnlsep.services.storage import (
    ensure_directory,
    read_model_json,
    read_signal_csv,
    write_json,
    write_signal_csv,
    write_trace_csv,
)

logger = structlog.get_logger(__name__)


@click.command("separate", short_help="Estimate a separator and recover the sources")
@click.argument("observations_path", metavar="OBSERVATIONS_CSV")
@click.option("--config", "config_path", default=None, help="Run configuration JSON (scenario + train)")
@click.option("--seed", type=click.IntRange(min=0, max=MAX_SEED), default=None, help="Override the configured seeds")
@click.option("--truth", "truth_path", default=None, help="ground_truth.json for Amari/SIR reporting")
@click.option("--baseline/--no-baseline", default=False, help="Also fit the linear-only baseline (needs --truth)")
@click.option("--out-dir", default=".", show_default=True, help="Directory receiving the outputs")
def separate(observations_path, config_path, seed, truth_path, baseline, out_dir):
    """
    Write outputs.csv, separator.json, report.json and trace.csv.

    Non-convergence is reported in report.json and still exits with 0.
    """
    try:
        observations = read_signal_csv(observations_path, SignalRole.OBSERVATION)
        run_config = load_run_config(config_path).with_seed(seed)

        started = time.perf_counter()
        separator, trace = fit(observations, run_config.train)
        outputs = run_separator(separator, observations)
        wall_time_ms = (time.perf_counter() - started) * 1000.0

        amari = sir = baseline_amari = None
        if truth_path is not None:
            truth = read_model_json(truth_path, GroundTruth)
            sources = gen_sources(truth.scenario)
            if sources.data.shape != observations.data.shape:
                raise RejectedInputError(
                    f"ground truth describes {sources.data.shape} sources, observations are {observations.data.shape}"
                )
            amari, sir_values, _ = evaluate(outputs, sources)
            sir = sir_values.tolist()
            if baseline:
                linear_config = run_config.train.model_copy(update={"train_compensators": False})
                linear_separator, _ = fit(observations, linear_config)
                baseline_amari = amari_index(global_map(run_separator(linear_separator, observations), sources))

        report = RunReport(
            config=run_config,
            trace=list(trace.rows),
            iterations=trace.iterations,
            converged=trace.converged,
            amari_index=amari,
            sir_db=sir,
            baseline_amari=baseline_amari,
            wall_time_ms=wall_time_ms,
            tool_version=__version__,
        )

        directory = ensure_directory(out_dir)
        write_signal_csv(outputs, directory / "outputs.csv")
        write_json(SeparatorModel.from_separator(separator), directory / "separator.json")
        write_json(report, directory / "report.json")
        write_trace_csv(trace.rows, directory / "trace.csv")
    except PnlError as e:
        fail(e)

    if not trace.converged:
        logger.warning("fit did not converge", iterations=trace.iterations)
    summary = f"iterations={trace.iterations} converged={str(trace.converged).lower()} contrast={trace.rows[-1].total:.6f}"
    if amari is not None:
        summary += f" amari={amari:.4f}"
    click.echo(summary)
