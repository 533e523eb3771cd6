"""
Generate command: seeded scenario to sources, observations and ground truth.
"""

from pathlib import Path

import click
import structlog

from pnlsep.commands import fail
from pnlsep.config import load_run_config
from pnlsep.exceptions import PnlError
from pnlsep.models.schemas import MAX_SEED, GroundTruth
from pnlsep.services import datagen
from pnlsep.services.storage import ensure_directory, write_json, write_signal_csv

logger = structlog.get_logger(__name__)


@click.command("generate", short_help="Generate a seeded post-nonlinear scenario")
@click.option("--config", "config_path", default=None, help="Run configuration JSON (scenario + train)")
@click.option("--seed", type=click.IntRange(min=0, max=MAX_SEED), default=None, help="Override the scenario seed")
@click.option("--out-dir", default=".", show_default=True, help="Directory receiving the generated files")
def generate(config_path, seed, out_dir):
    """
    Write sources.csv, observations.csv and ground_truth.json for one scenario.

    \b
    Example usage:
    \tpython -m pnlsep generate --config run_config.json --out-dir data/
    """
    try:
        run_config = load_run_config(config_path).with_seed(seed)
        scenario = run_config.scenario
        model, sources, observations = datagen.build(scenario)

        directory = ensure_directory(out_dir)
        write_signal_csv(sources, directory / "sources.csv")
        write_signal_csv(observations, directory / "observations.csv")
        write_json(GroundTruth.from_model(model, scenario), directory / "ground_truth.json")
    except PnlError as e:
        fail(e)

    click.echo(f"generated {scenario.n} channels x {scenario.t} samples (seed {scenario.seed}) in {Path(out_dir)}")
