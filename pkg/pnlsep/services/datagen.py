"""
Seeded synthetic scenarios: sources, mixing matrix and distortions with known
ground truth.

Random streams use numpy's PCG64 bit generator. Every stream is seeded from a
SeedSequence built from the scenario seed plus a spawn key: (0, channel) for
source channel ``channel`` and (1,) for the mixing matrix. Only raw uniform
doubles (``Generator.random``) are drawn; uniform and Laplace samples are
derived from them by explicit transforms, so the streams do not depend on
numpy's distribution-method implementations.
"""

from typing import Tuple

import numpy as np
import structlog

from pnlsep.exceptions import InfeasibleConstraintError
from pnlsep.models.pnl import PnlModel
from pnlsep.models.schemas import Scenario, SourceSpec
from pnlsep.models.signals import DET_THRESHOLD, MixingMatrix, SignalBlock, SignalRole
from pnlsep.services.model_core import forward

logger = structlog.get_logger(__name__)


SOURCE_STREAM = 0
MIXING_STREAM = 1
MAX_MIXING_DRAWS = 1000


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for ``seed`` and spawn key ``key``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key)))


def _raw_channel(spec: SourceSpec, samples: int, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "uniform":
        return np.sqrt(3.0) * (2.0 * rng.random(samples) - 1.0)
    if spec.kind == "laplace":
        # Difference of two unit exponentials is Laplace(0, 1); rescaled to 1/sqrt(2)
        exponential = -np.log1p(-rng.random((2, samples)))
        return (exponential[0] - exponential[1]) / np.sqrt(2.0)
    phase = spec.freq * np.arange(samples) / samples
    if spec.kind == "sine":
        return np.sin(2.0 * np.pi * phase)
    return 2.0 * (phase - np.floor(phase + 0.5))


def gen_sources(scenario: Scenario) -> SignalBlock:
    """
    Draw and standardize every source channel.

    Returns:
        SignalBlock: Source block with zero-mean, unit-variance channels
    """
    rows = []
    for index, spec in enumerate(scenario.source_specs):
        raw = _raw_channel(spec, scenario.t, stream(scenario.seed, SOURCE_STREAM, index))
        centered = raw - raw.mean()
        rows.append(centered / centered.std())
    return SignalBlock(np.vstack(rows), SignalRole.SOURCE)


def gen_mixing(scenario: Scenario) -> MixingMatrix:
    """
    Draw A uniformly on [-1, 1] until cond(A) <= cond_max and every row mixes.

    Raises:
        InfeasibleConstraintError: After 1000 rejected draws
    """
    rng = stream(scenario.seed, MIXING_STREAM)
    for draw in range(1, MAX_MIXING_DRAWS + 1):
        entries = 2.0 * rng.random((scenario.n, scenario.n)) - 1.0
        if abs(np.linalg.det(entries)) <= DET_THRESHOLD:
            continue
        if np.linalg.cond(entries) > scenario.cond_max:
            continue
        candidate = MixingMatrix(entries)
        if candidate.is_mixing:
            logger.debug("mixing matrix drawn", draws=draw, condition=candidate.condition_number)
            return candidate
    raise InfeasibleConstraintError(
        f"no mixing matrix with condition number <= {scenario.cond_max} in {MAX_MIXING_DRAWS} draws"
    )


def build_model(scenario: Scenario) -> PnlModel:
    return PnlModel(
        mixing=gen_mixing(scenario),
        distortions=tuple(spec.build() for spec in scenario.distortion_specs),
    )


def build(scenario: Scenario) -> Tuple[PnlModel, SignalBlock, SignalBlock]:
    """
    Build the generative model, the sources and the observations.

    Returns:
        Tuple of (model, sources, observations)
    """
    model = build_model(scenario)
    sources = gen_sources(scenario)
    observations = forward(model, sources)
    logger.info(
        "scenario built",
        seed=scenario.seed,
        channels=scenario.n,
        samples=scenario.t,
        condition=model.mixing.condition_number,
    )
    return model, sources, observations
