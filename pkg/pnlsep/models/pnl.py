"""
Generative and separating halves of the post-nonlinear chain.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from pnlsep.exceptions import RejectedInputError
from pnlsep.models.nonlinearity import Identity, MonotonePWL, Nonlinearity
from pnlsep.models.signals import MixingMatrix


@dataclass(frozen=True, eq=False)
class PnlModel:
    """Mixing matrix A followed by one distortion f_i per channel."""

    mixing: MixingMatrix
    distortions: Tuple[Nonlinearity, ...]

    def __post_init__(self):
        distortions = tuple(self.distortions)
        if len(distortions) != self.mixing.size:
            raise RejectedInputError(
                f"model needs one distortion per channel: {len(distortions)} for {self.mixing.size} channels"
            )
        object.__setattr__(self, "distortions", distortions)

    @property
    def channels(self) -> int:
        return self.mixing.size


@dataclass(frozen=True, eq=False)
class Separator:
    """One compensator g_i per channel followed by the unmixing matrix W."""

    compensators: Tuple[Nonlinearity, ...]
    unmixing: MixingMatrix

    def __post_init__(self):
        compensators = tuple(self.compensators)
        if len(compensators) != self.unmixing.size:
            raise RejectedInputError(
                f"separator needs one compensator per channel: {len(compensators)} for {self.unmixing.size} channels"
            )
        object.__setattr__(self, "compensators", compensators)

    @classmethod
    def identity(cls, channels: int) -> "Separator":
        return cls(tuple(Identity() for _ in range(channels)), MixingMatrix.identity(channels))

    @property
    def channels(self) -> int:
        return self.unmixing.size

    def replace(self, compensators: Sequence[Nonlinearity] = None, unmixing: MixingMatrix = None) -> "Separator":
        return Separator(
            compensators=self.compensators if compensators is None else tuple(compensators),
            unmixing=self.unmixing if unmixing is None else unmixing,
        )

    def min_slopes(self) -> np.ndarray:
        """Smallest segment slope of each piecewise-linear compensator (inf for other families)."""
        return np.array([
            float(g.slopes.min()) if isinstance(g, MonotonePWL) else np.inf
            for g in self.compensators
        ])
