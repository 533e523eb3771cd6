"""
Signal blocks and square mixing matrices flowing through the separation chain.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from pnlsep.exceptions import RejectedInputError, SingularUnmixingError


DET_THRESHOLD = 1e-12
MIXING_THRESHOLD = 1e-9


class SignalRole(str, Enum):
    """Position of a signal block in the chain s -> z -> x -> e -> y."""

    SOURCE = "source"
    MIXED = "mixed"
    OBSERVATION = "observation"
    COMPENSATED = "compensated"
    OUTPUT = "output"


@dataclass(frozen=True, eq=False)
class SignalBlock:
    """Channel-major (channels x samples) block of finite real samples."""

    data: np.ndarray
    role: SignalRole

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, order="C")
        if data.ndim != 2:
            raise RejectedInputError(f"signal block must be 2-D (channels x samples), got {data.ndim}-D")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise RejectedInputError(f"signal block needs at least one channel and one sample, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise RejectedInputError("signal block contains NaN or Inf entries")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        try:
            object.__setattr__(self, "role", SignalRole(self.role))
        except ValueError:
            raise RejectedInputError(f"unknown signal role: {self.role!r}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]

    def require_role(self, role: SignalRole) -> "SignalBlock":
        """Return self if tagged with ``role``, raise otherwise."""
        if self.role is not role:
            raise RejectedInputError(f"expected a {role.value} block, got a {self.role.value} block")
        return self

    def channel(self, index: int) -> np.ndarray:
        return self.data[index]

    def __repr__(self):
        return f"<SignalBlock(role='{self.role.value}', channels={self.channels}, samples={self.samples})>"


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """
    Square invertible real matrix: the mixing matrix A or an unmixing estimate W.

    The two-nonzeros-per-row mixing condition is exposed through ``is_mixing``
    and enforced where a matrix is generated for mixing, not at construction,
    so the identity and permutations stay usable as trivial chains.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, order="C")
        if entries.ndim != 2:
            raise RejectedInputError(f"matrix must be 2-D, got {entries.ndim}-D")
        rows, cols = entries.shape
        if rows != cols:
            raise RejectedInputError(
                f"only square systems are supported (P == N), got a {rows}x{cols} matrix"
            )
        if rows < 1:
            raise RejectedInputError("matrix must have at least one row")
        if not np.all(np.isfinite(entries)):
            raise RejectedInputError("matrix contains NaN or Inf entries")
        determinant = np.linalg.det(entries)
        if not abs(determinant) > DET_THRESHOLD:
            raise SingularUnmixingError(f"matrix is singular: |det| = {abs(determinant):.3e}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def identity(cls, size: int) -> "MixingMatrix":
        return cls(np.eye(size))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.entries))

    @property
    def log_abs_det(self) -> float:
        return float(np.linalg.slogdet(self.entries)[1])

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.entries))

    @property
    def is_mixing(self) -> bool:
        """True when every row has at least two entries above the mixing threshold."""
        significant = np.abs(self.entries) > MIXING_THRESHOLD
        return bool(np.all(significant.sum(axis=1) >= 2))

    def inverse(self) -> "MixingMatrix":
        return MixingMatrix(np.linalg.inv(self.entries))

    def __matmul__(self, other: Union["MixingMatrix", np.ndarray]) -> np.ndarray:
        if isinstance(other, MixingMatrix):
            other = other.entries
        return self.entries @ other

    def __repr__(self):
        return f"<MixingMatrix(size={self.size}, det={self.determinant:.4g})>"
