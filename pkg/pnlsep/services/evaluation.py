"""
Separation quality against known sources: global map, Amari index,
permutation/scale alignment and signal-to-interference ratio.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from pnlsep.config import get_sir_cap_db
from pnlsep.exceptions import DegenerateMapError, DegenerateSourceError, RejectedInputError
from pnlsep.models.signals import SignalBlock, SignalRole


GRAM_CONDITION_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class GlobalMap:
    """Square linear map from sources to outputs."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise RejectedInputError(f"global map must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise RejectedInputError("global map contains NaN or Inf entries")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True, eq=False)
class Alignment:
    """Output channel assigned to each source, its least-squares scale, and the aligned block."""

    permutation: np.ndarray
    scales: np.ndarray
    aligned: SignalBlock


def _check_pair(outputs: SignalBlock, sources: SignalBlock):
    if outputs.data.shape != sources.data.shape:
        raise RejectedInputError(
            f"outputs {outputs.data.shape} and sources {sources.data.shape} must have the same shape"
        )


def global_map(outputs: SignalBlock, sources: SignalBlock) -> GlobalMap:
    """
    Least-squares linear map G minimizing ||Y - G S||^2, by the normal equations.

    Raises:
        DegenerateSourceError: If the Gram matrix S S^T is singular
    """
    _check_pair(outputs, sources)
    gram = sources.data @ sources.data.T
    eigenvalues = linalg.eigvalsh(gram)
    if not eigenvalues.min() > GRAM_CONDITION_FLOOR * max(eigenvalues.max(), 1.0):
        raise DegenerateSourceError("source Gram matrix is singular")
    cross = sources.data @ outputs.data.T
    return GlobalMap(linalg.solve(gram, cross, assume_a="pos").T)


def amari_index(gmap: GlobalMap) -> float:
    """
    Amari performance index normalized to [0, 1]; 0 for scaled permutations.

    Raises:
        DegenerateMapError: If a row or column is all zeros
    """
    magnitude = np.abs(gmap.entries)
    n = magnitude.shape[0]
    row_max = magnitude.max(axis=1)
    col_max = magnitude.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise DegenerateMapError("global map has an all-zero row or column")
    if n == 1:
        return 0.0
    rows = (magnitude / row_max[:, None]).sum(axis=1) - 1.0
    cols = (magnitude / col_max[None, :]).sum(axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2.0 * n * (n - 1)))


def _abs_correlation(outputs: np.ndarray, sources: np.ndarray) -> np.ndarray:
    y = outputs - outputs.mean(axis=1, keepdims=True)
    s = sources - sources.mean(axis=1, keepdims=True)
    norms = np.outer(np.linalg.norm(y, axis=1), np.linalg.norm(s, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(norms > 0, (y @ s.T) / norms, 0.0)
    return np.abs(corr)


def align(outputs: SignalBlock, sources: SignalBlock) -> Alignment:
    """
    Resolve the permutation and scale ambiguities of ``outputs``.

    Output channel ``permutation[i]`` is assigned to source i so that the total
    absolute correlation is maximal, then scaled by least squares onto s_i.
    """
    _check_pair(outputs, sources)
    correlation = _abs_correlation(outputs.data, sources.data)
    output_index, source_index = linear_sum_assignment(correlation, maximize=True)
    permutation = np.empty(sources.channels, dtype=int)
    permutation[source_index] = output_index
    picked = outputs.data[permutation]
    energy = np.einsum("ij,ij->i", picked, picked)
    with np.errstate(divide="ignore", invalid="ignore"):
        scales = np.where(energy > 0, np.einsum("ij,ij->i", picked, sources.data) / energy, 0.0)
    return Alignment(
        permutation=permutation,
        scales=scales,
        aligned=SignalBlock(picked * scales[:, None], SignalRole.OUTPUT),
    )


def sir_db(aligned: SignalBlock, sources: SignalBlock, cap_db: Optional[float] = None) -> np.ndarray:
    """
    Per-channel SIR = 10 log10(||s_i||^2 / ||y_i - s_i||^2), capped at ``cap_db``.

    Raises:
        DegenerateSourceError: If a source channel has zero energy
    """
    _check_pair(aligned, sources)
    cap = get_sir_cap_db() if cap_db is None else cap_db
    signal = np.sum(sources.data ** 2, axis=1)
    if np.any(signal == 0):
        raise DegenerateSourceError("source channel with zero energy")
    residual = np.sum((aligned.data - sources.data) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        ratio = 10.0 * np.log10(signal / residual)
    return np.minimum(ratio, cap)


def evaluate(outputs: SignalBlock, sources: SignalBlock) -> Tuple[float, np.ndarray, Alignment]:
    """Amari index of the global map plus aligned per-channel SIR."""
    alignment = align(outputs, sources)
    return amari_index(global_map(outputs, sources)), sir_db(alignment.aligned, sources), alignment
