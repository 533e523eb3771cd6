"""
Data flow of the post-nonlinear chain.

Forward generation x = f(A s) and separation y = W g(x) as pure,
deterministic transformations of signal blocks.
"""

from typing import Sequence

import numpy as np

from pnlsep.exceptions import RejectedInputError
from pnlsep.models.nonlinearity import InverseOf, Nonlinearity
from pnlsep.models.pnl import PnlModel, Separator
from pnlsep.models.signals import MixingMatrix, SignalBlock, SignalRole


def _matrix_product(matrix: MixingMatrix, block: SignalBlock, role: SignalRole) -> SignalBlock:
    if matrix.entries.shape[1] != block.channels:
        raise RejectedInputError(
            f"dimension mismatch: matrix has {matrix.entries.shape[1]} columns, "
            f"block has {block.channels} channels"
        )
    return SignalBlock(matrix.entries @ block.data, role)


def _per_channel(functions: Sequence[Nonlinearity], block: SignalBlock, role: SignalRole) -> SignalBlock:
    if len(functions) != block.channels:
        raise RejectedInputError(
            f"length mismatch: {len(functions)} functions for {block.channels} channels"
        )
    rows = [np.asarray(fn.eval(block.channel(i)), dtype=np.float64) for i, fn in enumerate(functions)]
    return SignalBlock(np.vstack(rows), role)


def mix_linear(mixing: MixingMatrix, sources: SignalBlock) -> SignalBlock:
    """
    Linear mixing z = A s.

    Args:
        mixing: Mixing matrix A
        sources: Source block

    Returns:
        SignalBlock: Mixed block, one channel per row of A

    Raises:
        RejectedInputError: On a role or dimension mismatch
    """
    sources.require_role(SignalRole.SOURCE)
    return _matrix_product(mixing, sources, SignalRole.MIXED)


def apply_nonlinearities(distortions: Sequence[Nonlinearity], mixed: SignalBlock) -> SignalBlock:
    """
    Channel-wise sensor distortions x_i = f_i(z_i).

    Raises:
        RejectedInputError: On a role or length mismatch
        DomainError: If a sample lies outside a distortion's domain
    """
    mixed.require_role(SignalRole.MIXED)
    return _per_channel(distortions, mixed, SignalRole.OBSERVATION)


def compensate(compensators: Sequence[Nonlinearity], observations: SignalBlock) -> SignalBlock:
    """Channel-wise compensation e_i = g_i(x_i); same contract as apply_nonlinearities."""
    observations.require_role(SignalRole.OBSERVATION)
    return _per_channel(compensators, observations, SignalRole.COMPENSATED)


def unmix(unmixing: MixingMatrix, compensated: SignalBlock) -> SignalBlock:
    """Linear unmixing y = W e."""
    compensated.require_role(SignalRole.COMPENSATED)
    return _matrix_product(unmixing, compensated, SignalRole.OUTPUT)


def forward(model: PnlModel, sources: SignalBlock) -> SignalBlock:
    """Full generative half: x = f(A s)."""
    return apply_nonlinearities(model.distortions, mix_linear(model.mixing, sources))


def separate(separator: Separator, observations: SignalBlock) -> SignalBlock:
    """Full separating half: y = W g(x)."""
    return unmix(separator.unmixing, compensate(separator.compensators, observations))


def exact_inverse(model: PnlModel) -> Separator:
    """
    Separator that undoes a known model: g_i = f_i^-1 and W = A^-1.

    Returns:
        Separator: Oracle separator for round-trip checks
    """
    compensators = tuple(InverseOf(base=f) for f in model.distortions)
    return Separator(compensators=compensators, unmixing=model.mixing.inverse())
