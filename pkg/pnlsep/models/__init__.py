"""
Domain types and serializable schemas.
"""

from .nonlinearity import Cubic, Identity, InverseOf, MonotonePWL, Nonlinearity, ScaledTanh
from .pnl import PnlModel, Separator
from .signals import MixingMatrix, SignalBlock, SignalRole

__all__ = [
    "Cubic",
    "Identity",
    "InverseOf",
    "MixingMatrix",
    "MonotonePWL",
    "Nonlinearity",
    "PnlModel",
    "ScaledTanh",
    "Separator",
    "SignalBlock",
    "SignalRole",
]
