"""
Services implementing the separation chain, its estimation and evaluation.
"""

from .model_core import compensate, exact_inverse, forward, separate
from .estimation import contrast, fit
from .evaluation import align, amari_index, global_map, sir_db

__all__ = [
    "align",
    "amari_index",
    "compensate",
    "contrast",
    "exact_inverse",
    "fit",
    "forward",
    "global_map",
    "separate",
    "sir_db",
]
