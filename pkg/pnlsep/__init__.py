"""
Post-nonlinear blind source separation toolkit.

Simulates the generative chain s -> A -> f -> x and estimates the separating
chain x -> g -> W -> y by minimizing the mutual information of the outputs.
"""

__version__ = "1.0.0"
__author__ = "pnlsep developers"
