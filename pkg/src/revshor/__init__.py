"""Reversible arithmetic circuits and resource models for modular exponentiation.

Submodules:

* ``revsim``: gate representation, circuit builder, bit-sliced simulator.
* ``adders``: constant, modular, two-register and carry-select adders.
* ``ringfft``: arithmetic modulo ``2**n + 1``, transforms, butterfly circuits.
* ``fftmul``: one- and two-level transform multipliers, modular multiplication.
* ``cost``: closed-form qubit, gate and depth estimates.
* ``errormodel``: error budgets and sampling checks.
* ``pipeline``: exponentiation backends, measured transform schedule, factoring demo.
* ``cli``: command-line interface.
"""

from . import adders, cost, errormodel, fftmul, kernels, pipeline, revsim, ringfft
from .kernels import BACKEND
from .revsim import Circuit, CircuitBuilder, Register

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Circuit",
    "CircuitBuilder",
    "Register",
    "adders",
    "cost",
    "errormodel",
    "fftmul",
    "kernels",
    "pipeline",
    "revsim",
    "ringfft",
]
