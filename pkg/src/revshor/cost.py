"""Closed-form qubit and Toffoli estimates for the three exponentiation schemes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .adders import ParameterError, choose_addition_layout
from .fftmul import Level1Params, Level2Params, select_level1, select_level2

ALGORITHMS = ("standard", "parallel_add", "fft2")
MICROSECONDS_PER_DAY = 86_400e6


@dataclass(frozen=True)
class ResourceEstimate:
    algorithm: str
    L: int
    S: int
    T: int
    T_p: int | None
    params: Any = None
    breakdown: dict = field(default_factory=dict, compare=False)

    def wall_days(self, toffoli_us: float = 1.0) -> float | None:
        steps = self.T if self.T_p is None else self.T_p
        return steps * toffoli_us / MICROSECONDS_PER_DAY


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor_log2: float
    points: int


def standard_cost(L: int) -> ResourceEstimate:
    """``2L`` steps, two multiplications each, ``L`` additions of ``3L`` Toffolis."""
    if L < 16:
        raise ParameterError("L must be at least 16")
    return ResourceEstimate("standard", L, 3 * L, 12 * L**3, None)


def parallel_add_cost(L: int, epsilon: float = 0.01) -> ResourceEstimate:
    """``4L*L`` carry-select additions; the qubit figure is the headline ``5L``."""
    with warnings.catch_warnings():
        # the tabulated L=500 row sits just below the fitted range on purpose
        warnings.simplefilter("ignore")
        layout = choose_addition_layout(L, epsilon)
    adds = 4 * L * L
    T = adds * layout.count_formula()
    T_p = adds * layout.depth_formula()
    breakdown = {"adder_space": 3 * L + 6 * layout.blocks, "additions": adds, "per_add_T_p": layout.depth_formula()}
    return ResourceEstimate("parallel_add", L, 5 * L, T, T_p, layout, breakdown)


def _fft_terms(p1: Level1Params, p2: Level2Params) -> dict[str, int]:
    b, lt, bp = p1.b, p1.l_tilde, p2.b_prime
    lb, lbp = b.bit_length() - 1, bp.bit_length() - 1
    w2 = 2 * bp
    return {
        "fft1_T": 2 * lb * (b // 2) * 26 * (2 * lt + 14),
        "fft2_T": b * 2 * lbp * (bp // 2) * 13 * w2,
        "mu_T": b * bp * 3 * w2 * w2,
        "fft1_T_p": 2 * lb * 540,
        "fft2_T_p": 2 * lbp * 13 * w2,
        "mu_T_p": 3 * w2 * w2,
    }


def fft_cost(L: int) -> ResourceEstimate:
    """Two-level FFT multiplication inside every modular multiplication.

    Per simple multiplication: two level-1 transforms of parallel
    butterflies on ``2 l_tilde``-bit numbers, ``b`` pairs of level-2
    transforms with ``2b'``-bit butterflies, and ``b*b'`` schoolbook
    products of ``2b'`` bits.  Eight simple multiplications per modular
    multiplication and ``4L`` modular multiplications.
    """
    if L < 256:
        raise ParameterError("L must be at least 256")
    p1 = select_level1(L)
    p2 = select_level2(p1.l_tilde)
    t = _fft_terms(p1, p2)
    scale = 4 * L * 8
    T = scale * (t["fft1_T"] + t["fft2_T"] + t["mu_T"])
    T_p = scale * (t["fft1_T_p"] + t["fft2_T_p"] + t["mu_T_p"])
    S = 3 * p1.b * p2.b_prime * 2 * p2.b_prime
    breakdown = dict(t, butterflies=butterfly_count(p1, p2) * scale)
    return ResourceEstimate("fft2", L, S, T, T_p, (p1, p2), breakdown)


def butterfly_count(p1: Level1Params, p2: Level2Params) -> int:
    """Butterflies in one simple multiplication (both transform levels)."""
    lb, lbp = p1.b.bit_length() - 1, p2.b_prime.bit_length() - 1
    return 2 * lb * (p1.b // 2) + p1.b * 2 * lbp * (p2.b_prime // 2)


def estimate(algorithm: str, L: int, epsilon: float = 0.01) -> ResourceEstimate:
    if algorithm == "standard":
        return standard_cost(L)
    if algorithm == "parallel_add":
        return parallel_add_cost(L, epsilon)
    if algorithm == "fft2":
        return fft_cost(L)
    raise ParameterError(f"unknown algorithm {algorithm!r}")


def zigzag_parallel_cost(L: int, S_fft: int | None = None, epsilon: float = 0.01) -> float:
    """Parallel-addition depth when that scheme may use as many qubits as the FFT scheme."""
    S_fft = fft_cost(L).S if S_fft is None else S_fft
    return parallel_add_cost(L, epsilon).T_p * (5 * L) / S_fft


@dataclass(frozen=True)
class Crossover:
    L: int | None
    at_boundary: bool


def find_crossover(grid: Iterable[int]) -> Crossover:
    """Smallest grid point where the FFT depth beats the space-matched parallel-addition depth."""
    grid = sorted(grid)
    if not grid:
        raise ParameterError("empty grid")
    for i, L in enumerate(grid):
        if fft_cost(L).T_p < zigzag_parallel_cost(L):
            return Crossover(L, i == 0)
    return Crossover(None, False)


def karatsuba_space(n: int) -> int:
    """Bits held by a fully recursive Karatsuba product: six half-size numbers per level."""
    if n < 2 or n & (n - 1):
        raise ParameterError("n must be a power of two, at least 2")
    levels = n.bit_length() - 1
    return sum(3 * n * 3**i // 2**i for i in range(levels))


def log_grid(lo_log2: float, hi_log2: float, points_per_octave: int) -> list[int]:
    """Integer ``L`` values spaced evenly in ``log2 L`` (both ends included)."""
    if points_per_octave < 1 or hi_log2 < lo_log2:
        raise ParameterError("empty grid")
    steps = round((hi_log2 - lo_log2) * points_per_octave)
    return sorted({round(2 ** (lo_log2 + i / points_per_octave)) for i in range(steps + 1)})


def fit_powerlaw(estimates: Sequence[ResourceEstimate], field_name: str = "T") -> FitResult:
    """Least-squares line through ``(log2 L, log2 value)``."""
    if field_name not in ("T", "T_p", "S"):
        raise ParameterError(f"cannot fit field {field_name!r}")
    pts = [(e.L, getattr(e, field_name)) for e in estimates]
    return fit_points([p[0] for p in pts], [p[1] for p in pts])


def fit_points(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    if len(xs) < 10:
        raise ParameterError("need at least 10 points")
    lx = np.log2(np.asarray(xs, dtype=float))
    ly = np.log2(np.asarray(ys, dtype=float))
    if np.ptp(lx) == 0:
        raise ParameterError("degenerate grid")
    slope, intercept = np.polyfit(lx, ly, 1)
    return FitResult(float(slope), float(intercept), len(xs))


def mean_space_per_bit(grid: Iterable[int]) -> float:
    """Average of ``S/L`` for the FFT scheme over a grid."""
    ratios = [fft_cost(L).S / L for L in grid]
    return float(np.mean(ratios))


def speedup(L: int, epsilon: float = 0.01) -> float:
    """Depth gain of one carry-select addition over a ``3L``-deep ripple addition."""
    return 3 * L / parallel_add_cost(L, epsilon).breakdown["per_add_T_p"]
