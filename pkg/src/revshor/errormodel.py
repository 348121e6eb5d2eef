"""Error budgets for the deliberately approximate arithmetic, and Monte Carlo checks.

Two shortcuts introduce wrong outputs with small probability: comparisons
that look only at the top ``t`` bits, and carry-select additions that guess
an incoming carry of zero per superblock.  The functions here give the
analytic rates, exhaustive small-width oracles fixing their constants, and
seeded sampling estimators with Wilson confidence intervals.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .adders import ParameterError, target_superblock_len


@dataclass(frozen=True)
class ErrorBudget:
    L: int
    epsilon: float
    per_mod_add: float
    per_mod_mul: float
    compare_bits: int
    s_prime_width: int
    superblock_len: int
    fft_op_budget: float | None


def compare_bits_for(L: int, epsilon: float) -> int:
    return math.ceil(2 + 2 * math.log2(L) - math.log2(epsilon) - 1e-12)


def budget(L: int, epsilon: float = 0.01) -> ErrorBudget:
    """Per-operation error allowances for an ``L``-bit exponentiation with total error ``epsilon``."""
    if not 0 < epsilon <= 1:
        raise ParameterError("epsilon must lie in (0, 1]")
    if L < 2:
        raise ParameterError("L must be at least 2")
    ops = total_fft_ops(L) if L >= 256 else None
    return ErrorBudget(
        L=L,
        epsilon=epsilon,
        per_mod_add=epsilon / (4 * L * L),
        per_mod_mul=epsilon / (4 * L),
        compare_bits=min(L, compare_bits_for(L, epsilon)),
        s_prime_width=9 + 3 * math.ceil(math.log2(L)),
        superblock_len=target_superblock_len(L),
        fft_op_budget=epsilon / ops if ops else None,
    )


# ---------------------------------------------------------------------------
# confidence intervals and records
# ---------------------------------------------------------------------------

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ParameterError("trials must be positive")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def sigma_band(p: float, trials: int, k: float = 3.0) -> tuple[float, float]:
    s = math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - k * s), p + k * s


@dataclass
class McRecord:
    test: str
    L: int | None
    epsilon: float | None
    trials: int
    seed: int
    observed: float
    predicted: float | None
    band: tuple[float, float]

    @property
    def within_band(self) -> bool:
        return self.band[0] <= self.observed <= self.band[1]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# ---------------------------------------------------------------------------
# truncated comparison
# ---------------------------------------------------------------------------

def trunc_compare_predicted(width: int, t: int) -> float:
    """Probability that a ``t``-bit comparison (ties counted as ``>=``) disagrees with the full one.

    Only equal top parts can disagree; that happens with probability
    ``2**-t``, and then the low parts of the first number are smaller in
    ``(1 - 2**-(width - t)) / 2`` of cases.
    """
    if not 1 <= t <= width:
        raise ParameterError("need 1 <= t <= width")
    return 2.0**-t * 0.5 * (1 - 2.0 ** -(width - t))


def trunc_compare_exact(width: int, t: int) -> float:
    """Exhaustive disagreement rate over all pairs of ``width``-bit numbers."""
    if width > 12:
        raise ParameterError("exhaustive enumeration limited to width 12")
    v = np.arange(1 << width, dtype=np.int64)
    shift = width - t
    x, c = v[:, None], v[None, :]
    trunc = (x >> shift) >= (c >> shift)
    return float(np.mean(trunc != (x >= c)))


def _uniform(rng: np.random.Generator, width: int, size: int) -> np.ndarray:
    vals = rng.integers(0, 1 << 63, size=size, dtype=np.uint64, endpoint=False)
    vals = (vals << np.uint64(1)) | rng.integers(0, 2, size=size, dtype=np.uint64)
    if width < 64:
        vals &= np.uint64((1 << width) - 1)
    return vals


def trunc_compare_mc(width: int, t: int, trials: int, seed: int, chunk: int = 1 << 20) -> McRecord:
    if not 1 <= t <= width <= 64:
        raise ParameterError("need 1 <= t <= width <= 64")
    rng = np.random.default_rng(seed)
    shift = np.uint64(width - t)
    wrong, left = 0, trials
    while left:
        n = min(chunk, left)
        x, c = _uniform(rng, width, n), _uniform(rng, width, n)
        wrong += int(np.count_nonzero(((x >> shift) >= (c >> shift)) != (x >= c)))
        left -= n
    p = trunc_compare_predicted(width, t)
    return McRecord("trunc_compare", None, None, trials, seed, wrong / trials, p, sigma_band(p, trials))


# ---------------------------------------------------------------------------
# carry guesses
# ---------------------------------------------------------------------------

def superblock_carry_predicted(superblock_len: int) -> float:
    """A guessed zero carry-in changes the carry-out only when the two blocks sum to all ones."""
    return 2.0**-superblock_len


def superblock_carry_exact(superblock_len: int) -> float:
    if superblock_len > 10:
        raise ParameterError("exhaustive enumeration limited to length 10")
    v = np.arange(1 << superblock_len, dtype=np.int64)
    s = v[:, None] + v[None, :]
    return float(np.mean((s >> superblock_len) != ((s + 1) >> superblock_len)))


def superblock_carry_mc(superblock_len: int, trials: int, seed: int, true_carry_in: int = 1) -> McRecord:
    """Rate at which the carry-out computed with carry-in 0 differs from the one with the true carry-in."""
    if not 1 <= superblock_len <= 62:
        raise ParameterError("superblock length must lie in 1..62")
    rng = np.random.default_rng(seed)
    x, y = _uniform(rng, superblock_len, trials), _uniform(rng, superblock_len, trials)
    s = x + y
    m = np.uint64(superblock_len)
    flips = (s >> m) != ((s + np.uint64(true_carry_in)) >> m)
    p = superblock_carry_predicted(superblock_len) if true_carry_in else 0.0
    return McRecord("superblock_carry", None, None, trials, seed, float(np.mean(flips)), p, sigma_band(p, trials))


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------

def modexp_error_mc(
    L_small: int, epsilon: float, trials: int, seed: int, compare_bits: int | None = None
) -> McRecord:
    """Fraction of random ``(a, x, N)`` where the truncated-comparison exponentiation
    returns a wrong value or leaves an ancilla or register set."""
    from .pipeline import modexp_batch, random_instances

    if not 2 <= L_small <= 62:
        raise ParameterError("L_small must lie in 2..62")
    t = budget(L_small, epsilon).compare_bits if compare_bits is None else compare_bits
    rng = np.random.default_rng(seed)
    a, x, N = random_instances(L_small, trials, rng)
    run = modexp_batch(a, x, N, L_small, backend="standard", compare_bits=t)
    bad = int(np.count_nonzero(run.failed))
    lo, hi = wilson_interval(bad, trials)
    return McRecord("modexp", L_small, epsilon, trials, seed, bad / trials, epsilon, (lo, hi))


def total_fft_ops(L: int) -> int:
    """Butterflies in a full two-level FFT exponentiation (eight products per modular multiplication)."""
    from .cost import fft_cost

    return fft_cost(L).breakdown["butterflies"]


@dataclass(frozen=True)
class FftOpBudget:
    L: int
    epsilon: float
    total_ops: int
    derived_budget: float
    derived_log2: float
    quoted_budget: float
    ratio: float


QUOTED_OP_BUDGET = 2.0**-40


def fft_op_budget_check(L: int, epsilon: float = 0.01, total_ops: int | None = None) -> FftOpBudget:
    """Per-butterfly error allowance ``epsilon / ops`` next to the quoted ``2**-40``."""
    ops = total_fft_ops(L) if total_ops is None else total_ops
    derived = epsilon / ops
    return FftOpBudget(L, epsilon, ops, derived, math.log2(derived), QUOTED_OP_BUDGET, derived / QUOTED_OP_BUDGET)
