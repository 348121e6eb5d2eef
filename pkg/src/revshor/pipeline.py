"""Modular exponentiation end to end, the measured Fourier transform schedule,
and a small factoring demonstration.

``modexp_batch`` follows the reversible schedule value by value for many
instances at once: for each exponent bit it multiplies into a fresh
register by modular additions, clears the old register with additions of
the inverse multiples, and swaps.  ``build_standard_step`` and
``build_modexp_circuit`` emit the same schedule as gates for small widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import adders, fftmul
from .adders import ComparePolicy, ParameterError
from .errormodel import budget
from .revsim import Circuit, CircuitBuilder, Register

BACKENDS = ("standard", "parallel_add", "fft2")


@dataclass
class Precomputation:
    N: int
    a: int
    L: int
    A: list[int]
    A_inv: list[int]
    shift_tables: list[list[int]]
    reciprocal: list[int]


def precompute(a: int, N: int, L: int) -> Precomputation:
    """Powers ``a**(2**i) mod N`` for ``i < 2L``, their inverses, doubled multiples and reciprocals."""
    if N < 2 or N >= (1 << L):
        raise ParameterError("need 2 <= N < 2**L")
    if math.gcd(a, N) != 1:
        raise ParameterError("base shares a factor with N")
    A, cur = [], a % N
    for _ in range(2 * L):
        A.append(cur)
        cur = cur * cur % N
    A_inv = [pow(v, -1, N) for v in A]
    shifts = [[(v << j) % N for j in range(L)] for v in A]
    recip = [fftmul.reciprocal(v, N, L) for v in A]
    return Precomputation(N, a, L, A, A_inv, shifts, recip)


# ---------------------------------------------------------------------------
# batched value-level exponentiation
# ---------------------------------------------------------------------------

def _mod_add_vec(s, B, N, width: int, t: int, enable, layout=None):
    """Vector form of :func:`adders.mod_add_value`, optionally with carry-select addition."""
    mask = np.uint64((1 << width) - 1) if width < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    shift = np.uint64(width - t)
    cond = (s >> shift) >= ((N - B) >> shift)
    addend = np.where(cond, B - N, B) & mask
    if layout is None:
        new = (s + addend) & mask
    else:
        new = _carry_select_vec(s, addend, width, layout)
    left = cond ^ ~((new >> shift) >= (B >> shift))
    new = np.where(enable, new, s)
    return new, left & enable


def _carry_select_vec(x, y, width: int, layout: adders.AdditionLayout):
    m = layout.superblock_len
    out = np.zeros_like(x)
    guess = np.zeros_like(x)
    for lo in range(0, width, m):
        span = min(m, width - lo)
        smask = np.uint64((1 << span) - 1)
        sh = np.uint64(lo)
        xs, ys = (x >> sh) & smask, (y >> sh) & smask
        out |= ((xs + ys + guess) & smask) << sh
        guess = (xs + ys) >> np.uint64(span)
    return out


@dataclass
class BatchResult:
    value: np.ndarray
    expected: np.ndarray
    leftover: np.ndarray
    residual: np.ndarray

    @property
    def failed(self) -> np.ndarray:
        return (self.value != self.expected) | self.leftover | (self.residual != 0)


def random_instances(L: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Odd ``L``-bit moduli with the top bit set, coprime bases, and ``2L``-bit exponents (as objects)."""
    Ns, As, Xs = [], [], []
    while len(Ns) < count:
        N = int(rng.integers(1 << (L - 1), 1 << L)) | 1
        a = int(rng.integers(2, N))
        if math.gcd(a, N) != 1:
            continue
        x = int(rng.integers(0, 1 << 62)) << max(0, 2 * L - 62) | int(rng.integers(0, 1 << max(1, 2 * L - 62)))
        x &= (1 << (2 * L)) - 1
        Ns.append(N)
        As.append(a)
        Xs.append(x)
    return np.array(As, dtype=object), np.array(Xs, dtype=object), np.array(Ns, dtype=object)


def modexp_batch(
    a: Sequence[int],
    x: Sequence[int],
    N: Sequence[int],
    L: int,
    backend: str = "standard",
    compare_bits: int | None = None,
    layout: adders.AdditionLayout | None = None,
) -> BatchResult:
    """Exponentiation of many instances at once.

    The addition backends follow the addition schedule: ``compare_bits``
    truncates every comparison (default: full width) and ``parallel_add``
    replaces each addition by carry-select addition with ``layout`` (default
    from :func:`adders.choose_addition_layout`).  The ``fft2`` backend uses
    two-level FFT modular multiplication instead.
    """
    if backend not in BACKENDS:
        raise ParameterError(f"unknown backend {backend!r}")
    if not 2 <= L <= 62:
        raise ParameterError("batched runs need 2 <= L <= 62")
    if backend == "fft2":
        return _modexp_batch_fft(a, x, N, L)
    t = L if compare_bits is None else min(L, compare_bits)
    if backend == "parallel_add" and layout is None:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            layout = adders.choose_addition_layout(L)
    lay = layout if backend == "parallel_add" else None
    count = len(N)
    Nv = np.array([int(v) for v in N], dtype=np.uint64)
    y = np.ones(count, dtype=np.uint64)
    z = np.zeros(count, dtype=np.uint64)
    leftover = np.zeros(count, dtype=bool)
    powers = [pow(int(ai), 1, int(ni)) for ai, ni in zip(a, N)]
    one = np.uint64(1)
    for i in range(2 * L):
        ctrl = np.array([(int(xi) >> i) & 1 for xi in x], dtype=bool)
        A_i = powers
        A_inv = [pow(v, -1, int(ni)) for v, ni in zip(A_i, N)]
        B = np.array(A_i, dtype=np.uint64)
        for j in range(L):
            en = ctrl & (((y >> np.uint64(j)) & one) == one)
            z, left = _mod_add_vec(z, B, Nv, L, t, en, lay)
            leftover |= left
            B = np.where(B << one >= Nv, (B << one) - Nv, B << one)
        C = np.array(A_inv, dtype=np.uint64)
        for j in range(L):
            en = ctrl & (((z >> np.uint64(j)) & one) == one)
            y, left = _mod_add_vec(y, (Nv - C) % Nv, Nv, L, t, en, lay)
            leftover |= left
            C = np.where(C << one >= Nv, (C << one) - Nv, C << one)
        y, z = np.where(ctrl, z, y), np.where(ctrl, y, z)
        powers = [v * v % int(ni) for v, ni in zip(A_i, N)]
    expected = np.array([pow(int(ai), int(xi), int(ni)) for ai, xi, ni in zip(a, x, N)], dtype=np.uint64)
    return BatchResult(y, expected, leftover, z)


def _modexp_batch_fft(a: Sequence[int], x: Sequence[int], N: Sequence[int], L: int) -> BatchResult:
    """Batched exponentiation with two-level FFT modular multiplications.

    Each controlled step multiplies by ``A_i`` and then checks that the
    inverse multiplication restores the previous register, which is what the
    clearing leg of the reversible step relies on.
    """
    width = max(L, 16)
    Ns = [int(v) for v in N]
    y = [1] * len(Ns)
    powers = [int(ai) % n for ai, n in zip(a, Ns)]
    leftover = np.zeros(len(Ns), dtype=bool)
    for i in range(2 * L):
        idx = [k for k, xi in enumerate(x) if (int(xi) >> i) & 1]
        if idx:
            sub_N = [Ns[k] for k in idx]
            sub_y = [y[k] for k in idx]
            z, _, _ = fftmul.modmul_batch(sub_y, [powers[k] for k in idx], sub_N, width)
            inv = [pow(powers[k], -1, Ns[k]) for k in idx]
            back, _, _ = fftmul.modmul_batch(z, inv, sub_N, width)
            for k, zk, bk, yk in zip(idx, z, back, sub_y):
                y[k] = zk
                leftover[k] |= bk != yk
        powers = [v * v % n for v, n in zip(powers, Ns)]
    expected = np.array([pow(int(ai), int(xi), n) for ai, xi, n in zip(a, x, Ns)], dtype=np.uint64)
    value = np.array(y, dtype=np.uint64)
    return BatchResult(value, expected, leftover, np.zeros(len(Ns), dtype=np.uint64))


@dataclass
class ModexpCost:
    backend: str
    steps: int
    modular_multiplications: int
    modular_additions: int = 0
    multiplier: fftmul.ResourceLedger = field(default_factory=fftmul.ResourceLedger)


def modexp(
    a: int, x: int, N: int, L: int, backend: str = "standard", epsilon: float | None = None
) -> tuple[int, ModexpCost]:
    """``a**x mod N`` via ``2L`` controlled multiply-and-clear steps.

    ``epsilon`` sizes the truncated comparisons of the addition backends;
    ``None`` keeps them exact.
    """
    if backend not in BACKENDS:
        raise ParameterError(f"unknown backend {backend!r}")
    if not 0 <= x < (1 << (2 * L)):
        raise ParameterError("exponent must lie in [0, 2**(2L))")
    if math.gcd(a, N) != 1:
        raise ParameterError("base shares a factor with N")
    steps = 2 * L
    cost = ModexpCost(backend, steps, 2 * steps)
    if backend == "fft2":
        pre = precompute(a, N, L)
        # the ring transforms need at least 16-bit operands; narrower ones are zero-extended
        width = max(L, 16)
        y = 1
        for i in range(steps):
            if (x >> i) & 1:
                z, c1, _ = fftmul.modmul(y, pre.A[i], N, width, "2level")
                back, c2, _ = fftmul.modmul(z, pre.A_inv[i], N, width, "2level")
                if back != y:
                    raise ArithmeticError("inverse multiplication did not restore the register")
                cost.multiplier = cost.multiplier + c1 + c2
                y = z
        return y, cost
    t = None if epsilon is None else budget(L, epsilon).compare_bits
    run = modexp_batch([a], [x], [N], L, backend, t)
    cost.modular_additions = 2 * steps * L
    return int(run.value[0]), cost


# ---------------------------------------------------------------------------
# gate-level exponentiation at small widths
# ---------------------------------------------------------------------------

def _policy(L: int, compare_bits: int | None) -> ComparePolicy:
    return ComparePolicy(L if compare_bits is None else min(L, compare_bits))


def emit_standard_step(
    bld: CircuitBuilder, x: int, y: Sequence[int], A: int, A_inv: int, N: int, compare_bits: int | None = None
) -> list[int]:
    """Controlled ``y -> y*A mod N`` in place.

    The product is accumulated in a fresh register, ``y`` is cleared by
    adding the multiples of ``-A**-1``, and a controlled swap moves the
    product back into ``y`` so the fresh register ends at zero.
    """
    L = len(y)
    policy = _policy(L, compare_bits)
    z = list(bld.alloc("prod", L).wires)
    for j in range(L):
        en = bld.alloc_wire("en")
        bld.ccx(y[j], x, en)
        adders.emit_mod_const_add(bld, z, (A << j) % N, N, policy, en)
        bld.ccx(y[j], x, en)
        bld.free(en)
    for j in range(L):
        en = bld.alloc_wire("en")
        bld.ccx(z[j], x, en)
        adders.emit_mod_const_add(bld, y, (N - (A_inv << j) % N) % N, N, policy, en)
        bld.ccx(z[j], x, en)
        bld.free(en)
    for yi, zi in zip(y, z):
        bld.cx(zi, yi)
        bld.ccx(x, yi, zi)
        bld.cx(zi, yi)
    bld.free(z)
    return list(y)


def build_standard_step(L: int, N: int, A: int, compare_bits: int | None = None) -> Circuit:
    """One controlled multiplication on registers ``x`` (1 wire) and ``y`` (``L`` wires)."""
    if math.gcd(A, N) != 1:
        raise ParameterError("multiplier must be invertible modulo N")
    bld = CircuitBuilder()
    x = bld.input("x", 1)
    y = bld.input("y", L)
    z = emit_standard_step(bld, x[0], list(y), A % N, pow(A, -1, N), N, compare_bits)
    bld.name(Register("result", tuple(z)))
    return bld.build()


def build_modexp_circuit(a: int, N: int, L: int, compare_bits: int | None = None) -> Circuit:
    """Full ``x -> a**x mod N`` on a ``2L``-wire exponent register; the output register is ``result``."""
    pre = precompute(a, N, L)
    bld = CircuitBuilder()
    x = bld.input("x", 2 * L)
    y = list(bld.alloc("acc", L).wires)
    bld.x(y[0])
    for i in range(2 * L):
        y = emit_standard_step(bld, x[i], y, pre.A[i], pre.A_inv[i], N, compare_bits)
    bld.name(Register("result", tuple(y)))
    return bld.build()


# ---------------------------------------------------------------------------
# measured Fourier transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QfftTerm:
    qubit: int
    source: int
    phase: Fraction  # multiple of 2*pi
    kept: bool


@dataclass
class QfftSchedule:
    l: int
    keep: int
    terms: list[QfftTerm]
    bit_order: str = "least-significant-first"

    def phase(self, qubit: int, truncated: bool = False) -> Fraction:
        return sum((t.phase for t in self.terms if t.qubit == qubit and (t.kept or not truncated)), Fraction(0))

    def dropped(self, qubit: int) -> Fraction:
        return self.phase(qubit) - self.phase(qubit, truncated=True)


def qfft_schedule(measured_bits: Sequence[int], l: int, keep: int) -> QfftSchedule:
    """Classically controlled rotations of the measured transform.

    Before qubit ``q`` is measured it is rotated by ``2*pi * n / 2**(q+1)``
    where ``n`` is the number formed by the bits already read (least
    significant first).  Bit ``j`` contributes ``2**(j - q - 1)``; only the
    ``keep`` largest contributions per qubit are applied.
    """
    if len(measured_bits) > l:
        raise ParameterError("more measured bits than qubits")
    if keep < 0:
        raise ParameterError("keep must be non-negative")
    terms = []
    for q in range(min(l, len(measured_bits) + 1)):
        for j in range(q):
            if measured_bits[j]:
                terms.append(QfftTerm(q, j, Fraction(1, 2 ** (q - j + 1)), q - j <= keep))
    return QfftSchedule(l, keep, terms)


# ---------------------------------------------------------------------------
# sampling and factoring demo
# ---------------------------------------------------------------------------

def _peak_weights(c: np.ndarray, r: int, K: int, Q: int) -> np.ndarray:
    theta = np.pi * ((c * r) % Q) / Q
    num = np.sin(K * theta) ** 2
    den = np.sin(theta) ** 2
    return np.where(den < 1e-300, float(K * K), num / np.where(den < 1e-300, 1.0, den))


def sample_measurement(r: int, L: int, rng: np.random.Generator, window: int = 32) -> int:
    """Readout of the ``2L``-qubit exponent register after the transform, for period ``r``.

    A random offset fixes how many terms the periodic state has; a random
    peak ``k`` is picked uniformly; the outcome is drawn from the exact
    interference pattern restricted to ``window`` values on either side.
    """
    if r < 1:
        raise ParameterError("period must be at least 1")
    Q = 1 << (2 * L)
    if r == 1:
        return 0
    x0 = int(rng.integers(0, r))
    K = -(-(Q - x0) // r)
    k = int(rng.integers(0, r))
    centre = round(k * Q / r)
    c = np.arange(centre - window, centre + window + 1, dtype=np.int64)
    w = _peak_weights(c, r, K, Q)
    choice = int(rng.choice(c, p=w / w.sum()))
    return choice % Q


def multiplicative_order(a: int, N: int) -> int:
    r, v = 1, a % N
    while v != 1:
        v = v * a % N
        r += 1
    return r


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def _is_prime_power(n: int) -> bool:
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            while n % p == 0:
                n //= p
            return n == 1
    return True


@dataclass(frozen=True)
class FactorResult:
    N: int
    factor: int | None
    attempts: int
    base: int | None
    period: int | None
    method: str


def factor_demo(N: int, trials: int = 10, seed: int = 0) -> FactorResult:
    """Order finding with a sampled readout and continued-fraction recovery."""
    if N < 4 or N % 2 == 0 or N > (1 << 16):
        raise ParameterError("N must be odd, composite and at most 2**16")
    if _is_prime(N) or _is_prime_power(N):
        raise ParameterError("N must not be a prime or a prime power")
    rng = np.random.default_rng(seed)
    L = N.bit_length()
    Q = 1 << (2 * L)
    for attempt in range(1, trials + 1):
        a = int(rng.integers(2, N - 1))
        g = math.gcd(a, N)
        if g > 1:
            return FactorResult(N, g, attempt, a, None, "gcd")
        r_true = multiplicative_order(a, N)
        c = sample_measurement(r_true, L, rng)
        d = Fraction(c, Q).limit_denominator(N - 1).denominator
        r = next((m * d for m in range(1, 5) if pow(a, m * d, N) == 1), None)
        if r is None or r % 2:
            continue
        h = pow(a, r // 2, N)
        if h == N - 1:
            continue
        f = math.gcd(h - 1, N)
        if 1 < f < N:
            return FactorResult(N, f, attempt, a, r, "period")
    return FactorResult(N, None, trials, None, None, "failed")
