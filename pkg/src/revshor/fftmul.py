"""Integer multiplication through one or two levels of ring FFTs.

The level-1 transform runs over ``Z/(2**(2*l_tilde) + 1)`` with ``b`` points.
At two levels each pointwise product in that ring is itself a negacyclic
product of ``b'`` pieces, computed by a transform over ``Z/(2**(2*b') + 1)``
(helped by a second transform over ``Z/(2**b' + 1)`` when that ring alone is
too small).  Products at the bottom are plain integer products.

All functions are value-level and keep two ledgers: operation counts
(:class:`ResourceLedger`) and the intermediate registers a reversible run
would leave behind until its paired uncompute (:class:`GarbageLedger`).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Sequence

import numpy as np

from .adders import ParameterError
from .ringfft import RingModulus, crt_recombine, mul_pow2_rows, transform_rows


@dataclass(frozen=True)
class Level1Params:
    L: int
    k: int
    b: int
    l: int
    l_tilde: int
    omega_log2: int
    k_initial: int

    @property
    def modulus(self) -> RingModulus:
        return RingModulus(2 * self.l_tilde)

    @property
    def revised(self) -> bool:
        return self.k != self.k_initial


@dataclass(frozen=True)
class Level2Params:
    k_prime: int
    b_prime: int
    l_tilde_prime: int
    needs_crt: bool
    omega_prime: int = 16
    psi: int = 4

    @property
    def modulus(self) -> RingModulus:
        return RingModulus(2 * self.b_prime)

    @property
    def companion(self) -> RingModulus:
        """Ring ``2**b' + 1`` (root 4, square root 2) used for recombination."""
        return RingModulus(self.b_prime)


def _level1_shape(k: int) -> tuple[int, int, int]:
    if k % 2 == 0:
        return 1 << (k // 2 + 1), 1 << (k // 2 - 1), 1
    return 1 << ((k + 1) // 2), 1 << ((k - 1) // 2), 2


def select_level1(L: int) -> Level1Params:
    """Block count and ring size for ``L``-bit operands.

    Starting from ``k = ceil(log2 2L)``, ``k`` grows until the convolution of
    ``l``-bit blocks cannot overflow the ring: ``2l + log2 b < 2 l_tilde``.
    """
    if L < 16:
        raise ParameterError("L must be at least 16")
    k0 = (2 * L - 1).bit_length()
    k = k0
    while True:
        b, l_tilde, e = _level1_shape(k)
        l = -(-2 * L // b)
        if 2 * l + (b.bit_length() - 1) < 2 * l_tilde:
            return Level1Params(L, k, b, l, l_tilde, e, k0)
        k += 1


def select_level2(l_tilde: int) -> Level2Params:
    """Second-level split of the ``2 l_tilde``-bit ring elements into ``b'`` pieces."""
    if l_tilde < 8 or l_tilde & (l_tilde - 1):
        raise ParameterError("l_tilde must be a power of two, at least 8")
    kp = (2 * l_tilde).bit_length() - 1
    if kp % 2 == 0:
        bp, lp = 1 << (kp // 2), 1 << (kp // 2)
    else:
        bp, lp = 1 << ((kp + 1) // 2), 1 << ((kp - 1) // 2)
    return Level2Params(kp, bp, lp, needs_crt=kp % 2 == 0)


@dataclass
class ResourceLedger:
    """Operation counts of one or more multiplications."""

    fft1: int = 0
    fft2: int = 0
    fft2_companion: int = 0
    mu: int = 0
    mu_companion: int = 0
    pointwise: int = 0
    precomputed_fft1: int = 0
    simple_multiplications: int = 0
    executed_multiplications: int = 0
    range_corrections: int = 0

    def __add__(self, other: "ResourceLedger") -> "ResourceLedger":
        return ResourceLedger(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def scaled(self, factor: int) -> "ResourceLedger":
        return ResourceLedger(**{f.name: getattr(self, f.name) * factor for f in fields(self)})

    @property
    def mu_total(self) -> int:
        return self.mu + self.mu_companion


@dataclass
class GarbageLedger:
    """Registers left over by forward multiplications, per stage."""

    counts: Counter = field(default_factory=Counter)

    def push(self, stage: str, amount: int) -> None:
        self.counts[stage] += amount

    def release(self, other: "GarbageLedger") -> None:
        """Uncompute everything recorded in ``other``."""
        for stage, amount in other.counts.items():
            if self.counts[stage] < amount:
                raise ParameterError(f"uncompute of {stage} exceeds what was computed")
            self.counts[stage] -= amount
        self.counts = +self.counts

    def merge(self, other: "GarbageLedger") -> None:
        self.counts.update(other.counts)

    @property
    def empty(self) -> bool:
        return not +self.counts


def _split(x: int, count: int, width: int) -> list[int]:
    mask = (1 << width) - 1
    return [(x >> (i * width)) & mask for i in range(count)]


class _Engine:
    """Transforms and pointwise products for one parameter set."""

    def __init__(self, p1: Level1Params, p2: Level2Params | None, use_crt: bool = True):
        self.p1, self.p2 = p1, p2
        self.use_crt = use_crt and p2 is not None and p2.needs_crt
        self.n1 = 2 * p1.l_tilde
        self.M1 = (1 << self.n1) + 1

    # level 1 ---------------------------------------------------------------
    def spectra(self, xs: Sequence[int]) -> np.ndarray:
        """Level-1 transforms of many operands, one row each."""
        p1 = self.p1
        X = np.array([int(v) for v in xs], dtype=object)
        mask = (1 << p1.l) - 1
        half = p1.b // 2
        blocks = np.zeros((len(X), p1.b), dtype=object)
        for i in range(half):
            blocks[:, i] = (X >> (i * p1.l)) & mask
        return transform_rows(blocks, self.n1, p1.omega_log2)

    def spectrum(self, x: int) -> np.ndarray:
        return self.spectra([x])[0]

    def assemble_rows(self, freq: np.ndarray) -> list[int]:
        p1 = self.p1
        coeffs = transform_rows(freq, self.n1, p1.omega_log2, inverse=True)
        total = np.zeros(coeffs.shape[0], dtype=object)
        for k in range(coeffs.shape[1] - 1, -1, -1):
            total = (total << p1.l) + coeffs[:, k]
        return [int(v) for v in total]

    def assemble(self, freq: np.ndarray) -> int:
        return self.assemble_rows(freq.reshape(1, -1))[0]

    # level 2 ---------------------------------------------------------------
    def _pieces(self, freq: np.ndarray) -> np.ndarray:
        """Cut each ring element into ``b'`` pieces; ``2**n1`` (that is ``-1``) becomes ``[-1, 0, ...]``."""
        p2 = self.p2
        flat = freq.ravel()
        top = (flat >> self.n1) != 0
        mask = (1 << p2.l_tilde_prime) - 1
        out = np.empty((len(flat), p2.b_prime), dtype=object)
        for j in range(p2.b_prime):
            out[:, j] = np.where(top, -1 if j == 0 else 0, (flat >> (j * p2.l_tilde_prime)) & mask)
        return out

    def _rings(self):
        p2 = self.p2
        # (ring exponent, root exponent, weight exponent)
        out = [(2 * p2.b_prime, 4, 2)]
        if self.use_crt:
            out.append((p2.b_prime, 2, 1))
        return out

    def level2_spectra(self, freq: np.ndarray) -> list[np.ndarray]:
        """Weighted level-2 transforms of every level-1 element (rows follow ``freq.ravel()``)."""
        pieces = self._pieces(freq)
        weights = np.arange(self.p2.b_prime)
        out = []
        for n, e, w in self._rings():
            M = (1 << n) + 1
            weighted = mul_pow2_rows(pieces % M, w * weights, n)
            out.append(transform_rows(weighted, n, e))
        return out

    def pointwise2(self, x_spectra: list[np.ndarray], c_spectra: list[np.ndarray]) -> np.ndarray:
        p2 = self.p2
        weights = np.arange(p2.b_prime)
        coeffs = []
        for (n, e, w), xs, cs in zip(self._rings(), x_spectra, c_spectra):
            M = (1 << n) + 1
            prod = xs * cs % M
            back = transform_rows(prod, n, e, inverse=True)
            coeffs.append(mul_pow2_rows(back, -w * weights, n))
        main = coeffs[0]
        M2 = (1 << (2 * p2.b_prime)) + 1
        if self.use_crt:
            full = crt_recombine(coeffs[1], main, p2.b_prime)
            span = M2 * ((1 << p2.b_prime) + 1)
        else:
            full, span = main, M2
        signed = np.where(full > span // 2, full - span, full)
        acc = np.zeros(signed.shape[0], dtype=object)
        for j in range(p2.b_prime - 1, -1, -1):
            acc = (acc << p2.l_tilde_prime) + signed[:, j]
        return acc % self.M1


@lru_cache(maxsize=64)
def _engine(p1: Level1Params, p2: Level2Params | None, use_crt: bool = True) -> _Engine:
    return _Engine(p1, p2, use_crt)


@dataclass
class PreparedConstant:
    """Transforms of a fixed operand, computed once classically."""

    value: int
    spectrum: np.ndarray
    level2: list[np.ndarray] | None


def prepare_constant(c: int, p1: Level1Params, p2: Level2Params | None = None, use_crt: bool = True) -> PreparedConstant:
    eng = _engine(p1, p2, use_crt)
    freq = eng.spectrum(c)
    return PreparedConstant(c, freq, eng.level2_spectra(freq) if p2 is not None else None)


def _check_operand(x: int, L: int) -> None:
    if not 0 <= x < (1 << L):
        raise ParameterError(f"operand must lie in [0, 2**{L})")


def _ledgers(eng: _Engine) -> tuple[GarbageLedger, ResourceLedger]:
    """Garbage and operation counts of one simple multiplication."""
    p1, p2 = eng.p1, eng.p2
    cost = ResourceLedger(simple_multiplications=1, executed_multiplications=1, fft1=2, pointwise=p1.b)
    garbage = GarbageLedger()
    garbage.push("p_tilde", p1.b)
    if p2 is not None:
        cost.fft2 += 2 * p1.b
        cost.mu += p1.b * p2.b_prime
        if eng.use_crt:
            cost.fft2_companion += 2 * p1.b
            cost.mu_companion += p1.b * p2.b_prime
        garbage.push("lower_level", p1.b * p2.b_prime)
    garbage.push("p_tilde_times_A", p1.b)
    return garbage, cost


def _multiply(
    a: int, const: PreparedConstant, p1: Level1Params, p2: Level2Params | None, use_crt: bool = True
) -> tuple[int, GarbageLedger, ResourceLedger]:
    _check_operand(a, p1.L)
    eng = _engine(p1, p2, use_crt)
    freq = eng.spectrum(a)
    if p2 is None:
        prod = freq * const.spectrum % eng.M1
    else:
        prod = eng.pointwise2(eng.level2_spectra(freq), const.level2)
    garbage, cost = _ledgers(eng)
    return eng.assemble(prod), garbage, cost


def multiply_rows(
    xs: Sequence[int], cs: Sequence[int], p1: Level1Params, p2: Level2Params | None = None, use_crt: bool = True
) -> tuple[list[int], ResourceLedger]:
    """Products ``xs[i] * cs[i]`` with every pair running through the same transforms at once.

    Returns the products and the cost of a single product.
    """
    if len(xs) != len(cs):
        raise ParameterError("operand lists differ in length")
    for v in (*xs, *cs):
        _check_operand(int(v), p1.L)
    eng = _engine(p1, p2, use_crt)
    if not len(xs):
        return [], _ledgers(eng)[1]
    X, C = eng.spectra(xs), eng.spectra(cs)
    if p2 is None:
        prod = X * C % eng.M1
    else:
        prod = eng.pointwise2(eng.level2_spectra(X), eng.level2_spectra(C)).reshape(X.shape)
    return eng.assemble_rows(prod), _ledgers(eng)[1]


def multiply_1level(a: int, b: int, params: Level1Params) -> tuple[int, GarbageLedger, ResourceLedger]:
    """``a * b`` through one ring transform; ``b`` plays the precomputed operand."""
    _check_operand(b, params.L)
    const = prepare_constant(b, params)
    product, garbage, cost = _multiply(a, const, params, None)
    cost.precomputed_fft1 += 1
    return product, garbage, cost


def multiply_2level(
    a: int, b: int, p1: Level1Params, p2: Level2Params | None = None, use_crt: bool = True
) -> tuple[int, GarbageLedger, ResourceLedger]:
    """``a * b`` with the pointwise products done by negacyclic transforms.

    ``use_crt=False`` skips the companion transform even where the level-2
    ring is too small; products then come out wrong, which is useful only
    as a negative control.
    """
    _check_operand(b, p1.L)
    p2 = p2 or select_level2(p1.l_tilde)
    const = prepare_constant(b, p1, p2, use_crt)
    product, garbage, cost = _multiply(a, const, p1, p2, use_crt)
    cost.precomputed_fft1 += 1
    return product, garbage, cost


SIMPLE_MULTIPLICATIONS_PER_MODMUL = 8


def reciprocal(A: int, N: int, L: int) -> int:
    """Fixed-point ``A / N`` with ``L`` fractional bits, rounded down."""
    return (A << L) // N


def modmul_batch(
    ps: Sequence[int], As: Sequence[int], Ns: Sequence[int], L: int, backend: str = "2level"
) -> tuple[list[int], ResourceLedger, list[int]]:
    """:func:`modmul` for many independent instances sharing the bit length ``L``.

    Returns the residues, the cost of one modular multiplication (without
    range corrections) and the number of corrections each instance needed.
    """
    if backend not in ("1level", "2level"):
        raise ParameterError(f"unknown backend {backend!r}")
    if not len(ps) == len(As) == len(Ns):
        raise ParameterError("instance lists differ in length")
    ps, Ns = [int(v) for v in ps], [int(v) for v in Ns]
    As = [int(A) % N if 0 < N else int(A) for A, N in zip(As, Ns)]
    for p, A, N in zip(ps, As, Ns):
        if not 0 < N < (1 << L):
            raise ParameterError("need 0 < N < 2**L")
        if not 0 <= p < N:
            raise ParameterError("need 0 <= p < N")
        if math.gcd(A, N) != 1:
            raise ParameterError("A must be invertible modulo N")
    p1 = select_level1(L)
    p2 = select_level2(p1.l_tilde) if backend == "2level" else None
    A_bar = [reciprocal(A, N, L) for A, N in zip(As, Ns)]
    estimate, per_mult = multiply_rows(ps, A_bar, p1, p2)
    qn, _ = multiply_rows([e >> L for e in estimate], Ns, p1, p2)
    pa, _ = multiply_rows(ps, As, p1, p2)
    results, corrections = [], []
    for x, y, N in zip(pa, qn, Ns):
        r = x - y
        corrections.append(int(r >= N))
        results.append(r - N if r >= N else r)
    cost = per_mult.scaled(SIMPLE_MULTIPLICATIONS_PER_MODMUL)
    cost.executed_multiplications = 3
    return results, cost, corrections


def modmul(p: int, A: int, N: int, L: int, backend: str = "2level") -> tuple[int, ResourceLedger, GarbageLedger]:
    """``p * A mod N`` as ``p*A - N*floor(p * A_bar / 2**L)`` plus at most one ``-N`` correction.

    The reversible form runs the product chain forward, copies the result
    and runs it back, then repeats with ``A**-1 mod N`` to clear ``p``; the
    returned cost counts those eight simple multiplications.  The garbage
    ledger comes back empty because every forward product is paired with
    its uncompute.
    """
    (r,), cost, (corrections,) = modmul_batch([p], [A], [N], L, backend)
    p1 = select_level1(L)
    eng = _engine(p1, select_level2(p1.l_tilde) if backend == "2level" else None)
    garbage = GarbageLedger()
    for _ in range(SIMPLE_MULTIPLICATIONS_PER_MODMUL // 2):
        garbage.merge(_ledgers(eng)[0])
    # the second half of the eight products uncomputes the first half
    for _ in range(SIMPLE_MULTIPLICATIONS_PER_MODMUL // 2):
        garbage.release(_ledgers(eng)[0])
    cost.range_corrections = corrections
    return r, cost, garbage
