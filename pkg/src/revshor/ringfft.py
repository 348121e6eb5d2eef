"""Arithmetic in Z/(2^n+1), the ring FFT, and reversible butterflies.

Value-level functions work on plain Python integers in the canonical range
``[0, M)``.  The circuit builders at the bottom realise one FFT butterfly
``(a, b) -> ((a + b) mod M, (a - b) * 2**m mod M)`` over the NOT/CNOT/Toffoli
alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import adders
from .adders import AdditionLayout, ParameterError
from .revsim import Circuit, CircuitBuilder, Register


@dataclass(frozen=True)
class RingModulus:
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("exponent n must be at least 1")

    @property
    def M(self) -> int:
        return (1 << self.n) + 1


@dataclass(frozen=True)
class FftPlan:
    """Transform of length ``N`` over ``Z/M`` with root ``omega``.

    Any positive length can be checked with :func:`validate_root`; the fast
    transforms additionally need ``N`` to be a power of two.
    """

    N: int
    M: int
    omega: int

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ParameterError("transform length must be positive")
        if self.M < 2:
            raise ParameterError("modulus must be at least 2")

    @classmethod
    def for_ring(cls, ring: RingModulus, N: int, omega_log2: int) -> "FftPlan":
        return cls(N, ring.M, pow(2, omega_log2, ring.M))

    @property
    def levels(self) -> int:
        if self.N & (self.N - 1):
            raise ParameterError("levels are defined for power-of-two lengths only")
        return self.N.bit_length() - 1

    @property
    def omega_log2(self) -> int | None:
        w = self.omega
        return w.bit_length() - 1 if w > 0 and w & (w - 1) == 0 else None

    @property
    def ring(self) -> RingModulus | None:
        n = (self.M - 1).bit_length() - 1
        return RingModulus(n) if n >= 1 and (1 << n) + 1 == self.M else None

    @property
    def omega_inv(self) -> int:
        return pow(self.omega, self.N - 1, self.M)


def validate_root(plan: FftPlan) -> bool:
    """Check ``omega**N == 1`` and that every non-trivial geometric sum vanishes."""
    M, w, N = plan.M, plan.omega % plan.M, plan.N
    if pow(w, N, M) != 1 % M:
        return False
    for p in range(1, N):
        step = pow(w, p, M)
        acc, term = 0, 1
        for _ in range(N):
            acc += term
            term = term * step % M
        if acc % M:
            return False
    return True


def ring_mul_pow2(x: int, m: int, ring: RingModulus) -> int:
    """``x * 2**m mod (2**n + 1)`` by cutting ``x * 2**m`` into n-bit pieces
    and summing them with alternating signs."""
    n, M = ring.n, ring.M
    y = x << m
    mask = (1 << n) - 1
    acc, sign = 0, 1
    while y:
        acc += sign * (y & mask)
        y >>= n
        sign = -sign
    return acc % M


def _mul_pow2_fast(x: int, s: int, n: int, M: int) -> int:
    """Same map as :func:`ring_mul_pow2` for ``0 <= x < M`` in at most two pieces."""
    s %= 2 * n
    if s >= n:
        s -= n
        v = x << s
        r = (v >> n) - (v & ((1 << n) - 1))
    else:
        v = x << s
        r = (v & ((1 << n) - 1)) - (v >> n)
    return r % M


def _bit_reverse(v: list[int]) -> list[int]:
    N = len(v)
    bits = N.bit_length() - 1
    out = [0] * N
    for i, val in enumerate(v):
        r = int(f"{i:0{bits}b}"[::-1], 2) if bits else 0
        out[r] = val
    return out


def _transform(v: Sequence[int], N: int, M: int, omega: int) -> list[int]:
    """Decimation-in-frequency butterflies followed by index bit reversal."""
    if N & (N - 1):
        raise ParameterError("the fast transform needs a power-of-two length")
    if len(v) != N:
        raise ParameterError(f"vector length {len(v)} does not match transform length {N}")
    a = [x % M for x in v]
    ring_n = (M - 1).bit_length() - 1
    pow2 = (1 << ring_n) + 1 == M and omega > 0 and omega & (omega - 1) == 0
    e = omega.bit_length() - 1 if pow2 else 0
    half = N // 2
    stride = 1  # omega power step of the current level
    while half >= 1:
        for start in range(0, N, 2 * half):
            for j in range(half):
                i, k = start + j, start + j + half
                u, w = a[i], a[k]
                a[i] = (u + w) % M
                d = (u - w) % M
                if pow2:
                    a[k] = _mul_pow2_fast(d, e * j * stride, ring_n, M)
                else:
                    a[k] = d * pow(omega, j * stride, M) % M
        half //= 2
        stride *= 2
    return _bit_reverse(a)


def fft(v: Sequence[int], plan: FftPlan) -> list[int]:
    """Unnormalised DFT ``out[k] = sum_m omega**(k*m) v[m] mod M`` in natural order."""
    return _transform(v, plan.N, plan.M, plan.omega)


def ifft(v: Sequence[int], plan: FftPlan) -> list[int]:
    """Inverse of :func:`fft`: root ``omega**-1`` then a factor ``N**-1``."""
    try:
        n_inv = pow(plan.N, -1, plan.M)
    except ValueError as exc:
        raise ParameterError("transform length is not invertible modulo M") from exc
    out = _transform(v, plan.N, plan.M, plan.omega_inv)
    return [x * n_inv % plan.M for x in out]


def dft_direct(v: Sequence[int], plan: FftPlan) -> list[int]:
    """Quadratic-time reference transform."""
    M, w, N = plan.M, plan.omega, plan.N
    return [sum(pow(w, k * m, M) * v[m] for m in range(N)) % M for k in range(N)]


class PaddingError(ValueError):
    """The inputs of a convolution were not zero in their upper halves."""


def convolve_via_fft(a: Sequence[int], b: Sequence[int], plan: FftPlan, allow_wrap: bool = False) -> list[int]:
    """Acyclic convolution modulo ``M`` through the convolution theorem.

    Both inputs must be zero in their upper halves; otherwise the product
    wraps around cyclically, which is only returned with ``allow_wrap``.
    """
    N = plan.N
    if not allow_wrap and (any(x % plan.M for x in a[N // 2:]) or any(x % plan.M for x in b[N // 2:])):
        raise PaddingError("upper halves must be zero for an acyclic convolution")
    fa, fb = fft(a, plan), fft(b, plan)
    return ifft([x * y % plan.M for x, y in zip(fa, fb)], plan)


def negacyclic_multiply(a: Sequence[int], b: Sequence[int], plan: FftPlan, psi: int) -> list[int]:
    """Product modulo ``X**N + 1``: weight by ``psi**k``, convolve cyclically,
    then unweight by ``psi**-k`` (the ``N**-1`` is inside :func:`ifft`)."""
    M, N = plan.M, plan.N
    if psi * psi % M != plan.omega % M:
        raise ParameterError("psi must square to omega")
    if len(a) != N or len(b) != N:
        raise ParameterError("operands must have transform length")
    psi_inv = pow(psi, -1, M)
    wa, wb, p = [], [], 1
    for k in range(N):
        wa.append(a[k] * p % M)
        wb.append(b[k] * p % M)
        p = p * psi % M
    fa, fb = fft(wa, plan), fft(wb, plan)
    c = ifft([x * y % M for x, y in zip(fa, fb)], plan)
    out, p = [], 1
    for k in range(N):
        out.append(c[k] * p % M)
        p = p * psi_inv % M
    return out


def crt_recombine(x1: int, x2: int, n: int) -> int:
    """Unique ``x < (2**2n + 1)(2**n + 1)`` with ``x = x1 mod 2**n+1`` and ``x = x2 mod 2**2n+1``.

    Since ``2**2n + 1 = 2 (mod 2**n + 1)`` and ``2**-1 = -2**(n-1)`` there,
    the correction factor is ``2**(n-1) * (x2 - x1) mod (2**n + 1)``.
    """
    small, big = (1 << n) + 1, (1 << (2 * n)) + 1
    k = ((x2 - x1) << (n - 1)) % small
    return x2 % big + big * k


# ---------------------------------------------------------------------------
# reversible butterflies
# ---------------------------------------------------------------------------

@dataclass
class ButterflyWires:
    total: list[int]  # (a + b) mod M
    diff: list[int]  # (a - b) * 2**m mod M
    garbage: list[int]


def _rotation(low: list[int], m_rot: int) -> list[int]:
    n = len(low)
    return [low[(p - m_rot) % n] for p in range(n)]


def emit_butterfly(bld: CircuitBuilder, a: Sequence[int], b: Sequence[int], n: int, m: int) -> ButterflyWires:
    """Exact butterfly on ``(n+1)``-bit registers holding residues below ``2**n + 1``.

    1. ``b <- a + b`` (one wire wider), then ``2a - (a + b)`` on the wires of
       ``a`` shifted up by one fresh low wire gives ``a - b``.
    2. Sum: subtract ``M``, copy the sign into ``g``, add ``M`` back when
       ``g`` is set.  Difference: copy the sign into ``f`` and add ``M`` when
       it is set.  Both top wires return to zero.  The low bits of the two
       results differ exactly by ``f XOR NOT g``, which clears ``f``.
    3. Multiplying by ``2**m``: the bit of place value ``2**n`` is set aside;
       the low ``n`` wires are rotated, the wrapped field is complemented (the
       other field for ``m >= n``), a constant restores the value, and ``M``
       is added when the result went negative.  The set-aside bit then XORs
       the image of ``2**n`` into the result.
    """
    a, b = list(a), list(b)
    if len(a) != n + 1 or len(b) != n + 1:
        raise ParameterError("butterfly registers need n+1 wires")
    M = (1 << n) + 1
    m %= 2 * n
    garbage: list[int] = []

    top = bld.alloc_wire("sum_top")
    adders.emit_qq_add(bld, a, b, carry_out=top)
    total = b + [top]
    zero = bld.alloc_wire("dbl_low")
    diff = [zero] + a
    adders.emit_qq_sub(bld, total, diff)

    w2 = n + 2
    adders.emit_const_add(bld, total, (-M) % (1 << w2))
    g = bld.alloc_wire("g")
    bld.cx(total[-1], g)
    adders.emit_const_add(bld, total, M, g)
    bld.free(total[-1])
    total = total[:-1]
    garbage.append(g)

    f = bld.alloc_wire("f_minus")
    bld.cx(diff[-1], f)
    adders.emit_const_add(bld, diff, M, f)
    bld.free(diff[-1])
    diff = diff[:-1]
    bld.cx(total[0], f)
    bld.cx(diff[0], f)
    bld.cx(g, f)
    bld.x(f)
    bld.free(f)

    if m == 0:
        return ButterflyWires(total, diff, garbage)

    h = diff[n]
    garbage.append(h)
    negate = m >= n
    m_rot = m - n if negate else m
    rot = _rotation(diff[:n], m_rot)
    if negate:
        field, K = rot[m_rot:], (1 << n) - (1 << m_rot)
        image = 1 << m_rot
    else:
        field, K = rot[:m_rot], (1 << m_rot) - 1
        image = M - (1 << m_rot)
    for w in field:
        bld.x(w)
    sign = bld.alloc_wire("shift_sign")
    reg = rot + [sign]
    if K:
        adders.emit_const_add(bld, reg, (-K) % (1 << (n + 1)))
    neg = bld.alloc_wire("shift_neg")
    bld.cx(sign, neg)
    adders.emit_const_add(bld, reg, M, neg)
    garbage.append(neg)
    for i in range(n + 1):
        if (image >> i) & 1:
            bld.cx(h, reg[i])
    return ButterflyWires(total, reg, garbage)


def build_butterfly(a: Register, b: Register, modulus: RingModulus, m: int) -> Circuit:
    bld = CircuitBuilder()
    bld.adopt(a, b)
    out = emit_butterfly(bld, list(a), list(b), modulus.n, m)
    bld.mark_garbage(out.garbage)
    bld.name(Register("sum", tuple(out.total)))
    bld.name(Register("diff", tuple(out.diff)))
    return bld.build()


def butterfly_value(a: int, b: int, modulus: RingModulus, m: int) -> tuple[int, int]:
    M = modulus.M
    return (a + b) % M, ring_mul_pow2((a - b) % M, m % (2 * modulus.n), modulus)


CORRECTION_BITS = 40


def emit_butterfly_parallel(
    bld: CircuitBuilder,
    a: Sequence[int],
    b: Sequence[int],
    n: int,
    m: int,
    layout: AdditionLayout,
    correction_bits: int = CORRECTION_BITS,
) -> ButterflyWires:
    """Butterfly on ``n``-bit registers assuming residues below ``2**n``.

    Additions and subtractions use carry selection, and every ``+-1``
    correction only touches the ``correction_bits`` lowest wires; both
    shortcuts fail with probability about ``2**-correction_bits``.  Two wires
    of garbage remain: the carry of ``a + b`` and the sign of the shifted
    difference.
    """
    a, b = list(a), list(b)
    if n <= correction_bits:
        raise ParameterError(f"n must exceed {correction_bits}; use the exact butterfly")
    if len(a) != n or len(b) != n:
        raise ParameterError("relaxed butterfly registers need n wires")
    m %= 2 * n
    cb = correction_bits
    garbage: list[int] = []

    total = adders.emit_carry_select_qq_add(bld, a, b, layout, carry_out=True, name="bf_sum")
    zero = bld.alloc_wire("dbl_low")
    dbl = [zero] + a
    diff = adders.emit_carry_select_qq_sub(bld, total, dbl, layout, name="bf_diff")

    hi = total[n]
    lo = total[:n]
    adders.emit_const_add(bld, lo[:cb], (1 << cb) - 1, hi)
    garbage.append(hi)

    s = diff[n]
    low = diff[:n]
    adders.emit_const_add(bld, low[:cb], 1, s)
    bld.cx(lo[0], s)
    bld.cx(low[0], s)
    bld.cx(hi, s)
    bld.free(s)

    if m == 0:
        return ButterflyWires(lo, low, garbage)

    negate = m >= n
    m_rot = m - n if negate else m
    rot = _rotation(low, m_rot)
    if negate:
        field, K = rot[m_rot:], (1 << n) - (1 << m_rot)
    else:
        field, K = rot[:m_rot], (1 << m_rot) - 1
    for w in field:
        bld.x(w)
    shifted = adders.emit_carry_select_const_add_unconditional(
        bld, rot, ((1 << n) - K) % (1 << n), layout, carry_out=True, name="bf_shift"
    )
    carry = shifted[n]
    adders.emit_const_add(bld, shifted[:cb], 1, (carry, False))
    garbage.append(carry)
    return ButterflyWires(lo, shifted[:n], garbage)


def build_butterfly_parallel(
    a: Register, b: Register, modulus: RingModulus, m: int, layout: AdditionLayout | None = None
) -> Circuit:
    n = modulus.n
    layout = layout or adders.butterfly_layout(n)
    bld = CircuitBuilder()
    bld.adopt(a, b)
    out = emit_butterfly_parallel(bld, list(a), list(b), n, m, layout)
    bld.mark_garbage(out.garbage)
    bld.name(Register("sum", tuple(out.total)))
    bld.name(Register("diff", tuple(out.diff)))
    return bld.build()


# ---------------------------------------------------------------------------
# batched transforms for the multipliers
# ---------------------------------------------------------------------------

def mul_pow2_rows(x, shifts, n: int):
    """Elementwise ``x * 2**shifts mod (2**n + 1)`` on object arrays of residues."""

    M = (1 << n) + 1
    mask = (1 << n) - 1
    s = np.asarray(shifts, dtype=np.int64) % (2 * n)
    negate = s >= n
    s = np.where(negate, s - n, s).astype(object)
    v = x << s
    r = ((v & mask) - (v >> n)) % M
    return np.where(negate, (M - r) % M, r)


def transform_rows(X, n: int, omega_log2: int, inverse: bool = False):
    """Transform every row of an object array over ``Z/(2**n + 1)`` with root ``2**omega_log2``.

    Same result per row as :func:`fft` (or :func:`ifft` with ``inverse``) for
    the matching :class:`FftPlan`; all butterflies of one level run as a
    single array operation.
    """

    M = (1 << n) + 1
    rows, N = X.shape
    if N & (N - 1):
        raise ParameterError("transform length must be a power of two")
    e = (2 * n - omega_log2) % (2 * n) if inverse else omega_log2
    a = X % M
    half, stride = N // 2, 1
    while half >= 1:
        blk = a.reshape(rows, N // (2 * half), 2, half)
        u, w = blk[:, :, 0, :], blk[:, :, 1, :]
        top = (u + w) % M
        d = (u - w) % M
        bottom = mul_pow2_rows(d, e * stride * np.arange(half), n)
        a = np.stack([top, bottom], axis=2).reshape(rows, N)
        half //= 2
        stride *= 2
    levels = N.bit_length() - 1
    perm = [int(f"{i:0{levels}b}"[::-1], 2) if levels else 0 for i in range(N)]
    out = np.empty_like(a)
    out[:, perm] = a
    if inverse:
        out = mul_pow2_rows(out, np.full(N, 2 * n - levels), n)
    return out
