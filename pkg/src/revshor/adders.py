"""Addition networks: constant, modular, quantum+quantum and carry-select.

Every ``emit_*`` function appends gates to a :class:`CircuitBuilder` so that
larger circuits can be composed; the ``build_*`` functions wrap them into a
stand-alone :class:`Circuit` whose inputs are the registers passed in.

Conventions shared by all builders:

* an *enable* is either ``None`` (unconditional), a wire id (active on 1) or
  a ``(wire, positive)`` pair;
* negative values use two's complement at the register width;
* carries live on fresh ancillas that are uncomputed and released before the
  builder returns, so the only wires left non-zero are the outputs and any
  wires explicitly marked as garbage.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .revsim import Circuit, CircuitBuilder, Register, StructuralError

Enable = Union[None, int, tuple]
Literal = Union[None, tuple]  # None means "known zero"; otherwise (wire, positive)


class ParameterError(ValueError):
    """Raised when a builder gets numeric parameters outside its domain."""


def _enable(enable: Enable) -> tuple[int, bool] | None:
    if enable is None:
        return None
    if isinstance(enable, tuple):
        return (int(enable[0]), bool(enable[1]))
    return (int(enable), True)


def _wires(reg: Register | Sequence[int]) -> list[int]:
    return list(reg.wires) if isinstance(reg, Register) else list(reg)


def _bits(value: int, width: int) -> list[int]:
    return [(value >> i) & 1 for i in range(width)]


# ---------------------------------------------------------------------------
# per-place adder used by the constant and modular adders
# ---------------------------------------------------------------------------

def _emit_place_adder(
    bld: CircuitBuilder,
    s: list[int],
    addend: list,
    enable: tuple[int, bool] | None,
    carry_in: int | None = None,
    carry_out: int | None = None,
) -> None:
    """Add a bit pattern to ``s`` in place.

    ``addend[i]`` is 0, 1, or a ``(wire, positive)`` literal.  The forward
    sweep always adds; with an enable, the backward sweep restores each sum
    bit whenever the enable is off, so a disabled call leaves ``s`` alone.
    """
    w = len(s)
    if enable is not None and carry_out is not None:
        raise ParameterError("a kept carry-out is only defined for unconditional addition")
    own_cin = carry_in is None
    c = [bld.alloc_wire("cin") if own_cin else carry_in]
    inner = bld.alloc("carry", w - 1).wires if w > 1 else ()
    c.extend(inner)
    if carry_out is not None:
        c.append(carry_out)

    carry_ops: list[list[tuple]] = []
    for i in range(w):
        q = addend[i]
        if q == 1:
            bld.x(s[i])
        elif q != 0:
            bld.cx(q[0], c[i], q[1])
        bld.cx(c[i], s[i])
        ops: list[tuple] = []
        if i + 1 < len(c):
            nxt = c[i + 1]
            if q == 0:
                ops = [("ccx", c[i], s[i], nxt, True, False)]
            elif q == 1:
                ops = [("ccx", s[i], c[i], nxt, True, False), ("x", nxt)]
            else:
                ops = [
                    ("cx", q[0], s[i], q[1]),
                    ("ccx", s[i], c[i], nxt, False, True),
                    ("cx", q[0], s[i], q[1]),
                    ("cx", q[0], nxt, q[1]),
                ]
            _apply(bld, ops)
        carry_ops.append(ops)

    for i in range(w - 1, -1, -1):
        q = addend[i]
        keep = carry_out is not None and i == w - 1
        if not keep:
            _apply(bld, list(reversed(carry_ops[i])))
        if enable is not None:
            ew, ep = enable
            bld.ccx(c[i], ew, s[i], True, not ep)
            if q == 1:
                bld.cx(ew, s[i], not ep)
        if q not in (0, 1):
            bld.cx(q[0], c[i], q[1])

    if inner:
        bld.free(inner)
    if own_cin:
        bld.free(c[0])


def _apply(bld: CircuitBuilder, ops: list[tuple]) -> None:
    for op in ops:
        if op[0] == "x":
            bld.x(op[1])
        elif op[0] == "cx":
            bld.cx(op[1], op[2], op[3])
        else:
            bld.ccx(op[1], op[2], op[3], op[4], op[5])


def emit_const_add(
    bld: CircuitBuilder,
    target: Register | Sequence[int],
    B: int,
    enable: Enable = None,
    carry_in: int | None = None,
    carry_out: int | None = None,
) -> None:
    """``target += B`` modulo ``2**width`` (only when the enable is set)."""
    s = _wires(target)
    if not 0 <= B < (1 << len(s)):
        raise ParameterError(f"constant {B} does not fit in {len(s)} bits")
    _emit_place_adder(bld, s, _bits(B, len(s)), _enable(enable), carry_in, carry_out)


def _standalone(*regs: Register | None) -> CircuitBuilder:
    bld = CircuitBuilder()
    bld.adopt(*[r for r in regs if r is not None])
    return bld


def _enable_register(enable: Enable) -> Register | None:
    e = _enable(enable)
    return None if e is None else Register("enable", (e[0],))


def build_const_adder(target: Register, B: int, enable: Enable = None) -> Circuit:
    """Conditional constant adder; the carry-in is a fresh zero ancilla.

    With an enable this costs ``3*width - 2`` Toffolis: one per carry on the
    way up, one per carry on the way down, and one per place for the
    enable-bar correction of the sum bit.
    """
    bld = _standalone(target, _enable_register(enable))
    emit_const_add(bld, target, B, enable)
    return bld.build()


# ---------------------------------------------------------------------------
# comparison with a constant on the top bits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparePolicy:
    """Compare only the ``t`` most significant bits; ties favour the first operand."""

    t: int
    tie_rule: str = "first-larger"

    def check(self, width: int) -> int:
        if not 1 <= self.t <= width:
            raise ParameterError(f"compared bits t={self.t} outside 1..{width}")
        return self.t

    @classmethod
    def full(cls, width: int) -> "ComparePolicy":
        return cls(width)


def emit_compare_ge(
    bld: CircuitBuilder,
    x: Sequence[int],
    C: int,
    out: int,
    enable: Enable = None,
    invert: bool = False,
) -> None:
    """``out ^= enable AND (x >= C)`` (or its negation with ``invert``).

    The test is the carry out of ``x + (2**t - C)``; the carry chain is built
    on ancillas, used once and then uncomputed.
    """
    x = list(x)
    t = len(x)
    e = _enable(enable)
    if not 0 <= C < (1 << t):
        raise ParameterError("comparison constant out of range")
    if C == 0:
        if not invert:
            bld.ctrl(e, out)
        return
    K = (1 << t) - C
    start = bld.mark()
    lit: Literal = None
    for i in range(t):
        k = (K >> i) & 1
        if lit is None:
            lit = (x[i], True) if k else None
            continue
        nw = bld.alloc_wire("cmp")
        if k:
            bld.ccx(x[i], lit[0], nw, False, not lit[1])
            bld.x(nw)
        else:
            bld.ccx(x[i], lit[0], nw, True, lit[1])
        lit = (nw, True)
    chain_end = bld.mark()
    assert lit is not None
    bld.ctrl2(e, (lit[0], lit[1] != invert), out)
    bld.uncompute(start, chain_end)


def _emit_compare_full(bld: CircuitBuilder, x: Sequence[int], C: int, out: int, enable: Enable) -> None:
    """Helper for callers holding a constant wider than ``x``."""
    emit_compare_ge(bld, x, C, out, enable)


# ---------------------------------------------------------------------------
# modular constant adder
# ---------------------------------------------------------------------------

def emit_mod_const_add(
    bld: CircuitBuilder,
    target: Register | Sequence[int],
    B: int,
    N: int,
    policy: ComparePolicy | None = None,
    enable: Enable = None,
) -> None:
    """``s -> (s + B) mod N`` using a truncated comparison.

    1. ``cond = enable AND (s >= N - B)`` on the top ``t`` bits.
    2. Add ``B`` where ``cond`` is clear and ``2**n + B - N`` where it is set;
       the places where the two constants differ take ``cond`` itself as the
       added bit.  Working modulo ``2**n`` drops the place-value ``2**n`` bit.
    3. ``cond`` is uncomputed from the result as ``enable AND (s' < B)``.
    """
    s = _wires(target)
    n = len(s)
    if not 0 <= B < N:
        raise ParameterError("need 0 <= B < N")
    if N >= (1 << n):
        raise ParameterError(f"modulus {N} does not fit in {n} bits")
    policy = policy or ComparePolicy.full(n)
    t = policy.check(n)
    shift = n - t
    top = s[shift:]
    e = _enable(enable)
    cond = bld.alloc_wire("cond")
    emit_compare_ge(bld, top, (N - B) >> shift, cond, e)
    K = (1 << n) + B - N
    addend = []
    for i in range(n):
        bi, ki = (B >> i) & 1, (K >> i) & 1
        if bi == ki:
            addend.append(bi)
        else:
            addend.append((cond, bool(ki)))
    _emit_place_adder(bld, s, addend, e)
    emit_compare_ge(bld, top, B >> shift, cond, e, invert=True)
    bld.free(cond)


def build_modular_const_adder(
    target: Register, B: int, N: int, policy: ComparePolicy | None = None, enable: Enable = None
) -> Circuit:
    bld = _standalone(target, _enable_register(enable))
    emit_mod_const_add(bld, target, B, N, policy, enable)
    return bld.build()


def mod_add_value(s: int, B: int, N: int, width: int, t: int | None = None, enable: bool = True) -> tuple[int, int]:
    """Value-level model of :func:`emit_mod_const_add`.

    Returns ``(new_s, leftover)`` where ``leftover`` is the condition bit
    that the circuit would fail to clear (0 when the comparisons are right).
    """
    if not enable:
        return s, 0
    t = width if t is None else t
    shift = width - t
    mask = (1 << width) - 1
    cond = int((s >> shift) >= ((N - B) >> shift))
    new = (s + B - N * cond) & mask
    cond ^= int(not ((new >> shift) >= (B >> shift)))
    return new, cond


# ---------------------------------------------------------------------------
# quantum + quantum addition
# ---------------------------------------------------------------------------

def emit_qq_add(
    bld: CircuitBuilder,
    a: Register | Sequence[int],
    b: Register | Sequence[int],
    carry_out: int | None = None,
) -> None:
    """``(a, b) -> (a, a + b)``; ``2n - 2`` Toffolis (one more with a carry-out).

    Carries are majorities ``c[i+1] = maj(a[i], b[i], c[i])``, each taking one
    Toffoli after ``a[i]`` is XORed into ``b[i]`` and ``c[i]``.  The downward
    sweep uncomputes them and finishes the sum bits.
    """
    a, b = _wires(a), _wires(b)
    if len(a) != len(b):
        raise StructuralError("operand widths differ")
    w = len(a)
    inner = list(bld.alloc("carry", w - 1).wires) if w > 1 else []
    c = [None] + inner + ([carry_out] if carry_out is not None else [])
    for i in range(w):
        bld.cx(a[i], b[i])
    ops_at: list[list[tuple]] = []
    for i in range(w):
        ops: list[tuple] = []
        if i + 1 < len(c):
            nxt = c[i + 1]
            if i == 0:
                ops = [("ccx", a[0], b[0], nxt, True, False)]
            else:
                ops = [
                    ("cx", a[i], c[i], True),
                    ("ccx", b[i], c[i], nxt, True, True),
                    ("cx", a[i], nxt, True),
                    ("cx", a[i], c[i], True),
                ]
            _apply(bld, ops)
        ops_at.append(ops)
    for i in range(w - 1, -1, -1):
        if not (carry_out is not None and i == w - 1):
            _apply(bld, list(reversed(ops_at[i])))
        if i >= 1:
            bld.cx(c[i], b[i])
    if inner:
        bld.free(inner)


def emit_qq_sub(
    bld: CircuitBuilder,
    a: Register | Sequence[int],
    b: Register | Sequence[int],
    borrow_out: int | None = None,
) -> None:
    """``(a, b) -> (a, b - a)`` as ``NOT(NOT b + a)``; ``borrow_out`` flags ``a > b``."""
    b_w = _wires(b)
    for w in b_w:
        bld.x(w)
    emit_qq_add(bld, a, b_w, borrow_out)
    for w in b_w:
        bld.x(w)


def build_qq_adder(a: Register, b: Register) -> Circuit:
    if a.width != b.width:
        raise StructuralError("operand widths differ")
    bld = _standalone(a, b)
    emit_qq_add(bld, a, b)
    return bld.build()


def build_qq_subtractor(a: Register, b: Register) -> Circuit:
    if a.width != b.width:
        raise StructuralError("operand widths differ")
    bld = _standalone(a, b)
    emit_qq_sub(bld, a, b)
    return bld.build()


# ---------------------------------------------------------------------------
# carry-select addition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdditionLayout:
    """Block structure of the carry-select adder.

    ``L`` bits are cut into blocks of ``l`` bits; ``b_dprime`` consecutive
    blocks form a superblock of ``superblock_len`` bits, and there are
    ``b_prime`` superblocks.
    """

    L: int
    b_prime: int
    b_dprime: int
    l: int
    superblock_len: int

    def __post_init__(self) -> None:
        if self.b_dprime < 1 or self.l < 1:
            raise ParameterError("block sizes must be positive")
        if self.superblock_len != self.b_dprime * self.l:
            raise ParameterError("superblock_len must equal b_dprime * l")
        if self.b_prime * self.superblock_len < self.L:
            raise ParameterError("layout does not cover L bits")

    @classmethod
    def from_blocks(cls, L: int, b_dprime: int, l: int) -> "AdditionLayout":
        m = b_dprime * l
        return cls(L, -(-L // m), b_dprime, l, m)

    @property
    def blocks(self) -> int:
        """Total block count ``b = b' * b''``."""
        return self.b_prime * self.b_dprime

    def block_ranges(self, width: int | None = None) -> list[tuple[int, int]]:
        width = self.L if width is None else width
        return [(lo, min(lo + self.l, width)) for lo in range(0, width, self.l)]

    def depth_formula(self) -> int:
        return 11 * self.l + 12 * self.b_dprime

    def count_formula(self) -> int:
        return 11 * self.L + 12 * self.blocks


def target_superblock_len(L: int) -> int:
    return round(3 + 3 * math.log2(L))


def choose_addition_layout(L: int, epsilon: float = 0.01) -> AdditionLayout:
    """Layout following the tabulated convention.

    The target superblock length is ``m = round(3 + 3*log2 L)``.  Blocks per
    superblock ``b'' = floor(sqrt m)`` and block length ``l = round(m / b'')``
    keep the two nearly equal, which is where ``11*l + 12*b''`` is smallest
    for a product close to ``m``.  The resulting product may fall short of
    ``m`` by less than ``b''/2`` (for example 7*7 = 49 for a target of 50).
    """
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    if L < 2:
        raise ParameterError("L must be at least 2")
    if not (1 << 9) <= L <= (1 << 25):
        warnings.warn(f"L={L} is outside 2^9..2^25; extrapolating the layout rule", stacklevel=2)
    m = max(1, target_superblock_len(L))
    b_dprime = max(1, math.isqrt(m))
    l = max(1, round(m / b_dprime))
    return AdditionLayout.from_blocks(L, b_dprime, l)


def butterfly_layout(n: int, bits: int = 40) -> AdditionLayout:
    """Layout whose superblocks span about ``bits`` bits (carry guesses fail at ~2**-bits)."""
    b_dprime = max(1, math.isqrt(bits))
    l = max(1, round(bits / b_dprime))
    return AdditionLayout.from_blocks(n, b_dprime, l)


def carry_select_add_value(x: int, y: int, width: int, layout: AdditionLayout, carry_out: bool = False) -> int:
    """Value-level model: each superblock takes the carry the previous superblock
    would produce on its own (incoming carry guessed 0)."""
    m = layout.superblock_len
    result, guess = 0, 0
    top_carry = 0
    for lo in range(0, width, m):
        span = min(m, width - lo)
        smask = (1 << span) - 1
        xs, ys = (x >> lo) & smask, (y >> lo) & smask
        total = xs + ys + guess
        result |= (total & smask) << lo
        top_carry = total >> span
        guess = (xs + ys) >> span
    if carry_out:
        result |= top_carry << width
    return result


BlockAdd = Callable[[CircuitBuilder, int, int, int], None]


def _emit_cs_run(
    bld: CircuitBuilder,
    src: list[int],
    block_add: BlockAdd,
    dst: list[int],
    layout: AdditionLayout,
    enable: tuple[int, bool] | None,
    dst_carry: int | None = None,
) -> None:
    """``dst ^= enable ? carry_select(src + addend) : 0``; ``src`` is restored.

    ``block_add(bld, lo, hi, carry_wire)`` adds the addend's block ``lo:hi``
    into ``src`` in place and leaves that block's carry out on ``carry_wire``.
    """
    width = len(src)
    ranges = layout.block_ranges(width)
    nb = len(ranges)
    start = bld.mark()

    # g0: every block summed with incoming carry 0, in place
    co0 = bld.alloc("g0_carry", nb).wires
    for j, (lo, hi) in enumerate(ranges):
        block_add(bld, lo, hi, co0[j])

    # g1 = g0 + 1 per block; prop[j] flags an all-ones g0 block
    g1: list[list[int]] = []
    prop = bld.alloc("g1_carry", nb).wires
    for j, (lo, hi) in enumerate(ranges):
        g0 = src[lo:hi]
        blk = list(bld.alloc("g1", hi - lo).wires)
        bld.x(blk[0])
        for i in range(len(blk) - 1):
            bld.ccx(blk[i], g0[i], blk[i + 1])
            bld.cx(g0[i], blk[i])
        bld.ccx(blk[-1], g0[-1], prop[j])
        bld.cx(g0[-1], blk[-1])
        g1.append(blk)

    def chain(first: Literal, js: range, name: str) -> tuple[list[Literal], Literal]:
        """Carries into each block of ``js`` given the carry into the first one."""
        lits = [first]
        cur = first
        for j in js:
            if cur is None:
                nxt: Literal = (co0[j], True)
            else:
                wire = bld.alloc_wire(name)
                bld.cx(co0[j], wire)
                bld.ccx(cur[0], prop[j], wire, cur[1], True)
                nxt = (wire, True)
            lits.append(nxt)
            cur = nxt
        return lits[:-1], lits[-1]

    # p: carries assuming each superblock starts with carry 0
    sb = layout.b_dprime
    supers = [range(s, min(s + sb, nb)) for s in range(0, nb, sb)]
    provisional_out: list[Literal] = []
    f: list[Literal] = [None] * nb
    for s_idx, js in enumerate(supers):
        lits, out = chain(None, js, "p")
        provisional_out.append(out)
        if s_idx == 0:
            for j, lit in zip(js, lits):
                f[j] = lit
    # f: each later superblock starts from the previous provisional carry out
    final_out: Literal = provisional_out[0]
    for s_idx, js in enumerate(supers):
        if s_idx == 0:
            continue
        lits, out = chain(provisional_out[s_idx - 1], js, "f")
        for j, lit in zip(js, lits):
            f[j] = lit
        final_out = out

    # selectors and copy
    if enable is not None:
        sel = []
        for j in range(nb):
            ej = bld.alloc_wire("e_copy")
            bld.cx(enable[0], ej, enable[1])
            lit = f[j]
            if lit is None:
                sel.append((None, ej))
                continue
            f1 = bld.alloc_wire("f1")
            f2 = bld.alloc_wire("f2")
            bld.ccx(lit[0], ej, f1, lit[1], True)
            bld.ccx(lit[0], ej, f2, not lit[1], True)
            sel.append((f1, f2))
        copy_start = bld.mark()
        for j, (lo, hi) in enumerate(ranges):
            f1, f2 = sel[j]
            for k, i in enumerate(range(lo, hi)):
                bld.ccx(f2, src[i], dst[i])
            if f1 is not None:
                for k, i in enumerate(range(lo, hi)):
                    bld.ccx(f1, g1[j][k], dst[i])
        if dst_carry is not None:
            raise ParameterError("carry-out is only supported for unconditional runs")
    else:
        copy_start = bld.mark()
        for j, (lo, hi) in enumerate(ranges):
            lit = f[j]
            for k, i in enumerate(range(lo, hi)):
                bld.cx(src[i], dst[i])
            if lit is not None:
                for k, i in enumerate(range(lo, hi)):
                    bld.cx(src[i], g1[j][k])
                    bld.ccx(lit[0], g1[j][k], dst[i], lit[1], True)
                    bld.cx(src[i], g1[j][k])
        if dst_carry is not None:
            last = nb - 1
            bld.cx(co0[last], dst_carry)
            lit = f[last]
            if lit is not None:
                bld.ccx(lit[0], prop[last], dst_carry, lit[1], True)
    copy_end = bld.mark()
    bld.uncompute(start, copy_start)
    del copy_end, final_out


def _const_block_adder(src: list[int], A: int) -> BlockAdd:
    def add(bld: CircuitBuilder, lo: int, hi: int, carry: int) -> None:
        part = (A >> lo) & ((1 << (hi - lo)) - 1)
        _emit_place_adder(bld, src[lo:hi], _bits(part, hi - lo), None, None, carry)

    return add


def _qq_block_adder(x: list[int], src: list[int]) -> BlockAdd:
    def add(bld: CircuitBuilder, lo: int, hi: int, carry: int) -> None:
        emit_qq_add(bld, x[lo:hi], src[lo:hi], carry)

    return add


def _fanout(bld: CircuitBuilder, enable: tuple[int, bool], count: int) -> list[int]:
    copies = list(bld.alloc("e_fan", count).wires)
    for w in copies:
        bld.cx(enable[0], w, enable[1])
    return copies


def emit_carry_select_const_add(
    bld: CircuitBuilder,
    a: Register | Sequence[int],
    A: int,
    enable: Enable,
    layout: AdditionLayout,
) -> None:
    """``a += A`` (mod ``2**width``) when the enable is set, carry-select style.

    First run: ``r = a + A`` on a fresh register.  Second run: ``a ^= r - A``,
    which clears ``a`` when enabled.  A controlled swap then moves the sum
    back into ``a`` so ``r`` returns to zero.
    """
    a = _wires(a)
    width = len(a)
    if layout.b_prime * layout.superblock_len < width:
        raise ParameterError("layout does not cover the register")
    if not 0 <= A < (1 << width):
        raise ParameterError("constant does not fit")
    e = _enable(enable)
    if e is None:
        raise ParameterError("the carry-select constant adder needs an enable wire")
    r = list(bld.alloc("cs_sum", width).wires)
    _emit_cs_run(bld, a, _const_block_adder(a, A), r, layout, e)
    neg = (-A) % (1 << width)
    _emit_cs_run(bld, r, _const_block_adder(r, neg), a, layout, e)
    ranges = layout.block_ranges(width)
    fan = _fanout(bld, e, len(ranges))
    for j, (lo, hi) in enumerate(ranges):
        for i in range(lo, hi):
            bld.cx(r[i], a[i])
            bld.ccx(fan[j], a[i], r[i])
            bld.cx(r[i], a[i])
    for w in fan:
        bld.cx(e[0], w, e[1])
    bld.free(fan)
    bld.free(r)


def build_carry_select_adder(a: Register, A: int, enable: Enable, layout: AdditionLayout) -> Circuit:
    bld = _standalone(a, _enable_register(enable))
    emit_carry_select_const_add(bld, a, A, enable, layout)
    return bld.build()


def emit_carry_select_qq_add(
    bld: CircuitBuilder,
    x: Sequence[int],
    y: Sequence[int],
    layout: AdditionLayout,
    carry_out: bool = False,
    name: str = "cs_qq",
) -> list[int]:
    """``(x, y) -> (x, x + y)`` by carry selection; returns the new wires of the sum.

    The sum lands on a fresh register (one wire wider with ``carry_out``) and
    the wires of ``y`` are cleared and released.
    """
    x, y = list(x), list(y)
    if len(x) != len(y):
        raise StructuralError("operand widths differ")
    width = len(x)
    out = list(bld.alloc(name, width + (1 if carry_out else 0)).wires)
    dst, dco = out[:width], (out[width] if carry_out else None)
    _emit_cs_run(bld, y, _qq_block_adder(x, y), dst, layout, None, dco)
    # clear y: y ^= NOT(NOT(sum) + x), which equals y when the guesses hold
    for w in dst:
        bld.x(w)
    _emit_cs_run(bld, dst, _qq_block_adder(x, dst), y, layout, None)
    for w in dst:
        bld.x(w)
    for w in y:
        bld.x(w)
    bld.free(y)
    return out


def emit_carry_select_qq_sub(
    bld: CircuitBuilder,
    x: Sequence[int],
    y: Sequence[int],
    layout: AdditionLayout,
    borrow_out: bool = False,
    name: str = "cs_diff",
) -> list[int]:
    """``(x, y) -> (x, y - x)`` by carry selection; returns the result wires.

    With ``borrow_out`` the extra top wire is 1 exactly when ``x > y``.
    """
    y = list(y)
    for w in y:
        bld.x(w)
    out = emit_carry_select_qq_add(bld, x, y, layout, borrow_out, name)
    for w in out[: len(y)]:
        bld.x(w)
    return out


def emit_carry_select_const_add_unconditional(
    bld: CircuitBuilder,
    a: Sequence[int],
    A: int,
    layout: AdditionLayout,
    carry_out: bool = False,
    name: str = "cs_const",
) -> list[int]:
    """``a + A`` onto fresh wires (plus carry), clearing and releasing ``a``."""
    a = list(a)
    width = len(a)
    out = list(bld.alloc(name, width + (1 if carry_out else 0)).wires)
    dst, dco = out[:width], (out[width] if carry_out else None)
    _emit_cs_run(bld, a, _const_block_adder(a, A), dst, layout, None, dco)
    neg = (-A) % (1 << width)
    _emit_cs_run(bld, dst, _const_block_adder(dst, neg), a, layout, None)
    bld.free(a)
    return out


# ---------------------------------------------------------------------------
# running sum with an approximate top-bit sum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunningSumPlan:
    N: int
    count: int
    sum_width: int  # width of the exact running sum register
    shift: int  # bits dropped for the approximate sum
    s_prime_width: int
    N_short: int
    q_bits: int
    short_summands: tuple[int, ...]


def plan_running_sum(constants: Sequence[int], N: int, s_prime_width: int) -> RunningSumPlan:
    count = len(constants)
    if any(not 0 <= c < N for c in constants):
        raise ParameterError("summands must lie in [0, N)")
    if count and s_prime_width < 9 + 3 * math.log2(count):
        raise ParameterError("approximate sum register too narrow")
    sum_width = max(1, (max(1, count) * (N - 1)).bit_length())
    head = max(1, count).bit_length()
    shift = max(0, N.bit_length() - (s_prime_width - head))

    def short(v: int) -> int:
        return (v + ((1 << shift) >> 1)) >> shift if shift else v

    return RunningSumPlan(
        N=N,
        count=count,
        sum_width=sum_width,
        shift=shift,
        s_prime_width=s_prime_width,
        N_short=max(1, short(N)),
        q_bits=max(1, count).bit_length(),
        short_summands=tuple(short(c) for c in constants),
    )


def running_sum_value(constants: Sequence[int], controls: Sequence[int], N: int, s_prime_width: int) -> int:
    """Value-level model of :func:`build_running_sum_modular`."""
    plan = plan_running_sum(constants, N, s_prime_width)
    total = sum(c for c, on in zip(constants, controls) if on)
    approx = sum(c for c, on in zip(plan.short_summands, controls) if on)
    q = min(approx // plan.N_short, (1 << plan.q_bits) - 1)
    return (total - q * N) & ((1 << plan.sum_width) - 1)


def emit_running_sum_modular(
    bld: CircuitBuilder,
    summands: Sequence[tuple[int, int]],
    N: int,
    s_prime_width: int,
    out: Sequence[int] | None = None,
) -> list[int]:
    """Accumulate ``sum(c_j * w_j) mod N`` into a zero register and return its wires.

    The exact sum is kept non-modularly; a short register collects rounded
    top bits of each summand, restoring division on it gives the quotient
    estimate, ``q * N`` is subtracted by conditional subtractions of
    ``N * 2**j``, and the short register and quotient are uncomputed by
    replaying their accumulation backwards.
    """
    constants = [c for c, _ in summands]
    plan = plan_running_sum(constants, N, s_prime_width)
    W = plan.sum_width
    s = list(out) if out is not None else list(bld.alloc("sum", W).wires)
    if len(s) != W:
        raise ParameterError(f"output register must have {W} wires")
    if not summands:
        return s

    short_start = bld.mark()
    sp = list(bld.alloc("s_prime", s_prime_width + 1).wires)  # top wire is the sign
    q = list(bld.alloc("quot", plan.q_bits).wires)
    short_mask = (1 << (s_prime_width + 1)) - 1
    for c, (_, wire) in zip(plan.short_summands, summands):
        if c:
            emit_const_add(bld, sp, c & short_mask, wire)
    for j in range(plan.q_bits - 1, -1, -1):
        D = plan.N_short << j
        if D > short_mask:
            continue
        emit_const_add(bld, sp, (-D) & short_mask, None)
        bld.cx(sp[-1], q[j])
        bld.x(q[j])
        emit_const_add(bld, sp, D, (q[j], False))
    short_end = bld.mark()

    for c, (_, wire) in zip(constants, summands):
        if c:
            emit_const_add(bld, s, c, wire)
    mask = (1 << W) - 1
    for j in range(plan.q_bits):
        emit_const_add(bld, s, (-(N << j)) & mask, q[j])
    bld.uncompute(short_start, short_end)
    return s


def build_running_sum_modular(summands: Sequence[tuple[int, int]], N: int, s_prime_width: int) -> Circuit:
    """Stand-alone running-sum circuit; control wires become inputs named ``ctl``."""
    bld = CircuitBuilder()
    wires = sorted({w for _, w in summands})
    if wires:
        bld.adopt(Register("ctl", tuple(wires)))
    s = emit_running_sum_modular(bld, summands, N, s_prime_width)
    bld.name(Register("sum", tuple(s)))
    return bld.build()
