"""Reversible circuits over the NOT / CNOT / Toffoli alphabet.

A :class:`Circuit` stores its gates column-wise (two control columns, a
target column and a polarity flag column) so that the simulation and depth
kernels in :mod:`revshor.kernels` can walk them without Python overhead.
Circuits are normally produced by a :class:`CircuitBuilder`, which also keeps
the allocation log used for the qubit high-water mark.

Simulation is bit-sliced: the state is a ``uint64`` array of shape
``(wire_count, words)`` and every bit position is an independent trial.
"""

from __future__ import annotations

import enum
import random
from array import array
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels


class StructuralError(ValueError):
    """Raised for malformed gates or references to wires that are not live."""


class GateKind(enum.Enum):
    NOT = "NOT"
    CNOT = "CNOT"
    TOFFOLI = "TOF"


@dataclass(frozen=True)
class Control:
    wire: int
    positive: bool = True

    def __str__(self) -> str:
        return f"{'' if self.positive else '!'}{self.wire}"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    target: int
    controls: tuple[Control, ...] = ()

    def __post_init__(self) -> None:
        expected = {GateKind.NOT: 0, GateKind.CNOT: 1, GateKind.TOFFOLI: 2}[self.kind]
        if len(self.controls) != expected:
            raise StructuralError(f"{self.kind.value} needs {expected} controls, got {len(self.controls)}")
        wires = [c.wire for c in self.controls]
        if self.target in wires or len(set(wires)) != len(wires):
            raise StructuralError(f"gate wires must be distinct: target {self.target}, controls {wires}")
        if self.target < 0 or any(w < 0 for w in wires):
            raise StructuralError("wire ids are non-negative")

    def __str__(self) -> str:
        parts = [self.kind.value, *map(str, self.controls), str(self.target)]
        return " ".join(parts)


@dataclass(frozen=True)
class Register:
    """Named, ordered group of wires; index 0 is the least significant bit."""

    name: str
    wires: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.wires) < 1:
            raise StructuralError(f"register {self.name!r} is empty")
        if len(set(self.wires)) != len(self.wires):
            raise StructuralError(f"register {self.name!r} repeats a wire")

    def __len__(self) -> int:
        return len(self.wires)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Register(self.name, self.wires[idx])
        return self.wires[idx]

    def __iter__(self) -> Iterator[int]:
        return iter(self.wires)

    @property
    def width(self) -> int:
        return len(self.wires)


@dataclass(frozen=True)
class AllocEvent:
    position: int  # number of gates emitted before the event
    wire: int
    allocate: bool


@dataclass(frozen=True)
class CostReport:
    toffoli_count: int
    toffoli_depth: int
    qubit_highwater: int
    garbage_bits: int


def _as_column(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class Circuit:
    """Immutable gate sequence plus allocation bookkeeping.

    ``inputs`` are the wires live before the first gate; every other wire is
    a fresh zero ancilla created by an allocation event.
    """

    def __init__(
        self,
        wire_count: int,
        c1: Sequence[int],
        c2: Sequence[int],
        tgt: Sequence[int],
        flags: Sequence[int],
        inputs: Iterable[int] = (),
        alloc_log: Sequence[AllocEvent] = (),
        garbage: Iterable[int] = (),
        registers: Mapping[str, Register] | None = None,
        validate: bool = True,
    ) -> None:
        self.wire_count = int(wire_count)
        self.c1 = _as_column(c1, np.int64)
        self.c2 = _as_column(c2, np.int64)
        self.tgt = _as_column(tgt, np.int64)
        self.flags = _as_column(flags, np.uint8)
        self.inputs = tuple(inputs)
        self.alloc_log = tuple(alloc_log)
        self.garbage = frozenset(garbage)
        self.registers = dict(registers or {})
        if not (len(self.c1) == len(self.c2) == len(self.tgt) == len(self.flags)):
            raise StructuralError("gate columns differ in length")
        if validate:
            self._validate()

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_gates(cls, gates: Iterable[Gate], wire_count: int | None = None, **kwargs) -> "Circuit":
        c1, c2, tgt, flags = [], [], [], []
        top = -1
        for g in gates:
            ctrl = list(g.controls) + [None, None]
            a, b = ctrl[0], ctrl[1]
            c1.append(a.wire if a else -1)
            c2.append(b.wire if b else -1)
            tgt.append(g.target)
            flags.append((0 if a is None or a.positive else 1) | (0 if b is None or b.positive else 2))
            top = max(top, g.target, *(c.wire for c in g.controls))
        if wire_count is None:
            wire_count = top + 1
        kwargs.setdefault("inputs", range(wire_count))
        return cls(wire_count, c1, c2, tgt, flags, **kwargs)

    def _validate(self) -> None:
        live = set(self.inputs)
        if any(w < 0 or w >= self.wire_count for w in live):
            raise StructuralError("input wire out of range")
        events = sorted(self.alloc_log, key=lambda e: e.position)
        ei = 0
        c1, c2, tgt = self.c1.tolist(), self.c2.tolist(), self.tgt.tolist()
        for g in range(len(tgt) + 1):
            while ei < len(events) and events[ei].position == g:
                ev = events[ei]
                if ev.allocate:
                    if ev.wire in live:
                        raise StructuralError(f"wire {ev.wire} allocated twice")
                    live.add(ev.wire)
                else:
                    if ev.wire not in live:
                        raise StructuralError(f"wire {ev.wire} freed while not live")
                    live.discard(ev.wire)
                ei += 1
            if g == len(tgt):
                break
            wires = [tgt[g]] + [w for w in (c1[g], c2[g]) if w >= 0]
            if len(set(wires)) != len(wires):
                raise StructuralError(f"gate {g}: target equals a control")
            for w in wires:
                if w not in live:
                    raise StructuralError(f"gate {g} references unallocated wire {w}")

    # -- views -----------------------------------------------------------------
    def __len__(self) -> int:
        return len(self.tgt)

    def gate(self, i: int) -> Gate:
        a, b, t, f = int(self.c1[i]), int(self.c2[i]), int(self.tgt[i]), int(self.flags[i])
        ctrls = []
        if a >= 0:
            ctrls.append(Control(a, not f & 1))
        if b >= 0:
            ctrls.append(Control(b, not f & 2))
        kind = (GateKind.NOT, GateKind.CNOT, GateKind.TOFFOLI)[len(ctrls)]
        return Gate(kind, t, tuple(ctrls))

    @property
    def gates(self) -> list[Gate]:
        return [self.gate(i) for i in range(len(self))]

    def live_after(self) -> set[int]:
        live = set(self.inputs)
        for ev in sorted(self.alloc_log, key=lambda e: e.position):
            (live.add if ev.allocate else live.discard)(ev.wire)
        return live

    def freed_wires(self) -> list[int]:
        """Wires that were released at some point and are not live at the end."""
        end = self.live_after()
        return sorted({ev.wire for ev in self.alloc_log if not ev.allocate} - end)

    def __repr__(self) -> str:
        return f"Circuit(wires={self.wire_count}, gates={len(self)}, toffolis={self.toffoli_count()})"

    def toffoli_count(self) -> int:
        return int(np.count_nonzero(self.c2 >= 0))


# -- operations on circuits ---------------------------------------------------

def reverse(circuit: Circuit) -> Circuit:
    """Gate list reversed; allocations become frees at the mirrored position."""
    n = len(circuit)
    log = [AllocEvent(n - ev.position, ev.wire, not ev.allocate) for ev in reversed(circuit.alloc_log)]
    log.sort(key=lambda e: e.position)
    return Circuit(
        circuit.wire_count,
        circuit.c1[::-1],
        circuit.c2[::-1],
        circuit.tgt[::-1],
        circuit.flags[::-1],
        inputs=sorted(circuit.live_after()),
        alloc_log=log,
        garbage=circuit.garbage,
        registers=circuit.registers,
        validate=False,
    )


def highwater(circuit: Circuit) -> int:
    live = len(set(circuit.inputs))
    peak = live
    for ev in sorted(circuit.alloc_log, key=lambda e: e.position):
        live += 1 if ev.allocate else -1
        peak = max(peak, live)
    return peak


def cost(circuit: Circuit) -> CostReport:
    depth = kernels.asap_depth(circuit.c1, circuit.c2, circuit.tgt, circuit.wire_count)
    return CostReport(
        toffoli_count=circuit.toffoli_count(),
        toffoli_depth=int(depth),
        qubit_highwater=highwater(circuit),
        garbage_bits=len(circuit.garbage),
    )


def new_state(circuit: Circuit, trials: int) -> np.ndarray:
    words = max(1, (trials + 63) // 64)
    return np.zeros((circuit.wire_count, words), dtype=np.uint64)


def simulate_batch(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """Run the circuit on a packed state in place and return it."""
    if state.dtype != np.uint64 or state.ndim != 2 or state.shape[0] != circuit.wire_count:
        raise StructuralError("state must be uint64 of shape (wire_count, words)")
    if not state.flags.c_contiguous:
        raise StructuralError("state must be C-contiguous")
    kernels.simulate_packed(circuit.c1, circuit.c2, circuit.tgt, circuit.flags, state)
    return state


def simulate(circuit: Circuit, assignment: Mapping[int, int]) -> dict[int, int]:
    """Image of one basis state; ``assignment`` must cover every input wire.

    Allocated ancillas start at zero.  The result covers the wires live at the
    end of the circuit.
    """
    missing = set(circuit.inputs) - set(assignment)
    if missing:
        raise StructuralError(f"input wires without a value: {sorted(missing)}")
    extra = set(assignment) - set(circuit.inputs)
    if extra:
        raise StructuralError(f"values given for wires that are not inputs: {sorted(extra)}")
    state = new_state(circuit, 1)
    for w, bit in assignment.items():
        if bit & 1:
            state[w, 0] = 1
    simulate_batch(circuit, state)
    return {w: int(state[w, 0] & np.uint64(1)) for w in sorted(circuit.live_after())}


# -- packing integers into bit-sliced registers --------------------------------

def _to_bits(values: Sequence[int], width: int, trials: int) -> np.ndarray:
    vals = list(values)
    if len(vals) != trials:
        raise ValueError("one value per trial required")
    words = max(1, (trials + 63) // 64)
    out = np.zeros((width, words * 64), dtype=np.uint8)
    if width <= 63 and all(0 <= v < (1 << 63) for v in vals):
        arr = np.asarray(vals, dtype=np.int64)
        for i in range(width):
            out[i, :trials] = (arr >> i) & 1
    else:
        for i in range(width):
            out[i, :trials] = [(v >> i) & 1 for v in vals]
    return np.packbits(out, axis=1, bitorder="little").view(np.uint64)


def _from_bits(rows: np.ndarray, trials: int) -> list[int]:
    bits = np.unpackbits(np.ascontiguousarray(rows).view(np.uint8), axis=1, bitorder="little")[:, :trials]
    width = bits.shape[0]
    if width <= 63:
        weights = (np.int64(1) << np.arange(width, dtype=np.int64))
        return (bits.T.astype(np.int64) @ weights).tolist()
    out = [0] * trials
    for i in range(width):
        row = bits[i]
        for k in np.flatnonzero(row).tolist():
            out[k] |= 1 << i
    return out


class BatchRun:
    """Bit-sliced run of a circuit on many register assignments at once."""

    def __init__(self, circuit: Circuit, inputs: Mapping[Register, Sequence[int] | int], trials: int | None = None):
        if trials is None:
            lengths = {len(v) for v in inputs.values() if not isinstance(v, int)}
            trials = lengths.pop() if lengths else 1
        self.circuit = circuit
        self.trials = trials
        self.state = new_state(circuit, trials)
        live = set(circuit.inputs)
        for reg, vals in inputs.items():
            if not set(reg.wires) <= live:
                raise StructuralError(f"register {reg.name!r} is not a circuit input")
            if isinstance(vals, int):
                vals = [vals] * trials
            self.state[list(reg.wires)] = _to_bits(vals, reg.width, trials)
        self.initial = self.state.copy()
        simulate_batch(circuit, self.state)

    def read(self, reg: Register | Sequence[int]) -> list[int]:
        wires = list(reg.wires if isinstance(reg, Register) else reg)
        return _from_bits(self.state[wires], self.trials)

    def nonzero_trials(self, wires: Iterable[int]) -> np.ndarray:
        """Boolean mask of trials where any of ``wires`` reads 1."""
        wires = list(wires)
        mask = np.zeros(self.state.shape[1], dtype=np.uint64)
        for w in wires:
            mask |= self.state[w]
        bits = np.unpackbits(mask.view(np.uint8), bitorder="little")[: self.trials]
        return bits.astype(bool)

    def ancillas_clean(self) -> np.ndarray:
        """Per-trial flag: every released wire came back to zero."""
        return ~self.nonzero_trials(self.circuit.freed_wires())


def run(circuit: Circuit, inputs: Mapping[Register, Sequence[int] | int], trials: int | None = None) -> BatchRun:
    return BatchRun(circuit, inputs, trials)


def check_reversibility(circuit: Circuit, trials: int, seed: int, inverse: Circuit | None = None) -> bool:
    """Forward pass followed by ``inverse`` must be the identity on random states.

    ``inverse`` defaults to :func:`reverse` of ``circuit``, which always
    passes for a well-formed gate list; pass the reverse of a reference
    circuit to detect a modified copy.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    inverse = reverse(circuit) if inverse is None else inverse
    if inverse.wire_count != circuit.wire_count:
        raise StructuralError("inverse acts on a different number of wires")
    rng = np.random.default_rng(seed)
    state = new_state(circuit, trials)
    inputs = list(circuit.inputs)
    if inputs:
        state[inputs] = rng.integers(0, 2**64, size=(len(inputs), state.shape[1]), dtype=np.uint64)
    if trials % 64:
        state[:, -1] &= np.uint64((1 << (trials % 64)) - 1)
    before = state.copy()
    simulate_batch(circuit, state)
    simulate_batch(inverse, state)
    return bool(np.array_equal(before, state))


# -- text form -------------------------------------------------------------------

def dump(circuit: Circuit) -> str:
    """Line-oriented text form; round-trips through :func:`parse`."""
    lines = [f"WIRES {circuit.wire_count}", "INPUT " + " ".join(map(str, circuit.inputs))]
    events = sorted(circuit.alloc_log, key=lambda e: e.position)
    ei = 0
    for i in range(len(circuit) + 1):
        while ei < len(events) and events[ei].position == i:
            ev = events[ei]
            lines.append(f"{'ALLOC' if ev.allocate else 'FREE'} {ev.wire}")
            ei += 1
        if i < len(circuit):
            lines.append(str(circuit.gate(i)))
    if circuit.garbage:
        lines.append("GARBAGE " + " ".join(map(str, sorted(circuit.garbage))))
    return "\n".join(lines) + "\n"


def _control(tok: str) -> Control:
    if tok.startswith("!"):
        return Control(int(tok[1:]), False)
    return Control(int(tok))


def parse(text: str) -> Circuit:
    wire_count = None
    inputs: list[int] | None = None
    gates: list[Gate] = []
    log: list[AllocEvent] = []
    garbage: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "WIRES":
                wire_count = int(rest[0])
            elif head == "INPUT":
                inputs = [int(t) for t in rest]
            elif head in ("ALLOC", "FREE"):
                log.append(AllocEvent(len(gates), int(rest[0]), head == "ALLOC"))
            elif head == "GARBAGE":
                garbage.extend(int(t) for t in rest)
            elif head == "NOT" and len(rest) == 1:
                gates.append(Gate(GateKind.NOT, int(rest[0])))
            elif head == "CNOT" and len(rest) == 2:
                gates.append(Gate(GateKind.CNOT, int(rest[1]), (_control(rest[0]),)))
            elif head == "TOF" and len(rest) == 3:
                gates.append(Gate(GateKind.TOFFOLI, int(rest[2]), (_control(rest[0]), _control(rest[1]))))
            else:
                raise StructuralError(f"line {lineno}: cannot parse {raw!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, StructuralError):
                raise
            raise StructuralError(f"line {lineno}: {exc}") from exc
    if wire_count is None:
        wire_count = 1 + max([g.target for g in gates] + [c.wire for g in gates for c in g.controls] + [-1])
    if inputs is None:
        inputs = list(range(wire_count))
    return Circuit.from_gates(gates, wire_count, inputs=inputs, alloc_log=log, garbage=garbage)


# -- builder ----------------------------------------------------------------------

@dataclass
class _Mark:
    gate_pos: int
    event_pos: int


@dataclass
class CircuitBuilder:
    """Accumulates gates and allocation events; wire ids are never reused."""

    _c1: array = field(default_factory=lambda: array("q"))
    _c2: array = field(default_factory=lambda: array("q"))
    _tgt: array = field(default_factory=lambda: array("q"))
    _flags: array = field(default_factory=lambda: array("B"))
    _events: list = field(default_factory=list)
    _inputs: list = field(default_factory=list)
    _live: set = field(default_factory=set)
    _garbage: set = field(default_factory=set)
    _registers: dict = field(default_factory=dict)
    _next: int = 0
    check: bool = True

    # wires
    def input(self, name: str, width: int) -> Register:
        if len(self._tgt):
            raise StructuralError("declare inputs before emitting gates")
        reg = Register(name, tuple(range(self._next, self._next + width)))
        self._next += width
        self._inputs.extend(reg.wires)
        self._live.update(reg.wires)
        self._registers[name] = reg
        return reg

    def adopt(self, *regs: Register) -> None:
        """Declare existing registers (with fixed wire ids) as circuit inputs."""
        for reg in regs:
            if len(self._tgt):
                raise StructuralError("declare inputs before emitting gates")
            clash = set(reg.wires) & self._live
            if clash:
                raise StructuralError(f"wires {sorted(clash)} already declared")
            self._inputs.extend(reg.wires)
            self._live.update(reg.wires)
            self._next = max(self._next, max(reg.wires) + 1)
            self._registers.setdefault(reg.name, reg)

    def alloc(self, name: str, width: int = 1) -> Register:
        reg = Register(name, tuple(range(self._next, self._next + width)))
        self._next += width
        pos = len(self._tgt)
        for w in reg.wires:
            self._events.append(AllocEvent(pos, w, True))
        self._live.update(reg.wires)
        return reg

    def alloc_wire(self, name: str = "anc") -> int:
        return self.alloc(name, 1)[0]

    def free(self, wires: Register | Iterable[int] | int) -> None:
        if isinstance(wires, int):
            wires = [wires]
        pos = len(self._tgt)
        for w in wires:
            if w not in self._live:
                raise StructuralError(f"freeing wire {w} that is not live")
            self._live.discard(w)
            self._events.append(AllocEvent(pos, w, False))

    def mark_garbage(self, wires: Register | Iterable[int] | int) -> None:
        if isinstance(wires, int):
            wires = [wires]
        self._garbage.update(wires)

    def name(self, reg: Register, name: str | None = None) -> Register:
        """Record a register under a name so it appears in ``Circuit.registers``."""
        reg = Register(name or reg.name, reg.wires)
        self._registers[reg.name] = reg
        return reg

    # gates
    def _emit(self, a: int, b: int, t: int, flags: int) -> None:
        if self.check:
            ws = [t] + [w for w in (a, b) if w >= 0]
            if len(set(ws)) != len(ws):
                raise StructuralError(f"target equals a control: {ws}")
            for w in ws:
                if w not in self._live:
                    raise StructuralError(f"wire {w} is not allocated")
        self._c1.append(a)
        self._c2.append(b)
        self._tgt.append(t)
        self._flags.append(flags)

    def x(self, t: int) -> None:
        self._emit(-1, -1, t, 0)

    def cx(self, c: int, t: int, positive: bool = True) -> None:
        self._emit(c, -1, t, 0 if positive else 1)

    def ccx(self, a: int, b: int, t: int, pa: bool = True, pb: bool = True) -> None:
        self._emit(a, b, t, (0 if pa else 1) | (0 if pb else 2))

    def ctrl(self, control: tuple[int, bool] | None, t: int) -> None:
        """NOT or CNOT depending on whether a control is given."""
        if control is None:
            self.x(t)
        else:
            self.cx(control[0], t, control[1])

    def ctrl2(self, control: tuple[int, bool] | None, other: tuple[int, bool], t: int) -> None:
        """CNOT from ``other`` or Toffoli with the optional extra control."""
        if control is None:
            self.cx(other[0], t, other[1])
        else:
            self.ccx(control[0], other[0], t, control[1], other[1])

    # structure
    def mark(self) -> _Mark:
        return _Mark(len(self._tgt), len(self._events))

    def uncompute(self, since: _Mark, until: _Mark | None = None) -> None:
        """Append the inverse of the gates emitted between two marks.

        Wires allocated in that span are released once the mirrored gates run;
        wires released in that span are brought back.  ``until`` defaults to
        the current end of the circuit.
        """
        if until is None:
            until = self.mark()
        start, end = since.gate_pos, until.gate_pos
        events = self._events[since.event_pos:until.event_pos]
        by_pos: dict[int, list[AllocEvent]] = {}
        for ev in events:
            by_pos.setdefault(ev.position, []).append(ev)
        for pos in range(end, start - 1, -1):
            for ev in reversed(by_pos.get(pos, [])):
                if ev.allocate:
                    self.free([ev.wire])
                else:
                    self._live.add(ev.wire)
                    self._events.append(AllocEvent(len(self._tgt), ev.wire, True))
            if pos > start:
                i = pos - 1
                self._emit(self._c1[i], self._c2[i], self._tgt[i], self._flags[i])

    def gate_count(self) -> int:
        return len(self._tgt)

    def build(self, registers: Mapping[str, Register] | None = None) -> Circuit:
        regs = dict(self._registers)
        if registers:
            regs.update(registers)
        return Circuit(
            self._next,
            self._c1,
            self._c2,
            self._tgt,
            self._flags,
            inputs=self._inputs,
            alloc_log=self._events,
            garbage=self._garbage,
            registers=regs,
            validate=False,
        )


def random_assignment(circuit: Circuit, rng: random.Random) -> dict[int, int]:
    return {w: rng.getrandbits(1) for w in circuit.inputs}


def make_registers(**widths: int) -> dict[str, Register]:
    """Contiguous registers in keyword order, starting at wire 0."""
    out, nxt = {}, 0
    for name, width in widths.items():
        out[name] = Register(name, tuple(range(nxt, nxt + width)))
        nxt += width
    return out
