"""Pure Python / numpy versions of the compiled kernels.

These are selected by :mod:`revshor.kernels` when the Cython extension is not
available, and serve as the reference the benchmark compares against.
"""

from __future__ import annotations

import numpy as np

_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def simulate_packed(c1, c2, tgt, flags, state: np.ndarray) -> None:
    """Apply every gate to ``state`` (shape ``(wires, words)``) in place."""
    scratch = np.empty(state.shape[1], dtype=np.uint64)
    for a, b, t, f in zip(c1.tolist(), c2.tolist(), tgt.tolist(), flags.tolist()):
        row = state[t]
        if a < 0:
            np.bitwise_xor(row, _ONES, out=row)
        elif b < 0:
            if f & 1:
                np.bitwise_xor(state[a], _ONES, out=scratch)
                np.bitwise_xor(row, scratch, out=row)
            else:
                np.bitwise_xor(row, state[a], out=row)
        else:
            if f & 1:
                np.bitwise_xor(state[a], _ONES, out=scratch)
            else:
                scratch[:] = state[a]
            if f & 2:
                np.bitwise_and(scratch, ~state[b], out=scratch)
            else:
                np.bitwise_and(scratch, state[b], out=scratch)
            np.bitwise_xor(row, scratch, out=row)


def asap_depth(c1, c2, tgt, wire_count: int) -> int:
    ready = [0] * wire_count
    depth = 0
    for a, b, t in zip(c1.tolist(), c2.tolist(), tgt.tolist()):
        level = ready[t]
        if a >= 0 and ready[a] > level:
            level = ready[a]
        if b >= 0:
            if ready[b] > level:
                level = ready[b]
            level += 1
            ready[b] = level
        if a >= 0:
            ready[a] = level
        ready[t] = level
        if level > depth:
            depth = level
    return depth
