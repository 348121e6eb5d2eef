# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for bit-sliced circuit simulation and depth scheduling.

Gate columns follow the layout used by ``revshor.revsim.Circuit``: two control
columns (``-1`` when absent), a target column and a flag column whose bit 0
and bit 1 mark the first and second control as negative.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t, uint8_t

cnp.import_array()


def simulate_packed(const int64_t[:] c1, const int64_t[:] c2, const int64_t[:] tgt,
                    const uint8_t[:] flags, uint64_t[:, ::1] state):
    """Apply every gate to the packed state in place (one trial per bit)."""
    cdef Py_ssize_t g, w
    cdef Py_ssize_t ngates = tgt.shape[0]
    cdef Py_ssize_t words = state.shape[1]
    cdef int64_t a, b, t
    cdef uint64_t na, nb
    cdef uint64_t ones = <uint64_t>0xFFFFFFFFFFFFFFFF
    for g in range(ngates):
        a = c1[g]
        b = c2[g]
        t = tgt[g]
        na = ones if (flags[g] & 1) else 0
        nb = ones if (flags[g] & 2) else 0
        if a < 0:
            for w in range(words):
                state[t, w] ^= ones
        elif b < 0:
            for w in range(words):
                state[t, w] ^= state[a, w] ^ na
        else:
            for w in range(words):
                state[t, w] ^= (state[a, w] ^ na) & (state[b, w] ^ nb)


def asap_depth(const int64_t[:] c1, const int64_t[:] c2, const int64_t[:] tgt, Py_ssize_t wire_count):
    """Toffoli layers of the greedy as-soon-as-possible schedule."""
    cdef cnp.ndarray[int64_t, ndim=1] ready_arr = np.zeros(wire_count, dtype=np.int64)
    cdef int64_t[:] ready = ready_arr
    cdef Py_ssize_t g
    cdef Py_ssize_t ngates = tgt.shape[0]
    cdef int64_t a, b, t, level, depth = 0
    for g in range(ngates):
        a = c1[g]
        b = c2[g]
        t = tgt[g]
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
