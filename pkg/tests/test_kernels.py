import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revshor import _kernels_py, kernels, pipeline
from revshor.revsim import Circuit, Control, Gate, GateKind, new_state

try:
    from revshor import _kernels as compiled
except ImportError:  # the fallback alone is still tested
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernel not built")


@st.composite
def gate_lists(draw, wires=6):
    gates = []
    for _ in range(draw(st.integers(0, 40))):
        kind = draw(st.sampled_from(list(GateKind)))
        w = draw(st.permutations(range(wires)))
        pol = draw(st.tuples(st.booleans(), st.booleans()))
        controls = [Control(w[1], pol[0]), Control(w[2], pol[1])][: {"NOT": 0, "CNOT": 1, "TOFFOLI": 2}[kind.name]]
        gates.append(Gate(kind, w[0], tuple(controls)))
    return Circuit.from_gates(gates, wire_count=wires)


@needs_compiled
@given(gate_lists(), st.integers(0, 2**32 - 1))
def test_compiled_matches_fallback(c, seed):
    rng = np.random.default_rng(seed)
    state = new_state(c, 130)
    state[:] = rng.integers(0, 2**63, size=state.shape, dtype=np.uint64)
    s1, s2 = state.copy(), state.copy()
    _kernels_py.simulate_packed(c.c1, c.c2, c.tgt, c.flags, s1)
    compiled.simulate_packed(c.c1, c.c2, c.tgt, c.flags, s2)
    assert np.array_equal(s1, s2)
    assert _kernels_py.asap_depth(c.c1, c.c2, c.tgt, c.wire_count) == compiled.asap_depth(
        c.c1, c.c2, c.tgt, c.wire_count
    )


@needs_compiled
def test_compiled_matches_on_modexp_circuit():
    c = pipeline.build_modexp_circuit(7, 221, 8)
    state = new_state(c, 256)
    state[:] = np.random.default_rng(1).integers(0, 2**63, size=state.shape, dtype=np.uint64)
    s1, s2 = state.copy(), state.copy()
    _kernels_py.simulate_packed(c.c1, c.c2, c.tgt, c.flags, s1)
    compiled.simulate_packed(c.c1, c.c2, c.tgt, c.flags, s2)
    assert np.array_equal(s1, s2)


def test_backend_name():
    assert kernels.BACKEND in {"python", "cython"}
    if compiled is not None and os.environ.get("REVSHOR_PURE_PYTHON") != "1":
        assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, REVSHOR_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from revshor import kernels; print(kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    ).stdout.strip()
    assert out == "python"


def test_depth_of_empty_circuit():
    c = Circuit.from_gates([], wire_count=3)
    assert _kernels_py.asap_depth(c.c1, c.c2, c.tgt, c.wire_count) == 0


def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run(
        [sys.executable, script, "--trials", "64", "--repeat", "1"], capture_output=True, text=True, check=True
    ).stdout
    assert "python" in out
    if compiled is not None:
        assert "states agree: True" in out
