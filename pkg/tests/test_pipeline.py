import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revshor import pipeline
from revshor.adders import ParameterError
from revshor.pipeline import (
    build_modexp_circuit,
    build_standard_step,
    emit_standard_step,
    factor_demo,
    modexp,
    modexp_batch,
    multiplicative_order,
    precompute,
    qfft_schedule,
    random_instances,
    sample_measurement,
)
from revshor.revsim import CircuitBuilder, Register, cost, run


def test_precompute_examples():
    pre = precompute(2, 15, 4)
    assert pre.A == [2, 4, 1, 1, 1, 1, 1, 1]
    assert precompute(1, 15, 4).A == [1] * 8
    assert pre.shift_tables[0] == [(2 << j) % 15 for j in range(4)]
    assert pre.reciprocal[1] == (4 << 4) // 15
    with pytest.raises(ParameterError):
        precompute(3, 15, 4)


@given(st.integers(3, 1 << 20), st.data())
def test_precompute_inverses(N, data):
    a = data.draw(st.integers(1, N - 1))
    if math.gcd(a, N) != 1:
        return
    L = N.bit_length()
    pre = precompute(a, N, L)
    assert all(v * w % N == 1 for v, w in zip(pre.A, pre.A_inv))
    assert all(v == pow(a, 1 << i, N) for i, v in enumerate(pre.A))


def test_modexp_examples():
    assert modexp(7, 0, 15, 4)[0] == 1
    # 7 has order 4 modulo 15, so 7**153 = 7**1
    assert modexp(7, 153, 15, 4)[0] == pow(7, 153, 15) == 7
    for backend in pipeline.BACKENDS:
        assert modexp(7, 153, 15, 4, backend)[0] == 7


def test_modexp_errors():
    with pytest.raises(ParameterError):
        modexp(7, 1 << 8, 15, 4)
    with pytest.raises(ParameterError):
        modexp(7, 3, 15, 4, "quantum")
    with pytest.raises(ParameterError):
        modexp(5, 3, 15, 4)


def test_modexp_cost_counts():
    value, c = modexp(3, 200, 221, 8)
    assert value == pow(3, 200, 221)
    assert c.steps == 16 and c.modular_multiplications == 32 and c.modular_additions == 2 * 16 * 8
    _, c = modexp(3, 0b101, 221, 16, "fft2")
    assert c.multiplier.simple_multiplications == 2 * 2 * 8


@pytest.mark.slow
def test_backends_agree_l24():
    rng = np.random.default_rng(24)
    a, x, N = random_instances(24, 1000, rng)
    expected = [pow(int(p), int(q), int(r)) for p, q, r in zip(a, x, N)]
    for backend in pipeline.BACKENDS:
        res = modexp_batch(a, x, N, 24, backend)
        assert list(res.value) == expected and not res.failed.any()


def test_single_and_batched_fft_agree():
    rng = np.random.default_rng(5)
    a, x, N = random_instances(20, 6, rng)
    res = modexp_batch(a, x, N, 20, "fft2")
    single = [modexp(int(p), int(q), int(r), 20, "fft2")[0] for p, q, r in zip(a, x, N)]
    assert list(res.value) == single == list(res.expected)


def test_budgeted_truncation_rate_l24():
    rng = np.random.default_rng(7)
    a, x, N = random_instances(24, 2000, rng)
    t = pipeline.budget(24, 0.01).compare_bits
    res = modexp_batch(a, x, N, 24, "standard", compare_bits=t)
    assert res.failed.mean() <= 0.01


def test_modexp_batch_errors():
    with pytest.raises(ParameterError):
        modexp_batch([2], [1], [15], 4, "quantum")
    with pytest.raises(ParameterError):
        modexp_batch([2], [1], [15], 63)


def test_random_instances():
    a, x, N = random_instances(40, 50, np.random.default_rng(0))
    for p, q, r in zip(a, x, N):
        assert r % 2 == 1 and r >> 39 == 1 and math.gcd(p, r) == 1 and 0 <= q < 1 << 80


# --- gate-level circuits ----------------------------------------------------------

def test_standard_step_circuit(kernel_backend):
    L, N, A = 8, 221, 5
    c = build_standard_step(L, N, A)
    ys = np.arange(N)
    res = run(c, {c.registers["x"]: [1] * N, c.registers["y"]: ys})
    assert res.read(c.registers["result"]) == [y * A % N for y in ys]
    assert res.ancillas_clean().all()
    off = run(c, {c.registers["x"]: [0] * N, c.registers["y"]: ys})
    assert off.read(c.registers["result"]) == list(ys)


@pytest.mark.parametrize("L", [16, 32])
def test_step_highwater_is_3l_plus_log(L):
    N = (1 << L) - 5 if L == 16 else (1 << L) - 99
    c = build_standard_step(L, N, 2)
    hw = cost(c).qubit_highwater
    # one exponent wire stands in for the eliminated exponent register
    assert 3 * L <= hw <= 3 * L + 2 * math.log2(L)


def test_modexp_circuit_l8(kernel_backend):
    L, N, a = 8, 221, 7
    c = build_modexp_circuit(a, N, L)
    xs = np.arange(1 << 16, step=37)
    res = run(c, {c.registers["x"]: xs})
    assert res.read(c.registers["result"]) == [pow(a, int(v), N) for v in xs]
    assert res.ancillas_clean().all()


def test_multiplication_order_does_not_matter(kernel_backend):
    L, N, a = 6, 55, 3
    pre = precompute(a, N, L)
    bld = CircuitBuilder()
    x = bld.input("x", 2 * L)
    y = list(bld.alloc("acc", L).wires)
    bld.x(y[0])
    for i in reversed(range(2 * L)):
        y = emit_standard_step(bld, x[i], y, pre.A[i], pre.A_inv[i], N)
    bld.name(Register("result", tuple(y)))
    c = bld.build()
    forward = build_modexp_circuit(a, N, L)
    xs = np.arange(0, 1 << 12, 11)
    got = run(c, {c.registers["x"]: xs}).read(c.registers["result"])
    ref = run(forward, {forward.registers["x"]: xs}).read(forward.registers["result"])
    assert got == ref == [pow(a, int(v), N) for v in xs]


# --- measured transform ----------------------------------------------------------

def test_qfft_examples():
    s = qfft_schedule([0, 0, 0], 3, 3)
    assert all(s.phase(q) == 0 for q in range(3))
    s = qfft_schedule([1], 3, 3)
    assert s.phase(1) == Fraction(1, 4)
    bits = [1, 0, 1, 1, 0, 1]
    full, trunc = qfft_schedule(bits, 8, 8), qfft_schedule(bits, 8, 3)
    assert [t.phase for t in full.terms] == [t.phase for t in trunc.terms]
    assert all(t.kept for t in full.terms)
    assert full.bit_order == "least-significant-first"
    with pytest.raises(ParameterError):
        qfft_schedule([1, 1, 1, 1], 3, 2)


@given(st.lists(st.integers(0, 1), max_size=14), st.integers(0, 6))
def test_qfft_invariants(bits, keep):
    l = 14
    s = qfft_schedule(bits, l, keep)
    for t in s.terms:
        assert t.phase.denominator & (t.phase.denominator - 1) == 0
        assert t.phase.denominator <= 2**l
        assert t.source < t.qubit and bits[t.source] == 1
    for q in range(l):
        assert s.dropped(q) <= Fraction(1, 2**keep)


# --- sampling and factoring -------------------------------------------------------

def test_sample_period_one():
    rng = np.random.default_rng(0)
    assert all(sample_measurement(1, 4, rng) == 0 for _ in range(50))


def test_sample_exact_period():
    rng = np.random.default_rng(1)
    for _ in range(500):
        c = sample_measurement(4, 4, rng)
        assert min(c % 64, 64 - c % 64) <= 1


def test_sample_peaks():
    rng = np.random.default_rng(2)
    r, L = 6, 5
    Q = 1 << (2 * L)
    samples = np.array([sample_measurement(r, L, rng) for _ in range(10_000)])
    peaks = [round(k * Q / r) for k in range(r)]
    nearest = np.array([min(abs(s - p) for p in peaks + [Q]) for s in samples])
    assert np.mean(nearest <= 1) > 0.8
    counts = [np.sum(np.abs(samples - p) <= 1) for p in peaks]
    assert min(counts) > 0.1 * len(samples)


def test_multiplicative_order():
    assert multiplicative_order(7, 15) == 4
    assert multiplicative_order(2, 21) == 6


@pytest.mark.parametrize("N,factors", [(15, {3, 5}), (21, {3, 7})])
def test_factor_demo(N, factors):
    wins = sum(factor_demo(N, 10, seed).factor in factors for seed in range(20))
    assert wins >= 18


def test_factor_demo_gcd_shortcut():
    for seed in range(50):
        res = factor_demo(33 * 35, 1, seed)
        if res.method == "gcd":
            assert math.gcd(res.base, 33 * 35) == res.factor > 1
            return
    pytest.fail("no gcd draw in 50 seeds")


@pytest.mark.parametrize("N", [16, 17, 25, 1 << 17 | 1, 3])
def test_factor_demo_rejects(N):
    with pytest.raises(ParameterError):
        factor_demo(N)
