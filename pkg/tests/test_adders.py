import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revshor import adders
from revshor.adders import (
    AdditionLayout,
    ComparePolicy,
    ParameterError,
    build_carry_select_adder,
    build_const_adder,
    build_modular_const_adder,
    build_qq_adder,
    build_qq_subtractor,
    build_running_sum_modular,
    carry_select_add_value,
    choose_addition_layout,
    mod_add_value,
    running_sum_value,
)
from revshor.revsim import CircuitBuilder, StructuralError, cost, make_registers, reverse, run


def _grid(width, *extra):
    axes = np.meshgrid(np.arange(1 << width), *[np.arange(k) for k in extra], indexing="ij")
    return [a.ravel() for a in axes]


# --- constant adder -------------------------------------------------------

def test_const_adder_example(kernel_backend):
    regs = make_registers(s=4, e=1)
    res = run(build_const_adder(regs["s"], 5, regs["e"][0]), {regs["s"]: [9], regs["e"]: [1]})
    assert res.read(regs["s"]) == [14]


@pytest.mark.parametrize("width", [1, 2, 3, 4, 5, 6])
def test_const_adder_exhaustive(width, kernel_backend):
    regs = make_registers(s=width, e=1)
    s, e = _grid(width, 2)
    for B in range(1 << width):
        c = build_const_adder(regs["s"], B, regs["e"][0])
        res = run(c, {regs["s"]: s, regs["e"]: e})
        want = np.where(e == 1, (s + B) % (1 << width), s)
        assert res.read(regs["s"]) == list(want)
        assert res.ancillas_clean().all()


def test_const_adder_zero_is_identity():
    regs = make_registers(s=5)
    res = run(build_const_adder(regs["s"], 0), {regs["s"]: np.arange(32)})
    assert res.read(regs["s"]) == list(range(32))


def test_const_adder_range_error():
    regs = make_registers(s=4)
    with pytest.raises(ParameterError):
        build_const_adder(regs["s"], 16)


@pytest.mark.parametrize("width", [8, 16, 32])
def test_const_adder_cost(width):
    regs = make_registers(s=width, e=1)
    n = cost(build_const_adder(regs["s"], (1 << width) - 3, regs["e"][0])).toffoli_count
    assert abs(n - 3 * width) <= 2


# --- modular constant adder -----------------------------------------------

def test_mod_adder_example(kernel_backend):
    regs = make_registers(s=4)
    res = run(build_modular_const_adder(regs["s"], 7, 11), {regs["s"]: [9]})
    assert res.read(regs["s"]) == [5]


def test_mod_adder_zero_identity():
    regs = make_registers(s=4)
    res = run(build_modular_const_adder(regs["s"], 0, 11), {regs["s"]: np.arange(11)})
    assert res.read(regs["s"]) == list(range(11))
    assert res.ancillas_clean().all()


def test_mod_adder_b_too_large():
    regs = make_registers(s=4)
    with pytest.raises(ParameterError):
        build_modular_const_adder(regs["s"], 11, 11)


@pytest.mark.parametrize("width", [2, 3, 4, 5, 6])
def test_mod_adder_exhaustive(width, kernel_backend):
    regs = make_registers(s=width, e=1)
    for N in range(2, 1 << width):
        s, e = _grid(width, 2)
        keep = s < N
        s, e = s[keep], e[keep]
        for B in range(N):
            c = build_modular_const_adder(regs["s"], B, N, enable=regs["e"][0])
            res = run(c, {regs["s"]: s, regs["e"]: e})
            want = np.where(e == 1, (s + B) % N, s)
            assert res.read(regs["s"]) == list(want)
            assert res.ancillas_clean().all()


def test_mod_adder_truncated_error_rate(kernel_backend):
    regs = make_registers(s=16)
    rng = np.random.default_rng(3)
    N, t, trials = 40961, 6, 20000
    B = int(rng.integers(0, N))
    s = rng.integers(0, N, trials)
    res = run(build_modular_const_adder(regs["s"], B, N, ComparePolicy(t)), {regs["s"]: s})
    bad = (np.array(res.read(regs["s"])) != (s + B) % N) | ~res.ancillas_clean()
    assert bad.mean() <= 2 * 2.0**-t


def test_mod_add_value_matches_circuit(kernel_backend):
    regs = make_registers(s=8)
    N, t = 201, 3
    s = np.arange(N)
    for B in (0, 17, 100, 200):
        res = run(build_modular_const_adder(regs["s"], B, N, ComparePolicy(t)), {regs["s"]: s})
        model = [mod_add_value(int(v), B, N, 8, t) for v in s]
        assert res.read(regs["s"]) == [m[0] for m in model]
        assert list(~res.ancillas_clean()) == [bool(m[1]) for m in model]


def test_compare_policy_bounds():
    with pytest.raises(ParameterError):
        ComparePolicy(0).check(4)
    with pytest.raises(ParameterError):
        ComparePolicy(5).check(4)


@given(st.integers(2, 12), st.data())
def test_truncated_error_only_shifts_by_modulus(width, data):
    N = data.draw(st.integers(2, (1 << width) - 1))
    B = data.draw(st.integers(0, N - 1))
    s = data.draw(st.integers(0, N - 1))
    t = data.draw(st.integers(1, width))
    new, _ = mod_add_value(s, B, N, width, t)
    assert new in {(s + B) % N, (s + B) % (1 << width), (s + B - N) % (1 << width)}


# --- quantum + quantum ------------------------------------------------------

def test_qq_adder_example(kernel_backend):
    regs = make_registers(a=4, b=4)
    res = run(build_qq_adder(regs["a"], regs["b"]), {regs["a"]: [3], regs["b"]: [4]})
    assert (res.read(regs["a"]), res.read(regs["b"])) == ([3], [7])


@pytest.mark.parametrize("width", [1, 2, 3, 4, 5, 6])
def test_qq_adder_and_subtractor_exhaustive(width, kernel_backend):
    regs = make_registers(a=width, b=width)
    a, b = _grid(width, 1 << width)
    add = run(build_qq_adder(regs["a"], regs["b"]), {regs["a"]: a, regs["b"]: b})
    assert add.read(regs["b"]) == list((a + b) % (1 << width))
    assert add.read(regs["a"]) == list(a) and add.ancillas_clean().all()
    sub = run(build_qq_subtractor(regs["a"], regs["b"]), {regs["a"]: a, regs["b"]: b})
    assert sub.read(regs["b"]) == list((b - a) % (1 << width))
    assert sub.ancillas_clean().all()


def test_qq_subtractor_example():
    regs = make_registers(a=4, b=4)
    res = run(build_qq_subtractor(regs["a"], regs["b"]), {regs["a"]: [4], regs["b"]: [3]})
    assert res.read(regs["b"]) == [15]


def test_sub_then_add_round_trip(kernel_backend):
    regs = make_registers(a=4, b=4)
    a, b = _grid(4, 16)
    sub = run(build_qq_subtractor(regs["a"], regs["b"]), {regs["a"]: a, regs["b"]: b})
    add = run(build_qq_adder(regs["a"], regs["b"]), {regs["a"]: a, regs["b"]: sub.read(regs["b"])})
    assert add.read(regs["b"]) == list(b)


def test_qq_width_mismatch():
    regs = make_registers(a=4, b=5)
    with pytest.raises(StructuralError):
        build_qq_adder(regs["a"], regs["b"])


@pytest.mark.parametrize("width", [8, 16, 32])
def test_qq_adder_cost(width):
    regs = make_registers(a=width, b=width)
    assert abs(cost(build_qq_adder(regs["a"], regs["b"])).toffoli_count - 2 * width) <= 2
    assert abs(cost(build_qq_subtractor(regs["a"], regs["b"])).toffoli_count - 2 * width) <= 2


# --- layouts ------------------------------------------------------------------

@pytest.mark.parametrize("L,bd,l,depth", [(500, 5, 6, 126), (5000, 6, 7, 149), (50000, 7, 7, 161)])
def test_layout_table(L, bd, l, depth):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lay = choose_addition_layout(L)
    assert (lay.b_dprime, lay.l, lay.depth_formula()) == (bd, l, depth)
    assert lay.b_prime * lay.superblock_len >= L


def test_layout_warns_outside_range():
    with pytest.warns(UserWarning):
        choose_addition_layout(100)


def test_layout_validation():
    with pytest.raises(ParameterError):
        AdditionLayout(64, 1, 4, 4, 16)
    with pytest.raises(ParameterError):
        AdditionLayout(64, 4, 4, 4, 15)


@given(st.integers(1 << 9, 1 << 25))
def test_layout_invariants(L):
    lay = choose_addition_layout(L)
    assert lay.b_prime * lay.b_dprime * lay.l >= L
    assert lay.b_dprime >= 1 and lay.l >= 1
    target = adders.target_superblock_len(L)
    # the table rule rounds l, so the product can fall short of the target by < b''/2
    assert target - lay.superblock_len < lay.b_dprime / 2 + 1e-9


# --- carry select -------------------------------------------------------------

def _cs_circuit(width, A, lay):
    regs = make_registers(a=width, e=1)
    return regs, build_carry_select_adder(regs["a"], A, regs["e"][0], lay)


@pytest.mark.parametrize("width,bd,l", [(4, 1, 2), (5, 2, 1), (6, 2, 2), (6, 1, 3)])
def test_carry_select_matches_value_model_exhaustive(width, bd, l, kernel_backend):
    lay = AdditionLayout.from_blocks(width, bd, l)
    a, e = _grid(width, 2)
    for A in range(1 << width):
        regs, c = _cs_circuit(width, A, lay)
        res = run(c, {regs["a"]: a, regs["e"]: e})
        model = [carry_select_add_value(int(x), A, width, lay) for x in a]
        assert res.read(regs["a"]) == list(np.where(e == 1, model, a))
        # garbage remains exactly when a guess fails in the forward or the clearing pass
        mask = (1 << width) - 1
        guesses_hold = [
            m == (x + A) & mask and carry_select_add_value(m, -A & mask, width, lay) == x
            for x, m in zip(a, model)
        ]
        assert list(res.ancillas_clean()) == list((e == 0) | np.array(guesses_hold))


def test_carry_select_exact_with_single_superblock(kernel_backend):
    lay = AdditionLayout.from_blocks(6, 3, 2)
    a, e = _grid(6, 2)
    for A in (1, 22, 63):
        regs, c = _cs_circuit(6, A, lay)
        res = run(c, {regs["a"]: a, regs["e"]: e})
        assert res.read(regs["a"]) == list(np.where(e == 1, (a + A) % 64, a))


def test_carry_select_disabled(kernel_backend):
    lay = AdditionLayout.from_blocks(64, 4, 4)
    rng = np.random.default_rng(0)
    a = [int(v) for v in rng.integers(0, 2**63, 200)]
    regs, c = _cs_circuit(64, 0xDEADBEEF12345, lay)
    res = run(c, {regs["a"]: a, regs["e"]: [0] * 200})
    assert res.read(regs["a"]) == a and res.ancillas_clean().all()


def test_carry_select_toy_error_rate(kernel_backend):
    lay = AdditionLayout.from_blocks(64, 4, 4)
    rng = np.random.default_rng(11)
    A = int(rng.integers(0, 2**63)) * 2 + 1
    a = [int(v) * 2 + int(w) for v, w in zip(rng.integers(0, 2**63, 10_000), rng.integers(0, 2, 10_000))]
    regs, c = _cs_circuit(64, A, lay)
    res = run(c, {regs["a"]: a, regs["e"]: [1] * len(a)})
    wrong = np.array([got != (x + A) % 2**64 for got, x in zip(res.read(regs["a"]), a)])
    failed = np.mean(wrong | ~res.ancillas_clean())
    # per-superblock failure 2**-16, four superblocks, two passes
    assert failed <= 2 * 4 * 2.0**-16 + 3 * np.sqrt(8 * 2.0**-16 / len(a))


@given(st.integers(1, 40), st.integers(1, 4), st.integers(1, 6), st.data())
def test_carry_select_value_model_bound(width, bd, l, data):
    lay = AdditionLayout.from_blocks(width, bd, l)
    x = data.draw(st.integers(0, (1 << width) - 1))
    y = data.draw(st.integers(0, (1 << width) - 1))
    got = carry_select_add_value(x, y, width, lay)
    if lay.b_prime == 1:
        assert got == (x + y) % (1 << width)
    # a wrong guess only drops a carry into a superblock boundary
    diff = ((x + y) - got) % (1 << width)
    m = lay.superblock_len
    assert all(((diff >> k) & 1) == 0 or k % m == 0 for k in range(width)) or diff % (1 << m) == 0


def test_carry_select_qq_add_and_sub(kernel_backend):
    lay = AdditionLayout.from_blocks(6, 2, 2)
    bld = CircuitBuilder()
    x = bld.input("x", 6)
    y = bld.input("y", 6)
    out = adders.emit_carry_select_qq_add(bld, x.wires, y.wires, lay, carry_out=True)
    from revshor.revsim import Register

    bld.name(Register("sum", tuple(out)))
    c = bld.build()
    xs, ys = _grid(6, 64)
    res = run(c, {x: xs, y: ys})
    model = [carry_select_add_value(int(p), int(q), 6, lay, carry_out=True) for p, q in zip(xs, ys)]
    assert res.read(out) == model
    assert res.ancillas_clean().all()


# --- running sum ------------------------------------------------------------------

def _running_sum_run(constants, controls, N, spw):
    bld = CircuitBuilder()
    ctl = bld.input("ctl", len(constants))
    s = adders.emit_running_sum_modular(bld, list(zip(constants, ctl.wires)), N, spw)
    c = bld.build()
    return c, ctl, s


def test_running_sum_single_summand(kernel_backend):
    N = 221
    c, ctl, s = _running_sum_run([200], None, N, 9)
    res = run(c, {ctl: [1, 0]})
    assert res.read(s) == [200, 0]
    assert res.ancillas_clean().all()


def test_running_sum_all_clear(kernel_backend):
    rng = np.random.default_rng(5)
    N = 1009
    consts = [int(v) for v in rng.integers(0, N, 8)]
    c, ctl, s = _running_sum_run(consts, None, N, 18)
    res = run(c, {ctl: [0]})
    assert res.read(s) == [0] and res.ancillas_clean().all()


def test_running_sum_small_matches_oracle(kernel_backend):
    rng = np.random.default_rng(8)
    N = 1009
    consts = [int(v) for v in rng.integers(0, N, 8)]
    c, ctl, s = _running_sum_run(consts, None, N, 18)
    masks = np.arange(256)
    res = run(c, {ctl: masks})
    want = [sum(cv for j, cv in enumerate(consts) if (m >> j) & 1) % N for m in masks]
    model = [running_sum_value(consts, [(m >> j) & 1 for j in range(8)], N, 18) for m in masks]
    assert res.read(s) == model
    assert np.mean(np.array(model) != np.array(want)) <= 0.01
    assert res.ancillas_clean().all()


@pytest.mark.slow
def test_running_sum_l32_monte_carlo(kernel_backend):
    rng = np.random.default_rng(21)
    N = int(rng.integers(2**31, 2**32)) | 1
    consts = [int(v) for v in rng.integers(0, N, 32)]
    c, ctl, s = _running_sum_run(consts, None, N, 9 + 3 * 5)
    trials = 1000
    masks = [int(v) for v in rng.integers(0, 2**32, trials, dtype=np.uint64)]
    res = run(c, {ctl: masks})
    want = [sum(cv for j, cv in enumerate(consts) if (m >> j) & 1) % N for m in masks]
    assert np.mean(np.array(res.read(s), dtype=object) != np.array(want, dtype=object)) <= 0.01
    assert res.ancillas_clean().all()


def test_running_sum_empty_schedule():
    c = build_running_sum_modular([], 11, 9)
    assert cost(c).toffoli_count == 0


def test_running_sum_narrow_register_rejected():
    with pytest.raises(ParameterError):
        adders.plan_running_sum([1] * 32, 101, 10)


def test_builders_reverse_cleanly(kernel_backend):
    regs = make_registers(s=6, e=1)
    c = build_modular_const_adder(regs["s"], 13, 50, enable=regs["e"][0])
    s, e = _grid(6, 2)
    keep = s < 50
    fwd = run(c, {regs["s"]: s[keep], regs["e"]: e[keep]})
    back = run(reverse(c), {regs["s"]: fwd.read(regs["s"]), regs["e"]: e[keep]})
    assert back.read(regs["s"]) == list(s[keep])
