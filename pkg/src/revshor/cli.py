"""Command-line front end: ``estimate``, ``sweep``, ``validate`` and ``demo-factor``.

Exit codes: 0 on success, 1 when a validation check fails, 2 on bad usage.
A ``--config FILE`` of ``key=value`` lines supplies defaults for the chosen
subcommand; explicit flags override it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict
from typing import Sequence

import numpy as np

from . import cost as costmod
from .adders import ParameterError

ALGORITHM_FLAGS = {"std": "standard", "paradd": "parallel_add", "fft2": "fft2"}
CSV_FIELDS = ["L", "algorithm", "S", "T", "T_p", "wall_days"]


class UsageError(Exception):
    pass


def _params_summary(est: costmod.ResourceEstimate) -> str:
    p = est.params
    if p is None:
        return ""
    if isinstance(p, tuple):
        p1, p2 = p
        return f"b={p1.b} l_tilde={p1.l_tilde} b'={p2.b_prime} l_tilde'={p2.l_tilde_prime}"
    return f"b'={p.b_prime} b''={p.b_dprime} l={p.l}"


def report_row(flag: str, est: costmod.ResourceEstimate, toffoli_us: float) -> dict:
    return {
        "L": est.L,
        "algorithm": flag,
        "S": est.S,
        "T": est.T,
        "T_p": est.T_p,
        "wall_days": est.wall_days(toffoli_us),
        "params": _params_summary(est),
    }


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render(rows: list[dict], fmt: str, footer: Sequence[str] = ()) -> str:
    if fmt == "json":
        return json.dumps({"rows": rows, "notes": list(footer)}, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in CSV_FIELDS])
        for line in footer:
            buf.write(f"# {line}\n")
        return buf.getvalue()
    lines = []
    for r in rows:
        lines.append(
            f"L={r['L']:<10} {r['algorithm']:<7} S={_fmt(r['S']):<12} T={_fmt(r['T']):<16} "
            f"T_p={_fmt(r['T_p']):<16} days={_fmt(r['wall_days'])}  {r.get('params', '')}".rstrip()
        )
    lines.extend(footer)
    return "\n".join(lines) + "\n"


def _estimate_rows(L: int, flags: Sequence[str], epsilon: float, toffoli_us: float) -> list[dict]:
    rows = []
    for flag in flags:
        try:
            est = costmod.estimate(ALGORITHM_FLAGS[flag], L, epsilon)
        except ParameterError:
            continue
        rows.append(report_row(flag, est, toffoli_us))
    return rows


def cmd_estimate(args) -> int:
    if args.bits < 16:
        raise UsageError("--bits must be at least 16")
    flags = list(ALGORITHM_FLAGS) if args.algorithm == "all" else [args.algorithm]
    rows = _estimate_rows(args.bits, flags, args.epsilon, args.toffoli_us)
    if not rows:
        raise UsageError(f"no estimator covers L={args.bits} for {args.algorithm}")
    sys.stdout.write(render(rows, args.format))
    return 0


def cmd_sweep(args) -> int:
    if args.points_per_octave < 1 or args.to_log2 < args.from_log2:
        raise UsageError("empty range")
    grid = costmod.log_grid(args.from_log2, args.to_log2, args.points_per_octave)
    rows, fft_est = [], []
    for L in grid:
        rows.extend(_estimate_rows(L, list(ALGORITHM_FLAGS), args.epsilon, args.toffoli_us))
        try:
            est = costmod.fft_cost(L)
        except ParameterError:
            continue
        fft_est.append(est)
        zz = costmod.zigzag_parallel_cost(L, est.S, args.epsilon)
        rows.append({"L": L, "algorithm": "zigzag", "S": est.S, "T": None, "T_p": zz,
                     "wall_days": zz * args.toffoli_us / costmod.MICROSECONDS_PER_DAY, "params": ""})
    if not rows:
        raise UsageError("empty range")
    footer = []
    if fft_est:
        cross = costmod.find_crossover([e.L for e in fft_est])
        footer.append(f"crossover L={cross.L} at_boundary={cross.at_boundary}")
    if len(fft_est) >= 10:
        fT = costmod.fit_powerlaw(fft_est, "T")
        fP = costmod.fit_powerlaw(fft_est, "T_p")
        footer.append(f"fit fft2 T exponent={fT.exponent:.3f} prefactor_log2={fT.prefactor_log2:.2f}")
        footer.append(f"fit fft2 T_p exponent={fP.exponent:.3f} prefactor_log2={fP.prefactor_log2:.2f}")
    sys.stdout.write(render(rows, args.format, footer))
    return 0


def _validate_adders(trials: int, seed: int) -> list[dict]:
    from . import adders
    from .revsim import make_registers, run

    rng = np.random.default_rng(seed)
    checks = []
    for width in (3, 4):
        regs = make_registers(s=width)
        vals = np.arange(1 << width)
        ok = True
        for B in range(1 << width):
            c = adders.build_const_adder(regs["s"], B)
            res = run(c, {regs["s"]: vals})
            ok &= res.read(regs["s"]) == [(v + B) % (1 << width) for v in vals]
            ok &= bool(res.ancillas_clean().all())
        checks.append({"name": f"const_add_exhaustive_w{width}", "passed": bool(ok)})
    width, N = 16, 40961
    regs = make_registers(s=width)
    s = rng.integers(0, N, trials)
    B = int(rng.integers(0, N))
    c = adders.build_modular_const_adder(regs["s"], B, N)
    res = run(c, {regs["s"]: s})
    ok = res.read(regs["s"]) == [(int(v) + B) % N for v in s] and bool(res.ancillas_clean().all())
    checks.append({"name": "mod_add_random_w16", "passed": bool(ok), "trials": trials})
    regs = make_registers(a=width, b=width)
    a, b = rng.integers(0, 1 << width, trials), rng.integers(0, 1 << width, trials)
    res = run(adders.build_qq_adder(regs["a"], regs["b"]), {regs["a"]: a, regs["b"]: b})
    ok = res.read(regs["b"]) == [(int(x) + int(y)) % (1 << width) for x, y in zip(a, b)]
    checks.append({"name": "qq_add_random_w16", "passed": bool(ok), "trials": trials})
    return checks


def _validate_fft(trials: int, seed: int) -> list[dict]:
    import random

    from . import fftmul, ringfft

    rng = random.Random(seed)
    checks = []
    ring = ringfft.RingModulus(4)
    plan = ringfft.FftPlan.for_ring(ring, 8, 1)
    ok = True
    for _ in range(trials):
        v = [rng.randrange(ring.M) for _ in range(8)]
        ok &= ringfft.ifft(ringfft.fft(v, plan), plan) == v
    checks.append({"name": "fft_round_trip", "passed": bool(ok), "trials": trials})
    ok = all(ringfft.crt_recombine(x % 5, x % 17, 2) == x for x in range(85))
    checks.append({"name": "crt_exhaustive_n2", "passed": ok})
    p1 = fftmul.select_level1(512)
    ok = True
    for _ in range(min(trials, 200)):
        a, b = rng.getrandbits(512), rng.getrandbits(512)
        ok &= fftmul.multiply_2level(a, b, p1)[0] == a * b
    checks.append({"name": "multiply_2level_L512", "passed": bool(ok), "trials": min(trials, 200)})
    return checks


def _validate_errors(trials: int, seed: int) -> list[dict]:
    from . import errormodel as em

    recs = [
        em.trunc_compare_mc(64, 8, max(trials, 10_000), seed),
        em.superblock_carry_mc(8, max(trials, 10_000), seed),
    ]
    out = [dict(asdict(r), passed=r.within_band) for r in recs]
    mod = em.modexp_error_mc(24, 0.01, min(max(trials, 1000), 10_000), seed)
    # the 95% upper confidence limit must stay inside the budget
    out.append(dict(asdict(mod), passed=mod.band[1] <= mod.epsilon))
    return out


SUITES = {"adders": _validate_adders, "fft": _validate_fft, "errors": _validate_errors}


def cmd_validate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    names = list(SUITES) if args.suite == "all" else [args.suite]
    report = {"seed": args.seed, "trials": args.trials, "suites": {}}
    passed = True
    for name in names:
        checks = SUITES[name](args.trials, args.seed)
        report["suites"][name] = checks
        passed &= all(c["passed"] for c in checks)
    report["passed"] = passed
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n")
    return 0 if passed else 1


def cmd_demo_factor(args) -> int:
    from .pipeline import factor_demo

    try:
        res = factor_demo(args.n, args.trials, args.seed)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    if res.factor is None:
        print(f"N={res.N} no factor found after {res.attempts} attempts")
        return 1
    print(f"N={res.N} factor={res.factor} cofactor={res.N // res.factor} attempts={res.attempts} "
          f"base={res.base} period={res.period} method={res.method}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revshor", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="resource estimate for one bit-length")
    est.add_argument("--bits", type=int, required=True)
    est.add_argument("--algorithm", choices=[*ALGORITHM_FLAGS, "all"], default="all")
    est.set_defaults(func=cmd_estimate)

    sw = sub.add_parser("sweep", help="CSV rows over a logarithmic grid of bit-lengths")
    sw.add_argument("--from-log2", type=float, default=9)
    sw.add_argument("--to-log2", type=float, default=25)
    sw.add_argument("--points-per-octave", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    for p, fmt in ((est, "text"), (sw, "csv")):
        p.add_argument("--epsilon", type=float, default=0.01)
        p.add_argument("--toffoli-us", type=float, default=1.0)
        p.add_argument("--format", choices=["json", "csv", "text"], default=fmt)

    val = sub.add_parser("validate", help="oracle and sampling checks")
    val.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    val.add_argument("--trials", type=int, default=1000)
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(func=cmd_validate)

    demo = sub.add_parser("demo-factor", help="toy factoring with sampled readout")
    demo.add_argument("--n", type=int, required=True)
    demo.add_argument("--trials", type=int, default=10)
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=cmd_demo_factor)
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {raw.rstrip()}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], config: dict[str, str]) -> None:
    """Turn config entries into defaults of the chosen subparser, typed like the flags."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub_action.choices), None)
    if command is None:
        return
    sp = sub_action.choices[command]
    defaults = {}
    for action in sp._actions:
        if action.dest in config:
            raw = config[action.dest]
            value = action.type(raw) if action.type else raw
            if action.choices and value not in action.choices:
                raise UsageError(f"config value {raw!r} not allowed for {action.dest}")
            defaults[action.dest] = value
            action.required = False
    sp.set_defaults(**defaults)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--config")
    pre, _ = pre_parser.parse_known_args(argv)
    try:
        if pre.config:
            _apply_config(parser, argv, read_config(pre.config))
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except (UsageError, ParameterError, OSError, ValueError) as exc:
        print(f"revshor: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
