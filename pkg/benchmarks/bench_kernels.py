"""Compare the compiled and pure-Python simulation kernels.

Usage: ``python benchmarks/bench_kernels.py [--trials 4096] [--repeat 5]``

Both kernels run the same gate columns on the same packed state; the
script checks the results agree and prints the best time of each.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from revshor import _kernels_py, pipeline
from revshor.revsim import new_state

try:
    from revshor import _kernels as compiled
except ImportError:
    compiled = None


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    circuit = pipeline.build_modexp_circuit(7, 221, 8)
    rng = np.random.default_rng(0)
    base = new_state(circuit, args.trials)
    base[:] = rng.integers(0, 2**63, size=base.shape, dtype=np.uint64)
    cols = (circuit.c1, circuit.c2, circuit.tgt, circuit.flags)
    print(f"circuit: {len(circuit)} gates, {circuit.wire_count} wires, {args.trials} trials")

    impls = [("python", _kernels_py)] + ([("cython", compiled)] if compiled else [])
    results = {}
    for name, mod in impls:
        state = base.copy()
        mod.simulate_packed(*cols, state)
        results[name] = state
        sim = min(timeit.repeat(lambda: mod.simulate_packed(*cols, base.copy()), number=1, repeat=args.repeat))
        depth = min(timeit.repeat(lambda: mod.asap_depth(circuit.c1, circuit.c2, circuit.tgt, circuit.wire_count),
                                  number=1, repeat=args.repeat))
        print(f"{name:>7}: simulate {sim * 1e3:9.2f} ms   depth {depth * 1e3:9.2f} ms")
    if compiled is None:
        print("compiled kernel not built; only the fallback was timed")
    else:
        same = np.array_equal(results["python"], results["cython"])
        print(f"states agree: {same}")


if __name__ == "__main__":
    main()
