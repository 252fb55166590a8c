"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--repeat N]

Each case runs once per backend on identical inputs; the outputs are
compared before timings are reported.
"""
import argparse
import timeit

import numpy as np

from flexjoint import _kernels_py
from flexjoint.nonlinear import FrictionParams, HysteresisParams, joint_vector
from flexjoint.plant import PlantParams, PlantState

try:
    from flexjoint import _kernels as compiled
except ImportError:
    compiled = None

P = PlantParams().packed()
JOINT = joint_vector(FrictionParams(), HysteresisParams())
S0 = PlantState.at_rest([0.0, 0.0]).as_vector()
TAU = 60.0 * np.sin(np.linspace(0, 4 * np.pi, 5000))
DELTA = 0.25 * np.sin(np.linspace(0, 4 * np.pi, 5000))

CASES = {
    # 0.1 s of free fall: 1000 RK4 steps of the 12-state plant
    "integrate 1000 steps": lambda m: m.integrate(S0.copy(), np.zeros(2), P, 1e-4, 10, 100),
    "inverse_path 5000 samples": lambda m: m.inverse_path(TAU, 0.0, 0.0, 0.0, JOINT),
    "advance_path 5000 samples": lambda m: m.advance_path(DELTA, 0.0, 0.0, 0.0, JOINT),
    "march_rate 5000 steps": lambda m: m.march_rate(np.gradient(DELTA) * 1e4, 1e-4, 0.0, 0.0, JOINT),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; only pure-Python timings")
    print(f"{'case':<28}{'python ms':>12}{'compiled ms':>14}{'speed-up':>10}")
    for name, fn in CASES.items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<28}{t_py:>12.2f}{'-':>14}{'-':>10}")
            continue
        a, b = fn(_kernels_py), fn(compiled)
        for x, y in zip(np.atleast_1d(a) if not isinstance(a, tuple) else a,
                        np.atleast_1d(b) if not isinstance(b, tuple) else b):
            assert np.allclose(x, y, rtol=1e-10, atol=1e-12), name
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<28}{t_py:>12.2f}{t_c:>14.3f}{t_py / t_c:>9.0f}x")


if __name__ == "__main__":
    main()
