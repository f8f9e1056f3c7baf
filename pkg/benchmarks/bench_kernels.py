"""Time the compiled and pure-Python kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from corrdyn import kernels
from corrdyn.correlation import averaged_generator
from corrdyn.ensemble import raw_stream
from corrdyn.network import hamiltonian, paper_example_network
from corrdyn.propagator import exp_hermitian
from corrdyn.states import CANONICAL_STATES, build_initial_g4


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    net = paper_example_network()
    gen = averaged_generator(net).matrix
    y0 = build_initial_g4(CANONICAL_STATES["i"], 3).g4.matrix.ravel()
    yield "rk4 G4 (81x81 CSR, 10k steps)", lambda: kernels.rk4(gen, y0, 1e-3, 10_000)

    ham = hamiltonian(net)
    h = 1e-2
    raw = np.stack([raw_stream(1, j, 1000, 3) for j in range(256)])
    args = (exp_hermitian(ham, h / 2), exp_hermitian(ham, h), np.sqrt(np.full(3, 2.0) * h), raw)
    yield "phase split (256 traj x 1000 steps)", lambda: kernels.phase_split(*args)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not kernels.compiled_available():
        print("compiled extension not built; only the python backend is timed")
    print(f"{'kernel':40s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases():
        with kernels.use_backend("python"):
            t_py, out_py = best_of(fn, args.repeat)
        if kernels.compiled_available():
            with kernels.use_backend("compiled"):
                t_c, out_c = best_of(fn, args.repeat)
            diff = float(np.abs(out_py - out_c).max())
            print(f"{name:40s} {t_py:11.3f} {t_c:13.3f} {t_py / t_c:7.1f}x {diff:11.1e}")
        else:
            print(f"{name:40s} {t_py:11.3f} {'-':>13s}")


if __name__ == "__main__":
    main()
