"""Compare the compiled and numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--modes 65536] [--repeat 20]

Each kernel runs on identical random inputs in both backends. The script
checks that outputs agree, then prints the best-of-N time per call. A
final row times a full Swift-Hohenberg step with the backend selected at
import, in a fresh interpreter per backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from amplituder.solver.kernels import backends

STEP_SNIPPET = """
import timeit
import numpy as np
from amplituder.solver import BACKEND, Grid, NonlinearTerm, SpectralSystem, fft, step
from amplituder.symbols import MatrixPolynomial, PolynomialNonlinearity
P = MatrixPolynomial.scalar(1, {{(4,): -1.0, (2,): -2.0, (0,): -1.0}})
f = NonlinearTerm.from_nonlinearity(PolynomialNonlinearity(1, {{(1,): 1.0, (3,): -1.0}}))
g = Grid((2 * np.pi * 64,), ({n},))
s = SpectralSystem.build(P, f, g, 0.5, 0.01)
u = fft(np.cos(g.mesh[0])[None].astype(complex))
t = min(timeit.repeat(lambda: step(u, s), number=1, repeat={repeat}))
print(BACKEND, t)
"""


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def kernel_cases(rng, n, m=2):
    a = lambda *s: random_complex(rng, s)  # noqa: E731
    exps = np.array([[1, 0], [3, 0], [1, 2], [0, 1]], dtype=np.int64)
    return {
        "etd_stage_diag": (a(1, n), a(1, n), a(1, n), a(1, n), 0.01, np.empty((1, n), complex)),
        "etd_correct_diag": (a(1, n), a(1, n), a(1, n), a(1, n), 0.01, np.empty((1, n), complex)),
        "etd_stage": (a(m, m, n), a(m, m, n), a(m, n), a(m, n), 0.01, np.empty((m, n), complex)),
        "etd_correct": (a(m, n), a(m, m, n), a(m, n), a(m, n), 0.01, np.empty((m, n), complex)),
        "poly_eval": (exps, a(len(exps), m), a(m, n), np.empty((m, n), complex)),
    }


def bench(modes: int, repeat: int) -> list[tuple[str, dict]]:
    impls = backends()
    rng = np.random.default_rng(0)
    rows = []
    for name, args in kernel_cases(rng, modes).items():
        times, outs = {}, {}
        for backend, mod in impls.items():
            fn = getattr(mod, name)
            work = [x.copy() if isinstance(x, np.ndarray) else x for x in args]
            outs[backend] = fn(*work).copy()
            times[backend] = min(timeit.repeat(lambda: fn(*work), number=1, repeat=repeat))
        ref = outs["python"]
        for backend, out in outs.items():
            if not np.allclose(out, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max()):
                raise AssertionError(f"{name}: {backend} disagrees with the numpy kernel")
        rows.append((name, times))
    return rows


def bench_step(modes: int, repeat: int) -> dict:
    times = {}
    for pure in ("1", "0"):
        env = dict(os.environ, AMPLITUDER_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", STEP_SNIPPET.format(n=modes, repeat=repeat)],
                             env=env, capture_output=True, text=True, check=True)
        backend, t = res.stdout.split()
        times[backend] = float(t)
    return times


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--modes", type=int, default=65536)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args(argv)
    rows = bench(args.modes, args.repeat)
    rows.append(("step (full system)", bench_step(args.modes, args.repeat)))
    print(f"{'kernel':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, t in rows:
        py, cy = t.get("python"), t.get("cython")
        if cy is None:
            print(f"{name:<22}{py * 1e3:>14.3f}{'n/a':>14}{'':>10}")
        else:
            print(f"{name:<22}{py * 1e3:>14.3f}{cy * 1e3:>14.3f}{py / cy:>9.2f}x")


if __name__ == "__main__":
    main()
