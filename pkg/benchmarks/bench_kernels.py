"""Compare the compiled and pure-Python zoGD kernels on the same inputs.

    python benchmarks/bench_kernels.py [--replicas 50] [--steps 2000] [--dim 50]
"""
import argparse
import time

import numpy as np

from gradfree import _kernels_py
from gradfree._backend import COMPILED
from gradfree.zogd import sample_sphere


def make_inputs(replicas, steps, d, diag, seed=0):
    rng = np.random.default_rng(seed)
    if diag:
        A = np.geomspace(1.0, 100.0, d)
    else:
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        A = q @ np.diag(np.geomspace(1.0, 100.0, d)) @ q.T
        A = np.ascontiguousarray((A + A.T) / 2)
    return dict(
        X=np.full((replicas, d), 10 / np.sqrt(d)),
        x_star=np.zeros(d),
        A=A,
        is_diag=diag,
        E=sample_sphere(d, rng, size=replicas * steps).reshape(replicas, steps, d),
        XI=rng.standard_normal((replicas, steps, 2)),
        gammas=np.full(steps, 1 / (d * 100.0)),
        taus=np.full(steps, 1.0),
    )


def run(mod, inputs, repeat):
    best = np.inf
    for _ in range(repeat):
        X = inputs["X"].copy()
        R, c = inputs["E"].shape[:2]
        dist, gnorm = np.empty((R, c)), np.empty((R, c))
        t0 = time.perf_counter()
        mod.zogd_quadratic_chunk(X, inputs["x_star"], inputs["A"], inputs["is_diag"],
                                 inputs["E"], inputs["XI"], inputs["gammas"], inputs["taus"],
                                 dist, gnorm, None)
        best = min(best, time.perf_counter() - t0)
    return best, X


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicas", type=int, default=50)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not COMPILED:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    from gradfree import _kernels

    steps_total = args.replicas * args.steps
    print(f"{args.replicas} replicas x {args.steps} steps, d = {args.dim}")
    print(f"{'matrix':8s} {'backend':8s} {'seconds':>9s} {'us/step':>9s} {'speedup':>8s}")
    for diag in (True, False):
        inputs = make_inputs(args.replicas, args.steps, args.dim, diag)
        t_py, x_py = run(_kernels_py, inputs, args.repeat)
        t_cy, x_cy = run(_kernels, inputs, args.repeat)
        assert np.allclose(x_py, x_cy, rtol=1e-10, atol=1e-12), "backends disagree"
        label = "diag" if diag else "dense"
        for name, t in (("python", t_py), ("cython", t_cy)):
            print(f"{label:8s} {name:8s} {t:9.3f} {1e6 * t / steps_total:9.2f} "
                  f"{t_py / t:8.1f}x")


if __name__ == "__main__":
    main()
