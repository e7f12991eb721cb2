"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed with ``-s`` and collected in the
terminal summary) and then asserts, so a failure is visible both ways.
"""
import math
import time

import numpy as np
import pytest

from gradfree.geometry import Box, build_grid, max_edge
from gradfree.harness import PRESETS, run_preset
from gradfree.oracles import (GoodClassParams, Levy2D, NoisyQuadratic, OracleHandle,
                              OscillatingParabola, SyntheticVeryGood)
from gradfree.solvers import (DirectionBbsConfig, MultiBbsConfig, direction_bbs, multi_bbs,
                              required_iterations)
from gradfree.suite import (corollary3_contraction, dirbbs_retention, multibbs_retention,
                            sphere_identities, theorem3_one_step)
from gradfree.zogd import ZogdConfig, noise_floor, zogd_run

TOL = 1 + 1e-12


def ratios(trace):
    return [max_edge(r.box_before) / max_edge(r.box_after) for r in trace.iterations]


def test_1_fig3a_multibbs_oscillating(record_criterion):
    box, eps = Box([0.0], [6.5]), 1e-6
    t0 = time.perf_counter()
    traces = {a: multi_bbs(OracleHandle(OscillatingParabola()), box,
                           MultiBbsConfig(eps, GoodClassParams(10.0, 600.0), a))
              for a in (1.5, 2.0, 3.0, 4.0)}
    elapsed = time.perf_counter() - t0
    errors = {a: abs(t.final_point[0] - 2.0) for a, t in traces.items()}
    worst = {a: min(ratios(t)) for a, t in traces.items()}
    iters = {a: (len(t.iterations), required_iterations(box, eps, a)) for a, t in traces.items()}
    ok = (all(e <= 1e-6 for e in errors.values())
          and all(worst[a] * TOL >= a for a in worst)
          and all(used <= bound for used, bound in iters.values())
          and elapsed < 1.0)
    record_criterion("1 fig3a", ok,
                     f"max error {max(errors.values()):.2e}, iterations/bound {iters}, "
                     f"{elapsed:.3f} s")
    assert ok


def test_2_fig3b_multibbs_levy(record_criterion):
    h = OracleHandle(Levy2D())
    t0 = time.perf_counter()
    trace = multi_bbs(h, Box.cube(-10, 10, 2),
                      MultiBbsConfig(1e-4, GoodClassParams(1.0, 150.0), 2.0))
    elapsed = time.perf_counter() - t0
    err = float(np.linalg.norm(trace.final_point - [3.7, 1.3]))
    value = OracleHandle(Levy2D()).eval(trace.final_point)
    ok = trace.n == 36 and err <= 1e-3 and value < 1e-5 and elapsed < 60
    record_criterion("2 fig3b", ok, f"n={trace.n}, error {err:.2e}, f={value:.2e}, "
                     f"{elapsed:.3f} s")
    assert ok


@pytest.mark.parametrize("d, x_star, eps", [
    (2, [1.43, 3.69], 1e-5),
    (10, np.ones(10), 1e-4),
    (100, np.ones(100), 1e-4),
])
def test_3_direction_bbs_synthetic(record_criterion, d, x_star, eps):
    box = Box.cube(-10, 10, d)
    h = OracleHandle(SyntheticVeryGood(20.0, x_star, seed=0))
    t0 = time.perf_counter()
    trace = direction_bbs(h, box, DirectionBbsConfig(eps))
    elapsed = time.perf_counter() - t0
    worst = min(ratios(trace))
    bound = required_iterations(box, 2 * eps, 1.5)
    calls_ok = all(r.oracle_calls_this_iter == 16 * d for r in trace.iterations)
    ok = worst * TOL >= 1.5 and calls_ok
    if d == 100:
        ok = ok and len(trace.iterations) <= bound and elapsed < 10
    record_criterion(f"3 dirbbs d={d}", ok,
                     f"min ratio {worst:.12g}, {len(trace.iterations)} outer iterations "
                     f"(bound {bound}), calls/iter {16 * d} exact={calls_ok}, {elapsed:.2f} s")
    assert ok


@pytest.fixture(scope="module")
def fig7_result(tmp_path_factory):
    t0 = time.perf_counter()
    result = run_preset("fig7", tmp_path_factory.mktemp("fig7"))
    return result, time.perf_counter() - t0


def test_4_fig7_zogd_sigma_sweep(record_criterion, fig7_result):
    result, elapsed = fig7_result
    d, mu, big_l = 50, 1.0, 100.0
    gamma = 1 / (d * big_l)
    sigmas = [cfg.objective.sigma for cfg in PRESETS["fig7"].build(0)]
    assert sigmas == [1, 2, 5, 10, 20, 100]
    plateaus, floors = [], []
    for sigma, s in zip(sigmas, result.summaries):
        batch = s.trace
        assert len(batch.seeds) >= 50 and batch.steps == 50_000
        mean = batch.mean_distances_sq
        plateaus.append(float(np.mean(mean[-len(mean) // 5:])))
        floors.append(noise_floor(d, gamma, sigma, mu))
    below = all(p <= 10 * f for p, f in zip(plateaus, floors))
    monotone = all(a < b for a, b in zip(plateaus, plateaus[1:]))
    ok = len(plateaus) == 6 and below and monotone and elapsed < 120
    record_criterion("4 fig7", ok,
                     "plateau/floor " + ", ".join(f"{p / f:.2e}" for p, f in zip(plateaus, floors))
                     + f"; monotone={monotone}; {elapsed:.1f} s")
    assert ok


def test_5_corollary3_contraction(record_criterion):
    (check,) = corollary3_contraction(seed=0, d=10, steps=2000, repeats=100)
    record_criterion("5 linear contraction", check.passed, check.detail)
    assert check.passed


def test_6_sphere_identities(record_criterion):
    checks = sphere_identities(seed=0, samples=10**6, dims=(2, 10, 50))
    ok = all(c.passed for c in checks)
    record_criterion("6 identities", ok, "; ".join(c.detail for c in checks))
    assert ok


def test_7_theorem3_one_step(record_criterion):
    (check,) = theorem3_one_step(seed=0, samples=10**4, sigma=1.0)
    record_criterion("7 one-step bound", check.passed,
                     f"smallest relative slack to 1.05 x bound {check.margin:.3f}")
    assert check.passed


def test_8_solution_retention(record_criterion):
    good = {c.name: c for c in multibbs_retention(seed=0, instances=10)}
    very = {c.name: c for c in dirbbs_retention(seed=0, instances=10)}
    ok = (good["multibbs_class_verified"].passed and good["multibbs_retention"].passed
          and very["dirbbs_class_verified"].passed and very["dirbbs_retention"].passed)
    record_criterion("8 retention", ok, f"{good['multibbs_retention'].detail}; "
                     f"{very['dirbbs_retention'].detail}")
    assert ok


def test_9_call_accounting(record_criterion):
    h = OracleHandle(Levy2D())
    mt = multi_bbs(h, Box([-10.0, -5.0], [10.0, 5.0]),
                   MultiBbsConfig(1e-4, GoodClassParams(1.0, 150.0), 2.0))
    multi_ok = all(r.oracle_calls_this_iter
                   == math.prod(c + 1 for c in build_grid(r.box_before, mt.n).counts)
                   for r in mt.iterations) and h.call_count == mt.total_calls
    h = OracleHandle(SyntheticVeryGood(20.0, np.ones(7), seed=1))
    dt = direction_bbs(h, Box.cube(-10, 10, 7), DirectionBbsConfig(1e-4, n_points=20))
    dir_ok = (all(r.oracle_calls_this_iter == 7 * 21 for r in dt.iterations)
              and h.call_count == dt.total_calls)
    h = OracleHandle(NoisyQuadratic(np.diag([1.0, 5.0]), [0.0, 0.0], sigma=1.0))
    zt = zogd_run(h, [1.0, 1.0], ZogdConfig(1234, 0.01, 0.5))
    z_ok = h.call_count == zt.total_calls == 2 * 1234
    ok = multi_ok and dir_ok and z_ok
    record_criterion("9 call accounting", ok,
                     f"multibbs {multi_ok}, dirbbs {dir_ok}, zogd {z_ok} "
                     f"({mt.total_calls}, {dt.total_calls}, {zt.total_calls} calls)")
    assert ok
