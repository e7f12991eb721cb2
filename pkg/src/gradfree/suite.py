"""The ``theorem-suite`` preset: every guarantee as a runtime check."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .geometry import Box, build_grid, max_edge
from .harness import CheckResult
from .oracles import (GoodClassParams, NoisyQuadratic, OracleHandle, RippleQuadratic,
                      SyntheticVeryGood, VeryGoodClassParams, verify_good_class,
                      verify_very_good_class)
from .solvers import (DirectionBbsConfig, MultiBbsConfig, direction_bbs, multi_bbs,
                      required_iterations)
from .zogd import (TheoremThreeParams, ZogdConfig, mc_projection_mean,
                   mc_projection_second_moment, sample_one_step, theorem3_rhs,
                   zogd_run_batch)


def random_good_instance(rng: np.random.Generator):
    """A ripple quadratic with random ``(mu, L)``, ``x*`` and box."""
    d = int(rng.integers(1, 3))
    mu = float(rng.uniform(0.5, 5.0))
    big_l = mu * float(rng.uniform(1.0, 50.0))
    lower = rng.uniform(-10, -1, d)
    upper = rng.uniform(1, 10, d)
    x_star = rng.uniform(lower, upper)
    f = RippleQuadratic(mu, big_l, x_star, rng.uniform(-20, 20, d), rng.uniform(0, np.pi))
    return f.spec(), Box(lower, upper), GoodClassParams(mu, big_l), float(rng.uniform(1.5, 4))


def random_very_good_instance(rng: np.random.Generator):
    d = int(rng.integers(2, 21))
    big_m = float(rng.uniform(1.0, 50.0))
    x_star = rng.uniform(-9.5, 9.5, d)
    spec = SyntheticVeryGood(big_m, x_star, seed=int(rng.integers(0, 2**63)))
    return spec, Box.cube(-10, 10, d)


def _retention_counts(trace, x_star):
    return sum(not rec.box_after.contains(x_star) for rec in trace.iterations)


def multibbs_retention(seed: int = 0, instances: int = 10, epsilon: float = 1e-6):
    rng = np.random.default_rng(seed)
    misses = bad_class = bad_contraction = bad_calls = 0
    for _ in range(instances):
        spec, box, params, alpha = random_good_instance(rng)
        handle = OracleHandle(spec)
        grid_n = 2000 if box.dim == 1 else 150
        if not verify_good_class(handle.spawn(0), box, params, spec.x_star, grid_n=grid_n).holds:
            bad_class += 1
        trace = multi_bbs(handle, box, MultiBbsConfig(epsilon, params, alpha))
        misses += _retention_counts(trace, spec.x_star)
        for rec in trace.iterations:
            ratio = max_edge(rec.box_before) / max_edge(rec.box_after)
            bad_contraction += ratio * (1 + 1e-12) < alpha
            bad_calls += rec.oracle_calls_this_iter != build_grid(rec.box_before, trace.n).size
    return [
        CheckResult("multibbs_class_verified", bad_class == 0, -float(bad_class),
                    f"{bad_class} of {instances} instances failed the class check"),
        CheckResult("multibbs_retention", misses == 0, -float(misses),
                    f"{misses} boxes lost x* over {instances} instances"),
        CheckResult("multibbs_contraction", bad_contraction == 0, -float(bad_contraction),
                    f"{bad_contraction} iterations contracted by less than alpha"),
        CheckResult("multibbs_call_accounting", bad_calls == 0, -float(bad_calls),
                    f"{bad_calls} iterations with unexpected call counts"),
    ]


def dirbbs_retention(seed: int = 0, instances: int = 10, epsilon: float = 1e-4):
    rng = np.random.default_rng(seed + 1)
    misses = bad_class = bad_contraction = bad_calls = over = 0
    for _ in range(instances):
        spec, box = random_very_good_instance(rng)
        handle = OracleHandle(spec)
        trace = direction_bbs(handle, box, DirectionBbsConfig(epsilon))
        visited = np.array([np.frombuffer(k) for k in handle.delta_memo])
        params = VeryGoodClassParams(spec.big_m, spec.dim)
        if not verify_very_good_class(handle, box, params, spec.x_star, points=visited).holds:
            bad_class += 1
        misses += _retention_counts(trace, spec.x_star)
        over += len(trace.iterations) > required_iterations(box, 2 * epsilon, 1.5)
        for rec in trace.iterations:
            ratio = max_edge(rec.box_before) / max_edge(rec.box_after)
            bad_contraction += ratio * (1 + 1e-12) < 1.5
            bad_calls += rec.oracle_calls_this_iter != spec.dim * 16
    return [
        CheckResult("dirbbs_class_verified", bad_class == 0, -float(bad_class),
                    f"{bad_class} of {instances} instances failed the class check"),
        CheckResult("dirbbs_retention", misses == 0, -float(misses),
                    f"{misses} boxes lost x* over {instances} instances"),
        CheckResult("dirbbs_contraction", bad_contraction == 0, -float(bad_contraction),
                    f"{bad_contraction} outer iterations contracted by less than 3/2"),
        CheckResult("dirbbs_call_accounting", bad_calls == 0, -float(bad_calls),
                    f"{bad_calls} outer iterations with call count != 16 d"),
        CheckResult("dirbbs_iteration_bound", over == 0, -float(over),
                    f"{over} runs exceeded the outer-iteration bound"),
    ]


def sphere_identities(seed: int = 0, samples: int = 10**6, dims=(2, 10, 50)):
    rng = np.random.default_rng(seed + 2)
    worst_z, worst_rel = 0.0, 0.0
    for d in dims:
        s = rng.uniform(-5, 5, d)
        mean, se = mc_projection_mean(s, samples, rng)
        worst_z = max(worst_z, float(np.max(np.abs(mean - s) / se)))
        worst_rel = max(worst_rel, abs(mc_projection_second_moment(s, samples, rng) - 1))
    return [
        CheckResult("projection_mean_identity", worst_z <= 5, 5 - worst_z,
                    f"largest deviation {worst_z:.3g} standard errors"),
        CheckResult("projection_second_moment", worst_rel <= 0.01, 0.01 - worst_rel,
                    f"largest relative deviation {worst_rel:.3g}"),
    ]


def anisotropic_quadratic(d: int, mu: float, big_l: float, rng, sigma=0.0, seed=0):
    """Randomly rotated quadratic with spectrum log-spaced in ``[mu, L]``."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    a = q @ np.diag(np.geomspace(mu, big_l, d)) @ q.T
    return NoisyQuadratic((a + a.T) / 2, rng.uniform(-1, 1, d), sigma=sigma, seed=seed)


def corollary3_contraction(seed: int = 0, d: int = 10, steps: int = 2000, repeats: int = 100):
    rng = np.random.default_rng(seed + 3)
    spec = anisotropic_quadratic(d, 1.0, 100.0, rng, seed=seed)
    gamma = 1.0 / (5 * d * 100.0)
    x0 = spec.x_star + rng.normal(size=d) * 3
    dist0 = float(np.sum((x0 - spec.x_star) ** 2))
    batch = zogd_run_batch(OracleHandle(spec), x0, ZogdConfig(steps, gamma, 1e-3, seed), repeats)
    bound = 1.1 * (1 - gamma / 2) ** steps * dist0
    got = float(batch.mean_distances_sq[-1])
    return [CheckResult("corollary3_contraction", got <= bound, 1 - got / bound,
                        f"mean |x_K - x*|^2 = {got:.4g}, 1.1 x bound = {bound:.4g}")]


def theorem3_one_step(seed: int = 0, samples: int = 10**4, sigma: float = 1.0):
    d, mu, big_l = 50, 1.0, 100.0
    gamma = 1.0 / (5 * d * big_l)
    tau = math.sqrt(2 * d * sigma**2 / (mu * big_l))
    rng = np.random.default_rng(seed + 4)
    spec = NoisyQuadratic(np.diag(np.geomspace(mu, big_l, d)), np.zeros(d), sigma=sigma,
                          seed=seed)
    handle = OracleHandle(spec)
    params = TheoremThreeParams(d, mu, big_l, sigma, 0.0, gamma, tau)
    worst = math.inf
    for r in (0.1, 1.0, 10.0):
        u = rng.standard_normal(d)
        x = r * u / np.linalg.norm(u)
        emp = float(np.mean(sample_one_step(handle, x, gamma, tau, samples, rng)))
        worst = min(worst, 1 - emp / (1.05 * theorem3_rhs(r * r, r, params)))
    return [CheckResult("theorem3_one_step", worst >= 0, worst,
                        "empirical one-step mean vs 1.05 x bound at |x - x*| in {0.1, 1, 10}")]


def theorem_suite(seed: int = 0, out_dir=None) -> list[CheckResult]:
    checks = []
    checks += multibbs_retention(seed)
    checks += dirbbs_retention(seed)
    checks += sphere_identities(seed)
    checks += corollary3_contraction(seed)
    checks += theorem3_one_step(seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "theorem_suite.json").write_text(
            json.dumps([c.to_dict() for c in checks], indent=2) + "\n")
    return checks
