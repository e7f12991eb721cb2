"""Gradient descent driven by a one-point-feedback finite-difference estimate.

The estimator draws a direction ``e`` uniformly from the unit sphere and
makes two oracle calls with independent noise::

    g = d / (2 tau) * (f(x + tau e, xi+) - f(x - tau e, xi-)) * e

For noisy quadratics without the deterministic ripple the whole iteration
runs in the compiled kernel (see :mod:`gradfree._backend`); every other
objective goes through :meth:`OracleHandle.eval` call by call. Both paths
consume the random streams in the same order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from ._backend import kernels
from .errors import DimensionMismatch, NonFiniteValue
from .oracles import DIRECTION_ROLE, NoisyQuadratic, OracleHandle, substream

DIVERGENCE_LIMIT = 1e12
TAU_FLOOR = 1e-3
# Target number of doubles per pre-drawn random block in the fast path.
_BLOCK_DOUBLES = 1 << 21

Schedule = Union[float, Sequence[float], np.ndarray]


def sample_sphere(d: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Uniform unit vector(s) in ``R^d`` by normalizing a Gaussian draw."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    shape = (d,) if size is None else (size, d)
    z = rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _expand(value: Schedule, steps: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(steps, float(arr))
    if arr.shape != (steps,):
        raise ValueError(f"{name} schedule must have length {steps}, got {arr.shape}")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be positive and finite at every step")
    return arr


@dataclass(frozen=True)
class ZogdConfig:
    steps: int
    gamma: Schedule
    tau: Schedule
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        _expand(self.gamma, self.steps, "gamma")
        _expand(self.tau, self.steps, "tau")

    def gammas(self) -> np.ndarray:
        return _expand(self.gamma, self.steps, "gamma")

    def taus(self) -> np.ndarray:
        return _expand(self.tau, self.steps, "tau")


@dataclass
class ZogdTrace:
    points: Optional[np.ndarray]
    grad_norms: np.ndarray
    distances_sq: Optional[np.ndarray]
    final_point: np.ndarray
    oracle_calls: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.oracle_calls is None:
            self.oracle_calls = np.full(len(self.grad_norms), 2, dtype=int)

    @property
    def steps(self) -> int:
        return len(self.grad_norms)

    @property
    def total_calls(self) -> int:
        return int(self.oracle_calls.sum())

    CSV_COLUMNS = ("step", "distance_sq", "grad_norm", "cumulative_calls")

    def to_csv(self) -> str:
        return _trace_csv(self.distances_sq, self.grad_norms, None)

    def summary(self) -> dict:
        return {
            "final_point": self.final_point.tolist(),
            "total_calls": self.total_calls,
            "iterations": self.steps,
            "final_distance_sq": None if self.distances_sq is None
            else float(self.distances_sq[-1]),
        }


@dataclass
class ZogdBatch:
    """Independent replicas; replica ``r`` used seed ``seeds[r]``."""

    seeds: list
    final_points: np.ndarray
    distances_sq: np.ndarray
    grad_norms: np.ndarray

    @property
    def steps(self) -> int:
        return self.grad_norms.shape[1]

    @property
    def total_calls(self) -> int:
        return 2 * self.steps * len(self.seeds)

    @property
    def mean_distances_sq(self) -> np.ndarray:
        return self.distances_sq.mean(axis=0)

    def to_csv(self) -> str:
        return _trace_csv(self.distances_sq[0], self.grad_norms[0], self.mean_distances_sq)

    def summary(self) -> dict:
        return {
            "final_point": self.final_points[0].tolist(),
            "total_calls": self.total_calls,
            "iterations": self.steps,
            "repeats": len(self.seeds),
            "final_distance_sq": float(self.distances_sq[0, -1]),
            "final_mean_distance_sq": float(self.mean_distances_sq[-1]),
        }


def _trace_csv(dist, gnorm, mean_dist) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(ZogdTrace.CSV_COLUMNS)
    if mean_dist is not None:
        header.append("mean_distance_sq")
    writer.writerow(header)
    for k in range(len(gnorm) + 1):
        row = [k, "" if dist is None else repr(float(dist[k])),
               "" if k == 0 else repr(float(gnorm[k - 1])), 2 * k]
        if mean_dist is not None:
            row.append(repr(float(mean_dist[k])))
        writer.writerow(row)
    return buf.getvalue()


# --------------------------------------------------------------------------
# estimator


def grad_estimate(handle: OracleHandle, x, tau: float, rng: Optional[np.random.Generator] = None,
                  direction=None) -> np.ndarray:
    """Two-call finite-difference gradient estimate along a random direction.

    ``direction`` overrides the sampled ``e`` (used by tests that need a
    fixed direction); otherwise one direction is drawn from ``rng``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.size
    if handle.dim is not None and handle.dim != d:
        raise DimensionMismatch(f"objective dimension {handle.dim} != {d}")
    if direction is None:
        e = sample_sphere(d, rng)
    else:
        e = np.asarray(direction, dtype=float).reshape(-1)
    f_plus = handle.eval(x + tau * e)
    f_minus = handle.eval(x - tau * e)
    if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
        raise NonFiniteValue("oracle returned a non-finite value")
    return d / (2.0 * tau) * (f_plus - f_minus) * e


def _uses_kernel(handle: OracleHandle) -> bool:
    spec = handle.spec
    return isinstance(spec, NoisyQuadratic) and spec.delta_bound == 0


def _kernel_matrix(spec: NoisyQuadratic):
    if spec.is_diagonal:
        return np.ascontiguousarray(np.diag(spec.matrix_a)), True
    return np.ascontiguousarray(spec.matrix_a), False


def _run_kernel(handles, rngs, X, config, record_points):
    """Drive the compiled loop over all replicas in blocks of steps."""
    spec = handles[0].spec
    A, is_diag = _kernel_matrix(spec)
    R, d = X.shape
    K = config.steps
    gammas, taus = config.gammas(), config.taus()
    dist = np.empty((R, K + 1))
    gnorm = np.empty((R, K))
    diff0 = X - spec.x_star
    dist[:, 0] = np.einsum("ij,ij->i", diff0, diff0)
    path = np.empty((R, K + 1, d)) if record_points else None
    if record_points:
        path[:, 0, :] = X
    block = max(1, _BLOCK_DOUBLES // (R * (d + 2)))
    for start in range(0, K, block):
        stop = min(K, start + block)
        c = stop - start
        E = np.empty((R, c, d))
        XI = np.empty((R, c, 2))
        for r in range(R):
            E[r] = sample_sphere(d, rngs[r], size=c)
            XI[r] = handles[r].draw_xi((c, 2))
        done = kernels.zogd_quadratic_chunk(
            X, spec.x_star, A, is_diag, E, XI, gammas[start:stop], taus[start:stop],
            dist[:, start + 1:stop + 1], gnorm[:, start:stop],
            None if path is None else path[:, start + 1:stop + 1, :])
        for h in handles:
            h.add_calls(2 * (done if done < c else c))
        if done < c:
            raise NonFiniteValue(f"zoGD diverged at step {start + done + 1} (|x| > {DIVERGENCE_LIMIT:g})")
    return dist, gnorm, path


def zogd_run(handle: OracleHandle, x0, config: ZogdConfig, x_star=None,
             record_points: bool = True) -> ZogdTrace:
    """Unconstrained zoGD for ``config.steps`` steps from ``x0``."""
    x = np.array(x0, dtype=float).reshape(-1)
    d = x.size
    if handle.dim is not None and handle.dim != d:
        raise DimensionMismatch(f"objective dimension {handle.dim} != {d}")
    if x_star is None:
        x_star = handle.x_star
    x_star = None if x_star is None else np.asarray(x_star, dtype=float).reshape(-1)
    rng = substream(config.seed, DIRECTION_ROLE)
    K = config.steps

    if _uses_kernel(handle) and (x_star is None or np.array_equal(x_star, handle.x_star)):
        X = x[None, :].copy()
        dist, gnorm, path = _run_kernel([handle], [rng], X, config, record_points)
        return ZogdTrace(points=None if path is None else path[0], grad_norms=gnorm[0],
                         distances_sq=dist[0], final_point=X[0].copy())

    gammas, taus = config.gammas(), config.taus()
    points = np.empty((K + 1, d)) if record_points else None
    gnorm = np.empty(K)
    dist = None if x_star is None else np.empty(K + 1)
    if points is not None:
        points[0] = x
    if dist is not None:
        dist[0] = float(np.sum((x - x_star) ** 2))
    for k in range(K):
        g = grad_estimate(handle, x, taus[k], rng)
        x = x - gammas[k] * g
        gnorm[k] = float(np.linalg.norm(g))
        norm = float(np.linalg.norm(x))
        if not math.isfinite(norm) or norm > DIVERGENCE_LIMIT:
            raise NonFiniteValue(f"zoGD diverged at step {k + 1} (|x| > {DIVERGENCE_LIMIT:g})")
        if points is not None:
            points[k + 1] = x
        if dist is not None:
            dist[k + 1] = float(np.sum((x - x_star) ** 2))
    return ZogdTrace(points=points, grad_norms=gnorm, distances_sq=dist, final_point=x)


def zogd_run_batch(handle: OracleHandle, x0, config: ZogdConfig, repeats: int) -> ZogdBatch:
    """``repeats`` independent runs with seeds ``config.seed + r``.

    Replica ``r`` reproduces ``zogd_run(handle.spawn(seed + r), x0,
    replace(config, seed=seed + r))``.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    seeds = [config.seed + r for r in range(repeats)]
    handles = [handle.spawn(s) for s in seeds]
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if _uses_kernel(handle):
        rngs = [substream(s, DIRECTION_ROLE) for s in seeds]
        X = np.repeat(x0[None, :], repeats, axis=0)
        dist, gnorm, _ = _run_kernel(handles, rngs, X, config, record_points=False)
        finals = X
    else:
        runs = [zogd_run(h, x0, replace(config, seed=s), record_points=False)
                for h, s in zip(handles, seeds)]
        if runs[0].distances_sq is None:
            raise ValueError("batch runs need a known minimizer")
        dist = np.stack([t.distances_sq for t in runs])
        gnorm = np.stack([t.grad_norms for t in runs])
        finals = np.stack([t.final_point for t in runs])
    handle.add_calls(2 * config.steps * repeats)
    return ZogdBatch(seeds=seeds, final_points=finals, distances_sq=dist, grad_norms=gnorm)


def sample_one_step(handle: OracleHandle, x, gamma: float, tau: float, samples: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Squared distances ``|x' - x*|^2`` after ``samples`` independent single
    steps from the same ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x_star = handle.x_star
    if _uses_kernel(handle):
        A, is_diag = _kernel_matrix(handle.spec)
        X = np.repeat(x[None, :], samples, axis=0)
        E = sample_sphere(x.size, rng, size=samples)[:, None, :]
        XI = handle.draw_xi((samples, 1, 2))
        dist = np.empty((samples, 1))
        gnorm = np.empty((samples, 1))
        kernels.zogd_quadratic_chunk(X, x_star, A, is_diag, E, XI, np.array([gamma]),
                                     np.array([tau]), dist, gnorm, None)
        handle.add_calls(2 * samples)
        return dist[:, 0]
    out = np.empty(samples)
    for s in range(samples):
        nxt = x - gamma * grad_estimate(handle, x, tau, rng)
        out[s] = float(np.sum((nxt - x_star) ** 2))
    return out


# --------------------------------------------------------------------------
# step-size schedule and bounds


def corollary3_schedule(d: int, big_l: float, mu: float, sigma: float, K: int,
                        dist0_sq: float) -> tuple[float, float]:
    """Constant ``(gamma, tau)`` giving linear convergence to the noise floor.

    ``gamma = min(1/(5dL), 2 ln(max(2, mu^2 r0^2 K / (20 d^2 sigma^2))) / (mu K))``
    and ``tau = max(sqrt(2 d sigma^2 / (mu L)), 1e-3)``. At ``sigma = 0`` the
    logarithmic branch is unbounded and ``gamma = 1/(5dL)``.
    """
    gamma = 1.0 / (5 * d * big_l)
    if sigma > 0:
        ratio = mu**2 * dist0_sq * K / (20 * d**2 * sigma**2)
        gamma = min(gamma, 2 * math.log(max(2.0, ratio)) / (mu * K))
    tau = max(math.sqrt(2 * d * sigma**2 / (mu * big_l)), TAU_FLOOR)
    return gamma, tau


@dataclass(frozen=True)
class TheoremThreeParams:
    d: int
    mu: float
    big_l: float
    sigma: float
    delta_bound: float
    gamma: float
    tau: float

    def __post_init__(self):
        if self.d < 1 or not (0 < self.mu <= self.big_l):
            raise ValueError("need d >= 1 and 0 < mu <= L")
        if self.sigma < 0 or self.delta_bound < 0 or self.gamma < 0 or not self.tau > 0:
            raise ValueError("sigma, delta_bound, gamma must be >= 0 and tau > 0")


def theorem3_rhs(dist_sq: float, dist: float, p: TheoremThreeParams) -> float:
    """Upper bound on ``E|x_{k+1} - x*|^2`` given ``E|x_k - x*|^2`` and
    ``E|x_k - x*|``."""
    noise = p.delta_bound**2 + p.sigma**2
    d, g = p.d, p.gamma
    return ((1 - g * p.mu + 5 * d**2 * g**2 * noise / p.tau**2) * dist_sq
            + 2 * d * g * p.delta_bound / p.tau * dist
            + 2 * d * g * p.delta_bound
            + 5 * d**2 * g**2 * noise)


def noise_floor(d: int, gamma: float, sigma: float, mu: float) -> float:
    """Residual ``10 d^2 gamma sigma^2 / mu`` left by a constant step."""
    return 10 * d**2 * gamma * sigma**2 / mu


def corollary3_bound(K: int, dist0_sq: float, d: int, gamma: float, mu: float,
                     sigma: float) -> float:
    return (1 - gamma * mu / 2) ** K * dist0_sq + noise_floor(d, gamma, sigma, mu)


# --------------------------------------------------------------------------
# Monte-Carlo checks of the sphere identities behind the estimator


def mc_projection_mean(s, samples: int, rng: np.random.Generator,
                       chunk: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of ``d <s, e> e`` (expected value: ``s``)."""
    s = np.asarray(s, dtype=float).reshape(-1)
    d = s.size
    total = np.zeros(d)
    total_sq = np.zeros(d)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        e = sample_sphere(d, rng, size=m)
        v = d * (e @ s)[:, None] * e
        total += v.sum(axis=0)
        total_sq += (v * v).sum(axis=0)
        done += m
    mean = total / samples
    var = np.maximum(total_sq / samples - mean**2, 0.0)
    return mean, np.sqrt(var / samples)


def mc_projection_second_moment(s, samples: int, rng: np.random.Generator,
                                chunk: int = 100_000) -> float:
    """Monte-Carlo ``d E[<s, e>^2] / |s|^2`` (expected value: 1)."""
    s = np.asarray(s, dtype=float).reshape(-1)
    d = s.size
    acc = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        acc += float(np.sum((sample_sphere(d, rng, size=m) @ s) ** 2))
        done += m
    return d * acc / samples / float(s @ s)
