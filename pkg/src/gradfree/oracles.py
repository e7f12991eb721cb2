"""Test objectives, noise models and the call-counting oracle handle.

Solvers never call an objective directly; they go through an
:class:`OracleHandle`, which owns the random streams, the per-point memo of
the deterministic ripple ``delta(x)`` and the call counter.

Seeding: the stochastic noise ``xi`` and the memoized ripple ``delta`` come
from two independent PCG64 streams seeded with ``seed ^ XI_ROLE`` and
``seed ^ DELTA_ROLE``.
"""
from __future__ import annotations

import importlib
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DimensionMismatch
from .geometry import Box, build_grid

MASK64 = (1 << 64) - 1
XI_ROLE = 0x9E3779B97F4A7C15
DELTA_ROLE = 0xC2B2AE3D27D4EB4F
DIRECTION_ROLE = 0x165667B19E3779F9

XI_DISTRIBUTIONS = ("gaussian", "uniform")


def substream(seed: int, role: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64((int(seed) ^ role) & MASK64))


# --------------------------------------------------------------------------
# function-class parameters


@dataclass(frozen=True)
class GoodClassParams:
    """Curvatures of the lower (``mu``) and upper (``big_l``) parabolas."""

    mu: float
    big_l: float

    def __post_init__(self):
        if not (self.mu > 0 and self.big_l >= self.mu):
            raise ValueError(f"need 0 < mu <= L, got mu={self.mu}, L={self.big_l}")


@dataclass(frozen=True)
class VeryGoodClassParams:
    big_m: float
    d: int
    delta_bound: Optional[float] = None

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("the very-good class needs d >= 2; use bbs_1d for d = 1")
        if not self.big_m > 0:
            raise ValueError("M must be positive")
        if self.delta_bound is None:
            object.__setattr__(self, "delta_bound", max_delta(self.big_m, self.d))

    @property
    def as_good_class(self) -> GoodClassParams:
        # f - f* lies between (M/2 -+ Delta)|x - x*|^2, i.e. mu/2 = M/2 - Delta.
        return GoodClassParams(self.big_m - 2 * self.delta_bound,
                               self.big_m + 2 * self.delta_bound)


def max_delta(big_m: float, d: int) -> float:
    """Largest ripple the very-good class admits in dimension ``d``."""
    return big_m / (16.0 * (d - 1))


# --------------------------------------------------------------------------
# objective specifications


@dataclass(frozen=True)
class OscillatingParabola:
    """``10 (x-2)^2 - 4 cos(17 (x-2)) + 4`` on the line; minimum at 2."""

    dim = 1
    x_star = np.array([2.0])
    seed = 0


@dataclass(frozen=True)
class Levy2D:
    """Levy-type function with global minimum ``f(3.7, 1.3) = 0``."""

    dim = 2
    x_star = np.array([3.7, 1.3])
    seed = 0


@dataclass(frozen=True, eq=False)
class SyntheticVeryGood:
    """``(M/2 + delta(x)) |x - x*|^2`` with ``delta`` uniform on ``[-D, D]``
    drawn once per distinct point."""

    big_m: float
    x_star: np.ndarray
    delta_bound: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        x_star = np.array(self.x_star, dtype=float).reshape(-1)
        object.__setattr__(self, "x_star", x_star)
        d = x_star.size
        if d < 2:
            raise ConfigError("SyntheticVeryGood needs d >= 2")
        bound = max_delta(self.big_m, d)
        if self.delta_bound is None:
            object.__setattr__(self, "delta_bound", bound)
        elif not 0 <= self.delta_bound <= bound * (1 + 1e-12):
            raise ConfigError(f"delta_bound must lie in [0, {bound}], got {self.delta_bound}")

    @property
    def dim(self) -> int:
        return self.x_star.size


@dataclass(frozen=True, eq=False)
class NoisyQuadratic:
    """``0.5 (x-x*)^T A (x-x*) + (xi + delta(x)) |x - x*|``.

    ``xi`` is redrawn on every call; ``delta`` is memoized per point.
    """

    matrix_a: np.ndarray
    x_star: np.ndarray
    sigma: float = 0.0
    delta_bound: float = 0.0
    seed: int = 0
    xi_distribution: str = "gaussian"

    def __post_init__(self):
        x_star = np.array(self.x_star, dtype=float).reshape(-1)
        a = np.array(self.matrix_a, dtype=float)
        if a.shape != (x_star.size, x_star.size):
            raise DimensionMismatch(f"A has shape {a.shape}, x* has dimension {x_star.size}")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-10):
            raise ConfigError("A must be symmetric")
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise ConfigError("A must be positive definite") from None
        if self.sigma < 0 or self.delta_bound < 0:
            raise ConfigError("sigma and delta_bound must be non-negative")
        if self.xi_distribution not in XI_DISTRIBUTIONS:
            raise ConfigError(f"xi_distribution must be one of {XI_DISTRIBUTIONS}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix_a", a)
        object.__setattr__(self, "x_star", x_star)

    @property
    def dim(self) -> int:
        return self.x_star.size

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.matrix_a - np.diag(np.diag(self.matrix_a)))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix_a)


@dataclass(frozen=True, eq=False)
class UserAnalytic:
    """Arbitrary black box ``func(x) -> float``.

    ``target`` is an optional ``"module:attr"`` import path used for JSON
    round-tripping. With ``vectorized=True`` the callable receives an
    ``(N, d)`` array and must return ``N`` values.
    """

    func: Callable
    known_x_star: Optional[np.ndarray] = None
    dim: Optional[int] = None
    vectorized: bool = False
    target: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.known_x_star is not None:
            xs = np.array(self.known_x_star, dtype=float).reshape(-1)
            object.__setattr__(self, "known_x_star", xs)
            if self.dim is None:
                object.__setattr__(self, "dim", xs.size)

    @property
    def x_star(self):
        return self.known_x_star


ObjectiveSpec = Union[OscillatingParabola, Levy2D, SyntheticVeryGood, NoisyQuadratic, UserAnalytic]


def oscillating_parabola(x):
    t = np.asarray(x, dtype=float) - 2.0
    return 10.0 * t**2 - 4.0 * np.cos(17.0 * t) + 4.0


def levy2d(x, y):
    return (
        np.sin(3 * np.pi * (x - 2.7)) ** 2
        + (x - 3.7) ** 2 * (1 + np.sin(3 * np.pi * (y - 0.3)) ** 2)
        + (y - 1.3) ** 2 * (1 + np.sin(2 * np.pi * (y - 0.3)) ** 2)
    )


# --------------------------------------------------------------------------
# oracle handle


class OracleHandle:
    """Seeded, call-counting evaluator around an objective spec.

    Not safe for concurrent use; derive one handle per worker with
    :meth:`spawn`.
    """

    def __init__(self, spec: ObjectiveSpec, seed: Optional[int] = None):
        self.spec = spec
        self.seed = int(spec.seed if seed is None else seed) & MASK64
        self._xi_rng = substream(self.seed, XI_ROLE)
        self._delta_rng = substream(self.seed, DELTA_ROLE)
        self._calls = 0
        self.delta_memo: dict[bytes, float] = {}
        if isinstance(spec, NoisyQuadratic):
            self._diag = spec.is_diagonal
            self._a = np.ascontiguousarray(
                np.diag(spec.matrix_a) if self._diag else spec.matrix_a)

    @property
    def dim(self) -> Optional[int]:
        return self.spec.dim

    @property
    def x_star(self) -> Optional[np.ndarray]:
        return self.spec.x_star

    @property
    def deterministic(self) -> bool:
        return not (isinstance(self.spec, NoisyQuadratic) and self.spec.sigma > 0)

    @property
    def call_count(self) -> int:
        return self._calls

    def reset_counter(self) -> None:
        self._calls = 0

    def add_calls(self, n: int) -> None:
        """Account for evaluations done outside :meth:`eval` (fast kernels)."""
        self._calls += int(n)

    def spawn(self, seed: int) -> "OracleHandle":
        return OracleHandle(self.spec, seed)

    # -- noise ----------------------------------------------------------

    def draw_xi(self, size=None):
        """Draw stochastic noise values in call order."""
        spec = self.spec
        if spec.xi_distribution == "gaussian":
            z = self._xi_rng.standard_normal(size)
        else:
            z = self._xi_rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)
        return spec.sigma * z

    def _delta(self, row: np.ndarray, bound: float) -> float:
        key = np.ascontiguousarray(row, dtype=float).tobytes()
        value = self.delta_memo.get(key)
        if value is None:
            value = float(self._delta_rng.uniform(-bound, bound))
            self.delta_memo[key] = value
        return value

    # -- evaluation -----------------------------------------------------

    def _check(self, X: np.ndarray) -> None:
        d = self.spec.dim
        if d is not None and X.shape[1] != d:
            raise DimensionMismatch(f"objective has dimension {d}, got {X.shape[1]}")

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(self.eval_batch(x[None, :])[0])

    __call__ = eval

    def eval_batch(self, X) -> np.ndarray:
        """Evaluate row by row, in order; counts one call per row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._check(X)
        spec = self.spec
        if isinstance(spec, OscillatingParabola):
            out = oscillating_parabola(X[:, 0])
        elif isinstance(spec, Levy2D):
            out = levy2d(X[:, 0], X[:, 1])
        elif isinstance(spec, SyntheticVeryGood):
            r2 = np.sum((X - spec.x_star) ** 2, axis=1)
            deltas = np.array([self._delta(row, spec.delta_bound) for row in X])
            out = (spec.big_m / 2.0 + deltas) * r2
        elif isinstance(spec, NoisyQuadratic):
            out = self._noisy_quadratic(X)
        elif isinstance(spec, UserAnalytic):
            if spec.vectorized:
                out = np.asarray(spec.func(X), dtype=float).reshape(-1)
            else:
                out = np.array([float(spec.func(row.copy())) for row in X])
        else:
            raise TypeError(f"unknown objective spec {type(spec).__name__}")
        self._calls += X.shape[0]
        return np.asarray(out, dtype=float)

    def _noisy_quadratic(self, X):
        spec = self.spec
        R = X - spec.x_star
        quad = kernels.half_quad_rows(R, self._a, self._diag)
        dist = np.sqrt(np.einsum("ij,ij->i", R, R))
        out = np.empty(X.shape[0])
        # Interleave the xi and delta draws per row so batch and scalar
        # evaluation consume the streams identically.
        for i, row in enumerate(X):
            noise = float(self.draw_xi())
            if spec.delta_bound > 0:
                noise += self._delta(row, spec.delta_bound)
            out[i] = quad[i] + noise * dist[i]
        return out


# --------------------------------------------------------------------------
# class verification


@dataclass
class Violation:
    point: np.ndarray
    lower_margin: float
    upper_margin: float

    def to_dict(self):
        return {"point": self.point.tolist(), "lower_margin": self.lower_margin,
                "upper_margin": self.upper_margin}


@dataclass
class ClassReport:
    """Outcome of a sampled class check.

    Margins are positive when an inequality holds with room to spare and
    negative when it is violated.
    """

    kind: str
    checked: int
    violations: list = field(default_factory=list)
    worst_lower_margin: float = math.inf
    worst_upper_margin: float = math.inf

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_dict(self, max_violations: int = 50):
        return {
            "kind": self.kind,
            "holds": self.holds,
            "checked": self.checked,
            "n_violations": len(self.violations),
            "worst_lower_margin": self.worst_lower_margin,
            "worst_upper_margin": self.worst_upper_margin,
            "violations": [v.to_dict() for v in self.violations[:max_violations]],
        }


def _sample_points(box: Box, grid_n, points) -> np.ndarray:
    if points is not None:
        return np.atleast_2d(np.asarray(points, dtype=float))
    if grid_n is None:
        raise ValueError("give either grid_n or explicit points")
    return build_grid(box, grid_n).points()


def _require_noise_free(handle: OracleHandle):
    spec = handle.spec
    if isinstance(spec, NoisyQuadratic) and (spec.sigma > 0):
        raise ConfigError("class verification needs a noise-free oracle (sigma = 0)")


def verify_good_class(handle: OracleHandle, box: Box, params: GoodClassParams,
                      x_star, grid_n: Optional[int] = None, points=None,
                      rtol: float = 1e-12) -> ClassReport:
    """Check ``mu/2 |x-x*|^2 <= f(x) - f(x*) <= L/2 |x-x*|^2`` on a sample."""
    _require_noise_free(handle)
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if x_star.size != box.dim:
        raise DimensionMismatch("x_star and box dimensions differ")
    P = _sample_points(box, grid_n, points)
    if P.shape[1] != box.dim:
        raise DimensionMismatch("sample points and box dimensions differ")
    f_star = handle.eval(x_star)
    gap = handle.eval_batch(P) - f_star
    r2 = np.sum((P - x_star) ** 2, axis=1)
    lower = gap - 0.5 * params.mu * r2
    upper = 0.5 * params.big_l * r2 - gap
    tol = rtol * np.maximum(1.0, np.abs(gap))
    bad = np.flatnonzero((lower < -tol) | (upper < -tol))
    return ClassReport(
        kind="good",
        checked=len(P),
        violations=[Violation(P[i].copy(), float(lower[i]), float(upper[i])) for i in bad],
        worst_lower_margin=float(lower.min()),
        worst_upper_margin=float(upper.min()),
    )


def verify_very_good_class(handle: OracleHandle, box: Box, params: VeryGoodClassParams,
                           x_star, grid_n: Optional[int] = None, points=None,
                           rtol: float = 1e-12) -> ClassReport:
    """Check ``|(f(x) - f(x*)) / |x-x*|^2 - M/2| <= Delta`` off ``x*``.

    The lower/upper margins refer to ``ratio >= M/2 - Delta`` and
    ``ratio <= M/2 + Delta`` respectively.
    """
    _require_noise_free(handle)
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if x_star.size != box.dim or params.d != box.dim:
        raise DimensionMismatch("x_star, params and box dimensions differ")
    P = _sample_points(box, grid_n, points)
    r2 = np.sum((P - x_star) ** 2, axis=1)
    P = P[np.sqrt(r2) > 1e-9]
    r2 = r2[np.sqrt(r2) > 1e-9]
    f_star = handle.eval(x_star)
    ratio = (handle.eval_batch(P) - f_star) / r2
    half_m = params.big_m / 2.0
    lower = ratio - (half_m - params.delta_bound)
    upper = (half_m + params.delta_bound) - ratio
    tol = rtol * (1.0 + params.big_m)
    bad = np.flatnonzero((lower < -tol) | (upper < -tol))
    return ClassReport(
        kind="very_good",
        checked=len(P),
        violations=[Violation(P[i].copy(), float(lower[i]), float(upper[i])) for i in bad],
        worst_lower_margin=float(lower.min()) if len(P) else math.inf,
        worst_upper_margin=float(upper.min()) if len(P) else math.inf,
    )


# --------------------------------------------------------------------------
# JSON round-tripping

VARIANTS = {
    "OscillatingParabola": OscillatingParabola,
    "Levy2D": Levy2D,
    "SyntheticVeryGood": SyntheticVeryGood,
    "NoisyQuadratic": NoisyQuadratic,
    "UserAnalytic": UserAnalytic,
}


def _resolve(target: str) -> Callable:
    module, _, attr = target.partition(":")
    if not attr:
        raise ConfigError(f"callable target must look like 'module:attr', got {target!r}")
    obj = importlib.import_module(module)
    for part in attr.split("."):
        obj = getattr(obj, part)
    return obj


def spec_to_dict(spec: ObjectiveSpec) -> dict[str, Any]:
    variant = type(spec).__name__
    if isinstance(spec, (OscillatingParabola, Levy2D)):
        params = {}
    elif isinstance(spec, SyntheticVeryGood):
        params = {"big_m": spec.big_m, "x_star": spec.x_star.tolist(),
                  "delta_bound": spec.delta_bound}
    elif isinstance(spec, NoisyQuadratic):
        params = {"matrix_a": spec.matrix_a.tolist(), "x_star": spec.x_star.tolist(),
                  "sigma": spec.sigma, "delta_bound": spec.delta_bound,
                  "xi_distribution": spec.xi_distribution}
    elif isinstance(spec, UserAnalytic):
        if spec.target is None:
            raise ConfigError("UserAnalytic needs an import target to serialize")
        params = {"callable": spec.target, "vectorized": spec.vectorized, "dim": spec.dim,
                  "known_x_star": None if spec.known_x_star is None
                  else spec.known_x_star.tolist()}
    else:
        raise TypeError(f"unknown objective spec {type(spec).__name__}")
    return {"variant": variant, "params": params, "seed": int(spec.seed)}


def spec_from_dict(data: dict[str, Any]) -> ObjectiveSpec:
    try:
        variant = data["variant"]
        cls = VARIANTS[variant]
    except KeyError as exc:
        raise ConfigError(f"unknown or missing objective variant: {exc}") from None
    params = dict(data.get("params") or {})
    seed = int(data.get("seed", 0))
    if cls in (OscillatingParabola, Levy2D):
        return cls()
    if cls is UserAnalytic:
        target = params.pop("callable", None)
        if target is None:
            raise ConfigError("UserAnalytic requires params.callable = 'module:attr'")
        return UserAnalytic(func=_resolve(target), target=target, seed=seed,
                            known_x_star=params.get("known_x_star"),
                            dim=params.get("dim"), vectorized=bool(params.get("vectorized", False)))
    try:
        return cls(seed=seed, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {variant}: {exc}") from None


class RippleQuadratic:
    """``(mu/2 + (L-mu)/2 * sin^2(w . x + phase)) |x - x*|^2``.

    In the good class with exactly the given ``(mu, L)`` for every ``x``;
    vectorized over rows.
    """

    def __init__(self, mu, big_l, x_star, w, phase=0.0):
        self.mu = float(mu)
        self.big_l = float(big_l)
        self.x_star = np.asarray(x_star, dtype=float).reshape(-1)
        self.w = np.asarray(w, dtype=float).reshape(-1)
        self.phase = float(phase)

    def __call__(self, X):
        X = np.atleast_2d(X)
        r2 = np.sum((X - self.x_star) ** 2, axis=1)
        ripple = np.sin(X @ self.w + self.phase) ** 2
        return (0.5 * self.mu + 0.5 * (self.big_l - self.mu) * ripple) * r2

    def spec(self) -> UserAnalytic:
        return UserAnalytic(self, known_x_star=self.x_star, vectorized=True)
