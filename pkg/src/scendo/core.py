"""Problem model, scenario datasets, and configuration shared by all modules.

A design problem is described by an objective J(theta), a list of
requirement functions r_k(theta, a, e) that are satisfied when <= 0, and a
box of admissible designs.  The aleatory parameter ``a`` is random with an
unknown distribution, the epistemic parameter ``e`` lives in a bounded set.

Contract on user-supplied callables
-----------------------------------
Objective and requirement functions must be pure and reentrant (no hidden
mutable state) and must broadcast over leading axes: ``theta`` has trailing
dimension ``m_theta``, ``a`` trailing ``m_a``, ``e`` trailing ``m_e``, and
any compatible leading shapes are combined by normal numpy broadcasting.
All functions must return finite values for finite input, including points
slightly outside the design box (finite-difference probes step outside).

All types in this module are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Array = np.ndarray


class InputError(ValueError):
    """User-supplied data violates a documented precondition."""


def _as_float_array(x, name: str, ndim: int | None = None) -> Array:
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class ProblemSpec:
    """The mathematical object being optimized.

    ``requirements[k](theta, a, e) <= 0`` means requirement k is met.
    ``design_bounds`` is an (m_theta, 2) array of [lower, upper] columns.
    """

    objective: Callable[[Array], Array]
    requirements: Sequence[Callable[[Array, Array, Array], Array]]
    design_bounds: Array
    m_a: int
    m_e: int

    def __post_init__(self):
        bounds = _as_float_array(self.design_bounds, "design_bounds", ndim=2)
        if bounds.shape[1] != 2 or bounds.shape[0] < 1:
            raise InputError(f"design_bounds must be (m_theta, 2), got {bounds.shape}")
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise InputError("design_bounds has lower > upper")
        object.__setattr__(self, "design_bounds", bounds)
        object.__setattr__(self, "requirements", tuple(self.requirements))
        if len(self.requirements) < 1:
            raise InputError("at least one requirement function is required")
        if self.m_a < 1 or self.m_e < 1:
            raise InputError("m_a and m_e must be positive")
        bounds.setflags(write=False)

    @property
    def m_theta(self) -> int:
        return self.design_bounds.shape[0]

    @property
    def n_r(self) -> int:
        return len(self.requirements)


def _check_trailing(name: str, arr: Array, expected: int) -> Array:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != expected:
        raise InputError(
            f"{name} must have trailing dimension {expected}, got shape {arr.shape}"
        )
    return arr


def r_max(spec: ProblemSpec, theta, a, e) -> Array:
    """Worst-case requirement value max_k r_k(theta, a, e).

    Accepts broadcastable batches on the leading axes; a design satisfies
    every requirement at (a, e) iff the returned value is <= 0.
    """
    theta = _check_trailing("theta", theta, spec.m_theta)
    a = _check_trailing("a", a, spec.m_a)
    e = _check_trailing("e", e, spec.m_e)
    vals = [np.asarray(rk(theta, a, e), dtype=float) for rk in spec.requirements]
    return np.maximum.reduce(vals) if len(vals) > 1 else vals[0]


@dataclass(frozen=True)
class ScenarioData:
    """Training scenarios (aleatory rows, epistemic rows) plus optional
    testing sets used by the Monte Carlo analysis and sequential design.

    The aleatory training set needs at least two rows so the empirical CDF
    of the requirement values is defined.  A single epistemic scenario is
    allowed: every epistemic quantile then degenerates to that scenario's
    value (this covers designs that ignore epistemic uncertainty).
    """

    aleatory: Array
    epistemic: Array
    testing_aleatory: Optional[Array] = None
    testing_epistemic: Optional[Array] = None

    def __post_init__(self):
        a = _as_float_array(self.aleatory, "aleatory", ndim=2)
        e = _as_float_array(self.epistemic, "epistemic", ndim=2)
        if a.shape[0] < 2:
            raise InputError("need at least 2 aleatory scenarios")
        if e.shape[0] < 1:
            raise InputError("need at least 1 epistemic scenario")
        object.__setattr__(self, "aleatory", a)
        object.__setattr__(self, "epistemic", e)
        for name in ("testing_aleatory", "testing_epistemic"):
            val = getattr(self, name)
            if val is not None:
                val = _as_float_array(val, name, ndim=2)
                ref = a if name == "testing_aleatory" else e
                if val.shape[1] != ref.shape[1]:
                    raise InputError(f"{name} column count differs from training set")
                object.__setattr__(self, name, val)
                val.setflags(write=False)
        a.setflags(write=False)
        e.setflags(write=False)

    @property
    def n_a(self) -> int:
        return self.aleatory.shape[0]

    @property
    def n_e(self) -> int:
        return self.epistemic.shape[0]

    @property
    def n_a_test(self) -> int:
        return 0 if self.testing_aleatory is None else self.testing_aleatory.shape[0]

    @property
    def n_e_test(self) -> int:
        return 0 if self.testing_epistemic is None else self.testing_epistemic.shape[0]

    def drop_aleatory(self, i: int) -> "ScenarioData":
        """Dataset without aleatory scenario i (its whole epistemic row of
        constraints disappears with it)."""
        keep = np.delete(np.arange(self.n_a), i)
        return ScenarioData(
            self.aleatory[keep],
            self.epistemic,
            self.testing_aleatory,
            self.testing_epistemic,
        )

    def require_testing(self) -> None:
        if self.testing_aleatory is None or self.testing_epistemic is None:
            raise InputError("operation requires testing_aleatory and testing_epistemic")


@dataclass(frozen=True)
class EpistemicSet:
    """Bounded epistemic set {e : ||c - e|| <= radius}.

    ``kind="box"`` uses the weighted max-norm max_i |x_i| / scale_i, so the
    set is a hyper-rectangle; ``kind="ellipsoid"`` uses the weighted 2-norm
    sqrt(sum (x_i/scale_i)^2).  ``scale`` entries must be positive.
    """

    center: Array
    radius: float
    kind: str = "box"
    scale: Optional[Array] = None
    _box: Optional[Array] = field(default=None, repr=False)

    def __post_init__(self):
        c = _as_float_array(self.center, "center", ndim=1)
        object.__setattr__(self, "center", c)
        if self.radius < 0:
            raise InputError("radius must be nonnegative")
        if self.kind not in ("box", "ellipsoid"):
            raise InputError(f"unknown norm kind {self.kind!r}")
        scale = np.ones_like(c) if self.scale is None else _as_float_array(self.scale, "scale", ndim=1)
        if scale.shape != c.shape or np.any(scale <= 0):
            raise InputError("scale must be positive with the center's shape")
        object.__setattr__(self, "scale", scale)
        c.setflags(write=False)
        scale.setflags(write=False)

    @property
    def m_e(self) -> int:
        return self.center.shape[0]

    def norm(self, e) -> Array:
        """Weighted norm of e - center (broadcasts over leading axes)."""
        x = (np.asarray(e, dtype=float) - self.center) / self.scale
        if self.kind == "box":
            return np.max(np.abs(x), axis=-1)
        return np.sqrt(np.sum(x * x, axis=-1))

    def contains(self, e) -> Array:
        return self.norm(e) <= self.radius

    @classmethod
    def from_box(cls, lower, upper) -> "EpistemicSet":
        lo = _as_float_array(lower, "lower", ndim=1)
        hi = _as_float_array(upper, "upper", ndim=1)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise InputError("box needs lower < upper componentwise")
        box = np.column_stack([lo, hi])
        return cls(center=(lo + hi) / 2.0, radius=1.0, kind="box",
                   scale=(hi - lo) / 2.0, _box=box)

    def to_box(self) -> Array:
        """Bounding box (m_e, 2); exact for sets built with from_box."""
        if self._box is not None:
            return self._box
        h = self.radius * self.scale
        return np.column_stack([self.center - h, self.center + h])

    def sample(self, n: int, rng: np.random.Generator) -> Array:
        """n points uniformly distributed in the set."""
        if self.kind == "box":
            u = rng.uniform(-1.0, 1.0, size=(n, self.m_e))
            return self.center + self.radius * self.scale * u
        g = rng.standard_normal((n, self.m_e))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = rng.uniform(size=(n, 1)) ** (1.0 / self.m_e)
        return self.center + self.radius * self.scale * g * rad


@dataclass(frozen=True)
class AlphaConfig:
    """Outlier fractions and smoothing parameters for the scenario programs.

    alpha_a[k] / alpha_e[k] are the fractions of aleatory / epistemic
    scenarios allowed to violate requirement k.  ``rho`` penalizes slack in
    the risk-averse programs, ``kappa`` sharpens the slack-to-weight map of
    the moment programs, ``gamma`` sharpens the epistemic weight rule.
    """

    alpha_a: Array
    alpha_e: Array
    rho: float = 1e6
    kappa: float = 1000.0
    gamma: float = 100.0

    def __post_init__(self):
        aa = np.atleast_1d(np.asarray(self.alpha_a, dtype=float))
        ae = np.atleast_1d(np.asarray(self.alpha_e, dtype=float))
        for name, v in (("alpha_a", aa), ("alpha_e", ae)):
            if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
                raise InputError(f"{name} entries must lie in [0, 1]")
        if self.rho < 0:
            raise InputError("rho must be nonnegative")
        if self.kappa < 1 or self.gamma < 1:
            raise InputError("kappa and gamma must be >= 1")
        object.__setattr__(self, "alpha_a", aa)
        object.__setattr__(self, "alpha_e", ae)
        aa.setflags(write=False)
        ae.setflags(write=False)

    @classmethod
    def uniform(cls, n_r: int, alpha_a: float = 0.0, alpha_e: float = 0.0,
                **kwargs) -> "AlphaConfig":
        return cls(np.full(n_r, float(alpha_a)), np.full(n_r, float(alpha_e)), **kwargs)

    def for_spec(self, spec: ProblemSpec) -> "AlphaConfig":
        """Broadcast scalar fractions up to the spec's requirement count."""
        aa, ae = self.alpha_a, self.alpha_e
        if aa.size == 1 and spec.n_r > 1:
            aa = np.full(spec.n_r, aa[0])
        if ae.size == 1 and spec.n_r > 1:
            ae = np.full(spec.n_r, ae[0])
        if aa.size != spec.n_r or ae.size != spec.n_r:
            raise InputError("alpha vectors do not match the requirement count")
        return AlphaConfig(aa, ae, self.rho, self.kappa, self.gamma)


@dataclass(frozen=True)
class SolveResult:
    """Solution of one scenario program.

    ``epistemic_outliers`` is a global index array for the global-outlier
    formulations and a list of per-aleatory-scenario index arrays for the
    local ones.  ``objective`` is J(theta_star) (lambda_star for the
    moment-based programs).
    """

    theta_star: Array
    objective: float
    solver_status: str  # converged | max-iter | infeasible
    restarts_used: int
    xi_star: Optional[Array] = None
    lambda_star: Optional[float] = None
    aleatory_outliers: Array = field(default_factory=lambda: np.empty(0, dtype=int))
    epistemic_outliers: object = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProblemBundle:
    """A registered problem: spec plus the extras the tools need."""

    spec: ProblemSpec
    epistemic_set: EpistemicSet
    response: Optional[Callable] = None
    density: Optional[Callable] = None
    generate: Optional[Callable] = None  # (n_a, n_e, seed, n_a_test=0, n_e_test=0) -> ScenarioData


_PROBLEM_REGISTRY: dict[str, Callable[..., ProblemBundle]] = {}


def register_problem(name: str):
    """Decorator registering a problem factory under ``name``.

    Factories take keyword parameters and return a ProblemBundle; the CLI
    resolves the ``problem.name`` config field through this registry.
    """

    def deco(factory: Callable[..., ProblemBundle]):
        _PROBLEM_REGISTRY[name] = factory
        return factory

    return deco


def make_problem(name: str, **params) -> ProblemBundle:
    try:
        factory = _PROBLEM_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_PROBLEM_REGISTRY)) or "(none)"
        raise InputError(f"unknown problem {name!r}; registered: {known}") from None
    return factory(**params)
