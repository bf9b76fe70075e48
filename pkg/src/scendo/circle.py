"""Data-enclosing-circle design problem.

The designer picks a nominal circle, center c in R^2 and radius mu >= 0,
but the circle actually realized is a perturbed version of it: with
u = (cos e2, sin e2) the implemented center and radius are

    c~(theta, e) = c + mu * e1 * u
    mu~(theta, e) = mu * (1 + mu * e1 * e3 * c.u)

for an epistemic parameter e in E = [0, 1/5] x [0, 2*pi] x [0, 1/5].  The
single requirement asks a sampled point a to lie inside every realizable
circle, r(theta, a, e) = ||c~ - a||^2 - mu~^2 <= 0, and the objective is
the nominal area pi * mu^2.  A tightness response mu~^2 + ||a - c~|| is
provided for the moment-based programs.

Aleatory points are drawn from a documented two-component Gaussian mixture
(an artifact choice: the original data behind published figures of merit
for this problem is not available, so objective values obtained here match
external references in regime only, never exactly).
"""

from __future__ import annotations

import numpy as np

from scendo.core import (
    EpistemicSet,
    ProblemBundle,
    ProblemSpec,
    ScenarioData,
    register_problem,
)

Array = np.ndarray

E_LOWER = np.array([0.0, 0.0, 0.0])
E_UPPER = np.array([0.2, 2.0 * np.pi, 0.2])

DEFAULT_DESIGN_BOUNDS = np.array([[-12.0, 12.0], [-12.0, 12.0], [0.0, 12.0]])

MIX_WEIGHT = 0.8  # weight of the centered component
MIX_MEAN_0 = np.array([0.0, 0.0])
MIX_MEAN_1 = np.array([2.5, 1.5])
MIX_VAR_0 = 1.0
MIX_VAR_1 = 0.3


def perturbed_circle(theta, e):
    """Realized (center, radius) for design theta under perturbation e."""
    theta = np.asarray(theta, dtype=float)
    e = np.asarray(e, dtype=float)
    c = theta[..., :2]
    mu = theta[..., 2]
    u = np.stack([np.cos(e[..., 1]), np.sin(e[..., 1])], axis=-1)
    c_t = c + (mu * e[..., 0])[..., None] * u
    mu_t = mu * (1.0 + mu * e[..., 0] * e[..., 2] * np.sum(c * u, axis=-1))
    return c_t, mu_t


def circle_requirement(theta, a, e):
    """||c~ - a||^2 - mu~^2; <= 0 when a is inside the realized circle."""
    a = np.asarray(a, dtype=float)
    c_t, mu_t = perturbed_circle(theta, e)
    d2 = np.sum((c_t - a) ** 2, axis=-1)
    return d2 - mu_t**2


def circle_response(theta, a, e):
    """Tightness measure mu~^2 + ||a - c~||_2 (smaller = tighter enclosure)."""
    a = np.asarray(a, dtype=float)
    c_t, mu_t = perturbed_circle(theta, e)
    return mu_t**2 + np.sqrt(np.sum((a - c_t) ** 2, axis=-1))


def circle_objective(theta):
    """Nominal area pi * mu^2."""
    theta = np.asarray(theta, dtype=float)
    return np.pi * theta[..., 2] ** 2


def aleatory_density(a) -> Array:
    """Joint density of the shipped Gaussian mixture."""
    a = np.asarray(a, dtype=float)

    def _phi(x, mean, var):
        d2 = np.sum((x - mean) ** 2, axis=-1)
        return np.exp(-0.5 * d2 / var) / (2.0 * np.pi * var)

    return MIX_WEIGHT * _phi(a, MIX_MEAN_0, MIX_VAR_0) + (1.0 - MIX_WEIGHT) * _phi(
        a, MIX_MEAN_1, MIX_VAR_1
    )


def sample_aleatory(n: int, rng: np.random.Generator) -> Array:
    labels = rng.uniform(size=n) < MIX_WEIGHT
    z = rng.standard_normal((n, 2))
    out = np.where(
        labels[:, None],
        MIX_MEAN_0 + np.sqrt(MIX_VAR_0) * z,
        MIX_MEAN_1 + np.sqrt(MIX_VAR_1) * z,
    )
    return out


def sample_epistemic(n: int, rng: np.random.Generator) -> Array:
    return rng.uniform(E_LOWER, E_UPPER, size=(n, 3))


def generate_dataset(
    n_a: int, n_e: int, seed: int, n_a_test: int = 0, n_e_test: int = 0
) -> ScenarioData:
    """Deterministic synthetic datasets: mixture aleatory points, uniform
    epistemic points; testing sets (if requested) continue the same stream."""
    rng = np.random.default_rng(seed)
    aleatory = sample_aleatory(n_a, rng)
    epistemic = sample_epistemic(n_e, rng)
    testing_a = sample_aleatory(n_a_test, rng) if n_a_test else None
    testing_e = sample_epistemic(n_e_test, rng) if n_e_test else None
    return ScenarioData(aleatory, epistemic, testing_a, testing_e)


def epistemic_box() -> EpistemicSet:
    return EpistemicSet.from_box(E_LOWER, E_UPPER)


def make_spec(design_bounds=None) -> ProblemSpec:
    bounds = DEFAULT_DESIGN_BOUNDS if design_bounds is None else np.asarray(design_bounds, float)
    return ProblemSpec(
        objective=circle_objective,
        requirements=[circle_requirement],
        design_bounds=bounds,
        m_a=2,
        m_e=3,
    )


@register_problem("circle")
def _circle_factory(design_bounds=None) -> ProblemBundle:
    return ProblemBundle(
        spec=make_spec(design_bounds),
        epistemic_set=epistemic_box(),
        response=circle_response,
        density=aleatory_density,
        generate=generate_dataset,
    )
