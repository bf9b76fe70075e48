"""Epistemic scenario weights for the global-outlier programs.

For requirement k at design theta, the rule is:

1. empirical failure probability of each pseudo-distribution,
   p_i = 1 - F_{r_k(theta, a_i, epistemic set)}(0); keep the aleatory
   indices I_a whose p_i does not exceed the (1 - alpha_a) quantile of
   {p_i} (the lowest-failure-probability fraction of the scenarios);
2. worst-case value over the kept indices, v_j = max_{i in I_a}
   r_k(theta, a_i, e_j); threshold s = quantile({v_j}, 1 - alpha_e);
   weight w_j = exp(-gamma * max(0, v_j - s)).

A weight is exactly one when v_j <= s and decays to zero exponentially
fast beyond the threshold, so roughly ceil(n_e * alpha_e) scenarios can be
down-weighted.  Quantiles use the piecewise-linear interpolant from
``scendo.ecdf`` so the rule is consistent with the programs' constraints.
All functions are pure and safe to call in parallel across requirements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scendo.core import InputError, ProblemSpec, ScenarioData
from scendo.ecdf import cdf_of, quantile_of

Array = np.ndarray

#: smoothing width of the sign surrogate used while solving
SIGN_EPS = 1e-8
#: slack counted as active when reporting
SIGN_REPORT_TOL = 1e-6


@dataclass(frozen=True)
class WeightSequence:
    weights: Array  # (n_e,), each in [0, 1]
    threshold: float  # the (1 - alpha_e) quantile of the worst-case values


def smooth_sign_fraction(xi: Array, eps: float = SIGN_EPS) -> Array:
    """Differentiable surrogate of mean(sign(xi_i)) for xi >= 0.

    Each term xi/(xi + eps) rises from 0 to ~1 over a width of eps, so the
    fraction tracks the count of active slacks while staying smooth for
    gradient-based solvers.  Supports batched xi on the last axis.
    """
    xi = np.maximum(np.asarray(xi, dtype=float), 0.0)
    return np.mean(xi / (xi + eps), axis=-1)


def sign_fraction(xi: Array, tol: float = SIGN_REPORT_TOL) -> float:
    """Exact fraction of slacks above tol, used when reporting."""
    xi = np.asarray(xi, dtype=float)
    return float(np.count_nonzero(xi > tol) / xi.size)


def weights_from_values(values: Array, alpha_a_k, alpha_e_k, gamma: float):
    """Weight rule applied to a precomputed requirement-value matrix.

    ``values`` has shape (..., n_a, n_e); ``alpha_a_k`` may be an array
    matching the leading shape (the risk-averse global program feeds the
    slack-sign fraction through this slot).  Returns ``(weights, v, s)``
    with shapes (..., n_e), (..., n_e) and (...,).
    """
    values = np.asarray(values, dtype=float)
    alpha_a_k = np.asarray(alpha_a_k, dtype=float)
    if np.any(alpha_a_k < 0) or np.any(alpha_a_k >= 1):
        raise InputError("alpha_a_k must lie in [0, 1)")
    if not (0.0 <= float(np.min(alpha_e_k)) and float(np.max(alpha_e_k)) < 1):
        raise InputError("alpha_e_k must lie in [0, 1)")
    if gamma < 1:
        raise InputError("gamma must be >= 1")

    p = 1.0 - cdf_of(values, 0.0)  # (..., n_a)
    thr_p = quantile_of(p, 1.0 - alpha_a_k)  # (...,)
    keep = p <= thr_p[..., None]
    if not np.all(np.any(keep, axis=-1)):
        raise RuntimeError("internal error: empty aleatory inlier set")
    v = np.max(np.where(keep[..., :, None], values, -np.inf), axis=-2)  # (..., n_e)
    s = quantile_of(v, 1.0 - alpha_e_k)
    w = np.exp(-gamma * np.maximum(0.0, v - s[..., None]))
    return w, v, s


def compute_weights(
    spec: ProblemSpec,
    theta: Array,
    k: int,
    data: ScenarioData,
    alpha_a_k: float,
    alpha_e_k: float,
    gamma: float = 100.0,
) -> WeightSequence:
    """Evaluate the rule for requirement k at design theta."""
    theta = np.asarray(theta, dtype=float)
    values = spec.requirements[k](
        theta, data.aleatory[:, None, :], data.epistemic[None, :, :]
    )
    w, _, s = weights_from_values(values, alpha_a_k, alpha_e_k, gamma)
    return WeightSequence(weights=w, threshold=float(s))
