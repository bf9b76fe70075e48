"""Robust Monte Carlo analysis of a fixed design.

For each testing epistemic draw e the failure probability of the design is
estimated from the testing aleatory set, giving a range of failure
probabilities over the epistemic set.  Exact (Clopper-Pearson) binomial
confidence intervals then widen the range for aleatory sampling error, and
a second pass over the epistemic draws quantifies how likely the design is
to violate a probability budget p_max, with its own confidence interval
for the epistemic sampling error.  As in the scenario programs, fractions
alpha_a / alpha_e of the worst draws can be excluded from the analysis.

The (aleatory x epistemic) requirement evaluation grid is the hot loop; it
is evaluated in one vectorized call per requirement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy.stats import beta as _beta_dist

from scendo.core import InputError, ProblemSpec, ScenarioData, r_max
from scendo.ecdf import quantile_of, sorted_cdf, strictify_sorted

Array = np.ndarray


@dataclass(frozen=True)
class RmcConfig:
    """Analysis-time outlier fractions, confidence level, and budgets.

    These are deliberately separate from the fractions used to train the
    design: an analysis commonly uses different (often zero) values.
    """

    alpha_a: Array
    alpha_e: Array
    sigma: float = 0.95
    p_max: Array = field(default_factory=lambda: np.array([0.01]))
    worst_case: bool = False  # analyze max_k r_k instead of each r_k

    def __post_init__(self):
        aa = np.atleast_1d(np.asarray(self.alpha_a, dtype=float))
        ae = np.atleast_1d(np.asarray(self.alpha_e, dtype=float))
        pm = np.atleast_1d(np.asarray(self.p_max, dtype=float))
        for name, v in (("alpha_a", aa), ("alpha_e", ae), ("p_max", pm)):
            if np.any(v < 0) or np.any(v > 1):
                raise InputError(f"{name} entries must lie in [0, 1]")
        if not 0 < self.sigma < 1:
            raise InputError("sigma must lie in (0, 1)")
        object.__setattr__(self, "alpha_a", aa)
        object.__setattr__(self, "alpha_e", ae)
        object.__setattr__(self, "p_max", pm)

    def _expand(self, n_r: int) -> "RmcConfig":
        def up(v):
            return np.full(n_r, v[0]) if v.size == 1 and n_r > 1 else v

        aa, ae, pm = up(self.alpha_a), up(self.alpha_e), up(self.p_max)
        if not (aa.size == ae.size == pm.size == n_r):
            raise InputError("RmcConfig vectors do not match the requirement count")
        return RmcConfig(aa, ae, self.sigma, pm, self.worst_case)


@dataclass(frozen=True)
class RmcReport:
    """Per-requirement failure-probability ranges.

    range_a: sampled range over the epistemic draws;
    range_b: range widened by aleatory-sampling confidence intervals;
    point_c / range_d: estimated probability of exceeding p_max over the
    epistemic draws, with its confidence interval.
    p_by_epistemic holds the raw per-draw failure probabilities.
    """

    range_a: Array  # (n_r, 2)
    range_b: Array  # (n_r, 2)
    point_c: Array  # (n_r,)
    range_d: Array  # (n_r, 2)
    p_by_epistemic: Array  # (n_r, n_e')
    sigma: float
    worst_case: bool = False

    def rows(self):
        """One (a_lo, a_hi, b_lo, b_hi, c, d_lo, d_hi) tuple per requirement."""
        for k in range(self.range_a.shape[0]):
            yield (
                self.range_a[k, 0], self.range_a[k, 1],
                self.range_b[k, 0], self.range_b[k, 1],
                self.point_c[k],
                self.range_d[k, 0], self.range_d[k, 1],
            )


def clopper_pearson(successes, trials: int, sigma: float):
    """Exact two-sided binomial interval at confidence sigma.

    At the boundary counts (0 or all) the empty tail folds into the other
    side, giving the one-sided zero-failure bound 1 - (1-sigma)^(1/n).
    Vectorized over ``successes``.
    """
    m = np.atleast_1d(np.asarray(successes, dtype=float))
    n = float(trials)
    if n < 1:
        raise InputError("binomial interval needs at least one trial")
    a = 1.0 - sigma
    m_lo = np.clip(m, 1.0, n)  # safe params; overridden below
    m_hi = np.clip(m, 0.0, n - 1.0)
    lo = _beta_dist.ppf(a / 2.0, m_lo, n - m_lo + 1.0)
    hi = _beta_dist.ppf(1.0 - a / 2.0, m_hi + 1.0, n - m_hi)
    lo = np.where(m <= 0, 0.0, np.where(m >= n, a ** (1.0 / n), lo))
    hi = np.where(m >= n, 1.0, np.where(m <= 0, 1.0 - a ** (1.0 / n), hi))
    return lo, hi


def _testing_requirements(spec: ProblemSpec, theta: Array, data: ScenarioData, cfg: RmcConfig):
    data.require_testing()
    theta = np.asarray(theta, dtype=float)
    a = data.testing_aleatory[:, None, :]
    e = data.testing_epistemic[None, :, :]
    shape = (data.n_a_test, data.n_e_test)
    if cfg.worst_case:
        return [np.broadcast_to(r_max(spec, theta, a, e), shape)]
    return [
        np.broadcast_to(np.asarray(rk(theta, a, e), float), shape)
        for rk in spec.requirements
    ]


def _trimmed_sorted(values: Array, alpha_a_k: float) -> Array:
    """Keep the smallest ceil(n*(1-alpha)) rows of each column, sorted."""
    n = values.shape[0]
    n_keep = int(np.ceil(n * (1.0 - alpha_a_k)))
    if n_keep < 1:
        raise InputError("trimmed aleatory sequence is empty")
    return np.sort(values, axis=0)[:n_keep]


def _seq_quantile(vals: Array, level: float) -> float:
    """Quantile of a probability sequence, clipped back to the sequence's
    true range so the tie-break perturbation cannot leak outside it."""
    q = float(quantile_of(vals, level))
    return float(np.clip(q, float(vals.min()), float(vals.max())))


def _per_requirement(values: Array, alpha_a_k, alpha_e_k, p_max_k, sigma):
    trimmed = _trimmed_sorted(values, alpha_a_k)  # (n_keep, n_e')
    n_keep = trimmed.shape[0]
    cols = strictify_sorted(trimmed.T)  # (n_e', n_keep) sorted rows
    p = np.clip(1.0 - sorted_cdf(cols, 0.0), 0.0, 1.0)

    a_lo = _seq_quantile(p, 0.0)
    a_hi = _seq_quantile(p, 1.0 - alpha_e_k)

    m = np.count_nonzero(trimmed <= 0.0, axis=0)  # successes per epistemic draw
    ci_lo, ci_hi = clopper_pearson(m, n_keep, sigma)
    b_lo = float(np.clip(1.0 - np.max(ci_hi), 0.0, 1.0))
    upper_fail = 1.0 - ci_lo  # the sequence of upper failure probabilities
    b_hi = _seq_quantile(upper_fail, 1.0 - alpha_e_k)

    n_e = upper_fail.shape[0]
    n_q = int(np.floor(n_e * (1.0 - alpha_e_k)))
    if n_q < 1:
        raise InputError("trimmed epistemic sequence is empty")
    q_kept = strictify_sorted(np.sort(upper_fail, kind="stable")[:n_q])
    c = float(np.clip(1.0 - sorted_cdf(q_kept, p_max_k), 0.0, 1.0))
    exceed = int(np.count_nonzero(q_kept > p_max_k))
    d_lo, d_hi = clopper_pearson(exceed, n_q, sigma)

    return (
        np.array([a_lo, a_hi]),
        np.array([b_lo, b_hi]),
        c,
        np.array([float(d_lo[0]), float(d_hi[0])]),
        p,
    )


def failure_prob_range(spec, theta, data: ScenarioData, cfg: RmcConfig) -> Array:
    """Range [min_e p(e), (1 - alpha_e)-quantile of p(e)] per requirement."""
    report = analyze(spec, theta, data, cfg)
    return report.range_a


def ci_range(spec, theta, data: ScenarioData, cfg: RmcConfig) -> Array:
    """range_a widened by exact binomial confidence intervals; contains
    range_a on every instance."""
    report = analyze(spec, theta, data, cfg)
    return report.range_b


def spec_violation(spec, theta, data: ScenarioData, cfg: RmcConfig):
    """Estimated probability (and its confidence interval) that a random
    epistemic point drives the failure probability above p_max."""
    report = analyze(spec, theta, data, cfg)
    return report.point_c, report.range_d


def analyze(spec: ProblemSpec, theta, data: ScenarioData, cfg: RmcConfig) -> RmcReport:
    """Full robust Monte Carlo report; shares the evaluation grid between
    the three range computations."""
    per_req = _testing_requirements(spec, theta, data, cfg)
    if cfg.worst_case:  # a single synthetic requirement, driven by the k=1 entries
        cfg = RmcConfig(cfg.alpha_a[:1], cfg.alpha_e[:1], cfg.sigma, cfg.p_max[:1], True)
    cfg = cfg._expand(len(per_req))
    out_a, out_b, out_c, out_d, out_p = [], [], [], [], []
    for k, values in enumerate(per_req):
        ra, rb, c, rd, p = _per_requirement(
            values, cfg.alpha_a[k], cfg.alpha_e[k], cfg.p_max[k], cfg.sigma
        )
        out_a.append(ra)
        out_b.append(rb)
        out_c.append(c)
        out_d.append(rd)
        out_p.append(p)
    return RmcReport(
        range_a=np.stack(out_a),
        range_b=np.stack(out_b),
        point_c=np.array(out_c),
        range_d=np.stack(out_d),
        p_by_epistemic=np.stack(out_p),
        sigma=cfg.sigma,
        worst_case=cfg.worst_case,
    )
