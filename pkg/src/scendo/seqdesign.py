"""Sequential design: cheap training sets, high-fidelity testing.

Each iteration evaluates the current design with a robust Monte Carlo
analysis on the large testing sets, stops once the robustness metric meets
its threshold and the objective meets its bound, and otherwise re-trains
on a small, freshly selected subset of the testing data.  When the metric
is violated the training size grows and the outlier fractions reset to
zero; when only the objective is too high the aleatory fraction grows so
the next design may ignore more scenarios.

Aleatory training scenarios are chosen by a budgeted selection: exactly
b_k currently-failing scenarios per requirement (they pull the success
domain where it helps the most), with the remaining slots filled for
likelihood and spatial diversity (log-determinant of the selected
covariance in the principal axes of the full testing cloud).  Epistemic
training scenarios are the testing draws with the largest worst-case
requirement over the selected aleatory points.

Training sets assembled this way are not IID draws, so the scenario risk
bound does not apply to the designs this loop produces; reports flag that.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from scendo import nlp
from scendo.core import AlphaConfig, InputError, ProblemSpec, ScenarioData, r_max
from scendo.montecarlo import RmcConfig, analyze
from scendo.programs import (
    solve_feasibility_seed,
    solve_risk_agnostic_global,
    solve_risk_agnostic_local,
)

Array = np.ndarray
logger = logging.getLogger(__name__)

_METRICS = ("a_hi", "b_hi", "c", "d_hi")


@dataclass
class SdConfig:
    """Loop controls; see the module docstring for the roles."""

    rmc: RmcConfig
    metric: str = "a_hi"  # which robustness number phi_k to check
    threshold: float = 1e-3
    j_bound: float = np.inf
    max_iter: int = 15
    n_a_init: int = 50
    n_e_init: int = 50
    n_a_cap: int = 100
    n_e_cap: int = 200
    growth: float = 1.3
    alpha_step: Optional[float] = None  # None: grow alpha_a by 1/n_a
    alpha_e: float = 0.0
    lambda_div: float = 0.0
    density: Optional[Callable] = None  # None: constant likelihood
    budgets: Optional[Array] = None  # None: scale testing violation counts
    program: str = "risk_agnostic_local"
    rho: float = 1e6
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")
        if self.lambda_div < 0:
            raise InputError("lambda_div must be nonnegative")
        if self.metric not in _METRICS:
            raise InputError(f"metric must be one of {_METRICS}")
        if self.growth <= 1:
            raise InputError("growth must exceed 1")
        if self.program not in ("risk_agnostic_local", "risk_agnostic_global", "feasibility_seed"):
            raise InputError(f"unknown program {self.program!r}")


@dataclass
class SdRecord:
    iteration: int
    n_a: int
    n_e: int
    alpha_a: Array
    objective: float
    metric: Array  # per-requirement phi_k
    violated: Array  # indices of requirements violating the threshold
    theta: Array


@dataclass
class SdTrace:
    records: List[SdRecord] = field(default_factory=list)
    met_spec: bool = False
    failed: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def rows(self):
        """CSV rows (iteration, n_a, alpha_a, J, metric, n_violated, n_e)."""
        for r in self.records:
            yield (
                r.iteration, r.n_a,
                ";".join(f"{a:.10g}" for a in r.alpha_a),
                r.objective, float(np.max(r.metric)), int(r.violated.size),
                r.n_e,
            )


# ---------------------------------------------------------------------------
# training-set selection
# ---------------------------------------------------------------------------


def _violation_table(spec: ProblemSpec, theta, data: ScenarioData):
    """c[i, k] = 1 iff testing scenario i fails requirement k for some
    testing epistemic draw."""
    data.require_testing()
    theta = np.asarray(theta, dtype=float)
    a = data.testing_aleatory[:, None, :]
    e = data.testing_epistemic[None, :, :]
    cols = []
    for rk in spec.requirements:
        vals = np.broadcast_to(
            np.asarray(rk(theta, a, e), float), (data.n_a_test, data.n_e_test)
        )
        cols.append(np.max(vals, axis=1) > 0.0)
    return np.column_stack(cols)


def default_budgets(spec: ProblemSpec, theta, data: ScenarioData, n_a_target: int) -> Array:
    """Scale the testing violation counts down to the training size."""
    c = _violation_table(spec, theta, data)
    counts = np.count_nonzero(c, axis=0)
    return np.ceil(n_a_target / data.n_a_test * counts).astype(int)


_COV_JITTER = 1e-9


def _logdet_cov(points: Array) -> float:
    if points.shape[0] < 2:
        return 0.0
    cov = np.atleast_2d(np.cov(points, rowvar=False))
    cov = cov + _COV_JITTER * np.eye(cov.shape[0])
    sign, logdet = np.linalg.slogdet(cov)
    return float(logdet) if sign > 0 else -np.inf


def _selection_value(pc: Array, like: Array, gamma: Array, sel: Array, lam: float) -> float:
    val = float(np.sum(gamma[sel] * like[sel]))
    if lam > 0:
        val += lam * _logdet_cov(pc[sel])
    return val


class _Selection:
    """Mutable selection with O(1) covariance updates and batched
    candidate scoring (stacked slogdet over all candidates at once)."""

    def __init__(self, pc: Array, like: Array, gamma: Array, lam: float):
        self.pc, self.like, self.gamma, self.lam = pc, like, gamma, lam
        m = pc.shape[1]
        self.mask = np.zeros(pc.shape[0], dtype=bool)
        self.s1 = np.zeros(m)
        self.s2 = np.zeros((m, m))
        self.count = 0
        self.like_sum = 0.0

    def add(self, i: int) -> None:
        x = self.pc[i]
        self.s1 += x
        self.s2 += np.outer(x, x)
        self.count += 1
        self.like_sum += self.gamma[i] * self.like[i]
        self.mask[i] = True

    def remove(self, i: int) -> None:
        x = self.pc[i]
        self.s1 -= x
        self.s2 -= np.outer(x, x)
        self.count -= 1
        self.like_sum -= self.gamma[i] * self.like[i]
        self.mask[i] = False

    def _logdets_with(self, cand: Array) -> Array:
        n = self.count + 1
        if n < 2:
            return np.zeros(cand.size)
        x = self.pc[cand]
        s1 = self.s1 + x  # (B, m)
        s2 = self.s2 + x[:, :, None] * x[:, None, :]  # (B, m, m)
        mean = s1 / n
        cov = (s2 - n * mean[:, :, None] * mean[:, None, :]) / (n - 1)
        cov = cov + _COV_JITTER * np.eye(cov.shape[1])
        sign, logdet = np.linalg.slogdet(cov)
        return np.where(sign > 0, logdet, -np.inf)

    def gains(self, cand: Array) -> Array:
        g = self.gamma[cand] * self.like[cand]
        if self.lam > 0:
            g = g + self.lam * self._logdets_with(cand)
        return g

    def pick_best(self, cand: Array) -> int:
        gains = self.gains(cand)
        order = np.lexsort((cand, -self.like[cand], -gains))
        best = int(cand[order[0]])
        self.add(best)
        return best

    def value(self) -> float:
        val = self.like_sum
        if self.lam > 0:
            val += self.lam * _logdet_cov(self.pc[self.mask])
        return val


def _greedy_build(c, budgets, pc, like, gamma, lam, n_target) -> _Selection:
    """Violating scenarios until each budget is met (preferring candidates
    that do not overshoot an already-met budget), then a feasible fill."""
    n_r = c.shape[1]
    sel = _Selection(pc, like, gamma, lam)
    counts = np.zeros(n_r, dtype=int)
    for k in range(n_r):
        while counts[k] < budgets[k]:
            cand = np.flatnonzero(c[:, k] & ~sel.mask)
            no_overshoot = cand[
                ~np.any(c[cand][:, counts >= budgets], axis=1)
            ] if np.any(counts >= budgets) else cand
            pool = no_overshoot if no_overshoot.size else cand
            if pool.size == 0:
                break
            i = sel.pick_best(pool)
            counts += c[i].astype(int)
    if np.any(counts != budgets):
        logger.info("selection budgets relaxed: wanted %s, got %s", budgets, counts)
    while sel.count < n_target:
        cand = np.flatnonzero((gamma == 0.0) & ~sel.mask)
        if cand.size == 0:
            raise InputError("cannot fill the selection without breaking budgets")
        sel.pick_best(cand)
    return sel


def select_training_aleatory(
    theta_prev,
    data: ScenarioData,
    spec: ProblemSpec,
    n_a_target: int,
    budgets: Optional[Array] = None,
    lambda_div: float = 0.0,
    density: Optional[Callable] = None,
) -> Array:
    """Indices into the testing aleatory set, of size n_a_target: the
    budgeted failure scenarios plus a likelihood/diversity-driven fill.

    Greedy builds (the combined objective, plus pure-likelihood and
    diversity-led fallbacks; the best-scoring one wins) are refined by
    1-swaps within groups of equal violation patterns so the budget
    equalities stay intact.
    """
    data.require_testing()
    n_pool = data.n_a_test
    if not 1 <= n_a_target <= n_pool:
        raise InputError("n_a_target must lie in [1, n_a_test]")
    c = _violation_table(spec, theta_prev, data)
    gamma = np.max(c, axis=1).astype(float)
    points = data.testing_aleatory
    like = np.ones(n_pool) if density is None else np.asarray(density(points), float)

    budgets = default_budgets(spec, theta_prev, data, n_a_target) if budgets is None \
        else np.asarray(budgets, dtype=int)
    if budgets.shape != (spec.n_r,):
        raise InputError("budgets must have one entry per requirement")
    avail = np.count_nonzero(c, axis=0)
    budgets = np.minimum(np.minimum(budgets, avail), n_a_target)

    # principal axes of the full testing cloud, fixed for this selection
    centered = points - points.mean(axis=0)
    _, vecs = np.linalg.eigh(np.cov(centered, rowvar=False))
    pc = centered @ vecs

    builds = [_greedy_build(c, budgets, pc, like, gamma, lambda_div, n_a_target)]
    if lambda_div > 0:
        builds.append(_greedy_build(c, budgets, pc, like, gamma, 0.0, n_a_target))
        builds.append(
            _greedy_build(c, budgets, pc, np.ones(n_pool), gamma, lambda_div, n_a_target)
        )
    values = [
        _selection_value(pc, like, gamma, np.flatnonzero(b.mask), lambda_div)
        for b in builds
    ]
    best = builds[int(np.argmax(values))]
    sel = _Selection(pc, like, gamma, lambda_div)
    for i in np.flatnonzero(best.mask):
        sel.add(int(i))
    _swap_refine(sel, c)
    return np.sort(np.flatnonzero(sel.mask))


def _swap_refine(sel: _Selection, c: Array, max_passes: int = 50) -> None:
    """1-swaps within equal violation-pattern classes until no improvement."""
    patterns = np.array([hash(tuple(row)) for row in c])
    for _ in range(max_passes):
        improved = False
        for i in np.flatnonzero(sel.mask):
            cand = np.flatnonzero((~sel.mask) & (patterns == patterns[i]))
            cand = cand[(c[cand] == c[i]).all(axis=1)]
            if cand.size == 0:
                continue
            base = sel.value()
            sel.remove(int(i))
            gains = sel.gains(cand)
            order = np.lexsort((cand, -sel.like[cand], -gains))
            j = int(cand[order[0]])
            sel.add(j)
            if sel.value() > base + 1e-12:
                improved = True
            else:
                sel.remove(j)
                sel.add(int(i))
        if not improved:
            break


def select_training_epistemic(
    spec: ProblemSpec, theta_prev, selected_aleatory: Array,
    testing_epistemic: Array, n_e_target: int,
) -> Array:
    """Indices of the testing epistemic draws ranked by the worst-case
    requirement over the selected aleatory points; the top draw is always
    included."""
    testing_epistemic = np.asarray(testing_epistemic, dtype=float)
    n_pool = testing_epistemic.shape[0]
    if not 1 <= n_e_target <= n_pool:
        raise InputError("n_e_target must lie in [1, n_e_test]")
    vals = r_max(
        spec,
        np.asarray(theta_prev, float),
        np.asarray(selected_aleatory, float)[:, None, :],
        testing_epistemic[None, :, :],
    )
    scores = np.max(np.broadcast_to(vals, (len(selected_aleatory), n_pool)), axis=0)
    order = np.lexsort((np.arange(n_pool), -scores))
    return np.sort(order[:n_e_target])


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------


def _solve_program(spec, train, cfg, alpha_a, opts):
    alphas = AlphaConfig(
        np.minimum(alpha_a, 0.9), np.full(spec.n_r, cfg.alpha_e), rho=cfg.rho
    )
    if cfg.program == "feasibility_seed":
        theta, alpha = solve_feasibility_seed(spec, train, alphas, opts=opts)
        return theta, np.maximum(alpha_a, alpha), "converged"
    solver = (
        solve_risk_agnostic_local
        if cfg.program == "risk_agnostic_local"
        else solve_risk_agnostic_global
    )
    result = solver(spec, train, alphas, opts)
    if result.solver_status == "infeasible":
        suggestion = result.diagnostics.get("suggested_alpha_a")
        if suggestion is not None:
            bumped = np.maximum(alpha_a, np.asarray(suggestion, float) + 1e-6)
            logger.info("infeasible at alpha_a=%s; retrying at %s", alpha_a, bumped)
            alphas = AlphaConfig(
                np.minimum(bumped, 0.9), np.full(spec.n_r, cfg.alpha_e), rho=cfg.rho
            )
            result = solver(spec, train, alphas, opts)
            alpha_a = bumped
    return result.theta_star, alpha_a, result.solver_status


def run_sd(
    spec: ProblemSpec,
    data: ScenarioData,
    baseline_theta,
    cfg: SdConfig,
    opts: Optional[nlp.NlpOptions] = None,
):
    """Run the loop from a baseline design; returns (theta, SdTrace).

    The trace has one record per evaluated design.  ``met_spec`` reports
    whether the loop stopped because the metric and objective bound were
    both satisfied (rather than by exhausting max_iter), and ``failed``
    marks an unrecoverable solver failure.
    """
    data.require_testing()
    opts = opts or nlp.NlpOptions(seed=cfg.seed)
    theta = np.asarray(baseline_theta, dtype=float)
    n_a, n_e = cfg.n_a_init, cfg.n_e_init
    alpha_a = np.zeros(spec.n_r)
    trace = SdTrace()

    for it in range(1, cfg.max_iter + 1):
        report = analyze(spec, theta, data, cfg.rmc)
        phi = {
            "a_hi": report.range_a[:, 1],
            "b_hi": report.range_b[:, 1],
            "c": report.point_c,
            "d_hi": report.range_d[:, 1],
        }[cfg.metric]
        violated = np.flatnonzero(phi > cfg.threshold)
        objective = float(np.asarray(spec.objective(theta), float))
        trace.records.append(
            SdRecord(
                iteration=it, n_a=n_a, n_e=n_e, alpha_a=alpha_a.copy(),
                objective=objective, metric=np.asarray(phi, float).copy(),
                violated=violated, theta=theta.copy(),
            )
        )
        if violated.size == 0 and objective <= cfg.j_bound:
            trace.met_spec = True
            return theta, trace
        if it == cfg.max_iter:
            return theta, trace

        if violated.size > 0:
            n_a = min(math.ceil(cfg.growth * n_a), cfg.n_a_cap, data.n_a_test)
            n_e = min(math.ceil(cfg.growth * n_e), cfg.n_e_cap, data.n_e_test)
            alpha_a = np.zeros(spec.n_r)
        else:
            step = cfg.alpha_step if cfg.alpha_step is not None else 1.0 / n_a
            alpha_a = np.minimum(alpha_a + step, 0.9)

        budgets = cfg.budgets
        sel_a = select_training_aleatory(
            theta, data, spec, n_a, budgets, cfg.lambda_div, cfg.density
        )
        sel_e = select_training_epistemic(
            spec, theta, data.testing_aleatory[sel_a], data.testing_epistemic, n_e
        )
        train = ScenarioData(
            data.testing_aleatory[sel_a],
            data.testing_epistemic[sel_e],
            data.testing_aleatory,
            data.testing_epistemic,
        )
        try:
            theta, alpha_a, status = _solve_program(spec, train, cfg, alpha_a, opts)
        except Exception:
            logger.exception("sequential design solve failed at iteration %d", it)
            trace.failed = True
            return theta, trace
        if status == "infeasible":
            logger.warning("iteration %d stayed infeasible; stopping", it)
            trace.failed = True
            return theta, trace
    return theta, trace
