"""Nonlinear programming backend: penalty continuation with quasi-Newton
inner solves, finite-difference gradients, and Latin-hypercube multi-start.

The scenario programs have piecewise-smooth constraints with derivative
kinks where sample orderings change, and their feasible sets are often
non-convex.  An exterior quadratic penalty tolerates the kinks, and the
multi-start absorbs local minima:

    minimize_x  f(x) + mu * sum_i max(0, g_i(x))^2   over the box,

for an increasing sequence of penalty weights mu, each stage solved with
L-BFGS-B (projected quasi-Newton) warm-started from the previous one.
Gradients come from central finite differences with per-coordinate steps
fd_step * max(1, |x_i|).  Everything is deterministic given the seed; the
multi-start reduction uses a fixed ordering so results do not depend on
how many worker threads run the starts.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from scendo.core import InputError

Array = np.ndarray

#: worker threads for the multi-start loop (set via the CLI --threads flag)
MAX_WORKERS = 1


def set_max_workers(n: int) -> None:
    global MAX_WORKERS
    MAX_WORKERS = max(1, int(n))


@dataclass
class NlpOptions:
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e9
    fd_step: float = 1e-6
    max_outer: int = 12
    max_inner: int = 300
    tol_x: float = 1e-8
    tol_con: float = 1e-6
    n_starts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.penalty_growth <= 1:
            raise InputError("penalty_growth must exceed 1")
        if min(self.tol_x, self.tol_con, self.fd_step) <= 0:
            raise InputError("tolerances and fd_step must be positive")


@dataclass
class NlpProblem:
    """Box-constrained program: minimize objective s.t. g_i(x) <= 0.

    ``inequalities`` is a list of scalar constraint functions; large
    constraint systems can instead supply ``constraints_vec`` returning the
    whole residual vector.  The optional ``*_batch`` callables evaluate a
    (B, dim) stack of points at once and make finite differencing cheap;
    they must agree with their scalar counterparts.
    """

    dim: int
    objective: Callable[[Array], float]
    inequalities: Sequence[Callable[[Array], float]] = ()
    bounds: Optional[Array] = None  # (dim, 2), +-inf allowed
    x0_list: Sequence[Array] = ()
    constraints_vec: Optional[Callable[[Array], Array]] = None
    objective_batch: Optional[Callable[[Array], Array]] = None
    constraints_batch: Optional[Callable[[Array], Array]] = None


@dataclass
class NlpResult:
    x: Array
    f: float
    status: str  # converged | max-iter | failed
    diagnostics: dict = field(default_factory=dict)


def fd_gradient(f: Callable[[Array], float], x, step: float = 1e-6) -> Array:
    """Central finite differences, component-wise steps step*max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    grad = np.empty(x.size)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = f(xp)
        fm = f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ArithmeticError(f"non-finite objective at finite-difference probe of coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def latin_hypercube(bounds: Array, n: int, rng: np.random.Generator) -> Array:
    """n stratified points in the box; infinite sides are clipped to ±1e3."""
    bounds = np.asarray(bounds, dtype=float)
    lo = np.where(np.isfinite(bounds[:, 0]), bounds[:, 0], -1e3)
    hi = np.where(np.isfinite(bounds[:, 1]), bounds[:, 1], 1e3)
    dim = bounds.shape[0]
    u = (rng.permuted(np.tile(np.arange(n), (dim, 1)), axis=1).T + rng.uniform(size=(n, dim))) / n
    return lo + u * (hi - lo)


def _make_cons(problem: NlpProblem):
    if problem.constraints_vec is not None:
        return problem.constraints_vec
    funcs = list(problem.inequalities)
    if not funcs:
        return lambda x: np.empty(0)
    return lambda x: np.array([g(x) for g in funcs], dtype=float)


def _make_batch_penalty(problem: NlpProblem, cons):
    """(B, dim) -> (B,) merit values; falls back to a row loop."""
    f_b = problem.objective_batch
    g_b = problem.constraints_batch

    def penalty_batch(X: Array, mu: float) -> Array:
        fvals = f_b(X) if f_b is not None else np.array([problem.objective(x) for x in X])
        if g_b is not None:
            gvals = g_b(X)
        else:
            gvals = np.stack([cons(x) for x in X]) if X.shape[0] else np.empty((0, 0))
        if gvals.size:
            fvals = fvals + mu * np.sum(np.maximum(0.0, gvals) ** 2, axis=-1)
        return np.asarray(fvals, dtype=float)

    return penalty_batch


def _batch_fd_gradient(penalty_batch, x: Array, mu: float, step: float) -> Array:
    dim = x.size
    h = step * np.maximum(1.0, np.abs(x))
    X = np.tile(x, (2 * dim, 1))
    X[np.arange(dim), np.arange(dim)] += h
    X[dim + np.arange(dim), np.arange(dim)] -= h
    vals = penalty_batch(X, mu)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0] % dim)
        raise ArithmeticError(f"non-finite merit value at finite-difference probe of coordinate {bad}")
    return (vals[:dim] - vals[dim:]) / (2.0 * h)


def _solve_one_start(problem: NlpProblem, opts: NlpOptions, x0: Array):
    cons = _make_cons(problem)
    penalty_batch = _make_batch_penalty(problem, cons)

    def penalty(x: Array, mu: float) -> float:
        g = cons(x)
        p = problem.objective(x)
        if g.size:
            p = p + mu * float(np.sum(np.maximum(0.0, g) ** 2))
        return float(p)

    if problem.bounds is not None:
        lb, ub = problem.bounds[:, 0], problem.bounds[:, 1]
        x = np.clip(x0, lb, ub)
        scipy_bounds = list(zip(lb, ub))
    else:
        x = np.asarray(x0, dtype=float)
        scipy_bounds = None

    mu = opts.penalty_init
    viol_history = []
    nfev = 0
    converged = False
    for _ in range(opts.max_outer):
        def fun(xx, _mu=mu):
            return (
                penalty(xx, _mu),
                _batch_fd_gradient(penalty_batch, xx, _mu, opts.fd_step),
            )

        res = _scipy_minimize(
            fun,
            x,
            jac=True,
            method="L-BFGS-B",
            bounds=scipy_bounds,
            options={"maxiter": opts.max_inner, "ftol": 1e-15, "gtol": 1e-10},
        )
        nfev += int(res.nfev) * (1 + 2 * problem.dim)
        step_size = float(np.max(np.abs(res.x - x))) if res.x.size else 0.0
        x = res.x
        g = cons(x)
        viol = float(np.max(np.maximum(0.0, g), initial=0.0))
        viol_history.append(viol)
        if viol <= opts.tol_con and step_size <= opts.tol_x:
            converged = True
            break
        if viol > opts.tol_con and step_size <= opts.tol_x and problem.bounds is not None:
            # stagnant while infeasible: typically parked on a zero-gradient
            # boundary saddle; kick deterministically toward the box interior
            lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
            finite = np.isfinite(lo) & np.isfinite(hi)
            mid = x.copy()
            mid[finite] = (lo[finite] + hi[finite]) / 2.0
            x = x + 0.05 * (mid - x)
        if mu >= opts.penalty_max:
            break
        mu = min(mu * opts.penalty_growth, opts.penalty_max)

    return {
        "x": x,
        "f": float(problem.objective(x)),
        "viol": viol_history[-1] if viol_history else 0.0,
        "converged": converged,
        "viol_history": viol_history,
        "nfev": nfev,
    }


def minimize(problem: NlpProblem, opts: Optional[NlpOptions] = None) -> NlpResult:
    """Best point over all starts; deterministic given (problem, options, seed).

    Status "converged" requires the final constraint violation <= tol_con
    and outer-step stagnation <= tol_x; a feasible point without
    stagnation reports "max-iter"; if no start reaches feasibility the
    least-infeasible point is returned with status "failed".
    """
    opts = opts or NlpOptions()
    rng = np.random.default_rng(opts.seed)
    starts = [np.asarray(x, dtype=float) for x in problem.x0_list]
    if problem.bounds is not None:
        for x in starts:
            if np.any(x < problem.bounds[:, 0] - 1e-12) or np.any(x > problem.bounds[:, 1] + 1e-12):
                raise InputError("start point outside bounds")
    if len(starts) < opts.n_starts:
        if problem.bounds is None:
            raise InputError("bounds are required to draw starting points")
        starts.extend(latin_hypercube(problem.bounds, opts.n_starts - len(starts), rng))

    if MAX_WORKERS > 1 and len(starts) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=MAX_WORKERS) as pool:
            runs = list(pool.map(lambda s: _solve_one_start(problem, opts, s), starts))
    else:
        runs = [_solve_one_start(problem, opts, s) for s in starts]

    best, best_key, best_idx = None, (2, np.inf), -1
    for i, run in enumerate(runs):  # fixed order: parallelism-invariant
        feasible = run["viol"] <= opts.tol_con
        key = (0, run["f"]) if feasible else (1, run["viol"])
        if key < best_key:
            best, best_key, best_idx = run, key, i
    assert best is not None

    feasible = best["viol"] <= opts.tol_con
    if feasible and best["converged"]:
        status = "converged"
    elif feasible:
        status = "max-iter"
    else:
        status = "failed"
    diagnostics = {
        "n_starts": len(starts),
        "best_start": best_idx,
        "nfev": int(sum(r["nfev"] for r in runs)),
        "violation": best["viol"],
        "viol_history": best["viol_history"],
    }
    return NlpResult(x=best["x"], f=best["f"], status=status, diagnostics=diagnostics)
