import numpy as np
import pytest

from oracles import best_budgeted_selection
from scendo import circle, nlp
from scendo.core import InputError, ScenarioData
from scendo.montecarlo import RmcConfig
from scendo.seqdesign import (
    SdConfig,
    default_budgets,
    run_sd,
    select_training_aleatory,
    select_training_epistemic,
)

ZERO_RMC = RmcConfig(alpha_a=np.zeros(1), alpha_e=np.zeros(1), sigma=0.95)


def _selection_instance(n_pool=12, seed=0):
    """Testing cloud around a tight design: a clean violating/feasible split."""
    rng = np.random.default_rng(seed)
    pts = circle.sample_aleatory(n_pool, rng)
    epi = circle.sample_epistemic(20, rng)
    data = ScenarioData(pts[:2], epi[:2], testing_aleatory=pts, testing_epistemic=epi)
    theta = np.array([0.0, 0.0, 1.2])
    return data, theta


def test_selection_matches_exhaustive_oracle_likelihood_only(circle_spec):
    data, theta = _selection_instance()
    n_target, budget = 6, 2
    sel = select_training_aleatory(
        theta, data, circle_spec, n_target, budgets=np.array([budget]),
        lambda_div=0.0, density=circle.aleatory_density,
    )
    assert sel.size == n_target
    # oracle over all subsets with exactly `budget` violating members
    from scendo.seqdesign import _violation_table

    c = _violation_table(circle_spec, theta, data)
    like = circle.aleatory_density(data.testing_aleatory)
    _, best_val, value = best_budgeted_selection(
        data.testing_aleatory, c[:, 0], like, n_target, budget
    )
    assert int(np.sum(c[sel, 0])) == budget
    assert value(sel) == pytest.approx(best_val, rel=1e-12)


def test_selection_no_violations_degenerate_budget(circle_spec):
    data, _ = _selection_instance()
    huge = np.array([0.0, 0.0, 11.0])  # nothing violates
    sel = select_training_aleatory(
        huge, data, circle_spec, 5, budgets=np.array([0]),
        lambda_div=0.5, density=circle.aleatory_density,
    )
    assert sel.size == 5
    assert np.all(sel < data.n_a_test)


def test_selection_value_dominates_pure_strategies(circle_spec):
    data, theta = _selection_instance(n_pool=14, seed=3)
    lam = 0.8
    from scendo.seqdesign import _selection_value, _violation_table

    c = _violation_table(circle_spec, theta, data)
    like = circle.aleatory_density(data.testing_aleatory)
    pts = data.testing_aleatory
    centered = pts - pts.mean(axis=0)
    _, vecs = np.linalg.eigh(np.cov(centered, rowvar=False))
    pc = centered @ vecs
    gamma = np.max(c, axis=1).astype(float)
    budget = np.array([min(2, int(c[:, 0].sum()))])

    combined = select_training_aleatory(theta, data, circle_spec, 7, budget, lam,
                                        circle.aleatory_density)
    pure_like = select_training_aleatory(theta, data, circle_spec, 7, budget, 0.0,
                                         circle.aleatory_density)
    pure_div = select_training_aleatory(theta, data, circle_spec, 7, budget, lam, None)
    val = lambda s: _selection_value(pc, like, gamma, s, lam)
    assert val(combined) >= val(pure_like) - 1e-9
    assert val(combined) >= val(pure_div) - 1e-9


def test_selection_validates_target(circle_spec):
    data, theta = _selection_instance()
    with pytest.raises(InputError):
        select_training_aleatory(theta, data, circle_spec, 0)
    with pytest.raises(InputError):
        select_training_aleatory(theta, data, circle_spec, 999)


def test_default_budgets_scale_with_training_size(circle_spec):
    data, theta = _selection_instance(n_pool=40)
    b_small = default_budgets(circle_spec, theta, data, 4)
    b_large = default_budgets(circle_spec, theta, data, 20)
    assert b_small.shape == (1,)
    assert b_small[0] <= b_large[0]


def test_epistemic_selection_identity_and_top1(circle_spec):
    data, theta = _selection_instance()
    all_idx = select_training_epistemic(
        circle_spec, theta, data.testing_aleatory, data.testing_epistemic, 20
    )
    assert np.array_equal(all_idx, np.arange(20))

    vals = circle.circle_requirement(
        theta, data.testing_aleatory[:, None, :], data.testing_epistemic[None, :, :]
    )
    scores = vals.max(axis=0)
    top3 = select_training_epistemic(
        circle_spec, theta, data.testing_aleatory, data.testing_epistemic, 3
    )
    assert int(np.argmax(scores)) in top3
    assert set(top3) == set(np.argsort(-scores, kind="stable")[:3])


def test_epistemic_selection_ranks_monotone_coordinate():
    # requirement increasing in e1: the largest e1 draws are selected
    from scendo.core import ProblemSpec

    spec = ProblemSpec(
        objective=lambda th: th[..., 0],
        requirements=[lambda th, a, e: a[..., 0] + e[..., 0] - th[..., 0]],
        design_bounds=[[0.0, 4.0]],
        m_a=1,
        m_e=1,
    )
    e_pool = np.linspace(0, 1, 11)[:, None]
    sel = select_training_epistemic(spec, np.array([1.0]), np.array([[0.5]]), e_pool, 4)
    assert np.array_equal(sel, [7, 8, 9, 10])


def test_run_sd_immediate_stop(circle_spec):
    data = circle.generate_dataset(4, 4, seed=1, n_a_test=600, n_e_test=30)
    cfg = SdConfig(rmc=ZERO_RMC, threshold=0.02, max_iter=5, n_a_init=8, n_e_init=6)
    baseline = np.array([0.5, 0.3, 9.0])  # already meets the loose spec
    theta, trace = run_sd(circle_spec, data, baseline, cfg,
                          nlp.NlpOptions(seed=0, n_starts=3, max_inner=100))
    assert trace.met_spec
    assert len(trace) == 1
    assert np.array_equal(theta, baseline)


def test_run_sd_trace_bounded_by_max_iter(circle_spec):
    data = circle.generate_dataset(4, 4, seed=2, n_a_test=400, n_e_test=20)
    cfg = SdConfig(
        rmc=ZERO_RMC, threshold=0.0, max_iter=2,  # unattainable: exact zero
        n_a_init=8, n_e_init=6, n_a_cap=12, n_e_cap=10,
    )
    _, trace = run_sd(circle_spec, data, np.array([0.0, 0.0, 2.0]), cfg,
                      nlp.NlpOptions(seed=0, n_starts=3, max_inner=80))
    assert len(trace) == 2
    assert not trace.met_spec
    # training sizes never exceed caps, alphas reset on violation
    for rec in trace.records:
        assert rec.n_a <= 12 and rec.n_e <= 10


def test_run_sd_grows_training_and_improves(circle_spec):
    data = circle.generate_dataset(4, 4, seed=5, n_a_test=1500, n_e_test=40)
    cfg = SdConfig(
        rmc=ZERO_RMC, threshold=5e-3, max_iter=8,
        n_a_init=10, n_e_init=8, n_a_cap=60, n_e_cap=30, seed=0,
        lambda_div=1.0, density=circle.aleatory_density,
    )
    baseline = np.array([0.3, 0.2, 2.2])  # too tight for the spec
    theta, trace = run_sd(circle_spec, data, baseline, cfg,
                          nlp.NlpOptions(seed=0, n_starts=3, max_inner=100))
    assert not trace.failed
    assert trace.met_spec
    metrics = [float(np.max(r.metric)) for r in trace.records]
    assert metrics[-1] <= cfg.threshold
    assert metrics[-1] <= metrics[0]
    # the growth schedule kicked in while the metric was violated
    assert trace.records[1].n_a == 13


def test_sd_config_validation():
    with pytest.raises(InputError):
        SdConfig(rmc=ZERO_RMC, max_iter=0)
    with pytest.raises(InputError):
        SdConfig(rmc=ZERO_RMC, metric="nope")
    with pytest.raises(InputError):
        SdConfig(rmc=ZERO_RMC, lambda_div=-1.0)
