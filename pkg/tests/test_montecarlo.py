import numpy as np
import pytest

from scendo import circle
from scendo.core import InputError, ProblemSpec, ScenarioData
from scendo.ecdf import cdf_of
from scendo.montecarlo import RmcConfig, analyze, clopper_pearson, failure_prob_range

ZERO_CFG = RmcConfig(alpha_a=np.zeros(1), alpha_e=np.zeros(1), sigma=0.95)


def _table_problem(table: np.ndarray):
    """Requirement values read straight from a (n_a', n_e') table."""

    def req(th, a, e, T=table):
        return T[a[..., 0].astype(int), e[..., 0].astype(int)] + 0.0 * th[..., 0]

    spec = ProblemSpec(
        objective=lambda th: th[..., 0],
        requirements=[req],
        design_bounds=[[0.0, 1.0]],
        m_a=1,
        m_e=1,
    )
    n_a, n_e = table.shape
    idx_a = np.arange(n_a, dtype=float)[:, None]
    idx_e = np.arange(n_e, dtype=float)[:, None]
    data = ScenarioData(idx_a, idx_e, testing_aleatory=idx_a, testing_epistemic=idx_e)
    return spec, data


def test_hand_built_probability_range():
    # columns with exact interpolated failure probabilities (0, 0.1, 0.5)
    col0 = -np.arange(1.0, 11.0)
    col1 = np.array([-9, -8, -7, -6, -5, -4, -3, -2, -1, 9.0])
    col2 = np.array([-5, -4, -3, -2, -1, 1, 2, 3, 4, 5.0])
    table = np.column_stack([np.sort(col0), col1, col2])
    spec, data = _table_problem(table)
    report = analyze(spec, np.zeros(1), data, ZERO_CFG)
    assert np.allclose(report.p_by_epistemic[0], [0.0, 0.1, 0.5])
    assert report.range_a[0, 0] == 0.0
    assert report.range_a[0, 1] == pytest.approx(0.5)


def test_fully_successful_design_ranges_collapse():
    # 500 samples push the zero-failure upper CI (~0.006) below p_max
    table = -np.ones((500, 5))
    spec, data = _table_problem(table)
    report = analyze(spec, np.zeros(1), data, ZERO_CFG)
    assert np.array_equal(report.range_a[0], [0.0, 0.0])
    assert report.point_c[0] == 0.0
    assert report.range_d[0, 0] == 0.0
    # the binomial upper end stays positive: finite-sample uncertainty
    assert 0 < report.range_b[0, 1] < 0.01


def test_nesting_range_a_in_range_b(circle_spec):
    rng = np.random.default_rng(0)
    data = circle.generate_dataset(5, 5, seed=3, n_a_test=400, n_e_test=60)
    for _ in range(10):
        theta = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 6)])
        rep = analyze(circle_spec, theta, data, ZERO_CFG)
        assert rep.range_b[0, 0] <= rep.range_a[0, 0] + 1e-12
        assert rep.range_a[0, 1] <= rep.range_b[0, 1] + 1e-12


def test_zero_failure_clopper_pearson_closed_form():
    lo, hi = clopper_pearson(0, 100, 0.95)
    assert lo[0] == 0.0
    assert hi[0] == pytest.approx(1 - 0.05 ** (1 / 100), abs=1e-12)
    lo, hi = clopper_pearson(100, 100, 0.95)
    assert hi[0] == 1.0
    assert lo[0] == pytest.approx(0.05 ** (1 / 100), abs=1e-12)


def test_clopper_pearson_brackets_point_estimate():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(5, 400))
        m = int(rng.integers(0, n + 1))
        lo, hi = clopper_pearson(m, n, 0.95)
        assert lo[0] <= m / n <= hi[0]
        assert 0.0 <= lo[0] <= hi[0] <= 1.0


def test_exceedance_cdf_hand_value():
    # evaluating the exceedance estimate 1 - F(p_max) on known values
    q = np.array([0.001, 0.02, 0.5])
    f = float(cdf_of(q, 0.01))
    assert f == pytest.approx(0.5 * (0.009 / 0.019), abs=1e-12)
    assert 1 - f == pytest.approx(1 - 0.23684210526315788, abs=1e-9)


def test_interval_width_shrinks_with_more_epistemic_draws(circle_spec):
    theta = np.array([0.4, 0.3, 3.0])
    widths = []
    for n_e_test in (50, 200, 1000):
        data = circle.generate_dataset(5, 5, seed=9, n_a_test=800, n_e_test=n_e_test)
        rep = analyze(circle_spec, theta, data, ZERO_CFG)
        widths.append(rep.range_d[0, 1] - rep.range_d[0, 0])
    assert widths[0] > widths[1] > widths[2]


def test_single_epistemic_point_consistency(circle_spec):
    # epistemic set collapsed to one draw: the probability range collapses
    rng = np.random.default_rng(2)
    data = ScenarioData(
        np.zeros((2, 2)), np.zeros((1, 3)),
        testing_aleatory=circle.sample_aleatory(500, rng),
        testing_epistemic=np.zeros((1, 3)),
    )
    rep = analyze(circle_spec, np.array([0.3, 0.2, 2.0]), data, ZERO_CFG)
    assert rep.p_by_epistemic.shape == (1, 1)
    assert rep.range_a[0, 0] == rep.range_a[0, 1]


def test_worst_case_flag_collapses_requirements():
    spec = ProblemSpec(
        objective=lambda th: th[..., 0],
        requirements=[
            lambda th, a, e: a[..., 0] - 1.0 + 0.0 * th[..., 0] + 0.0 * e[..., 0],
            lambda th, a, e: -a[..., 0] - 1.0 + 0.0 * th[..., 0] + 0.0 * e[..., 0],
        ],
        design_bounds=[[0.0, 1.0]],
        m_a=1,
        m_e=1,
    )
    rng = np.random.default_rng(3)
    data = ScenarioData(
        np.zeros((2, 1)), np.zeros((1, 1)),
        testing_aleatory=rng.normal(size=(300, 1)),
        testing_epistemic=np.zeros((2, 1)),
    )
    cfg = RmcConfig(np.zeros(2), np.zeros(2), p_max=np.full(2, 0.01), worst_case=True)
    rep = analyze(spec, np.zeros(1), data, cfg)
    assert rep.range_a.shape == (1, 2)
    frac_outside = np.mean(np.abs(data.testing_aleatory[:, 0]) > 1.0)
    assert rep.range_a[0, 1] == pytest.approx(frac_outside, abs=0.02)


def test_requires_testing_sets(circle_spec, small_data):
    with pytest.raises(InputError):
        failure_prob_range(circle_spec, np.zeros(3), small_data, ZERO_CFG)


def test_analysis_fractions_trim_draws():
    # alpha_e > 0 drops the worst epistemic draws from the upper ends
    rng = np.random.default_rng(4)
    table = rng.normal(size=(40, 10))
    table[:, -1] += 10.0  # one epistemic draw fails everything
    spec, data = _table_problem(table)
    tight = analyze(spec, np.zeros(1), data, ZERO_CFG)
    relaxed_cfg = RmcConfig(np.zeros(1), np.array([1.0 / 9.0]), sigma=0.95)
    relaxed = analyze(spec, np.zeros(1), data, relaxed_cfg)
    assert relaxed.range_a[0, 1] <= tight.range_a[0, 1]
    assert tight.range_a[0, 1] == pytest.approx(1.0)
