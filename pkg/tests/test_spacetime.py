import numpy as np
import pytest

import neckflow as nf
from neckflow.diffusion import advance, bump_state, cdf_of, uniform_state
from neckflow.errors import InconclusiveResolution, OverlappingSupports
from neckflow.spacetime import (
    LengthSchedule,
    XPoint,
    coupled_cost,
    cross_cost,
    cross_cost_detail,
    monotonicity_tolerance,
    pinch_classifier,
    wsrf_monitor,
)
from neckflow.transport import ConvexCost, Measure1D, discrete_oracle, quantile


@pytest.fixture(scope="module")
def glued(interval_result):
    return interval_result.glued


def test_distance_pole_to_pole(glued):
    d1 = nf.diameter(glued.profile("cap1", 0.0))
    d2 = nf.diameter(glued.profile("cap2", 0.0))
    got = glued.distance(XPoint("cap1", 0.0), XPoint("cap2", d2), 0.0)
    assert got == pytest.approx(d1 + glued.length(0.0) + d2, abs=1e-9)


def test_distance_within_cap_monotone_in_radius(glued):
    d1 = nf.diameter(glued.profile("cap1", 0.0))
    base = XPoint("cap1", 0.1 * d1)
    vals = [
        glued.distance(base, XPoint("cap1", f * d1), 0.0) for f in (0.3, 0.5, 0.7, 0.9)
    ]
    assert all(np.diff(vals) > 0)


def test_distance_interval_cases(glued):
    L = glued.length(0.0)
    d1 = nf.diameter(glued.profile("cap1", 0.0))
    # interval midpoint to the junction P1 (cap1's singular pole)
    assert glued.distance(XPoint("interval", 0.5), XPoint("cap1", d1), 0.0) == pytest.approx(L / 2)
    assert glued.distance(XPoint("interval", 0.2), XPoint("interval", 0.9), 0.0) == pytest.approx(0.7 * L)
    # interval point to a cap2 point passes through P2
    got = glued.distance(XPoint("interval", 0.25), XPoint("cap2", 0.0), 0.0)
    assert got == pytest.approx(0.75 * L, abs=1e-9)


def test_metric_axioms_on_random_triples(glued):
    rng = np.random.default_rng(2)
    d1 = nf.diameter(glued.profile("cap1", 0.0))
    d2 = nf.diameter(glued.profile("cap2", 0.0))
    pool = []
    for _ in range(10):
        pool.append(XPoint("cap1", rng.uniform(0, d1), rng.uniform(0, 2 * np.pi)))
        pool.append(XPoint("cap2", rng.uniform(0, d2), rng.uniform(0, 2 * np.pi)))
        pool.append(XPoint("interval", rng.uniform(0, 1)))
    dist = {}

    def d(i, j):
        key = (min(i, j), max(i, j))
        if key not in dist:
            dist[key] = glued.distance(pool[key[0]], pool[key[1]], 0.0)
        return dist[key]

    for _ in range(1000):
        i, j, k = rng.integers(0, len(pool), 3)
        if len({i, j, k}) < 3:
            continue
        # symmetry is structural; triangle inequality within 1e-9
        assert d(i, k) <= d(i, j) + d(j, k) + 1e-9


def test_cross_cost_point_masses_at_regular_poles(glued):
    # all mass at the far ends: cost = diam1 + L + diam2 under the linear cost
    h1 = glued.profile("cap1", 0.0)
    h2 = glued.profile("cap2", 0.0)
    u1 = np.zeros(h1.m + 1)
    u1[1] = 1.0
    u2 = np.zeros(h2.m + 1)
    u2[-2] = 1.0
    from neckflow.diffusion import DiffusionState
    from neckflow.geometry import volume_element

    d1 = DiffusionState(h1, u1 / np.dot(volume_element(h1), u1))
    d2 = DiffusionState(h2, u2 / np.dot(volume_element(h2), u2))
    L = glued.length(0.0)
    got = cross_cost(d1, d2, L, ConvexCost.linear())
    want = nf.diameter(h1) + L + nf.diameter(h2)
    spacing = nf.diameter(h1) / h1.m
    assert got == pytest.approx(want, abs=4 * spacing)


def test_cross_cost_linear_split(glued):
    h1 = glued.profile("cap1", 0.0)
    h2 = glued.profile("cap2", 0.0)
    d1 = uniform_state(h1)
    d2 = uniform_state(h2)
    det = cross_cost_detail(d1, d2, glued.length(0.0), ConvexCost.linear())
    assert det.cost == pytest.approx(det.L + det.f1 + det.f2, abs=1e-6)


def test_cross_cost_power2_matches_discrete_oracle(glued):
    h = ConvexCost.power(2)
    h1 = glued.profile("cap1", 0.0)
    h2 = glued.profile("cap2", 0.0)
    d1 = bump_state(h1, 0.4, 0.08)
    d2 = bump_state(h2, 0.6, 0.08)
    L = glued.length(0.0)
    got = cross_cost(d1, d2, L, h)
    # 6-atom quantile discretization of each side on the common line
    c1, c2 = cdf_of(d1), cdf_of(d2)
    m1 = Measure1D.from_cdf_samples(c1.r, c1.F)
    m2 = Measure1D.from_cdf_samples(c1.r[-1] + L + c2.r, c2.F)
    ts = (np.arange(6) + 0.5) / 6
    atoms1 = np.atleast_1d(quantile(m1, ts))
    atoms2 = np.atleast_1d(quantile(m2, ts))
    oracle, _ = discrete_oracle(atoms1, atoms2, h)
    atomized = float(
        np.sum(h(np.abs(np.sort(atoms1) - np.sort(atoms2)))) / 6
    )
    assert oracle == pytest.approx(atomized, abs=1e-12)
    assert got == pytest.approx(oracle, rel=0.05)


def test_cross_cost_rejects_same_cap(glued):
    h1 = glued.profile("cap1", 0.0)
    d1 = bump_state(h1, 0.3, clock=glued.clock("cap1"))
    d2 = bump_state(h1, 0.7, clock=glued.clock("cap1"))
    with pytest.raises(OverlappingSupports):
        cross_cost(d1, d2, 0.1, ConvexCost.linear())


def test_monitor_flags_interval_cost_growth(interval_result):
    mon = interval_result.monitor
    assert len(mon.violations) > 0
    # the flagged pairs show a genuine increase of the glued cost
    assert mon.cost_series[0][-1] > mon.cost_series[0][0]
    # required_L_rate at tau0 must be <= -2x the certified monitor level
    assert mon.required_L_rate[0][0] < -2 * interval_result.scenario.monitor_level


def test_monitor_clean_on_point_pinch(point_result):
    mon = point_result.monitor
    assert mon.violations == []
    for series in mon.cost_series:
        assert np.all(np.diff(series) <= mon.tol_mono)


def test_prescribed_length_schedule_removes_violations():
    from neckflow.pipeline import run_scenario
    from neckflow.scenarios import Scenario

    res = run_scenario(
        Scenario(
            name="interval_pinch", n=2, m=100, t_post=0.008, n_tau=9,
            interval_length=0.2, l_mode="prescribed", figures=False,
        )
    )
    pair0 = [v for v in res.monitor.violations if v[1] == 0]
    assert pair0 == []
    # the schedule had to leave the physical range to achieve it
    assert any("exits" in note for note in res.notes)
    assert res.glued.length.values.min() < 0


def test_power_cost_series_grows_when_L_constant(interval_result):
    # the convex-cost transfer: under a frozen interval the power-cost
    # series between the certified pair increases as well
    glued = interval_result.glued
    tau_grid = interval_result.tau_grid
    pair = interval_result.paths[0]
    for p_exp in (1.5, 2.0):
        h = ConvexCost.power(p_exp)
        costs = [
            cross_cost(pair[0][k], pair[1][k], glued.length(float(t)), h)
            for k, t in enumerate(tau_grid[:6])
        ]
        assert costs[-1] > costs[0]


def test_classifier_interval_contradiction(interval_result):
    v = interval_result.verdict
    assert v.kind == "IntervalContradiction"
    assert v.certified_level == 1000
    for N, r1, r2 in v.ladder:
        assert r1 > N and r2 > N
    assert "IntervalContradiction" in str(v)


def test_classifier_point_consistent(point_result):
    assert point_result.verdict.kind == "SinglePointConsistent"


def test_classifier_no_singularity_trivial():
    verdict = pinch_classifier(None, 0.0, None, point_width=0.1)
    assert verdict.kind == "SinglePointConsistent"


def test_classifier_inconclusive_on_absurd_ladder(interval_result):
    X = interval_result.glued
    with pytest.raises(InconclusiveResolution) as info:
        pinch_classifier(X, 0.3, interval_result.monitor, 0.05, ladder=(10, 10**13))
    assert info.value.achieved >= 10


def test_length_schedule_forms():
    const = LengthSchedule.constant(0.4)
    assert const(0.0) == const(5.0) == 0.4
    taus = np.linspace(0, 1, 11)
    sched = LengthSchedule.from_rate(taus, np.full(11, -2.0), 1.0)
    assert sched(0.5) == pytest.approx(0.0, abs=1e-12)
    assert sched(1.0) == pytest.approx(-1.0)


def test_monotonicity_tolerance_scales_with_step():
    assert monotonicity_tolerance(1e-4) < monotonicity_tolerance(1e-2)
    assert monotonicity_tolerance(0.0) == pytest.approx(1e-4)
