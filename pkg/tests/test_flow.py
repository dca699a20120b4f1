import math

import numpy as np
import pytest

import neckflow as nf
from neckflow.errors import StepRejected, UnsupportedTopology
from neckflow.flow import STATUS_SINGULAR, STATUS_SMOOTH
from neckflow.geometry import RadialProfile


def exact_round(p, t, radius=1.0):
    rho = math.sqrt(radius**2 - 2 * p.n * t)
    theta = 0.5 * math.pi * (p.x + 1)
    return rho * np.sin(theta), rho


def test_flow_step_dt_zero_is_identity():
    s = nf.FlowState(nf.dumbbell_profile(2, 64), 0.0)
    out = nf.flow_step(s, 0.0)
    assert np.array_equal(out.profile.psi, s.profile.psi)
    assert np.array_equal(out.profile.phi, s.profile.phi)
    assert out.t == 0.0


def test_flow_step_rejects_oversized_step():
    s = nf.FlowState(nf.dumbbell_profile(2, 64), 0.0)
    with pytest.raises(StepRejected):
        nf.flow_step(s, 5.0)


def test_flow_step_neck_rate_matches_cylinder_model(dumbbell200_run):
    # near the pinch the neck is cylinder-like (psi_r ~ 0, psi_rr small),
    # so psi_t ~ -(n-1)/psi at the neck center
    rep, _, _, _ = dumbbell200_run
    p0 = nf.dumbbell_profile(2, 200)
    _, state, _ = nf.run_to_singularity(
        nf.FlowState(p0, 0.0), nf.FlowConfig(n=2, m=200, t_max=rep.singular_time - 1e-3)
    )
    p = state.profile
    j = int(np.argmin(p.psi[1:-1])) + 1
    dt = 1e-7
    out = nf.flow_step(nf.FlowState(p, state.t), dt)
    rate = (out.profile.psi[j] - p.psi[j]) / dt
    model = -(2 - 1) / p.psi[j]
    assert rate < 0
    assert rate == pytest.approx(model, rel=0.35)


def test_shrinking_round_sphere_tracks_exact_solution():
    p = nf.round_sphere_profile(2, 100)
    rep, state, _ = nf.run_to_singularity(
        nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=100, t_max=0.1, dt_init=2e-4)
    )
    exact, rho = exact_round(p, 0.1)
    assert rho == pytest.approx(math.sqrt(0.6))
    assert np.abs(state.profile.psi - exact).max() < 0.01 * rho  # within 1%


def test_shrinking_sphere_convergence_orders():
    # space: halve h at fixed small dt; time: halve dt at fixed h
    errs_h = []
    for m in (50, 100):
        p = nf.round_sphere_profile(2, m)
        _, state, _ = nf.run_to_singularity(
            nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=m, t_max=0.05, dt_init=1e-5)
        )
        exact, _ = exact_round(p, 0.05)
        errs_h.append(np.abs(state.profile.psi - exact).max())
    assert errs_h[1] < 0.6 * errs_h[0]

    errs_t = []
    for dt in (4e-4, 2e-4):
        p = nf.round_sphere_profile(2, 100)
        _, state, _ = nf.run_to_singularity(
            nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=100, t_max=0.05, dt_init=dt)
        )
        exact, _ = exact_round(p, 0.05)
        errs_t.append(np.abs(state.profile.psi - exact).max())
    assert errs_t[1] < 0.75 * errs_t[0]


def test_round_sphere_singular_time(round200_collapse):
    rep, state, hist = round200_collapse
    assert rep.singular_time == pytest.approx(0.25, rel=0.02)
    assert state.status == STATUS_SINGULAR


def test_round_sphere_type_one_band(round200_collapse):
    # near T the quantity (T-t) max|eig| hovers at its exact value 1/2
    rep, _, _ = round200_collapse
    assert 0.4 <= rep.type_one_late <= 0.6


def test_already_pinched_input_returns_immediately():
    p = nf.pinched_interval_profile(2, 100, interval_length=0.3)
    rep, state, _ = nf.run_to_singularity(nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=100))
    assert rep.singular_time == 0.0
    assert rep.steps == 0
    assert state.status == STATUS_SINGULAR
    lo, hi = rep.singular_set[0]
    assert 0 < lo <= hi < 100


def test_no_singularity_before_t_max():
    p = nf.round_sphere_profile(2, 64)
    rep, state, _ = nf.run_to_singularity(
        nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=64, t_max=0.01)
    )
    assert rep.singular_time is None
    assert state.status == STATUS_SMOOTH


# ---------------------------------------------------------------------------
# neck / bump counting
# ---------------------------------------------------------------------------

def test_neck_bump_round_sphere():
    assert nf.neck_bump_count(nf.round_sphere_profile(2, 128)) == (0, 1)


def test_neck_bump_dumbbell():
    assert nf.neck_bump_count(nf.dumbbell_profile(2, 200)) == (1, 2)


def test_neck_bump_two_neck_profile():
    # three bumps around two engineered necks
    m = 256
    x = np.linspace(-1, 1, m + 1)
    psi = np.sqrt(np.maximum(1 - x**2, 0.0)) * (
        1 - 0.7 * np.exp(-((x - 0.45) ** 2) / 0.02) - 0.7 * np.exp(-((x + 0.45) ** 2) / 0.02)
    )
    psi[0] = psi[-1] = 0.0
    p = RadialProfile(2, x, np.full(m + 1, 0.5 * math.pi), psi)
    assert nf.neck_bump_count(p) == (2, 3)


def test_neck_bump_plateau_merging():
    # a flat-top bump must count once despite discrete ties
    m = 64
    x = np.linspace(-1, 1, m + 1)
    psi = np.minimum(np.sqrt(np.maximum(1 - x**2, 0.0)), 0.8)
    psi[0] = psi[-1] = 0.0
    p = RadialProfile(2, x, np.ones(m + 1), psi)
    assert nf.neck_bump_count(p) == (0, 1)


def test_sturmian_monotonicity_on_dumbbell(dumbbell200_run):
    rep, _, _, _ = dumbbell200_run
    nb = rep.neck_bump_history
    good = ~np.isnan(nb[:, 1])
    assert np.all(np.diff(nb[good, 1]) <= 0)
    assert np.all(np.diff(nb[good, 2]) <= 0)


def test_dumbbell_singular_set_away_from_poles(dumbbell200_run):
    rep, _, _, _ = dumbbell200_run
    lo, hi = rep.singular_set[0]
    assert lo >= 5 and hi <= 200 - 5


# ---------------------------------------------------------------------------
# surgery
# ---------------------------------------------------------------------------

def test_point_pinch_surgery_diameters_additive(dumbbell200_run):
    rep, state, _, surgery = dumbbell200_run
    assert surgery.interval_length == 0.0
    d1 = nf.diameter(surgery.cap1.profile)
    d2 = nf.diameter(surgery.cap2.profile)
    assert d1 + d2 == pytest.approx(nf.diameter(state.profile), rel=1e-9)


def test_interval_surgery_length_matches_arclength():
    p = nf.pinched_interval_profile(2, 200, interval_length=0.3)
    cfg = nf.FlowConfig(n=2, m=200)
    rep, state, _ = nf.run_to_singularity(nf.FlowState(p, 0.0), cfg)
    surgery = nf.forward_evolve(state, cfg)
    assert surgery.interval_length == pytest.approx(0.3, abs=1e-6)


def test_cap_pole_regularity(dumbbell200_run):
    _, _, _, surgery = dumbbell200_run
    for cap in (surgery.cap1, surgery.cap2):
        assert cap.profile.smooth_sphere_diagnostics() == []
        assert nf.neck_bump_count(cap.profile)[0] == 0


def test_surgery_rejects_bad_topology(round200_collapse):
    # global collapse detects two disjoint near-pole runs
    _, state, _ = round200_collapse
    cfg = nf.FlowConfig(n=2, m=200)
    with pytest.raises(UnsupportedTopology):
        nf.forward_evolve(state, cfg)
    smooth = nf.FlowState(nf.dumbbell_profile(2, 64), 0.0)
    with pytest.raises(ValueError):
        nf.forward_evolve(smooth, cfg)


def test_metric_history_interpolation(round200_history):
    hist = round200_history
    t_mid = 0.5 * (hist.ts[3] + hist.ts[4])
    p_mid = hist.profile_at(t_mid)
    assert np.all(p_mid.psi >= 0)
    p_lo = hist.profile_at(hist.ts[3])
    assert np.allclose(p_lo.psi, hist.psis[3])
    # clamping outside the window
    assert np.allclose(hist.profile_at(-1.0).psi, hist.psis[0])
