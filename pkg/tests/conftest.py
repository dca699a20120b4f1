import numpy as np
import pytest

import neckflow as nf
from neckflow.diffusion import TauClock
from neckflow.pipeline import run_scenario
from neckflow.scenarios import Scenario


@pytest.fixture(scope="session")
def round200_history():
    """Round-sphere flow history on [0, 0.2] at m=200."""
    p = nf.round_sphere_profile(2, 200)
    rep, state, hist = nf.run_to_singularity(
        nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=200, t_max=0.2, dt_init=2e-4)
    )
    return hist


@pytest.fixture(scope="session")
def round200_collapse():
    """Round-sphere run all the way to pinch detection at m=200."""
    p = nf.round_sphere_profile(2, 200)
    return nf.run_to_singularity(
        nf.FlowState(p, 0.0), nf.FlowConfig(n=2, m=200, t_max=1.0)
    )


@pytest.fixture(scope="session")
def dumbbell200_run():
    """Dumbbell flow to its neck pinch at m=200, plus the surgery output."""
    d = nf.dumbbell_profile(2, 200)
    cfg = nf.FlowConfig(n=2, m=200, t_max=1.0)
    rep, state, hist = nf.run_to_singularity(nf.FlowState(d, 0.0), cfg)
    surgery = nf.forward_evolve(state, cfg)
    return rep, state, hist, surgery


@pytest.fixture(scope="session")
def cap_clock(dumbbell200_run):
    """Metric history of the first dumbbell cap flowed over a short window."""
    rep, state, hist, surgery = dumbbell200_run
    cfg = nf.FlowConfig(n=2, m=200, t_max=1.0)
    cap_state, cap_hist = nf.run_window(surgery.cap1, state.t + 0.02, cfg)
    return TauClock(cap_hist, cap_hist.t_end)


@pytest.fixture(scope="session")
def interval_result():
    """Full interval-pinch pipeline at m=200 (constant interval length)."""
    return run_scenario(
        Scenario(name="interval_pinch", n=2, m=200, t_post=0.01, n_tau=15, figures=False)
    )


@pytest.fixture(scope="session")
def point_result():
    """Full point-pinch pipeline at m=200."""
    return run_scenario(
        Scenario(name="point_pinch", n=2, m=200, t_post=0.01, n_tau=15, figures=False)
    )


def random_pw_linear_measure(rng, allow_atoms=True):
    """Random piecewise-linear CDF with occasional flats and jumps."""
    k = int(rng.integers(3, 9))
    knots = np.sort(rng.uniform(-2.0, 2.0, k))
    F = np.sort(rng.uniform(0.0, 1.0, k))
    F[-1] = 1.0
    if allow_atoms and rng.random() < 0.5:
        j = int(rng.integers(0, k - 1))
        knots = np.insert(knots, j + 1, knots[j])
        F = np.insert(F, j, F[j])
    from neckflow.transport import Measure1D

    return Measure1D(knots, F)
