import itertools

import numpy as np
import pytest

from neckflow.errors import FormulaMismatch, NotUniform, TooLarge
from neckflow.transport import (
    ConvexCost,
    Measure1D,
    load_measure,
    save_measure,
    WarpedUniformMeasure,
    discrete_oracle,
    product_grid_cost,
    quantile,
    total_cost_1d,
    w1,
    warped_reduction,
)

from conftest import random_pw_linear_measure

COSTS = [ConvexCost.linear(), ConvexCost.power(1.5), ConvexCost.power(2), ConvexCost.power(3)]


# ---------------------------------------------------------------------------
# quantiles
# ---------------------------------------------------------------------------

def test_quantile_point_mass():
    m = Measure1D.from_atoms([1.7])
    for t in (0.0, 0.2, 0.99):
        assert quantile(m, t) == 1.7


def test_quantile_uniform():
    m = Measure1D(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    ts = np.linspace(0, 0.999, 30)
    assert np.allclose(quantile(m, ts), ts)


def test_quantile_mixture_hand_values():
    # half an atom at 0, half uniform on [1, 2]
    m = Measure1D(np.array([0.0, 0.0, 1.0, 2.0]), np.array([0.0, 0.5, 0.5, 1.0]))
    assert quantile(m, 0.25) == 0.0
    assert quantile(m, 0.75) == pytest.approx(1.5)
    # at the plateau level, the first exceedance starts at x=1
    assert quantile(m, 0.5) == pytest.approx(1.0)


def test_quantile_cdf_duality():
    rng = np.random.default_rng(11)
    for _ in range(30):
        m = random_pw_linear_measure(rng)
        ts = rng.uniform(0, 1, 20)
        qs = np.atleast_1d(quantile(m, ts))
        # F(q(t)) >= t, and F(x) <= t strictly left of q(t)
        assert np.all(m.cdf(qs, side="right") >= ts - 1e-12)
        left = qs - 1e-9 * (1 + np.abs(qs))
        assert np.all(m.cdf(left, side="right") <= ts + 1e-9)


# ---------------------------------------------------------------------------
# total cost
# ---------------------------------------------------------------------------

def test_cost_identity_is_zero():
    rng = np.random.default_rng(5)
    for _ in range(10):
        m = random_pw_linear_measure(rng)
        for h in COSTS:
            assert total_cost_1d(m, m, h) == pytest.approx(0.0, abs=1e-13)


def test_cost_translation_uniform():
    u01 = Measure1D(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert total_cost_1d(u01, u01.shift(1.0), ConvexCost.linear()) == pytest.approx(1.0)


def test_translation_covariance_power_costs():
    rng = np.random.default_rng(17)
    for _ in range(10):
        m = random_pw_linear_measure(rng)
        s = float(rng.uniform(0.3, 2.0))
        for h in COSTS:
            assert total_cost_1d(m, m.shift(s), h) == pytest.approx(float(h(s)), rel=1e-9)


def test_four_atom_power2_equals_matching_minimum():
    a = np.array([0.0, 0.4, 1.1, 2.0])
    b = np.array([-0.5, 0.6, 1.0, 2.5])
    h = ConvexCost.power(2)
    best = min(
        sum(h(abs(a[i] - b[j])) for i, j in enumerate(perm)) / 4
        for perm in itertools.permutations(range(4))
    )
    ma, mb = Measure1D.from_atoms(a), Measure1D.from_atoms(b)
    assert total_cost_1d(ma, mb, h) == pytest.approx(best, abs=1e-13)


def test_oracle_equivalence_randomized():
    rng = np.random.default_rng(23)
    for _ in range(40):
        k = int(rng.integers(2, 7))
        a = rng.uniform(-3, 3, k)
        b = rng.uniform(-3, 3, k)
        for h in COSTS:
            exact, sorted_cost = discrete_oracle(a, b, h)
            assert abs(total_cost_1d(Measure1D.from_atoms(a), Measure1D.from_atoms(b), h) - exact) < 1e-12
            # monotone matching is optimal for convex costs
            assert sorted_cost == pytest.approx(exact, abs=1e-12)


def test_oracle_crossing_pair():
    # (0,2) -> (1,3): monotone pairing beats the crossed one
    h = ConvexCost.power(2)
    exact, sorted_cost = discrete_oracle([0.0, 2.0], [1.0, 3.0], h)
    assert exact == pytest.approx(1.0)          # (1 + 1)/2
    assert sorted_cost == pytest.approx(1.0)
    crossed = (9.0 + 1.0) / 2
    assert crossed > exact


def test_oracle_single_atoms():
    for h in COSTS:
        exact, _ = discrete_oracle([0.3], [-1.1], h)
        assert exact == pytest.approx(float(h(1.4)), rel=1e-12)


def test_oracle_too_large():
    with pytest.raises(TooLarge):
        discrete_oracle(np.arange(9.0), np.arange(9.0), ConvexCost.linear())


# ---------------------------------------------------------------------------
# W1 dual formulas
# ---------------------------------------------------------------------------

def test_w1_deltas():
    assert w1(Measure1D.from_atoms([0.25]), Measure1D.from_atoms([-1.25])) == pytest.approx(1.5)


def test_w1_uniform_shift():
    u = Measure1D(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert w1(u, u.shift(0.37)) == pytest.approx(0.37, abs=1e-12)


def test_w1_equals_linear_cost_randomized():
    rng = np.random.default_rng(31)
    for _ in range(100):
        m1 = random_pw_linear_measure(rng)
        m2 = random_pw_linear_measure(rng)
        v = w1(m1, m2)
        assert v == pytest.approx(total_cost_1d(m1, m2, ConvexCost.linear()), abs=1e-8)


class _LyingMeasure(Measure1D):
    """CDF evaluation deliberately inconsistent with the knot data."""

    def cdf(self, xs, side="right"):
        return 0.9 * super().cdf(xs, side)


def test_w1_formula_mismatch_detection():
    m1 = Measure1D(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    m2 = _LyingMeasure(np.array([0.5, 1.5]), np.array([0.0, 1.0]))
    with pytest.raises(FormulaMismatch):
        w1(m1, m2)


# ---------------------------------------------------------------------------
# cost specs
# ---------------------------------------------------------------------------

def test_cost_parse_grammar(tmp_path):
    assert ConvexCost.parse("linear").kind == "linear"
    c = ConvexCost.parse("power:2.5")
    assert c.kind == "power" and c.p == 2.5
    table = tmp_path / "cost.tsv"
    np.savetxt(table, np.column_stack([np.linspace(0, 2, 9), np.linspace(0, 2, 9) ** 2]))
    ct = ConvexCost.parse(f"table:{table}")
    assert ct.kind == "table"
    assert float(ct(1.0)) == pytest.approx(1.0, rel=0.05)


def test_tabulated_cost_validation():
    with pytest.raises(ValueError):
        ConvexCost.tabulated([0.0, 1.0, 2.0], [0.0, 2.0, 1.0])     # not monotone
    with pytest.raises(ValueError):
        ConvexCost.tabulated([0.0, 1.0, 2.0], [0.0, 1.5, 2.0])     # concave
    with pytest.raises(ValueError):
        ConvexCost.parse("power:0.5")


def test_measure_file_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    m = random_pw_linear_measure(rng)
    path = tmp_path / "measure.tsv"
    save_measure(path, m)
    back = load_measure(path)
    assert np.array_equal(back.knots, m.knots)
    assert np.array_equal(back.F, m.F)


def test_measure_validation():
    with pytest.raises(ValueError):
        Measure1D(np.array([0.0, 1.0]), np.array([0.0, 0.7]))      # does not reach 1
    with pytest.raises(ValueError):
        Measure1D(np.array([1.0, 0.0]), np.array([0.0, 1.0]))      # decreasing knots
    with pytest.raises(ValueError):
        Measure1D(np.array([0.0, 1.0]), np.array([0.5, 0.2]))      # decreasing F


# ---------------------------------------------------------------------------
# warped-product reduction
# ---------------------------------------------------------------------------

def _cell_measure(edges, mass):
    F = np.concatenate(([0.0], np.cumsum(mass / mass.sum())))
    return Measure1D(edges, F)


def test_warped_reduction_identity():
    edges = np.linspace(0, 2, 17)
    mass = np.ones(16)
    mu = WarpedUniformMeasure(_cell_measure(edges, mass))
    assert warped_reduction(mu, mu, ConvexCost.linear()) == 0.0


def test_warped_reduction_rejects_fiber_dependence():
    edges = np.linspace(0, 2, 17)
    mu = WarpedUniformMeasure(
        _cell_measure(edges, np.ones(16)), fiber_weights=np.array([1.0, 2.0])
    )
    with pytest.raises(NotUniform):
        warped_reduction(mu, mu, ConvexCost.linear())


@pytest.mark.parametrize("name", ["cylinder", "collapsed"])
def test_warped_reduction_matches_product_grid_oracle(name):
    rng = np.random.default_rng(7)
    edges = np.linspace(0, 2, 17)
    r_mid = 0.5 * (edges[:-1] + edges[1:])
    warp = np.full(16, 0.35)
    if name == "collapsed":
        warp = np.where((r_mid > 0.7) & (r_mid < 1.3), 0.01, 0.35)
    mass1 = np.zeros(16)
    mass2 = np.zeros(16)
    mass1[:4] = rng.uniform(0.5, 1.5, 4)
    mass2[-4:] = rng.uniform(0.5, 1.5, 4)
    h = ConvexCost.linear()
    c1d = warped_reduction(
        WarpedUniformMeasure(_cell_measure(edges, mass1)),
        WarpedUniformMeasure(_cell_measure(edges, mass2)),
        h,
    )
    c2d = product_grid_cost(r_mid, warp, mass1, mass2, h, n_fiber=8)
    assert abs(c1d - c2d) <= 3.0 * (edges[1] - edges[0])
