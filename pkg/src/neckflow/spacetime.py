"""The post-singular glued space: two caps joined by an interval.

After surgery the time slice is X = (M1 union M2) joined by an interval of
length L(tau) between the singular poles P1 (right end of cap 1) and P2
(left end of cap 2).  Distances follow the five cases: within a cap,
within the interval, across through P1 -> interval -> P2, and cap to
interval.  Cap-internal distances come from Dijkstra on a product graph of
the rotationally symmetric metric, which keeps the triangle inequality
exact by construction.

The monitor samples the transport cost between diffusion pairs along
backward time and flags any increase: a weak-super-flow slice must keep
coupled costs non-increasing in tau, and for the linear cost with disjoint
supports the cost splits as L(tau) + FF1(tau) + FF2(tau).  The classifier
turns those series plus concentration certificates into a verdict on the
pinch geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .diffusion import (
    DiffusionState,
    TauClock,
    cdf_of,
    certify_rate,
    df_dtau_rhs,
    f_functional,
    mirrored,
)
from .errors import FormulaMismatch, InconclusiveResolution, OverlappingSupports
from .flow import MetricHistory
from .geometry import RadialProfile, arclength, mirror_profile, trapz as _trapz
from .transport import ConvexCost, Measure1D, total_cost_1d

LINEAR_SPLIT_TOL = 1e-6


# ---------------------------------------------------------------------------
# L(tau) schedules: the neck interval's own length is scenario input
# ---------------------------------------------------------------------------

@dataclass
class LengthSchedule:
    """Interval length over backward time; piecewise-linear in tau."""

    taus: np.ndarray
    values: np.ndarray

    @classmethod
    def constant(cls, L0: float) -> "LengthSchedule":
        return cls(np.array([0.0, np.inf]), np.array([L0, L0]))

    @classmethod
    def from_rate(cls, taus, rates, L0: float) -> "LengthSchedule":
        """Integrate dL/dtau = rates from L(0) = L0 on the given tau grid."""
        taus = np.asarray(taus, dtype=float)
        rates = np.asarray(rates, dtype=float)
        vals = np.empty_like(taus)
        vals[0] = L0
        vals[1:] = L0 + np.cumsum(0.5 * np.diff(taus) * (rates[:-1] + rates[1:]))
        return cls(taus, vals)

    def __call__(self, tau: float) -> float:
        if np.isinf(self.taus[-1]):
            return float(self.values[0])
        return float(np.interp(tau, self.taus, self.values))


@dataclass
class XPoint:
    """Point of the glued space, tagged by component.

    For cap points ``r`` is arclength from the cap's x = -1 pole and
    ``angle`` the position on a fixed fiber great circle; interval points
    use ``r`` in [0, 1] as the fraction from P1 to P2.
    """

    component: str           # "cap1" | "cap2" | "interval"
    r: float
    angle: float = 0.0


@dataclass
class GluedSpace:
    """Two evolving caps and the interval between their singular poles."""

    cap1: MetricHistory
    cap2: MetricHistory
    length: LengthSchedule
    t_prime: float
    n_alpha: int = 48
    _graph_cache: dict = field(default_factory=dict, repr=False)

    @property
    def tau_max(self) -> float:
        return self.t_prime - max(self.cap1.t_start, self.cap2.t_start)

    def clock(self, which: str) -> TauClock:
        return TauClock(self.cap1 if which == "cap1" else self.cap2, self.t_prime)

    def profile(self, which: str, tau: float) -> RadialProfile:
        return self.clock(which).profile_at_tau(tau)

    # -- cap-internal geodesics via a product graph ------------------------

    def _cap_distances(self, which: str, tau: float, source: int) -> np.ndarray:
        key = (which, round(tau, 12))
        if key not in self._graph_cache:
            p = self.profile(which, tau)
            self._graph_cache[key] = (_build_cap_graph(p, self.n_alpha), {})
        graph, rows = self._graph_cache[key]
        if source not in rows:
            rows[source] = dijkstra(graph, directed=False, indices=source)
        return rows[source]

    def _snap(self, which: str, tau: float, pt: XPoint) -> int:
        p = self.profile(which, tau)
        r = arclength(p)
        i = int(np.argmin(np.abs(r - pt.r)))
        j = int(round((pt.angle % (2 * np.pi)) / (2 * np.pi / self.n_alpha))) % self.n_alpha
        return i * self.n_alpha + j

    def _pole_node(self, which: str, singular: bool) -> int:
        # cap1's singular pole sits at x = +1, cap2's at x = -1
        m = (self.cap1 if which == "cap1" else self.cap2).x.shape[0] - 1
        if which == "cap1":
            idx = m if singular else 0
        else:
            idx = 0 if singular else m
        return idx * self.n_alpha

    def distance(self, a: XPoint, b: XPoint, tau: float) -> float:
        """Glued distance d_X at backward time tau (five cases)."""
        L = self.length(tau)
        if a.component == b.component:
            if a.component == "interval":
                return abs(a.r - b.r) * L
            src = self._snap(a.component, tau, a)
            dst = self._snap(a.component, tau, b)
            return float(self._cap_distances(a.component, tau, src)[dst])
        # order so that caps come first
        if a.component == "interval":
            a, b = b, a
        if b.component == "interval":
            frac = b.r if a.component == "cap1" else 1.0 - b.r
            return self._to_singular_pole(a, tau) + frac * L
        # across: cap1 -> P1 -> interval -> P2 -> cap2
        return self._to_singular_pole(a, tau) + L + self._to_singular_pole(b, tau)

    def _to_singular_pole(self, pt: XPoint, tau: float) -> float:
        src = self._snap(pt.component, tau, pt)
        pole = self._pole_node(pt.component, singular=True)
        return float(self._cap_distances(pt.component, tau, src)[pole])


def dx_distance(a: XPoint, b: XPoint, X: GluedSpace, tau: float) -> float:
    """Glued distance between tagged points at backward time tau."""
    return X.distance(a, b, tau)


def _build_cap_graph(p: RadialProfile, n_alpha: int):
    """Product graph on (radial node, fiber angle) with warped edge lengths."""
    r = arclength(p)
    m1 = len(r)
    dalpha = 2.0 * np.pi / n_alpha
    rows, cols, vals = [], [], []
    for i in range(m1):
        base = i * n_alpha
        ring = p.psi[i] * dalpha
        for j in range(n_alpha):
            a = base + j
            rows.append(a)
            cols.append(base + (j + 1) % n_alpha)
            vals.append(ring)
            if i + 1 < m1:
                dr = r[i + 1] - r[i]
                rows.append(a)
                cols.append(base + n_alpha + j)
                vals.append(dr)
                diag = np.hypot(dr, 0.5 * (p.psi[i] + p.psi[i + 1]) * dalpha)
                rows.append(a)
                cols.append(base + n_alpha + (j + 1) % n_alpha)
                vals.append(diag)
                rows.append(a)
                cols.append(base + n_alpha + (j - 1) % n_alpha)
                vals.append(diag)
    size = m1 * n_alpha
    return coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()


# ---------------------------------------------------------------------------
# Cross-component transport cost
# ---------------------------------------------------------------------------

@dataclass
class CrossCostDetail:
    cost: float
    f1: float
    f2: float
    L: float


def cross_cost_detail(
    d1: DiffusionState, d2: DiffusionState, L: float, h: ConvexCost
) -> CrossCostDetail:
    """Transport cost between diffusions living on the two different caps.

    The caps line up on a single axis: cap 1's radii from its regular pole,
    a gap of length L, then cap 2's radii from its singular pole.  With
    disjoint supports every transport path crosses the gap, so the glued
    cost is exactly the 1-D cost of the concatenated picture.  For the
    linear cost the closed split L + FF1 + FF2 is asserted as well.
    """
    if d1.host is d2.host or (
        d1.clock is not None and d2.clock is not None
        and d1.clock.history is d2.clock.history
    ):
        raise OverlappingSupports("both diffusions live on the same cap")
    c1 = cdf_of(d1)
    c2 = cdf_of(d2)        # measured from cap 2's x=-1 pole, i.e. from P2
    mu1 = Measure1D.from_cdf_samples(c1.r, c1.F)
    mu2 = Measure1D.from_cdf_samples(c1.diam + L + c2.r, c2.F)
    cost = total_cost_1d(mu1, mu2, h)
    f1 = f_functional(c1)
    f2 = float(_trapz(1.0 - c2.F, c2.r))
    if h.kind == "linear":
        split = L + f1 + f2
        if abs(cost - split) > LINEAR_SPLIT_TOL:
            raise FormulaMismatch(
                f"linear cost {cost!r} vs split L+FF1+FF2 = {split!r}"
            )
    return CrossCostDetail(cost=cost, f1=f1, f2=f2, L=L)


def cross_cost(d1: DiffusionState, d2: DiffusionState, L: float, h: ConvexCost) -> float:
    return cross_cost_detail(d1, d2, L, h).cost


def coupled_cost(d1: DiffusionState, d2: DiffusionState, h: ConvexCost) -> float:
    """Transport cost between two diffusions on the same cap (base reduction)."""
    c1, c2 = cdf_of(d1), cdf_of(d2)
    mu1 = Measure1D.from_cdf_samples(c1.r, c1.F)
    mu2 = Measure1D.from_cdf_samples(c2.r, c2.F)
    return total_cost_1d(mu1, mu2, h)


# ---------------------------------------------------------------------------
# Monotonicity monitor
# ---------------------------------------------------------------------------

@dataclass
class WsrfReport:
    """Coupled-contraction audit along a tau grid."""

    tau_samples: np.ndarray
    cost_series: list[np.ndarray]
    f1_series: list[np.ndarray]
    f2_series: list[np.ndarray]
    L_series: np.ndarray
    required_L_rate: list[np.ndarray]
    violations: list[tuple[float, int, float]]
    tol_mono: float


def monotonicity_tolerance(dtau: float) -> float:
    """Discretization-drift allowance; tightens as the step refines."""
    return 1e-4 + 10.0 * dtau


def wsrf_monitor(
    X: GluedSpace,
    pairs: list[tuple[list[DiffusionState], list[DiffusionState]]],
    h: ConvexCost,
    tau_grid: np.ndarray,
    dtau: float,
    cross: bool = True,
) -> WsrfReport:
    """Sample coupled costs over tau and flag any increase beyond tolerance.

    Each pair is two diffusion paths pre-sampled on ``tau_grid``.  With
    ``cross=True`` the paths live on opposite caps and the glued cost
    includes L(tau); otherwise both live on one cap and the plain 1-D cost
    is monitored.  ``required_L_rate`` records -(dFF1/dtau + dFF2/dtau),
    the rate L would need to keep the linear glued cost from growing.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    tol = monotonicity_tolerance(dtau)
    L_vals = np.array([X.length(t) for t in tau_grid]) if X is not None else np.zeros_like(tau_grid)
    costs, f1s, f2s, rates = [], [], [], []
    violations = []
    for pair_idx, (path1, path2) in enumerate(pairs):
        cost_k = np.empty_like(tau_grid)
        f1_k = np.empty_like(tau_grid)
        f2_k = np.empty_like(tau_grid)
        rate_k = np.empty_like(tau_grid)
        for k, tau in enumerate(tau_grid):
            s1, s2 = path1[k], path2[k]
            if cross:
                det = cross_cost_detail(s1, s2, L_vals[k], h)
                cost_k[k], f1_k[k], f2_k[k] = det.cost, det.f1, det.f2
                # cap 2's functional is oriented from its regular pole (x=+1)
                rate_k[k] = -(df_dtau_rhs(s1) + df_dtau_rhs(mirrored(s2)))
            else:
                cost_k[k] = coupled_cost(s1, s2, h)
                f1_k[k] = f_functional(cdf_of(s1))
                f2_k[k] = f_functional(cdf_of(s2))
                rate_k[k] = -(df_dtau_rhs(s1) + df_dtau_rhs(s2))
        for k in range(len(tau_grid) - 1):
            jump = cost_k[k + 1] - cost_k[k]
            if jump > tol:
                violations.append((float(tau_grid[k + 1]), pair_idx, float(jump)))
        costs.append(cost_k)
        f1s.append(f1_k)
        f2s.append(f2_k)
        rates.append(rate_k)
    return WsrfReport(
        tau_samples=tau_grid,
        cost_series=costs,
        f1_series=f1s,
        f2_series=f2s,
        L_series=L_vals,
        required_L_rate=rates,
        violations=violations,
        tol_mono=tol,
    )


# ---------------------------------------------------------------------------
# Verdict
# ---------------------------------------------------------------------------

@dataclass
class PinchVerdict:
    kind: str                      # "SinglePointConsistent" | "IntervalContradiction"
    certified_level: int | None
    tau0: float
    ladder: list[tuple[int, float, float]]
    notes: str

    def __str__(self):
        if self.kind == "IntervalContradiction":
            return f"IntervalContradiction(N={self.certified_level}, tau0={self.tau0:g})"
        return "SinglePointConsistent"


def pinch_classifier(
    X: GluedSpace | None,
    interval_length: float,
    monitor: WsrfReport | None,
    point_width: float,
    ladder: tuple[int, ...] = (10, 100, 1000),
    lam: float = 0.1,
) -> PinchVerdict:
    """Decide between single-point pinching and the interval contradiction.

    For an interval pinch the classifier certifies, for each ladder level
    N, a diffusion pair whose required L rate is below -2N at tau0 = 0: the
    interval would have to shed length faster than any bound, exiting
    [0, diameter] immediately backwards in time.  Sub-grid intervals (below
    ``point_width``) count as points; a point pinch is consistent whenever
    the cap-interior monitor is clean.
    """
    if X is None:
        return PinchVerdict(
            "SinglePointConsistent", None, 0.0, [], "no interior pinch formed"
        )
    if interval_length <= point_width:
        n_viol = len(monitor.violations) if monitor is not None else 0
        note = (
            f"pinch width {interval_length:.3g} is below the grid scale "
            f"{point_width:.3g}; cap-interior monitor violations: {n_viol}"
        )
        return PinchVerdict("SinglePointConsistent", None, 0.0, [], note)

    results = []
    certified = None
    for N in ladder:
        p1 = X.profile("cap1", 0.0)
        p2 = X.profile("cap2", 0.0)
        try:
            # cap 1's singular pole is at x=+1 as the search expects; cap 2
            # must be mirrored so its singular pole lands at x=+1 too
            _, rate1 = certify_rate(p1, N, lam=lam)
            _, rate2 = certify_rate(mirror_profile(p2), N, lam=lam)
        except InconclusiveResolution as exc:
            raise InconclusiveResolution(
                N, certified if certified is not None else exc.achieved
            ) from exc
        results.append((N, rate1, rate2))
        certified = N
    L0 = X.length(0.0)
    exit_tau = L0 / (2.0 * certified)
    notes = (
        f"required_L_rate < -2N certified for N in {list(ladder)}; at N={certified} "
        f"the interval length {L0:.3g} would be exhausted within tau <= {exit_tau:.3g}"
    )
    return PinchVerdict("IntervalContradiction", certified, 0.0, results, notes)
