"""Mass-one diffusions on an evolving cap, driven by the conjugate heat equation.

A diffusion density u solves, in backward time tau = T' - t,

    du/dtau = Lap_g(tau) u - R_g(tau) u,

with the rotationally symmetric Laplacian Lap u = u_rr + n (psi_r/psi) u_r.
The discrete operator is kept in divergence form,

    Lap u = (1/(phi psi^n)) d/dx ( (psi^n/phi) du/dx ),

and the -R u term is realized through the metric's own volume change
(node masses w_i(tau) u_i are what the implicit update conserves), so the
total mass is exact by construction and the M-matrix solve keeps u >= 0.

The module also maintains CDFs F(r) of the diffusion measured from the
x = -1 pole, the functional given by their L1 norm

    FF(tau) = integral_0^diam F dr,

its backward-time derivative identity

    d FF/dtau = integral ( F_rr - n (psi_r/psi) F_r + F Ric(dr,dr) ) dr,

and the concentrated measures near a shrinking pole whose derivative can
be pushed past any target level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import BadCollar, InconclusiveResolution, StepRejected, UndefinedAtPole
from .flow import MetricHistory
from .geometry import (
    RadialProfile,
    trapz as _trapz,
    arclength,
    curvature,
    fiber_sphere_volume,
    mirror_profile,
    radial_derivative,
    volume_element,
)

@dataclass
class TauClock:
    """Backward-time bookkeeping: tau = t_prime - t against a metric history."""

    history: MetricHistory
    t_prime: float

    @property
    def tau_max(self) -> float:
        return self.t_prime - self.history.t_start

    def profile_at_tau(self, tau: float) -> RadialProfile:
        return self.history.profile_at(self.t_prime - tau)


@dataclass
class CdfProfile:
    """Cumulative distribution along arclength from the x = -1 pole."""

    r: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.F = np.asarray(self.F, dtype=float)

    @property
    def diam(self) -> float:
        return float(self.r[-1])


@dataclass
class ConcentrationParams:
    """Collar geometry for a measure piled onto a shrinking pole.

    eps: fiber-radius scale (psi spans [0, 2 eps] over the collar),
    lam: allowed deviation of |psi_r| from 1 on the collar,
    delta: half-width of the collar [r_max - 2 delta, r_max].
    """

    eps: float
    lam: float
    delta: float


@dataclass
class _FinePayload:
    """Dense collar sampling of a constructed CDF, for quadrature past the grid."""

    s: np.ndarray        # distance to the singular pole, 0 .. 2 delta
    psi: np.ndarray
    psi_r: np.ndarray    # dpsi/dr on the collar (negative)
    F: np.ndarray        # CDF value at r = r_max - s
    F_r: np.ndarray
    params: ConcentrationParams


@dataclass
class DiffusionState:
    """A rotationally symmetric probability density bound to a host metric."""

    host: RadialProfile
    u: np.ndarray
    tau: float = 0.0
    clock: TauClock | None = None
    fine: _FinePayload | None = field(default=None, repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)

    def mass(self) -> float:
        return float(np.dot(volume_element(self.host), self.u))

    def normalized(self) -> "DiffusionState":
        return DiffusionState(self.host, self.u / self.mass(), self.tau, self.clock, self.fine)


def uniform_state(host: RadialProfile, clock: TauClock | None = None) -> DiffusionState:
    w = volume_element(host)
    u = np.full_like(w, 1.0 / w.sum())
    return DiffusionState(host, u, 0.0, clock)


def mirrored(d: DiffusionState) -> DiffusionState:
    """The same measure with the host traversed from the opposite pole.

    CDF-based quantities are orientation-dependent; rates for a cap whose
    regular pole sits at x = +1 are computed on this view.
    """
    return DiffusionState(
        mirror_profile(d.host), d.u[::-1].copy(), d.tau, None, d.fine
    )


def bump_state(
    host: RadialProfile, center_frac: float, width_frac: float = 0.1,
    clock: TauClock | None = None,
) -> DiffusionState:
    """Smooth localized density centered at a fraction of the diameter."""
    r = arclength(host)
    c = center_frac * r[-1]
    w = width_frac * r[-1]
    u = np.exp(-((r - c) ** 2) / (2 * w**2))
    state = DiffusionState(host, u, 0.0, clock)
    return state.normalized()


# ---------------------------------------------------------------------------
# Conjugate heat stepping
# ---------------------------------------------------------------------------

def _flux_coefficients(p: RadialProfile) -> np.ndarray:
    """Midpoint conductances omega_n (psi^n/phi)_{i+1/2} / dx_i."""
    dens = p.psi**p.n / p.phi
    mid = 0.5 * (dens[:-1] + dens[1:])
    return fiber_sphere_volume(p.n) * mid / np.diff(p.x)


def conjugate_heat_step(d: DiffusionState, dtau: float) -> DiffusionState:
    """Advance the density one implicit step in backward time.

    The node masses w_i u_i are updated conservatively with fluxes taken at
    the new time, so total mass is preserved to rounding regardless of how
    the host metric moved; positivity follows from the M-matrix structure.
    A frozen host (no clock) integrates the plain heat operator, which is
    the same equation with the scalar-curvature term compensated away.
    """
    if dtau < 0:
        raise ValueError("dtau must be non-negative")
    if dtau == 0.0:
        return DiffusionState(d.host, d.u.copy(), d.tau, d.clock)
    host_new = d.clock.profile_at_tau(d.tau + dtau) if d.clock else d.host
    w_old = volume_element(d.host)
    w_new = volume_element(host_new)
    c = _flux_coefficients(host_new)

    k = len(d.u)
    ab = np.zeros((3, k))
    ab[1, :] = w_new
    ab[1, :-1] += dtau * c
    ab[1, 1:] += dtau * c
    ab[0, 1:] = -dtau * c
    ab[2, :-1] = -dtau * c
    rhs = w_old * d.u
    try:
        u_new = solve_banded((1, 1), ab, rhs, check_finite=False)
    except Exception as exc:
        raise StepRejected(str(exc)) from exc
    if not np.all(np.isfinite(u_new)):
        raise StepRejected("non-finite density after implicit solve")
    u_new = np.maximum(u_new, 0.0)
    return DiffusionState(host_new, u_new, d.tau + dtau, d.clock)


def advance(d: DiffusionState, dtau_total: float, substeps: int) -> DiffusionState:
    for _ in range(substeps):
        d = conjugate_heat_step(d, dtau_total / substeps)
    return d


# ---------------------------------------------------------------------------
# CDFs and the L1 functional
# ---------------------------------------------------------------------------

def cdf_of(d: DiffusionState) -> CdfProfile:
    """Cumulative trapezoid of u dvol from the x = -1 pole, renormalized to 1."""
    p = d.host
    r = arclength(p)
    dens = d.u * fiber_sphere_volume(p.n) * p.phi * p.psi**p.n
    F = np.zeros_like(r)
    np.cumsum(0.5 * np.diff(p.x) * (dens[:-1] + dens[1:]), out=F[1:])
    if F[-1] <= 0:
        raise ValueError("cannot form a CDF from a massless state")
    return CdfProfile(r, F / F[-1])


def density_from_cdf(c: CdfProfile, host: RadialProfile) -> np.ndarray:
    """Invert F back to a density through u = F_r / (omega_n psi^n).

    Raises UndefinedAtPole when F has visible slope where psi vanishes,
    which means the measure charges a singular point.
    """
    F_r = radial_derivative(host, c.F)
    scale = float(np.abs(F_r).max()) or 1.0
    omega = fiber_sphere_volume(host.n)
    u = np.empty_like(c.F)
    interior = slice(1, host.m)
    u[interior] = F_r[interior] / (omega * host.psi[interior] ** host.n)
    for pole in (0, -1):
        if abs(F_r[pole]) > 1e-2 * scale and host.psi[pole] == 0.0:
            raise UndefinedAtPole(f"CDF carries slope {F_r[pole]:.3e} at a pole")
    u[0] = u[1]
    u[-1] = u[-2]
    return np.maximum(u, 0.0)


def f_functional(c: CdfProfile) -> float:
    """L1 norm of the CDF in arclength, trapezoid of F over [0, diam]."""
    return float(_trapz(c.F, c.r))


def _regularized_slope_ratio(host: RadialProfile) -> np.ndarray:
    """psi_r/psi with the smooth-limit value psi_rr/psi_r at the poles."""
    psi_r = radial_derivative(host, host.psi)
    psi_rr = radial_derivative(host, psi_r)
    ratio = np.empty_like(psi_r)
    interior = slice(1, host.m)
    ratio[interior] = psi_r[interior] / host.psi[interior]
    for pole in (0, -1):
        ratio[pole] = psi_rr[pole] / psi_r[pole] if psi_r[pole] != 0 else 0.0
    return ratio


def df_dtau_rhs(d: DiffusionState, v_window: float | None = None) -> float:
    """Backward-time derivative of the L1 CDF functional, by its identity.

    Evaluates integral of (F_rr - n (psi_r/psi) F_r + F Ric(dr,dr)) dr with
    pole-regularized coefficients.  The Ric(dr,dr) factor equals the radial
    logarithmic stretch rate of the metric, so for a clocked state it is
    differenced from the recorded history (matching the motion the measure
    actually rides on) over a half-width ``v_window``; a frozen host
    integrates the plain heat operator and the term drops.  States built by
    :func:`build_concentrated_measure` carry a dense collar sampling and
    are integrated on it, since their support can sit far below the grid
    scale.
    """
    host = d.host
    if d.fine is not None:
        return _df_dtau_rhs_fine(d)
    c = cdf_of(d)
    F_r = radial_derivative(host, c.F)
    F_rr = radial_derivative(host, F_r)
    ratio = _regularized_slope_ratio(host)
    total = float(_trapz(F_rr - host.n * ratio * F_r, c.r))
    if d.clock is not None:
        # integral of F * Ric(dr,dr) dr, integrated by parts: Ric(dr,dr)
        # is the radial derivative of the node-radius velocity v, so the
        # term equals F(r_max) v(r_max) - integral of F_r v dr (and F_r
        # vanishes at the poles, which keeps the fast-moving tip quiet)
        v = _radial_velocity(d, v_window)
        total += float(c.F[-1] * v[-1] - _trapz(F_r * v, c.r))
    return total


def _radial_velocity(d: DiffusionState, window: float | None = None) -> np.ndarray:
    """Backward-time velocity of the node radii, from the metric history.

    Centered difference over +-window around tau; individual history
    segments carry the stepper's per-step noise, so the default window
    spans a few segments (a caller comparing against its own finite
    difference should pass the matching half-width).
    """
    clock = d.clock
    hist = clock.history
    span = hist.t_end - hist.t_start
    if span <= 0:
        return np.zeros_like(d.u)
    if window is None:
        window = 3.0 * span / max(len(hist.ts) - 1, 1)
    tau_lo = max(d.tau - window, 0.0)
    tau_hi = min(d.tau + window, clock.tau_max)
    if tau_hi <= tau_lo:
        return np.zeros_like(d.u)
    r_lo = arclength(clock.profile_at_tau(tau_lo))
    r_hi = arclength(clock.profile_at_tau(tau_hi))
    return (r_hi - r_lo) / (tau_hi - tau_lo)


def _df_dtau_rhs_fine(d: DiffusionState) -> float:
    fine = d.fine
    n = d.host.n
    # the F_rr term telescopes to F_r at the collar ends, which vanishes;
    # -n (psi_r/psi) F_r stays bounded at the pole since F_r ~ psi^n
    ratio = np.where(fine.psi > 0, fine.F_r / np.maximum(fine.psi, 1e-300), 0.0)
    term2 = _trapz(-n * fine.psi_r * ratio, fine.s)
    ric = curvature(d.host).ric_radial
    r_grid = arclength(d.host)
    ric_at = np.interp(r_grid[-1] - fine.s, r_grid, ric)
    term3 = _trapz(fine.F * ric_at, fine.s)
    return float(term2 + term3)


# ---------------------------------------------------------------------------
# Concentrated measures near the singular pole
# ---------------------------------------------------------------------------

def _smoothstep_cutoff(rho: np.ndarray, eps: float) -> np.ndarray:
    """C2 plateau cutoff: 1 on [0, eps], 0 beyond 2 eps."""
    s = np.clip((rho - eps) / eps, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def _pole_neighborhood(host: RadialProfile):
    """Monotone stretch of psi(s) near the x = +1 pole, as splines in s."""
    r = arclength(host)
    s_nodes = (r[-1] - r)[::-1]          # increasing distance from the pole
    psi_nodes = host.psi[::-1]
    # cut at the first non-increase of psi moving away from the pole
    grow = np.nonzero(np.diff(psi_nodes) <= 0)[0]
    stop = int(grow[0]) + 1 if grow.size else len(psi_nodes) - 1
    stop = max(stop, 3)
    spline = CubicSpline(s_nodes[: stop + 1], psi_nodes[: stop + 1])
    return spline, float(s_nodes[stop])


def find_concentration_params(
    host: RadialProfile, eps: float, lam: float
) -> ConcentrationParams:
    """Locate the collar half-width so that psi spans [0, 2 eps] across it.

    Raises BadCollar when no such collar exists inside the monotone pole
    neighborhood or the slope window [-1-lam, -1+lam] fails on it.
    """
    if not (0 < lam < 1):
        raise BadCollar(f"slope tolerance must lie in (0, 1), got {lam}")
    spline, s_reach = _pole_neighborhood(host)
    s_dense = np.linspace(0.0, s_reach, 4001)
    psi_dense = spline(s_dense)
    if psi_dense[-1] < 2 * eps:
        raise BadCollar(
            f"psi reaches only {psi_dense[-1]:.4g} inside the monotone pole "
            f"stretch; 2*eps = {2 * eps:.4g} is out of reach"
        )
    s_edge = float(np.interp(2.0 * eps, psi_dense, s_dense))
    delta = 0.5 * s_edge
    params = ConcentrationParams(eps=eps, lam=lam, delta=delta)
    _validate_collar(host, params, spline)
    return params


def _validate_collar(host: RadialProfile, p: ConcentrationParams, spline) -> np.ndarray:
    s = np.linspace(0.0, 2.0 * p.delta, 4001)
    psi = spline(s)
    dpsi_ds = spline.derivative()(s)
    if np.any(dpsi_ds[1:] <= 0):
        raise BadCollar("psi is not strictly monotone across the collar")
    # psi_r = -dpsi/ds on this side; require it within [-1-lam, -1+lam]
    slope = -dpsi_ds
    if slope.min() < -1.0 - p.lam or slope.max() > -1.0 + p.lam:
        raise BadCollar(
            f"collar slope range [{slope.min():.3f}, {slope.max():.3f}] "
            f"exceeds [-1-{p.lam}, -1+{p.lam}]"
        )
    if abs(psi[-1] - 2 * p.eps) > 0.05 * 2 * p.eps:
        raise BadCollar("collar edge does not map onto 2*eps")
    return s


def build_concentrated_measure(
    host: RadialProfile, p: ConcentrationParams, clock: TauClock | None = None
) -> DiffusionState:
    """Measure whose CDF climbs from 0 to 1 across the collar at the pole.

    With the plateau cutoff g(rho) and the normalizer Z = integral of
    g(rho) rho^n over [0, 2 eps], the CDF slope on the collar is

        F_r = g(psi) |psi_r| psi^n / Z,

    which integrates to exactly 1 by the substitution rho = psi(r).  The
    returned state carries the density on the host grid (renormalized to
    discrete mass one) plus the dense collar sampling used for quadrature.
    """
    spline, _ = _pole_neighborhood(host)
    s = _validate_collar(host, p, spline)
    psi_f = spline(s)
    psi_r_f = -spline.derivative()(s)      # dpsi/dr, negative side

    rho = np.linspace(0.0, 2.0 * p.eps, 4001)
    g = _smoothstep_cutoff(rho, p.eps)
    gamma_int = np.concatenate(([0.0], np.cumsum(
        0.5 * np.diff(rho) * (g[:-1] * rho[:-1] ** host.n + g[1:] * rho[1:] ** host.n)
    )))
    Z = float(gamma_int[-1])

    F_r_f = _smoothstep_cutoff(psi_f, p.eps) * (-psi_r_f) * psi_f**host.n / Z
    F_f = 1.0 - np.interp(psi_f, rho, gamma_int) / Z

    # Grid density by conservative cell masses: each node cell receives
    # F(edge_above) - F(edge_below) of the analytic CDF, so the discrete
    # measure is exact even when the collar sits below the grid scale (the
    # sub-grid case degenerates to a near-delta at the last interior node).
    r_grid = arclength(host)
    w = volume_element(host)
    edges = np.concatenate(([r_grid[0]], 0.5 * (r_grid[:-1] + r_grid[1:]), [r_grid[-1]]))
    s_edges = np.clip(r_grid[-1] - edges, 0.0, None)
    F_edges = 1.0 - np.interp(spline(np.minimum(s_edges, s[-1])), rho, gamma_int) / Z
    F_edges[s_edges > s[-1]] = 0.0
    cell_mass = np.maximum(np.diff(F_edges), 0.0)
    cell_mass[-2] += cell_mass[-1]      # the pole cell has no volume weight
    cell_mass[-1] = 0.0
    u = np.zeros_like(r_grid)
    carried = w > 0
    u[carried] = cell_mass[carried] / w[carried]
    state = DiffusionState(
        host, u, 0.0, clock,
        _FinePayload(s=s, psi=psi_f, psi_r=psi_r_f, F=F_f, F_r=F_r_f, params=p),
    )
    total = state.mass()
    if total <= 0:
        raise BadCollar("constructed measure carries no mass on the grid")
    state.u /= total
    return state


def concentration_lower_bound(host: RadialProfile, p: ConcentrationParams) -> float:
    """Certified floor (1-lam)(n+1)/(2^(n+1) eps) - 2 delta sup|Ric| on the collar."""
    n = host.n
    curv = curvature(host)
    r = arclength(host)
    collar = r >= r[-1] - 2.0 * p.delta - 2.0 * (r[-1] - r[-2])
    sup_ric = float(
        np.maximum(np.abs(curv.ric_radial), np.abs(curv.ric_spherical))[collar].max()
    )
    return (1.0 - p.lam) * (n + 1) / (2 ** (n + 1) * p.eps) - 2.0 * p.delta * sup_ric


def certify_rate(
    host: RadialProfile,
    target: float,
    lam: float = 0.1,
    eps_start: float = 0.05,
    clock: TauClock | None = None,
) -> tuple[ConcentrationParams, float]:
    """Shrink eps until the derivative identity exceeds ``target``.

    Raises InconclusiveResolution (with the best rate achieved) when eps
    bottoms out at the trustworthy resolution floor first.
    """
    n = host.n
    floor = 1e-9 * float(arclength(host)[-1])
    eps = min(eps_start, (1.0 - lam) * (n + 1) / (2 ** (n + 1) * max(target, 1.0)))
    eps = max(eps, 2.0 * floor)
    best = -np.inf
    while eps > floor:
        try:
            params = find_concentration_params(host, eps, lam)
            state = build_concentrated_measure(host, params, clock)
            rate = df_dtau_rhs(state)
        except BadCollar:
            eps *= 0.5
            continue
        best = max(best, rate)
        if rate > target:
            return params, rate
        eps *= 0.5
    raise InconclusiveResolution(target, best)
