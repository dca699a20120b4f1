"""Reduced Ricci flow for rotationally symmetric metrics, with neckpinch surgery.

The flow of g = phi^2 dx^2 + psi^2 g_can reduces to the scalar system

    psi_t = psi_rr - (n-1) (1 - psi_r^2) / psi,
    phi_t = n (psi_rr / psi) phi,

with psi(+-1, t) = 0 at the poles.  Time stepping is semi-implicit: the
psi_rr term is solved implicitly (tridiagonal), the stiff reaction term
is explicit with psi floored inside the denominator, and the coordinate
scale is updated explicitly afterwards from the same psi_rr/psi field.
The step budget follows the reaction timescale psi^2/(n-1).

The grid stays fixed in x; each node carries its arclength position
r_i(t) = integral of phi up to x_i, and the phi equation is integrated in
the equivalent cumulative form

    dr_i/dt = n * integral_0^{r_i} (psi_rr / psi) dr.

Integrating the scale factor pointwise instead (phi_i multiplied by
exp(n dt psi_rr/psi)) looks more direct but is violently unstable here:
psi_rr/psi is a 0/0 ratio near the poles, and any node-local bias
compounds exponentially with no spatial coupling to damp it.  The
cumulative form feeds the same field through an integral, which reduces a
node-local error to an O(h) perturbation of the radii.  phi itself is
recovered as dr/dx when a metric snapshot is emitted.

A pinch is declared when the interior fiber radius drops below the
threshold ``eps_sing``; contiguous sub-threshold node runs form the
singular set.  Surgery excises the singular run and closes each side with
a smooth quartic cap (psi = 0, |psi_r| = 1 at the new pole).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from .errors import NumericalFailure, StepRejected, UnsupportedTopology
from .geometry import TOL_POLE, RadialProfile, arclength, scale_from_radii

STATUS_SMOOTH = "smooth"
STATUS_SINGULAR = "singular"
STATUS_POST_SINGULAR = "post_singular"

# Fraction of the cap-side maximum fiber radius at which surgery re-attaches
# a smooth cap.  Cutting at the bare pinch threshold would leave behind
# near-singular material that re-pinches within a few steps.
SURGERY_FRACTION = 0.08
MIN_COLLAR_NODES = 5


@dataclass
class FlowConfig:
    """Knobs for the reduced Ricci flow integrator."""

    n: int = 2
    m: int = 400
    dt_init: float = 1e-3          # upper bound on any accepted step
    t_max: float = 1.0
    eps_sing: float | None = None  # pinch threshold; profile-derived when None
    safety: float = 0.1            # fraction of the reaction timescale
    scenario: str = ""
    max_snapshots: int = 1600
    count_stride: int = 16         # steps between neck/bump samples

    def resolve_eps(self, profile: RadialProfile) -> float:
        return self.eps_sing if self.eps_sing is not None else profile.eps_sing()


@dataclass
class FlowState:
    """A profile in flight: metric, forward time, and singularity status."""

    profile: RadialProfile
    t: float = 0.0
    status: str = STATUS_SMOOTH
    singular_set: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class FlowRunReport:
    """What a flow run observed on its way to (or past) the singular time."""

    singular_time: float | None
    singular_set: list[tuple[int, int]]
    type_one_sup: float | None
    neck_bump_history: np.ndarray   # columns: t, necks, bumps
    steps: int
    final_t: float
    min_psi_history: np.ndarray     # columns: t, min interior psi
    type_one_late: float | None = None  # same sup over the later half of the run


@dataclass
class MetricHistory:
    """Snapshots of (phi, psi) along a flow, linearly interpolated in t."""

    n: int
    x: np.ndarray
    ts: np.ndarray
    phis: np.ndarray   # (S, m+1)
    psis: np.ndarray   # (S, m+1)

    @property
    def t_start(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def profile_at(self, t: float) -> RadialProfile:
        t = float(np.clip(t, self.ts[0], self.ts[-1]))
        j = int(np.searchsorted(self.ts, t, side="right"))
        j = min(max(j, 1), len(self.ts) - 1)
        t0, t1 = self.ts[j - 1], self.ts[j]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        phi = (1 - w) * self.phis[j - 1] + w * self.phis[j]
        psi = (1 - w) * self.psis[j - 1] + w * self.psis[j]
        return RadialProfile(self.n, self.x, phi, psi)


class _SnapshotBuffer:
    """Bounded snapshot store: when full, decimate by two and double the stride."""

    def __init__(self, limit: int):
        self.limit = max(limit, 16)
        self.stride = 1
        self._since = 0
        self.ts: list[float] = []
        self.phis: list[np.ndarray] = []
        self.psis: list[np.ndarray] = []

    def due(self) -> bool:
        return self._since + 1 >= self.stride

    def skip(self) -> None:
        self._since += 1

    def offer(self, t: float, phi: np.ndarray, psi: np.ndarray, force: bool = False):
        if not force and not self.due():
            self._since += 1
            return
        self._since = 0
        self.ts.append(t)
        self.phis.append(phi.copy())
        self.psis.append(psi.copy())
        if len(self.ts) > self.limit:
            self.ts = self.ts[::2]
            self.phis = self.phis[::2]
            self.psis = self.psis[::2]
            self.stride *= 2

    def history(self, n: int, x: np.ndarray) -> MetricHistory:
        return MetricHistory(
            n=n,
            x=x.copy(),
            ts=np.array(self.ts),
            phis=np.array(self.phis),
            psis=np.array(self.psis),
        )


class _Stepper:
    """Semi-implicit stepper on node radii and fiber radii.

    Pole treatment: smoothness pins psi = s + c3 s^3 + O(s^5) in the
    arclength distance s to each pole.  The pole-adjacent nodes cannot be
    evolved freely at second order (any O(h^2) flaw is O(1) relative to
    their vanishing values), so both the reaction term and the post-step
    values on the pole zones come from the one-parameter local model with
    c3 fitted through the nearest trusted nodes.
    """

    POLE_ZONE = 5
    FIT_NODES = 4

    def __init__(self, n: int, m1: int, eps_sing: float):
        self.n = n
        self.eps = eps_sing
        self.ab = np.zeros((3, m1))
        self.rhs = np.zeros(m1)

    def _fit_c3(self, s, psi):
        """Least-squares c3 of psi/s - 1 = c3 s^2 on the trusted nodes."""
        K, F = self.POLE_ZONE, self.FIT_NODES
        sv = s[K : K + F]
        pv = psi[K : K + F]
        if sv[0] <= 0 or pv.min() <= 0:
            return None
        c3 = float(np.dot(pv / sv - 1.0, sv**2) / np.dot(sv**2, sv**2))
        return c3

    def step(self, r, psi, dt):
        """Advance (r, psi) one step; returns (r_new, psi_new, psi_rr, w)."""
        n = self.n
        K, F = self.POLE_ZONE, self.FIT_NODES
        span = K + F - 1
        hm = r[1:-1] - r[:-2]
        hp = r[2:] - r[1:-1]
        if hm.min() <= 0 or hp.min() <= 0:
            raise StepRejected("node radii lost monotonicity")

        psi_r = np.empty_like(psi)
        psi_r[1:-1] = (
            -hp / (hm * (hm + hp)) * psi[:-2]
            + (hp - hm) / (hm * hp) * psi[1:-1]
            + hm / (hp * (hm + hp)) * psi[2:]
        )
        psi_r[0] = psi_r[1]
        psi_r[-1] = psi_r[-2]

        floored = np.maximum(psi[1:-1], self.eps)
        q = (1.0 - psi_r[1:-1] ** 2) / floored
        # near each pole, replace the 0/0-contaminated quotient by the
        # smooth local model psi = s + c3 s^3
        s_left = r
        c3 = self._fit_c3(s_left, psi)
        if c3 is not None:
            s = s_left[1 : span + 1]
            slope = 1.0 + 3.0 * c3 * s**2
            q[:span] = (1.0 - slope**2) / np.maximum(s * (1.0 + c3 * s**2), self.eps)
        s_right = (r[-1] - r)[::-1]
        c3 = self._fit_c3(s_right, psi[::-1])
        if c3 is not None:
            s = s_right[1 : span + 1]
            slope = 1.0 + 3.0 * c3 * s**2
            qr = (1.0 - slope**2) / np.maximum(s * (1.0 + c3 * s**2), self.eps)
            q[-span:] = qr[::-1]
        reaction = -(n - 1) * q

        sub = 2.0 / ((hm + hp) * hm)
        sup = 2.0 / ((hm + hp) * hp)
        ab, rhs = self.ab, self.rhs
        ab[0, 2:] = -dt * sup
        ab[1, 1:-1] = 1.0 + dt * (sub + sup)
        ab[2, :-2] = -dt * sub
        ab[1, 0] = ab[1, -1] = 1.0
        ab[0, 1] = ab[2, -2] = 0.0
        rhs[1:-1] = psi[1:-1] + dt * reaction
        rhs[0] = rhs[-1] = 0.0

        try:
            psi_new = solve_banded((1, 1), ab, rhs, check_finite=False)
        except Exception as exc:  # singular system
            raise StepRejected(str(exc)) from exc
        if not np.all(np.isfinite(psi_new)):
            raise StepRejected("non-finite fiber radius after implicit solve")
        if psi_new[1:-1].min() < -self.eps:
            raise StepRejected("fiber radius undershoot beyond pinch threshold")
        psi_new[1:-1] = np.maximum(psi_new[1:-1], 0.0)

        # the implicit solve already holds the updated curvature field:
        # L psi_new = (psi_new - psi)/dt - reaction
        psi_rr = np.empty_like(psi)
        psi_rr[1:-1] = (psi_new[1:-1] - psi[1:-1]) / dt - reaction
        psi_rr[0] = psi_rr[1]
        psi_rr[-1] = psi_rr[-2]

        # soft pole recap: blend the solve output toward the odd local
        # model, fully at the first node and fading across the zone, and
        # take the psi_rr/psi drift source over the pole+seam span from the
        # same model (its recovered value there carries the recap
        # transient amplified by 1/dr^2)
        w = np.empty_like(psi)
        w[1:-1] = psi_rr[1:-1] / np.maximum(psi_new[1:-1], self.eps)
        w[0] = w[1]
        w[-1] = w[-2]

        blend = np.linspace(1.0, 0.0, K + 1)[:-1]  # nodes 1..K-1 weights
        c3 = self._fit_c3(r, psi_new)
        if c3 is not None:
            s = r[1:K]
            model = np.maximum(s * (1.0 + c3 * s**2), 0.0)
            psi_new[1:K] = blend[1:] * model + (1.0 - blend[1:]) * psi_new[1:K]
            sw = r[: span + 1]
            w[: span + 1] = 6.0 * c3 / (1.0 + c3 * sw**2)
        c3 = self._fit_c3((r[-1] - r)[::-1], psi_new[::-1])
        if c3 is not None:
            s = (r[-1] - r)[-K:-1]
            model = np.maximum(s * (1.0 + c3 * s**2), 0.0)
            psi_new[-K:-1] = blend[1:][::-1] * model + (1.0 - blend[1:][::-1]) * psi_new[-K:-1]
            sw = (r[-1] - r)[-span - 1 :]
            w[-span - 1 :] = 6.0 * c3 / (1.0 + c3 * sw**2)
        w[1:-1] = 0.25 * (w[:-2] + 2.0 * w[1:-1] + w[2:])

        # cumulative form of the phi equation: nodes drift with the
        # integral of n * psi_rr/psi from the pole
        drift = np.concatenate(
            ([0.0], np.cumsum(0.5 * (w[:-1] + w[1:]) * (r[1:] - r[:-1])))
        )
        r_new = r + dt * n * drift
        if np.any(np.diff(r_new) <= 0):
            raise StepRejected("node radii crossed during drift update")

        return r_new, psi_new, psi_rr, w


def flow_step(state: FlowState, dt: float, cfg: FlowConfig | None = None) -> FlowState:
    """Advance a smooth state by one accepted step of size dt.

    dt = 0 returns the state unchanged.  Raises StepRejected when the
    implicit solve fails or psi undershoots below -eps_sing; the caller is
    expected to halve dt and retry.
    """
    if state.status == STATUS_SINGULAR:
        raise ValueError("flow_step requires a non-singular state")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    p = state.profile
    if dt == 0.0:
        return FlowState(p.copy(), state.t, state.status, list(state.singular_set))
    cfg = cfg or FlowConfig(n=p.n, m=p.m)
    stepper = _Stepper(p.n, p.m + 1, cfg.resolve_eps(p))
    r = arclength(p)
    r_new, psi_new, _, _ = stepper.step(r, p.psi.copy(), dt)
    phi_new = scale_from_radii(p.x, r_new)
    return FlowState(
        RadialProfile(p.n, p.x.copy(), phi_new, psi_new), state.t + dt, STATUS_SMOOTH
    )


def _count_extrema(vals: np.ndarray, tol: float) -> tuple[int, int]:
    # compress runs of near-equal values into plateaus first
    plateau_vals = [vals[0]]
    for k in range(1, len(vals)):
        if abs(vals[k] - plateau_vals[-1]) > tol:
            plateau_vals.append(vals[k])
    necks = bumps = 0
    for j in range(1, len(plateau_vals) - 1):
        lo, mid, hi = plateau_vals[j - 1], plateau_vals[j], plateau_vals[j + 1]
        if mid > lo + tol and mid > hi + tol:
            bumps += 1
        elif mid < lo - tol and mid < hi - tol:
            necks += 1
    return necks, bumps


def neck_bump_count(p: RadialProfile) -> tuple[int, int]:
    """Count interior local minima (necks) and maxima (bumps) of psi over r.

    Consecutive samples closer in value than 1e-10 * max(psi) are merged
    into plateaus first, so flat discrete ties do not produce spurious
    critical points.
    """
    return _count_extrema(p.psi, 1e-10 * float(p.psi.max()))


def _singular_runs(psi: np.ndarray, eps: float) -> list[tuple[int, int]]:
    """Contiguous interior index runs where psi < eps."""
    below = psi < eps
    below[0] = below[-1] = False
    runs = []
    start = None
    for i, flag in enumerate(below):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    return runs


def _estimate_singular_time(ts: np.ndarray, min_psi: np.ndarray, t_detect: float) -> float:
    """Extrapolate the zero crossing of min(psi)^2, which decays linearly in t."""
    if len(ts) < 3:
        return t_detect
    j0 = max(0, len(ts) - 256)
    dq = min_psi[-1] ** 2 - min_psi[j0] ** 2
    dt = ts[-1] - ts[j0]
    if dq >= 0 or dt <= 0:
        return t_detect
    t_hat = ts[-1] - min_psi[-1] ** 2 * dt / dq
    # the crossing cannot predate detection
    return max(t_hat, t_detect)


def run_to_singularity(s0: FlowState, cfg: FlowConfig) -> tuple[FlowRunReport, FlowState, MetricHistory]:
    """Integrate a smooth state adaptively until pinch detection or t_max.

    Marks contiguous sub-threshold node runs as the singular set, estimates
    the singular time by extrapolating the zero crossing of min(psi)^2, and
    records the largest curvature eigenvalue per step for the Type-I
    quantity sup (T - t) |eigenvalue|.  When t_max is reached first the
    report carries ``singular_time = None``.
    """
    p = s0.profile.copy()
    n, x = p.n, p.x
    eps = cfg.resolve_eps(p)
    stepper = _Stepper(n, p.m + 1, eps)
    snaps = _SnapshotBuffer(cfg.max_snapshots)

    t = s0.t
    r = arclength(p)
    psi = p.psi.copy()
    ts, minpsi, maxeig = [], [], []
    counts = []
    steps = 0

    K = _Stepper.POLE_ZONE

    def interior_min(v):
        return float(v[1:-1].min())

    snaps.offer(t, scale_from_radii(x, r), psi, force=True)
    while True:
        if interior_min(psi) < eps:
            status = STATUS_SINGULAR
            break
        if t >= cfg.t_max - 1e-15:
            status = STATUS_SMOOTH
            break

        # reaction timescale psi^2/(n-1), taken over the freely evolved
        # nodes: the pole zones follow the regularized local model, whose
        # reaction stays bounded, so they do not set a stiffness limit
        dt = min(
            cfg.dt_init,
            cfg.safety * float(psi[K:-K].min()) ** 2 / (n - 1),
            cfg.t_max - t,
        )
        for _ in range(45):
            try:
                r_new, psi_new, psi_rr, w = stepper.step(r, psi, dt)
                break
            except StepRejected:
                dt *= 0.5
        else:
            raise NumericalFailure(f"step-rejection cascade at t={t}")

        t += dt
        r, psi = r_new, psi_new
        steps += 1

        # curvature eigenvalues from the fields the step already computed
        # (psi_rr/psi = -ric_radial/n), sampled past the blended pole seam
        # where they are second-order accurate
        margin = 2 * K + 2 if len(psi) > 4 * K + 8 else K
        zone = slice(margin, -margin)
        psi_floor = np.maximum(psi[1:-1], eps)[zone]
        slope = ((psi[2:] - psi[:-2]) / (r[2:] - r[:-2]))[zone]
        ric_rad = -n * w[1:-1][zone]
        ric_sph = ric_rad / n + (n - 1) * (1.0 - slope**2) / psi_floor**2
        maxeig.append(max(np.abs(ric_rad).max(), np.abs(ric_sph).max()))
        ts.append(t)
        minpsi.append(interior_min(psi))
        if snaps.due() or steps == 1:
            snaps.offer(t, scale_from_radii(x, r), psi)
        else:
            snaps.skip()
        if steps % cfg.count_stride == 1 or steps == 1:
            counts.append((t, *neck_bump_count(RadialProfile(n, x, scale_from_radii(x, r), psi))))

    final_profile = RadialProfile(n, x.copy(), scale_from_radii(x, r), psi.copy())
    snaps.offer(t, final_profile.phi, psi, force=True)
    counts.append((t, *neck_bump_count(final_profile)) if status == STATUS_SMOOTH
                  else (t, np.nan, np.nan))
    ts_arr = np.array(ts)
    minpsi_arr = np.array(minpsi)

    if status == STATUS_SINGULAR:
        if steps == 0:
            t_hat = s0.t
        else:
            t_hat = _estimate_singular_time(ts_arr, minpsi_arr, t)
        runs = _singular_runs(psi, eps)
        if not runs:
            # detection can trip on the node nearest a pole: treat the
            # global minimum node as the singular set
            j = int(np.argmin(psi[1:-1])) + 1
            runs = [(j, j)]
        type_one = type_one_late = None
        if steps:
            gaps = t_hat - ts_arr
            series = np.where(gaps > 0, gaps, 0.0) * np.array(maxeig)
            type_one = float(series.max())
            type_one_late = float(series[len(series) // 2 :].max())
        report = FlowRunReport(
            singular_time=t_hat,
            singular_set=runs,
            type_one_sup=type_one,
            neck_bump_history=np.array(counts, dtype=float),
            steps=steps,
            final_t=t,
            min_psi_history=np.column_stack([ts_arr, minpsi_arr]) if steps else np.zeros((0, 2)),
            type_one_late=type_one_late,
        )
        state = FlowState(final_profile, t, STATUS_SINGULAR, runs)
    else:
        report = FlowRunReport(
            singular_time=None,
            singular_set=[],
            type_one_sup=None,
            neck_bump_history=np.array(counts, dtype=float),
            steps=steps,
            final_t=t,
            min_psi_history=np.column_stack([ts_arr, minpsi_arr]) if steps else np.zeros((0, 2)),
        )
        state = FlowState(final_profile, t, STATUS_SMOOTH)
    return report, state, snaps.history(n, x)


def run_window(s0: FlowState, t_end: float, cfg: FlowConfig) -> tuple[FlowState, MetricHistory]:
    """Flow a smooth state over [s0.t, t_end], stopping early near a pinch."""
    sub = FlowConfig(
        n=cfg.n,
        m=s0.profile.m,
        dt_init=cfg.dt_init,
        t_max=t_end,
        eps_sing=cfg.resolve_eps(s0.profile),
        safety=cfg.safety,
        max_snapshots=cfg.max_snapshots,
        count_stride=cfg.count_stride,
    )
    _, state, history = run_to_singularity(s0, sub)
    return state, history


# ---------------------------------------------------------------------------
# Surgery: continue past the singular time on the surviving caps
# ---------------------------------------------------------------------------

@dataclass
class SurgeryResult:
    """Two smooth caps joined (conceptually) by an interval of length L0.

    cap1 keeps its regular pole at x = -1 (singular pole at x = +1);
    cap2 keeps its singular pole at x = -1 (regular pole at x = +1).
    """

    cap1: FlowState
    cap2: FlowState
    interval_length: float


def _fit_cap(s_edge: float, psi_edge: float, slope_edge: float):
    """Quartic p(s) = s + a s^3 + b s^4 with p(0)=0, p'(0)=1, p''(0)=0
    and matching (value, slope) at the collar edge s_edge."""
    P = psi_edge - s_edge
    Q = slope_edge - 1.0
    a = (4.0 * P / s_edge - Q) / s_edge**2
    b = (P - a * s_edge**3) / s_edge**4
    return a, b


def _cap_side(p: RadialProfile, cut: int, singular_right: bool) -> RadialProfile:
    """Restrict the profile to one side of the cut and close it up smoothly.

    The surviving side is resampled onto a uniform arclength grid (the
    parent's spacing is badly stretched around the pinch, where the neck
    extended), then the collar between the surgery scale and the new pole
    is replaced by a quartic that vanishes with unit slope at the pole.
    """
    if singular_right:
        idx = np.arange(0, cut + 1)
    else:
        idx = np.arange(cut, p.m + 1)
    if len(idx) < 17:
        raise UnsupportedTopology("cap too small to form a valid profile")
    x = p.x[idx]
    phi = p.phi[idx]
    psi = p.psi[idx]
    if not singular_right:
        # mirror so the singular end sits on the right during capping
        x = -x[::-1]
        phi = phi[::-1]
        psi = psi[::-1]

    r_parent = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(x) * (phi[:-1] + phi[1:]))))
    m_cap = max(len(idx) - 1, 64)
    r = np.linspace(0.0, r_parent[-1], m_cap + 1)
    psi = PchipInterpolator(r_parent, psi)(r)
    psi = np.maximum(psi, 0.0)
    s = r[-1] - r  # distance to the new pole
    cap_max = float(psi.max())
    target = SURGERY_FRACTION * cap_max
    inner = len(psi) - 1 - MIN_COLLAR_NODES
    j = inner
    while j > 2 and psi[j] < target:
        j -= 1
    # widen the collar until the quartic is positive and gentle enough
    # that the discrete pole slope (error ~ 2 a h^2) stays within tol_pole
    h_loc = float(np.median(np.diff(r[max(j - 4, 0) :])))
    best = None
    for j_edge in range(j, 2, -1):
        slope = (psi[j_edge - 1] - psi[j_edge + 1]) / (s[j_edge - 1] - s[j_edge + 1])
        if slope <= 0:
            continue
        a, b = _fit_cap(s[j_edge], psi[j_edge], slope)
        collar = s[j_edge + 1 :]
        cand = collar * (1.0 + a * collar**2 + b * collar**3)
        if not np.all(cand[:-1] > 0.0):
            continue
        trial = psi.copy()
        trial[j_edge + 1 :] = cand
        trial[-1] = 0.0
        # a residual interior minimum would be a micro-neck that re-pinches
        # within a few steps; keep widening the collar until none is left
        if _count_extrema(trial, 1e-10 * cap_max)[0] > 0:
            continue
        slope_err = 2.0 * abs(a) * h_loc**2
        if best is None or slope_err < best[0]:
            best = (slope_err, j_edge, trial)
        if slope_err <= 0.6 * TOL_POLE:
            break
        if psi[j_edge] > 0.6 * cap_max:
            break
    if best is None:
        raise UnsupportedTopology("could not fit a positive smooth cap")
    _, j_edge, psi = best

    if not singular_right:
        psi = psi[::-1]
    # uniform arclength grid: x linear in r, constant phi keeps r exact
    x_new = np.linspace(-1.0, 1.0, m_cap + 1)
    phi_new = np.full(m_cap + 1, r[-1] / 2.0)
    cap = RadialProfile(p.n, x_new, phi_new, psi)
    cap.validate()
    return cap


def forward_evolve(state: FlowState, cfg: FlowConfig) -> SurgeryResult:
    """Zero-scale surgery at a single interior pinch.

    The singular node run is excised; each side is closed up as a smooth
    cap ready for continued flow.  The returned interval length is the
    arclength of the singular run (zero for a point pinch).
    """
    if state.status != STATUS_SINGULAR:
        raise ValueError("forward_evolve requires a singular state")
    if len(state.singular_set) != 1:
        raise UnsupportedTopology(
            f"need exactly one singular component, got {len(state.singular_set)}"
        )
    i1, i2 = state.singular_set[0]
    p = state.profile
    if i1 <= 0 or i2 >= p.m:
        raise UnsupportedTopology("singular set touches a pole")
    r = arclength(p)
    length = float(r[i2] - r[i1])
    cap1 = _cap_side(p, i1, singular_right=True)
    cap2 = _cap_side(p, i2, singular_right=False)
    return SurgeryResult(
        cap1=FlowState(cap1, state.t, STATUS_POST_SINGULAR),
        cap2=FlowState(cap2, state.t, STATUS_POST_SINGULAR),
        interval_length=length,
    )
