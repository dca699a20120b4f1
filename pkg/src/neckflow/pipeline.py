"""End-to-end scenario runs: flow, surgery, diffusions, monitor, verdict."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .diffusion import (
    DiffusionState,
    advance,
    bump_state,
    build_concentrated_measure,
    cdf_of,
    certify_rate,
    uniform_state,
)
from .errors import InconclusiveResolution, UnsupportedTopology
from .flow import (
    FlowRunReport,
    FlowState,
    MetricHistory,
    SurgeryResult,
    forward_evolve,
    run_to_singularity,
    run_window,
)
from .geometry import RadialProfile, arclength, mirror_profile, save_profile
from .io import write_columns, write_keyvalues
from .scenarios import Scenario, neck_bump_ratio, validate_scenario
from .spacetime import (
    GluedSpace,
    LengthSchedule,
    PinchVerdict,
    WsrfReport,
    pinch_classifier,
    wsrf_monitor,
)
from .transport import ConvexCost


@dataclass
class RunResult:
    scenario: Scenario
    diagnostics: list[str]
    flow_report: FlowRunReport
    initial_profile: RadialProfile
    pre_history: MetricHistory
    final_state: FlowState
    surgery: SurgeryResult | None
    glued: GluedSpace | None
    tau_grid: np.ndarray | None
    paths: list[tuple[list[DiffusionState], list[DiffusionState]]]
    monitor: WsrfReport | None
    verdict: PinchVerdict
    notes: list[str]


def _evolve_path(state: DiffusionState, tau_grid: np.ndarray, substeps: int):
    path = [state]
    for k in range(1, len(tau_grid)):
        state = advance(state, float(tau_grid[k] - tau_grid[k - 1]), substeps)
        path.append(state)
    return path


def _point_width(p: RadialProfile) -> float:
    return 4.0 * float(np.median(np.diff(arclength(p))))


def run_scenario(sc: Scenario) -> RunResult:
    """Run one configured scenario; deterministic for a given configuration."""
    notes = []
    profile = sc.initial_profile()
    profile.validate()
    diagnostics = validate_scenario(sc)
    cfg = sc.flow_config()
    h = ConvexCost.parse(sc.cost)

    report, state, pre_history = run_to_singularity(FlowState(profile, 0.0), cfg)

    surgery = None
    glued = None
    monitor = None
    tau_grid = None
    paths = []

    if report.singular_time is None:
        verdict = PinchVerdict(
            "SinglePointConsistent", None, 0.0, [], "flow stayed smooth until t_max"
        )
        return RunResult(sc, diagnostics, report, profile, pre_history, state,
                         None, None, None, [], None, verdict, notes)

    try:
        surgery = forward_evolve(state, cfg)
    except UnsupportedTopology as exc:
        notes.append(f"no cap continuation: {exc}")
        verdict = PinchVerdict(
            "SinglePointConsistent", None, 0.0, [],
            f"singular set admits no neck surgery ({exc}); treated as global collapse",
        )
        return RunResult(sc, diagnostics, report, profile, pre_history, state,
                         None, None, None, [], None, verdict, notes)

    # continue each cap forward over a window safely inside its own lifetime
    lifetime = min(
        float(surgery.cap1.profile.psi.max()) ** 2,
        float(surgery.cap2.profile.psi.max()) ** 2,
    ) / (2.0 * sc.n)
    window = min(sc.t_post, 0.3 * lifetime)
    t_end = state.t + window
    cap1_state, hist1 = run_window(surgery.cap1, t_end, cfg)
    cap2_state, hist2 = run_window(surgery.cap2, t_end, cfg)
    t_prime = min(hist1.t_end, hist2.t_end)
    if t_prime <= state.t + 1e-12:
        notes.append("caps re-pinched immediately; no post-singular window")
        verdict = PinchVerdict(
            "SinglePointConsistent", None, 0.0, [], "no usable post-singular window"
        )
        return RunResult(sc, diagnostics, report, profile, pre_history, state,
                         surgery, None, None, [], None, verdict, notes)

    L0 = surgery.interval_length
    schedule = LengthSchedule.constant(L0)
    glued = GluedSpace(cap1=hist1, cap2=hist2, length=schedule, t_prime=t_prime)
    point_width = _point_width(state.profile)
    is_interval = L0 > point_width

    tau_max = t_prime - state.t
    tau_grid = np.linspace(0.0, tau_max, sc.n_tau)
    dtau = float(tau_grid[1] - tau_grid[0]) / sc.substeps
    clock1 = glued.clock("cap1")
    clock2 = glued.clock("cap2")
    host1 = clock1.profile_at_tau(0.0)
    host2 = clock2.profile_at_tau(0.0)

    if is_interval:
        # concentrated pair near the singular poles, plus a uniform pair
        try:
            prm1, rate1 = certify_rate(host1, sc.monitor_level, lam=sc.lam)
            prm2, rate2 = certify_rate(mirror_profile(host2), sc.monitor_level, lam=sc.lam)
            conc1 = build_concentrated_measure(host1, prm1, clock1)
            conc2 = _mirror_state(
                build_concentrated_measure(mirror_profile(host2), prm2), host2, clock2
            )
            notes.append(
                f"monitored concentrated pair certified at level {sc.monitor_level:g} "
                f"(rates {rate1:.3g}, {rate2:.3g})"
            )
            pair_states = [(conc1, conc2)]
        except InconclusiveResolution as exc:
            notes.append(f"monitored pair fell back to uniform: {exc}")
            pair_states = []
        pair_states.append((uniform_state(host1, clock1), uniform_state(host2, clock2)))
        paths = [
            (_evolve_path(a, tau_grid, sc.substeps), _evolve_path(b, tau_grid, sc.substeps))
            for a, b in pair_states
        ]
        monitor = wsrf_monitor(glued, paths, h, tau_grid, dtau, cross=True)
        if sc.l_mode == "prescribed" and monitor.f1_series:
            # shed exactly the measured growth of FF1 + FF2 plus a unit
            # margin: the discrete form of dL/dtau = required_L_rate - 1
            ff = monitor.f1_series[0] + monitor.f2_series[0]
            L_vals = L0 - (ff - ff[0]) - tau_grid
            schedule = LengthSchedule(tau_grid.copy(), L_vals)
            glued.length = schedule
            monitor = wsrf_monitor(glued, paths, h, tau_grid, dtau, cross=True)
            bad = np.nonzero(schedule.values < 0)[0]
            if bad.size:
                notes.append(
                    "prescribed L(tau) exits [0, diam] at tau = "
                    f"{tau_grid[bad[0]]:.4g}"
                )
    else:
        # point pinch: monitor cap-interior pairs only
        pair_states = [
            (bump_state(host1, 0.3, clock=clock1), bump_state(host1, 0.7, clock=clock1)),
            (bump_state(host2, 0.3, clock=clock2), bump_state(host2, 0.7, clock=clock2)),
        ]
        paths = [
            (_evolve_path(a, tau_grid, sc.substeps), _evolve_path(b, tau_grid, sc.substeps))
            for a, b in pair_states
        ]
        monitor = wsrf_monitor(glued, paths, h, tau_grid, dtau, cross=False)

    verdict = pinch_classifier(
        glued, L0, monitor, point_width, ladder=sc.ladder, lam=sc.lam
    )
    return RunResult(sc, diagnostics, report, profile, pre_history, state,
                     surgery, glued, tau_grid, paths, monitor, verdict, notes)


def _mirror_state(d: DiffusionState, host, clock) -> DiffusionState:
    return DiffusionState(host, d.u[::-1].copy(), d.tau, clock, d.fine)


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

def _subsample(arr: np.ndarray, limit: int = 2000) -> np.ndarray:
    if len(arr) <= limit:
        return arr
    idx = np.linspace(0, len(arr) - 1, limit).astype(int)
    return arr[idx]


def emit_artifacts(result: RunResult, out_dir: str) -> None:
    """Write the full report tree for a finished run."""
    sc = result.scenario
    os.makedirs(out_dir, exist_ok=True)
    prof_dir = os.path.join(out_dir, "profiles")
    os.makedirs(prof_dir, exist_ok=True)

    save_profile(os.path.join(prof_dir, "initial.tsv"), result.initial_profile)
    save_profile(os.path.join(prof_dir, "final.tsv"), result.final_state.profile)
    hist = result.pre_history
    for j in np.linspace(0, len(hist.ts) - 1, min(6, len(hist.ts))).astype(int):
        save_profile(
            os.path.join(prof_dir, f"snapshot_{j:04d}.tsv"), hist.profile_at(hist.ts[j])
        )
    if result.surgery is not None:
        save_profile(os.path.join(prof_dir, "cap1.tsv"), result.surgery.cap1.profile)
        save_profile(os.path.join(prof_dir, "cap2.tsv"), result.surgery.cap2.profile)

    rep = result.flow_report
    write_keyvalues(
        os.path.join(out_dir, "flow_report.txt"),
        {
            "scenario": sc.name,
            "n": sc.n,
            "m": sc.m,
            "singular_time": "none" if rep.singular_time is None else rep.singular_time,
            "singular_set": ";".join(f"{a}:{b}" for a, b in rep.singular_set),
            "type_one_sup": "none" if rep.type_one_sup is None else rep.type_one_sup,
            "steps": rep.steps,
            "final_t": rep.final_t,
        },
        comments=["reduced Ricci flow run report"],
    )
    nb = _subsample(rep.neck_bump_history)
    write_columns(
        os.path.join(out_dir, "neck_bump_history.tsv"),
        {
            "t[time]": nb[:, 0],
            "necks[count]": nb[:, 1],
            "bumps[count]": nb[:, 2],
        },
        comments=["interior minima and maxima of the fiber radius over time"],
    )
    mp = _subsample(rep.min_psi_history)
    if len(mp):
        write_columns(
            os.path.join(out_dir, "min_psi_history.tsv"),
            {"t[time]": mp[:, 0], "min_psi[length]": mp[:, 1]},
            comments=["minimum interior fiber radius over time"],
        )

    if result.monitor is not None:
        mon = result.monitor
        cols = {"tau[time]": mon.tau_samples}
        cols["cost[cost]"] = mon.cost_series[0]
        cols["F1[length]"] = mon.f1_series[0]
        cols["F2[length]"] = mon.f2_series[0]
        cols["L[length]"] = mon.L_series
        cols["required_L_rate[length/time]"] = mon.required_L_rate[0]
        for j in range(1, len(mon.cost_series)):
            cols[f"cost_pair{j}[cost]"] = mon.cost_series[j]
        write_columns(
            os.path.join(out_dir, "wsrf_report.tsv"),
            cols,
            comments=[
                "coupled transport cost along backward time",
                f"tol_mono = {mon.tol_mono:.6g}; violations = {len(mon.violations)}",
            ],
        )
        _emit_diffusions(result, out_dir)

    summary = {
        "scenario": sc.name,
        "n": sc.n,
        "m": sc.m,
        "cost": sc.cost,
        "seed": sc.seed,
        "singular_time": "none" if rep.singular_time is None else rep.singular_time,
        "type_one_sup": "none" if rep.type_one_sup is None else rep.type_one_sup,
        "interval_length": "none" if result.surgery is None else result.surgery.interval_length,
        "verdict": str(result.verdict),
        "verdict_kind": result.verdict.kind,
        "certified_level": result.verdict.certified_level or 0,
        "violations": 0 if result.monitor is None else len(result.monitor.violations),
        "neck_bump_ratio_initial": neck_bump_ratio(result.initial_profile),
    }
    for N, r1, r2 in result.verdict.ladder:
        summary[f"ladder_rate_N{N}"] = f"{r1:.6g};{r2:.6g}"
    for j, note in enumerate(result.notes + [result.verdict.notes]):
        if note:
            summary[f"note_{j}"] = note
    for j, d in enumerate(result.diagnostics):
        summary[f"diagnostic_{j}"] = d
    write_keyvalues(os.path.join(out_dir, "summary.txt"), summary,
                    comments=["scenario run summary"])

    if sc.figures:
        from .figures import render_run_figures

        render_run_figures(result, os.path.join(out_dir, "figures"))


def _emit_diffusions(result: RunResult, out_dir: str) -> None:
    diff_dir = os.path.join(out_dir, "diffusions")
    os.makedirs(diff_dir, exist_ok=True)
    tau_grid = result.tau_grid
    stride = max(1, len(tau_grid) // 8)
    manifest = {"tau[time]": [], "sample[index]": [], "path[name]": [], "host_snapshot[index]": []}
    for pair_idx, (path1, path2) in enumerate(result.paths):
        for side, path in (("a", path1), ("b", path2)):
            hist = path[0].clock.history if path[0].clock else None
            for k in range(0, len(tau_grid), stride):
                state = path[k]
                c = cdf_of(state)
                name = f"pair{pair_idx}{side}_{k:03d}.tsv"
                write_columns(
                    os.path.join(diff_dir, name),
                    {
                        "r[length]": c.r,
                        "u[1/volume]": state.u,
                        "F[1]": c.F,
                    },
                    comments=[f"diffusion dump at tau = {tau_grid[k]:.10g}"],
                )
                snap = 0
                if hist is not None:
                    t_here = result.glued.t_prime - tau_grid[k]
                    snap = int(np.searchsorted(hist.ts, t_here))
                manifest["tau[time]"].append(tau_grid[k])
                manifest["sample[index]"].append(k)
                manifest["path[name]"].append(pair_idx * 2 + (side == "b"))
                manifest["host_snapshot[index]"].append(snap)
    write_columns(
        os.path.join(diff_dir, "manifest.tsv"),
        {k: np.asarray(v) for k, v in manifest.items()},
        comments=["diffusion dump manifest"],
    )
