"""Initial-data constructors and scenario configuration.

Scenario profiles:

* ``round_sphere`` -- the collapsing benchmark, psi = sin of the polar angle.
* ``dumbbell`` / ``point_pinch`` -- the two-bump family
  psi0(x) = A sqrt(1-x^2) (1 - a exp(-x^2/w^2)), phi0 = A c_phi, whose
  sufficiently pinched neck collapses at an interior point.
* ``interval_pinch`` -- a slice that is already pinched on an interior
  x-interval of prescribed arclength, the configuration whose continuation
  the monitor interrogates.
* ``custom`` -- any profile file.

The square-root family has unbounded x-slope at the poles, so a smooth
pole cap (unit radial slope) replaces the few nodes nearest each pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .flow import FlowConfig, _fit_cap
from .geometry import RadialProfile, arclength, load_profile, radial_derivative

PINCH_RATIO_MAX = 0.2
SCENARIO_NAMES = ("round_sphere", "dumbbell", "interval_pinch", "point_pinch", "custom")


def round_sphere_profile(n: int, m: int, radius: float = 1.0) -> RadialProfile:
    x = np.linspace(-1.0, 1.0, m + 1)
    theta = 0.5 * math.pi * (x + 1.0)
    psi = radius * np.sin(theta)
    psi[0] = psi[-1] = 0.0
    phi = np.full(m + 1, radius * 0.5 * math.pi)
    return RadialProfile(n, x, phi, psi)


def _smooth_pole_caps(p: RadialProfile, min_collar: int = 6) -> RadialProfile:
    """Replace the near-pole nodes by a quartic with unit radial slope."""
    psi = p.psi.copy()
    for side in (0, 1):
        if side == 0:
            s = arclength(p)
            vals = psi
        else:
            r = arclength(p)
            s = r[-1] - r[::-1]
            vals = psi[::-1]
        slope = np.gradient(vals, s)
        idx = np.nonzero(slope[1:] <= 1.0)[0]
        j = int(idx[0]) + 1 if idx.size else min_collar
        j = max(j, min_collar)
        for j_edge in range(j, len(vals) - 2):
            g = (vals[j_edge + 1] - vals[j_edge - 1]) / (s[j_edge + 1] - s[j_edge - 1])
            a, b = _fit_cap(s[j_edge], vals[j_edge], g)
            collar = s[1:j_edge]
            cand = collar * (1.0 + a * collar**2 + b * collar**3)
            if np.all(cand > 0.0):
                vals[1:j_edge] = cand
                vals[0] = 0.0
                break
        if side == 1:
            psi = vals[::-1]
        else:
            psi = vals
    return RadialProfile(p.n, p.x, p.phi.copy(), psi)


def dumbbell_profile(
    n: int,
    m: int,
    amp: float = 1.0,
    pinch: float = 0.85,
    width: float = 0.25,
    c_phi: float = 0.5 * math.pi,
) -> RadialProfile:
    """Two bumps around a thin neck at x = 0.

    psi0(x) = amp * sqrt(1 - x^2) * (1 - pinch * exp(-x^2 / width^2)),
    phi0 constant at amp * c_phi.  Defaults keep the neck/bump ratio at or
    below 0.2.
    """
    if not (0 < pinch < 1 and width > 0 and amp > 0):
        raise ConfigError("dumbbell needs amp > 0, 0 < pinch < 1, width > 0")
    x = np.linspace(-1.0, 1.0, m + 1)
    psi = amp * np.sqrt(np.maximum(1.0 - x**2, 0.0)) * (
        1.0 - pinch * np.exp(-(x**2) / width**2)
    )
    psi[0] = psi[-1] = 0.0
    phi = np.full(m + 1, amp * c_phi)
    return _smooth_pole_caps(RadialProfile(n, x, phi, psi))


def pinched_interval_profile(
    n: int,
    m: int,
    interval_length: float = 0.3,
    bump: float = 0.35,
    scale: float = 1.0,
) -> RadialProfile:
    """A slice already pinched on a centered x-interval.

    The fiber radius vanishes identically on an interior interval of
    arclength ``interval_length``; on each side it rises with unit radial
    slope into a single bump and closes up smoothly at the pole:
    psi = B tanh(s/B) tanh((S-s)/B) along each cap's arclength s.
    """
    x = np.linspace(-1.0, 1.0, m + 1)
    h = 2.0 / m
    x_p = interval_length / (2.0 * scale)
    if not (2 * h < x_p < 0.7):
        raise ConfigError(
            f"interval length {interval_length} incompatible with scale {scale} and m={m}"
        )
    x_p = h * round(x_p / h)
    psi = np.zeros(m + 1)
    S = scale * (1.0 - x_p)
    right = x > x_p
    s = scale * (x[right] - x_p)
    psi[right] = bump * np.tanh(s / bump) * np.tanh((S - s) / bump)
    left = x < -x_p
    s = scale * (-x_p - x[left])
    psi[left] = bump * np.tanh(s / bump) * np.tanh((S - s) / bump)
    psi[0] = psi[-1] = 0.0
    psi = np.maximum(psi, 0.0)
    phi = np.full(m + 1, scale)
    return RadialProfile(n, x, phi, psi)


def neck_bump_ratio(p: RadialProfile) -> float:
    """min(psi)/max(psi) over the interior between the outermost bumps."""
    interior = p.psi[1:-1]
    peak = float(interior.max())
    if peak <= 0:
        return math.inf
    peaks = np.nonzero(
        (interior[1:-1] >= interior[:-2]) & (interior[1:-1] >= interior[2:])
    )[0]
    if peaks.size < 2:
        return 1.0
    lo, hi = 1 + peaks[0], 1 + peaks[-1]
    return float(interior[lo:hi + 1].min() / peak)


@dataclass
class Scenario:
    """Everything one run needs: initial data, flow, diffusions, cost, output."""

    name: str = "round_sphere"
    n: int = 2
    m: int = 400
    dt_init: float = 1e-3
    t_max: float = 1.0
    eps_sing: float | None = None
    safety: float = 0.1
    cost: str = "linear"
    out: str | None = None
    seed: int = 0
    profile_file: str | None = None
    # dumbbell family
    amp: float = 1.0
    pinch: float = 0.85
    width: float = 0.25
    c_phi: float = 0.5 * math.pi
    # pre-pinched interval
    interval_length: float = 0.3
    bump: float = 0.35
    # post-singular stage
    t_post: float = 0.02
    n_tau: int = 25
    substeps: int = 8
    l_mode: str = "constant"        # "constant" | "prescribed"
    monitor_level: float = 10.0     # concentration target for the monitored pair
    lam: float = 0.1
    ladder: tuple[int, ...] = (10, 100, 1000)
    figures: bool = True

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            n=self.n,
            m=self.m,
            dt_init=self.dt_init,
            t_max=self.t_max,
            eps_sing=self.eps_sing,
            safety=self.safety,
            scenario=self.name,
        )

    def initial_profile(self) -> RadialProfile:
        if self.name == "round_sphere":
            return round_sphere_profile(self.n, self.m)
        if self.name in ("dumbbell", "point_pinch"):
            return dumbbell_profile(
                self.n, self.m, self.amp, self.pinch, self.width, self.c_phi
            )
        if self.name == "interval_pinch":
            return pinched_interval_profile(
                self.n, self.m, self.interval_length, self.bump
            )
        if self.name == "custom":
            if not self.profile_file:
                raise ConfigError("custom scenario requires profile_file=<path>")
            return load_profile(self.profile_file)
        raise ConfigError(f"unknown scenario {self.name!r}; pick one of {SCENARIO_NAMES}")


_SCENARIO_FIELDS = {f.name: f for f in fields(Scenario)}


def _coerce(name: str, raw: str):
    f = _SCENARIO_FIELDS[name]
    text = raw.strip()
    if name == "ladder":
        return tuple(int(v) for v in text.replace(",", " ").split())
    if f.type in ("float | None", "str | None"):
        if text.lower() in ("none", ""):
            return None
        return float(text) if "float" in f.type else text
    if f.type == "int":
        return int(text)
    if f.type == "float":
        return float(text)
    if f.type == "bool":
        return text.lower() in ("1", "true", "yes", "on")
    return text


def scenario_from_mapping(pairs: dict) -> Scenario:
    """Build a scenario from flat key=value data (config file or CLI flags)."""
    kwargs = {}
    for key, raw in pairs.items():
        key = key.replace("-", "_")
        if key == "scenario":
            key = "name"
        if key not in _SCENARIO_FIELDS:
            raise ConfigError(f"unknown scenario key {key!r}")
        kwargs[key] = _coerce(key, str(raw)) if isinstance(raw, str) else raw
    sc = Scenario(**kwargs)
    if sc.name not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {sc.name!r}; pick one of {SCENARIO_NAMES}")
    return sc


def load_config(path) -> dict:
    """Flat key=value text file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def validate_scenario(sc: Scenario) -> list[str]:
    """Diagnostics for the configured initial data (empty list = OK)."""
    problems = []
    try:
        p = sc.initial_profile()
    except (ConfigError, OSError, ValueError) as exc:
        return [f"cannot build initial profile: {exc}"]
    try:
        p.validate()
    except ValueError as exc:
        problems.append(str(exc))
    if sc.name == "interval_pinch":
        if not np.any(p.psi[1:-1] == 0.0):
            problems.append("interval_pinch profile has no pinched interior nodes")
        # pole conditions checked on each smooth side separately
        psi_r = radial_derivative(p, p.psi)
        for tag, idx, want in (("x=-1", 0, 1.0), ("x=+1", -1, -1.0)):
            if abs(psi_r[idx] - want) > 0.05:
                problems.append(f"pole slope at {tag} is {psi_r[idx]:.3f}")
    else:
        problems.extend(p.smooth_sphere_diagnostics())
    if sc.name in ("dumbbell", "point_pinch"):
        ratio = neck_bump_ratio(p)
        if ratio > PINCH_RATIO_MAX:
            problems.append(
                f"neck/bump ratio {ratio:.3f} exceeds {PINCH_RATIO_MAX}: "
                "not sufficiently pinched"
            )
    return problems
