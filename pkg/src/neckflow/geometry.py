"""Rotationally symmetric warped-product metrics on a sphere.

An SO(n+1)-invariant metric on S^{n+1} is written as

    g = phi(x)^2 dx^2 + psi(x)^2 g_can,   x in [-1, 1],

with ``phi > 0`` the radial scale and ``psi >= 0`` the fiber-sphere radius.
The grid is fixed in x; all radial derivatives use the chain rule
d/dr = (1/phi) d/dx instead of remeshing in arclength.

A smooth metric closes up at the poles x = -1, +1: psi vanishes there and
|dpsi/dr| tends to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularCurvature

trapz = getattr(np, "trapezoid", getattr(np, "trapz", None))

# Tolerance for the |dpsi/dr| = 1 pole check on smooth-sphere profiles.
TOL_POLE = 0.05

# Pinch threshold, as a fraction of the profile's maximum fiber radius.
EPS_SING_FRACTION = 1e-4


def fiber_sphere_volume(n: int) -> float:
    """Volume of the unit round n-sphere, 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass
class RadialProfile:
    """Warped-product metric sampled on a fixed grid over x in [-1, 1].

    Attributes:
        n: dimension of the fiber sphere (>= 2).
        x: strictly increasing grid, x[0] = -1, x[-1] = +1, at least 17 nodes.
        phi: per-node radial scale, positive.
        psi: per-node fiber radius, non-negative.
    """

    n: int
    x: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.psi = np.asarray(self.psi, dtype=float)

    @property
    def m(self) -> int:
        """Number of grid intervals."""
        return len(self.x) - 1

    def copy(self) -> "RadialProfile":
        return RadialProfile(self.n, self.x.copy(), self.phi.copy(), self.psi.copy())

    def validate(self) -> None:
        """Raise ValueError on any structural invariant violation."""
        if self.n < 2:
            raise ValueError(f"fiber dimension n must be >= 2, got {self.n}")
        if self.m < 16:
            raise ValueError(f"grid must have at least 16 intervals, got m={self.m}")
        if not (abs(self.x[0] + 1.0) < 1e-12 and abs(self.x[-1] - 1.0) < 1e-12):
            raise ValueError("grid must cover [-1, 1]")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("grid must be strictly increasing")
        if len(self.phi) != self.m + 1 or len(self.psi) != self.m + 1:
            raise ValueError("phi and psi must have one value per grid node")
        if np.any(self.phi <= 0):
            raise ValueError("phi must be positive everywhere")
        if np.any(self.psi < 0):
            raise ValueError("psi must be non-negative")

    def smooth_sphere_diagnostics(self, tol_pole: float = TOL_POLE) -> list[str]:
        """Check the closed-up-sphere conditions; return a list of findings (empty = OK).

        psi must vanish exactly at the poles, be positive in the interior,
        and have |dpsi/dr| within ``tol_pole`` of 1 at both poles.
        """
        problems = []
        if self.psi[0] != 0.0 or self.psi[-1] != 0.0:
            problems.append("psi does not vanish at the pole nodes")
        interior = self.psi[1:-1]
        bad = np.nonzero(interior <= 0)[0]
        if bad.size:
            problems.append(f"psi not positive at interior node(s) {list(1 + bad[:5])}")
        psi_r = radial_derivative(self, self.psi)
        for tag, idx, want in (("x=-1", 0, 1.0), ("x=+1", -1, -1.0)):
            got = psi_r[idx]
            if abs(got - want) > tol_pole:
                problems.append(f"pole slope dpsi/dr at {tag} is {got:.4f}, expected {want:+.0f}")
        return problems

    def eps_sing(self) -> float:
        """Pinch-detection threshold for this profile."""
        return EPS_SING_FRACTION * float(self.psi.max())


@dataclass
class CurvatureSample:
    """Per-node curvature of a warped-product metric.

    ``ric_radial`` is the Ricci curvature in the radial direction,
    ``ric_spherical`` the Ricci eigenvalue on fiber directions (normalized
    by the metric, so both carry units 1/length^2), and ``scalar`` their
    trace  scalar = ric_radial + n * ric_spherical.
    """

    ric_radial: np.ndarray
    ric_spherical: np.ndarray
    scalar: np.ndarray

    def max_abs_eigenvalue(self) -> float:
        return float(
            max(np.abs(self.ric_radial).max(), np.abs(self.ric_spherical).max())
        )


def mirror_profile(p: RadialProfile) -> RadialProfile:
    """The same metric traversed from the opposite pole (x -> -x)."""
    return RadialProfile(p.n, -p.x[::-1], p.phi[::-1].copy(), p.psi[::-1].copy())


def arclength(p: RadialProfile) -> np.ndarray:
    """Per-node radii r(x) = integral of phi from the pole x = -1 (trapezoid)."""
    dx = np.diff(p.x)
    r = np.empty_like(p.x)
    r[0] = 0.0
    np.cumsum(0.5 * dx * (p.phi[:-1] + p.phi[1:]), out=r[1:])
    return r


def diameter(p: RadialProfile) -> float:
    dx = np.diff(p.x)
    return float(np.sum(0.5 * dx * (p.phi[:-1] + p.phi[1:])))


def _d_dx(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order first derivative in x on a possibly non-uniform grid.

    Written in difference form so that constants map to exactly zero.
    """
    df = np.empty_like(f)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    dm = (f[1:-1] - f[:-2]) / hm
    dp = (f[2:] - f[1:-1]) / hp
    df[1:-1] = (hm * dp + hp * dm) / (hm + hp)
    # one-sided 3-point stencils at the ends
    a, b = x[1] - x[0], x[2] - x[1]
    u1, u2 = (f[1] - f[0]) / a, (f[2] - f[1]) / b
    df[0] = u1 - a * (u2 - u1) / (a + b)
    a, b = x[-1] - x[-2], x[-2] - x[-3]
    u1, u2 = (f[-1] - f[-2]) / a, (f[-2] - f[-3]) / b
    df[-1] = u1 + a * (u1 - u2) / (a + b)
    return df


def radial_derivative(p: RadialProfile, f: np.ndarray) -> np.ndarray:
    """df/dr = (1/phi) df/dx, central in the interior, one-sided at the poles."""
    f = np.asarray(f, dtype=float)
    if len(f) != p.m + 1:
        raise ValueError("f must have one value per grid node")
    return _d_dx(p.x, f) / p.phi


def scale_from_radii(x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Recover phi = dr/dx from node radii (second-order differencing)."""
    phi = _d_dx(x, r)
    floor = 1e-12 * max(float(r[-1]), 1.0)
    return np.maximum(phi, floor)


def curvature(p: RadialProfile, eps_sing: float | None = None) -> CurvatureSample:
    """Ricci and scalar curvature of the warped-product metric.

    Interior nodes:

        ric_radial    = -n psi_rr / psi
        ric_spherical = (-psi psi_rr - (n-1) psi_r^2 + (n-1)) / psi^2
        scalar        = -2n psi_rr/psi + n(n-1)(1 - psi_r^2)/psi^2

    Pole nodes use the smooth-limit value: every eigenvalue tends to
    -q where q = psi_rr/psi at the nearest interior node, so
    ric_radial = ric_spherical = -n*q and scalar = -n(n+1)*q there.

    Raises SingularCurvature when psi drops below ``eps_sing`` at an
    interior node, which signals the profile is already pinched.
    """
    if eps_sing is None:
        eps_sing = p.eps_sing()
    interior = slice(1, p.m)
    pinched = np.nonzero(p.psi[interior] < eps_sing)[0]
    if pinched.size:
        raise SingularCurvature(1 + pinched)

    n = p.n
    psi_r = radial_derivative(p, p.psi)
    psi_rr = radial_derivative(p, psi_r)

    ric_rad = np.empty_like(p.psi)
    ric_sph = np.empty_like(p.psi)
    psi_in = p.psi[interior]
    q_in = psi_rr[interior] / psi_in
    ric_rad[interior] = -n * q_in
    ric_sph[interior] = (
        -psi_rr[interior] / psi_in
        + (n - 1) * (1.0 - psi_r[interior] ** 2) / psi_in**2
    )
    ric_rad[0] = ric_sph[0] = -n * (psi_rr[1] / p.psi[1])
    ric_rad[-1] = ric_sph[-1] = -n * (psi_rr[-2] / p.psi[-2])
    scalar = ric_rad + n * ric_sph
    return CurvatureSample(ric_rad, ric_sph, scalar)


def volume_element(p: RadialProfile) -> np.ndarray:
    """Trapezoid node weights w with sum(w * f) ~ integral of f dvol.

    dvol = omega_n * phi(x) * psi(x)^n dx for rotationally symmetric
    integrands, omega_n the unit n-sphere volume.
    """
    dens = fiber_sphere_volume(p.n) * p.phi * p.psi**p.n
    w = np.zeros_like(dens)
    dx = np.diff(p.x)
    w[:-1] += 0.5 * dx * dens[:-1]
    w[1:] += 0.5 * dx * dens[1:]
    return w


def total_volume(p: RadialProfile) -> float:
    return float(volume_element(p).sum())


# ---------------------------------------------------------------------------
# Profile serialization: columnar text, bit-faithful at 17 significant digits.
# ---------------------------------------------------------------------------

def save_profile(path, p: RadialProfile) -> None:
    """Write a profile as columnar text (x, phi, psi)."""
    with open(path, "w") as fh:
        fh.write(f"# radial-profile n={p.n} m={p.m}\n")
        fh.write("# x[coordinate]\tphi[length/coordinate]\tpsi[length]\n")
        for xi, fi, si in zip(p.x, p.phi, p.psi):
            fh.write(f"{xi:.17g}\t{fi:.17g}\t{si:.17g}\n")


def load_profile(path) -> RadialProfile:
    """Read a profile written by :func:`save_profile`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# radial-profile"):
            raise ValueError(f"{path}: not a radial-profile file")
        fields = dict(tok.split("=") for tok in header.split()[2:])
        n = int(fields["n"])
        m = int(fields["m"])
        rows = [
            line.split() for line in fh if line.strip() and not line.startswith("#")
        ]
    data = np.array(rows, dtype=float)
    if data.shape != (m + 1, 3):
        raise ValueError(f"{path}: expected {m + 1} rows of 3 columns, got {data.shape}")
    return RadialProfile(n=n, x=data[:, 0], phi=data[:, 1], psi=data[:, 2])
