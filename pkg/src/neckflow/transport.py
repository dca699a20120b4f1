"""Exact one-dimensional optimal transport for costs that are convex in distance.

A probability measure on an interval is represented by a piecewise-linear
CDF; atoms appear as jumps (duplicated knot positions).  For two measures
with CDFs F and G and a cost h(|x - y|) with h convex, the optimal total
cost has the closed form

    T(mu1, mu2) = integral_0^1 h(|Finv(t) - Ginv(t)|) dt,

with Finv the right-continuous generalized inverse Finv(t) = inf{x : F(x) > t}.
For the linear cost this equals the L1 distance of the CDFs,

    W1 = integral |Finv - Ginv| dt = integral |F - G| dx,

and both formulas are evaluated and cross-checked.  A brute-force
permutation oracle over small atomic instances and a 2-D product-grid
oracle for the warped-product reduction are included as independent
validators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import FormulaMismatch, NotUniform, TooLarge

_ORACLE_MAX_ATOMS = 8

# Nodes/weights reused for integrating h(|linear|) exactly on subsegments.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

@dataclass
class Measure1D:
    """Probability measure on an interval of the line, stored as a CDF.

    ``knots`` is non-decreasing; ``F`` is the CDF value at each knot, linear
    in between.  A jump (atom) is written as two entries with the same knot
    position.  F is 0 before the first knot and 1 from the last knot on.
    """

    knots: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if self.knots.ndim != 1 or self.knots.shape != self.F.shape:
            raise ValueError("knots and F must be 1-D arrays of equal length")
        if np.any(np.diff(self.knots) < 0):
            raise ValueError("knots must be non-decreasing")
        if np.any(np.diff(self.F) < -1e-12):
            raise ValueError("F must be non-decreasing")
        if abs(self.F[-1] - 1.0) > 1e-9:
            raise ValueError(f"F must reach 1 at the last knot, got {self.F[-1]}")
        if self.F[0] < -1e-12:
            raise ValueError("F must be non-negative")
        self.F = np.clip(self.F, 0.0, 1.0)
        self.F[-1] = 1.0

    @classmethod
    def from_atoms(cls, positions, weights=None) -> "Measure1D":
        """Purely atomic measure; uniform weights when none are given."""
        positions = np.asarray(positions, dtype=float)
        k = len(positions)
        if weights is None:
            weights = np.full(k, 1.0 / k)
        weights = np.asarray(weights, dtype=float)
        order = np.argsort(positions, kind="stable")
        positions, weights = positions[order], weights[order]
        weights = weights / weights.sum()
        levels = np.cumsum(weights)
        knots = np.repeat(positions, 2)
        F = np.empty(2 * k)
        F[0::2] = np.concatenate(([0.0], levels[:-1]))
        F[1::2] = levels
        F[-1] = 1.0
        return cls(knots, F)

    @classmethod
    def from_cdf_samples(cls, xs, Fs) -> "Measure1D":
        """Continuous measure from sampled CDF values (renormalized to end at 1)."""
        Fs = np.asarray(Fs, dtype=float)
        Fs = np.maximum.accumulate(Fs)
        if Fs[-1] <= 0:
            raise ValueError("CDF samples must reach a positive value")
        return cls(np.asarray(xs, dtype=float), Fs / Fs[-1])

    def shift(self, s: float) -> "Measure1D":
        return Measure1D(self.knots + s, self.F.copy())

    def cdf(self, xs, side: str = "right") -> np.ndarray:
        """Evaluate the CDF at xs; ``side`` picks the limit at jump points.

        With side="right" the searchsorted index lands past any duplicated
        knots, so an exact hit returns the upper jump value; side="left"
        lands on the first duplicate and returns the lower value.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        idx = np.searchsorted(self.knots, xs, side=side)
        out = np.empty_like(xs)
        below = idx == 0
        above = idx == len(self.knots)
        out[below] = 0.0
        out[above] = 1.0
        mid = ~(below | above)
        i = idx[mid]
        x0, x1 = self.knots[i - 1], self.knots[i]
        f0, f1 = self.F[i - 1], self.F[i]
        denom = np.where(x1 > x0, x1 - x0, 1.0)
        w = np.clip((xs[mid] - x0) / denom, 0.0, 1.0)
        out[mid] = f0 + w * (f1 - f0)
        return out


def save_measure(path, m: Measure1D) -> None:
    """Write a measure as columnar text (knot, F)."""
    with open(path, "w") as fh:
        fh.write("# measure-1d knots={}\n".format(len(m.knots)))
        fh.write("knot[position]\tF[1]\n")
        for k, f in zip(m.knots, m.F):
            fh.write(f"{k:.17g}\t{f:.17g}\n")


def load_measure(path) -> Measure1D:
    data = np.loadtxt(path, skiprows=2)
    data = np.atleast_2d(data)
    return Measure1D(data[:, 0], data[:, 1])


def quantile(m: Measure1D, t) -> np.ndarray | float:
    """Right-continuous generalized inverse of the CDF, inf{x : F(x) > t}.

    On flat CDF segments this returns the left endpoint of the first
    exceedance (the right end of the plateau).  Levels live in [0, 1); the
    boundary value 1 is tolerated (mapping to the last knot) so that
    integration right up to the endpoint cannot fall over in floating
    point.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any((t_arr < 0) | (t_arr > 1)):
        raise ValueError("quantile levels must lie in [0, 1)")
    t_arr = np.minimum(t_arr, np.nextafter(1.0, 0.0))
    j = np.searchsorted(m.F, t_arr, side="right")
    j = np.clip(j, 0, len(m.F) - 1)
    out = np.empty_like(t_arr)
    at_start = j == 0
    out[at_start] = m.knots[0]
    seg = ~at_start
    i = j[seg]
    f0, f1 = m.F[i - 1], m.F[i]
    x0, x1 = m.knots[i - 1], m.knots[i]
    df = f1 - f0
    w = np.where(df > 0, (t_arr[seg] - f0) / np.where(df > 0, df, 1.0), 1.0)
    out[seg] = x0 + w * (x1 - x0)
    return out if np.ndim(t) else float(out[0])


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------

@dataclass
class ConvexCost:
    """Non-negative, non-decreasing convex function of distance, h(0) = 0."""

    kind: str                      # "linear" | "power" | "table"
    p: float = 1.0
    table: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def linear(cls) -> "ConvexCost":
        return cls("linear")

    @classmethod
    def power(cls, p: float) -> "ConvexCost":
        if p < 1:
            raise ValueError("power cost requires p >= 1")
        return cls("power", p=p)

    @classmethod
    def tabulated(cls, ds, hs) -> "ConvexCost":
        """Piecewise-linear convex cost through samples (d_k, h_k).

        Convexity and monotonicity are validated on the sample lattice;
        linear continuation with the final slope beyond the last sample.
        """
        ds = np.asarray(ds, dtype=float)
        hs = np.asarray(hs, dtype=float)
        if ds[0] != 0.0 or hs[0] != 0.0:
            raise ValueError("tabulated cost must start at h(0) = 0")
        if np.any(np.diff(ds) <= 0):
            raise ValueError("tabulated distances must be strictly increasing")
        slopes = np.diff(hs) / np.diff(ds)
        if np.any(slopes < -1e-12):
            raise ValueError("tabulated cost must be non-decreasing")
        if np.any(np.diff(slopes) < -1e-12):
            raise ValueError("tabulated cost failed midpoint convexity")
        return cls("table", table=np.vstack([ds, hs]))

    @classmethod
    def parse(cls, spec: str) -> "ConvexCost":
        """Cost spec grammar: ``linear``, ``power:<p>``, ``table:<path>``."""
        spec = spec.strip()
        if spec == "linear":
            return cls.linear()
        if spec.startswith("power:"):
            return cls.power(float(spec.split(":", 1)[1]))
        if spec.startswith("table:"):
            data = np.loadtxt(spec.split(":", 1)[1])
            return cls.tabulated(data[:, 0], data[:, 1])
        raise ValueError(f"unrecognized cost spec {spec!r}")

    def spec(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "power":
            return f"power:{self.p:g}"
        return "table:<inline>"

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        if self.kind == "linear":
            return d
        if self.kind == "power":
            return d**self.p
        ds, hs = self.table
        out = np.interp(d, ds, hs)
        over = d > ds[-1]
        if np.any(over):
            slope = (hs[-1] - hs[-2]) / (ds[-1] - ds[-2])
            out = np.where(over, hs[-1] + slope * (d - ds[-1]), out)
        return out


# ---------------------------------------------------------------------------
# Total cost via quantile functions
# ---------------------------------------------------------------------------

def _t_levels(m1: Measure1D, m2: Measure1D) -> np.ndarray:
    levels = np.concatenate(([0.0, 1.0], m1.F, m2.F))
    levels = np.unique(np.clip(levels, 0.0, 1.0))
    return levels


def total_cost_1d(m1: Measure1D, m2: Measure1D, h: ConvexCost) -> float:
    """Optimal total transport cost, integral of h(|Finv - Ginv|) over [0, 1].

    The level grid is subdivided at every CDF value of either measure, so
    both quantile functions are linear on each piece; additional splits at
    sign changes of their difference make the integrand h of a one-signed
    linear function, which Gauss-Legendre then integrates to near machine
    precision (exactly, for atomic inputs and integer powers).
    """
    levels = _t_levels(m1, m2)
    lo, hi = levels[:-1], levels[1:]
    width = hi - lo
    keep = width > 0
    lo, hi, width = lo[keep], hi[keep], width[keep]

    # quantiles are linear on each (lo, hi): sample endpoints from inside
    eps = 1e-12
    q1_lo = quantile(m1, np.minimum(lo + eps * width, hi))
    q1_hi = quantile(m1, np.maximum(hi - eps * width, lo))
    q2_lo = quantile(m2, np.minimum(lo + eps * width, hi))
    q2_hi = quantile(m2, np.maximum(hi - eps * width, lo))
    d_lo = q1_lo - q2_lo
    d_hi = q1_hi - q2_hi

    crossing = (d_lo * d_hi) < 0
    if np.any(crossing):
        # linear difference crosses zero inside these: split at the root
        a, b = lo[crossing], hi[crossing]
        da, db = d_lo[crossing], d_hi[crossing]
        t_star = a + (b - a) * da / (da - db)
        lo = np.concatenate([lo[~crossing], a, t_star])
        hi = np.concatenate([hi[~crossing], t_star, b])
        d_lo = np.concatenate([d_lo[~crossing], da, np.zeros_like(da)])
        d_hi = np.concatenate([d_hi[~crossing], np.zeros_like(db), db])
    return _segment_cost(lo, hi, d_lo, d_hi, h)


def _segment_cost(a, b, d_a, d_b, h: ConvexCost) -> float:
    """Sum of integrals of h(|linear displacement|) over segments [a_k, b_k]."""
    half = 0.5 * (b - a)
    mids = 0.5 * (a + b)[:, None] + half[:, None] * _GL_NODES[None, :]
    frac = np.where(b > a, (b - a), 1.0)
    disp = d_a[:, None] + (mids - a[:, None]) * ((d_b - d_a) / frac)[:, None]
    return float(np.dot(h(np.abs(disp)) @ _GL_WEIGHTS, half))


def w1(m1: Measure1D, m2: Measure1D, tol: float = 1e-8) -> float:
    """L1 transport distance, evaluated by both closed formulas.

    Computes the quantile-difference integral and the CDF-difference
    integral; returns the CDF value and raises FormulaMismatch if the two
    differ by more than ``tol`` (which would indicate a CDF representation
    bug rather than legitimate numerical noise).
    """
    by_quantile = total_cost_1d(m1, m2, ConvexCost.linear())
    by_cdf = _cdf_l1_distance(m1, m2)
    if abs(by_quantile - by_cdf) > tol:
        raise FormulaMismatch(
            f"quantile formula {by_quantile!r} vs CDF formula {by_cdf!r}"
        )
    return by_cdf


def _cdf_l1_distance(m1: Measure1D, m2: Measure1D) -> float:
    """Integral of |F - G| over the line (jumps carry no width)."""
    xs = np.unique(np.concatenate([m1.knots, m2.knots]))
    total = 0.0
    for a, b in zip(xs[:-1], xs[1:]):
        if b <= a:
            continue
        # F and G are linear on (a, b); evaluate one-sided at the ends
        fa = m1.cdf(a, side="right")[0] - m2.cdf(a, side="right")[0]
        fb = m1.cdf(b, side="left")[0] - m2.cdf(b, side="left")[0]
        if fa * fb < 0:
            x_star = a + (b - a) * fa / (fa - fb)
            total += 0.5 * abs(fa) * (x_star - a) + 0.5 * abs(fb) * (b - x_star)
        else:
            total += 0.5 * (abs(fa) + abs(fb)) * (b - a)
    return float(total)


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------

def discrete_oracle(atoms1, atoms2, h: ConvexCost) -> tuple[float, float]:
    """Exact minimum over all permutation matchings of equal-count atom sets.

    Returns ``(exhaustive_minimum, sorted_matching_cost)``; both average the
    pairwise cost over the uniform weights 1/k.  Raises TooLarge beyond the
    exhaustive bound of 8 atoms per side.
    """
    a = np.asarray(atoms1, dtype=float)
    b = np.asarray(atoms2, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("atom lists must be 1-D and of equal length")
    k = len(a)
    if k > _ORACLE_MAX_ATOMS:
        raise TooLarge(f"{k} atoms exceeds the exhaustive bound {_ORACLE_MAX_ATOMS}")
    cost = h(np.abs(a[:, None] - b[None, :]))
    perms = np.array(list(itertools.permutations(range(k))))
    totals = cost[np.arange(k)[None, :], perms].sum(axis=1)
    best = float(totals.min() / k)
    sorted_cost = float(h(np.abs(np.sort(a) - np.sort(b))).sum() / k)
    return best, sorted_cost


# ---------------------------------------------------------------------------
# Warped-product reduction
# ---------------------------------------------------------------------------

@dataclass
class WarpedUniformMeasure:
    """Spatially uniform measure on a warped product over base [0, r_max].

    The measure is a base marginal times the normalized fiber measure.
    ``fiber_weights``, when given, are checked for constancy; any genuine
    fiber dependence disqualifies the measure from the 1-D reduction.
    """

    base: Measure1D
    fiber_weights: np.ndarray | None = None

    def require_uniform(self) -> None:
        if self.fiber_weights is None:
            return
        w = np.asarray(self.fiber_weights, dtype=float)
        if w.size and (w.max() - w.min()) > 1e-12 * max(1.0, abs(w.max())):
            raise NotUniform("fiber weights are not constant")


def warped_reduction(
    mu1: WarpedUniformMeasure, mu2: WarpedUniformMeasure, h: ConvexCost
) -> float:
    """Total cost between spatially uniform measures on a warped product.

    For such measures the optimal cost equals the 1-D cost between the
    base pushforwards, so the computation collapses to ``total_cost_1d``.
    """
    mu1.require_uniform()
    mu2.require_uniform()
    return total_cost_1d(mu1.base, mu2.base, h)


def product_grid_cost(
    r_nodes,
    warp,
    base_mass1,
    base_mass2,
    h: ConvexCost,
    n_fiber: int = 8,
    max_atoms: int = 64,
) -> float:
    """2-D discrete transport oracle on a (base x fiber-circle) product grid.

    Independent validator for :func:`warped_reduction`: distances come from
    Dijkstra on the product graph with local edge lengths
    sqrt(dr^2 + warp^2 dtheta^2), masses are spread uniformly over the fiber,
    split to equal atoms on a common denominator (at most ``max_atoms`` per
    side), and the assignment problem is solved exactly.
    """
    r_nodes = np.asarray(r_nodes, dtype=float)
    warp = np.asarray(warp, dtype=float)
    base_mass1 = np.asarray(base_mass1, dtype=float)
    base_mass2 = np.asarray(base_mass2, dtype=float)
    nb = len(r_nodes)
    thetas = np.linspace(0.0, 2.0 * np.pi, n_fiber, endpoint=False)
    dtheta = 2.0 * np.pi / n_fiber

    def node_id(i, j):
        return i * n_fiber + j

    rows, cols, vals = [], [], []
    for i in range(nb):
        for j in range(n_fiber):
            a = node_id(i, j)
            if i + 1 < nb:
                dr = r_nodes[i + 1] - r_nodes[i]
                rows.append(a)
                cols.append(node_id(i + 1, j))
                vals.append(dr)
                # diagonal edges reduce graph-metric anisotropy
                wmid = 0.5 * (warp[i] + warp[i + 1])
                diag = np.hypot(dr, wmid * dtheta)
                rows.append(a)
                cols.append(node_id(i + 1, (j + 1) % n_fiber))
                vals.append(diag)
                rows.append(a)
                cols.append(node_id(i + 1, (j - 1) % n_fiber))
                vals.append(diag)
            rows.append(a)
            cols.append(node_id(i, (j + 1) % n_fiber))
            vals.append(warp[i] * dtheta)
    graph = coo_matrix(
        (vals, (rows, cols)), shape=(nb * n_fiber, nb * n_fiber)
    ).tocsr()
    dist = dijkstra(graph, directed=False)

    def equalize(base_mass, k_atoms):
        """Split a base marginal into k_atoms equal atoms spread over the fiber."""
        mass = base_mass / base_mass.sum()
        sites, counts = [], np.rint(mass * k_atoms).astype(int)
        # fix rounding drift by adjusting the heaviest cell
        counts[np.argmax(counts)] += k_atoms - counts.sum()
        for i, c in enumerate(counts):
            for q in range(c):
                sites.append(node_id(i, q % n_fiber))
        return np.array(sites)

    k_atoms = min(max_atoms, 64)
    s1 = equalize(base_mass1, k_atoms)
    s2 = equalize(base_mass2, k_atoms)
    cost = h(dist[np.ix_(s1, s2)])
    rows_idx, cols_idx = linear_sum_assignment(cost)
    return float(cost[rows_idx, cols_idx].sum() / k_atoms)
