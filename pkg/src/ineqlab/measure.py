"""Discretized 1D probability measures dmu = e^{-V} dx on a sorted grid.

Weights are composite-trapezoid masses of e^{-V}, normalized to 1; the same
grid carries the norms, the criteria and the semigroup so that all modules
agree on one discrete measure.  The half-line Hardy weights int e^{V} are
accumulated in log space (e^{V} overflows for V = x^2 beyond |x| ~ 26).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-12


class MeasureError(ValueError):
    """Invalid grid, potential, or perturbation."""


def _logaddexp_accumulate(a):
    """Running log-sum-exp of a 1D array of log-values."""
    out = np.empty_like(a)
    run = -math.inf
    for i, v in enumerate(a):
        run = np.logaddexp(run, v)
        out[i] = run
    return out


def _log_int_exp_linear(v0, v1, h):
    """log of int_0^h exp(V) with V linear from v0 to v1 over the segment.

    Exact for piecewise-linear potentials; reduces to the trapezoid value
    when v0 ~ v1.  All inputs may be arrays.
    """
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    big = np.maximum(v0, v1)
    small = np.minimum(v0, v1)
    adv = big - small
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = big + np.log1p(-np.exp(small - big)) - np.log(adv) + np.log(h)
        flat = np.logaddexp(v0, v1) + np.log(h / 2.0)
        out = np.where(adv > 1e-8, exact, flat)
    return out


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Probability measure on a strictly increasing grid.

    weights are nodal trapezoid masses (sum 1); seg_mass are per-segment
    masses (sum 1).  potential holds V exactly as supplied (the normalizer
    log Z is kept separate), so hardy_weight integrates e^{V} unnormalized.
    Immutable after construction; safe to share across workers.
    """

    nodes: np.ndarray
    weights: np.ndarray
    potential: np.ndarray
    potential_slope: np.ndarray
    log_z: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or len(x) < 3:
            raise MeasureError("grid needs at least 3 nodes")
        if not np.all(np.diff(x) > 0):
            raise MeasureError("grid nodes must be strictly increasing")
        if np.any(~np.isfinite(self.potential)):
            raise MeasureError("NaN/inf in potential on the grid")
        w = np.asarray(self.weights, dtype=float)
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise MeasureError(f"weights sum to {w.sum()}, not 1")
        if np.any(w < 0):
            raise MeasureError("weights must be nonnegative")
        # sharply concentrated measures underflow far-tail weights to zero;
        # require the support to stay contiguous (no interior holes)
        pos = np.nonzero(w > 0)[0]
        if len(pos) < 3 or np.any(w[pos[0] : pos[-1] + 1] <= 0):
            raise MeasureError("interior weights must be positive on the support")
        for name in ("nodes", "weights", "potential", "potential_slope"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._finalize()

    def _finalize(self):
        x, v = self.nodes, self.potential
        h = np.diff(x)
        log_rho = -v - self.log_z
        # segment masses of the normalized density (exact trapezoid)
        seg = np.logaddexp(log_rho[:-1], log_rho[1:]) + np.log(h / 2.0)
        seg_mass = np.exp(seg)
        seg_mass = seg_mass / seg_mass.sum()
        seg_mass.setflags(write=False)
        object.__setattr__(self, "seg_mass", seg_mass)
        cdf = np.concatenate([[0.0], np.cumsum(seg_mass)])
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)  # mass of (-inf, x_i]
        # right-accumulated tails: accurate where 1 - cdf would cancel
        ccdf = np.concatenate([np.cumsum(seg_mass[::-1])[::-1], [0.0]])
        ccdf.setflags(write=False)
        object.__setattr__(self, "_ccdf", ccdf)  # mass of [x_i, +inf)
        med = int(np.argmax(cdf >= 0.5 - 1e-12))
        object.__setattr__(self, "_median_index", med)
        # log of int e^{V} over each segment, prefix-accumulated
        log_seg_ev = _log_int_exp_linear(v[:-1], v[1:], h)
        right = _logaddexp_accumulate(log_seg_ev[med:]) if med < len(h) else np.empty(0)
        left = _logaddexp_accumulate(log_seg_ev[:med][::-1]) if med > 0 else np.empty(0)
        right.setflags(write=False)
        left.setflags(write=False)
        object.__setattr__(self, "_log_hardy_right", right)
        object.__setattr__(self, "_log_hardy_left", left)

    def __len__(self):
        return len(self.nodes)

    @property
    def median_index(self):
        return self._median_index

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def from_potential(v, grid, v_prime=None, meta=None):
    """GridMeasure from a potential callable/array on grid = (a, b, n).

    The truncated tail mass outside [a, b] is estimated by one-sided
    exponential extrapolation and reported in meta["truncation_mass"].
    """
    a, b, n = grid
    if not (a < b and n >= 3):
        raise MeasureError(f"bad grid spec {grid}")
    x = _symmetric_linspace(a, b, int(n)) if callable(v) else np.linspace(a, b, int(n))
    vx = np.asarray(v(x) if callable(v) else v, dtype=float)
    if vx.shape != x.shape:
        raise MeasureError("potential array does not match the grid")
    if np.any(np.isnan(vx)):
        raise MeasureError("NaN in potential")
    if v_prime is None:
        with np.errstate(invalid="ignore"):
            vp = np.gradient(vx, x)
    else:
        vp = np.asarray(v_prime(x) if callable(v_prime) else v_prime, dtype=float)
    h = np.diff(x)
    log_seg = np.logaddexp(-vx[:-1], -vx[1:]) + np.log(h / 2.0)
    log_z = float(np.logaddexp.reduce(log_seg))
    if not math.isfinite(log_z):
        raise MeasureError("zero or non-finite total mass on the grid")
    w = np.zeros(len(x))
    seg = np.exp(log_seg - log_z)
    w[:-1] += seg / 2.0
    w[1:] += seg / 2.0
    w /= w.sum()
    trunc = _truncation_estimate(x, vx, vp, log_z)
    md = dict(meta or {})
    md.setdefault("truncation_mass", trunc)
    return GridMeasure(x, w, vx, vp, log_z, md)


def _symmetric_linspace(a, b, n):
    # mirror the positive half when the grid is symmetric: bitwise-even
    # weights for even potentials, deterministic medians
    if a == -b and n % 2 == 1:
        half = np.linspace(0.0, b, (n + 1) // 2)
        return np.concatenate([-half[:0:-1], half])
    return np.linspace(a, b, n)


def _truncation_estimate(x, vx, vp, log_z):
    est = 0.0
    for end, slope_sign in ((0, -1.0), (-1, 1.0)):
        slope = vp[end] * slope_sign
        if slope > 0:
            est += math.exp(-vx[end] - log_z) / slope
        else:
            est = math.inf
    return est


def mu_alpha(alpha, grid=None):
    """The measure e^{-|x|^alpha}dx (normalized), alpha in [1, 2].

    meta carries the companion Beckner exponent beta = 2(1 - 1/alpha).
    """
    if not (1.0 <= alpha <= 2.0):
        raise MeasureError(f"alpha must lie in [1, 2], got {alpha}")
    if grid is None:
        if alpha == 1.0:
            grid = (-40.0, 40.0, 20001)
        elif alpha == 2.0:
            grid = (-8.0, 8.0, 4001)
        else:
            half = float(math.ceil(37.0 ** (1.0 / alpha))) + 2.0
            grid = (-half, half, 8001)

    def v(x):
        return np.abs(x) ** alpha

    def vp(x):
        return alpha * np.sign(x) * np.abs(x) ** (alpha - 1.0)

    beta = 2.0 * (1.0 - 1.0 / alpha)
    return from_potential(v, grid, v_prime=vp, meta={"alpha": alpha, "beta": beta})


def median_point(mu):
    """Smallest node whose cumulative mass reaches 1/2 (deterministic)."""
    return float(mu.nodes[mu.median_index])


def head_mass(mu, x):
    """mu((-inf, x]) by exact partial-trapezoid interpolation."""
    return _cumulative(mu, x)


def tail_mass(mu, x):
    """mu([x, +inf)) on the grid hull, right-accumulated for accuracy."""
    nodes = mu.nodes
    x = float(x)
    if x <= nodes[0]:
        return 1.0
    if x >= nodes[-1]:
        return 0.0
    i = int(np.searchsorted(nodes, x, side="right")) - 1
    x0, x1 = nodes[i], nodes[i + 1]
    if x == x0:
        return float(mu._ccdf[i])
    t = (x - x0) / (x1 - x0)
    r0 = math.exp(-mu.potential[i] - mu.log_z)
    r1 = math.exp(-mu.potential[i + 1] - mu.log_z)
    rx = r0 + t * (r1 - r0)
    partial = 0.5 * (rx + r1) * (x1 - x)
    return float(mu._ccdf[i + 1] + partial)


def _cumulative(mu, x):
    nodes = mu.nodes
    x = float(x)
    if x <= nodes[0]:
        return 0.0
    if x >= nodes[-1]:
        return 1.0
    i = int(np.searchsorted(nodes, x, side="right")) - 1
    base = mu._cdf[i]
    x0, x1 = nodes[i], nodes[i + 1]
    if x == x0:
        return float(base)
    t = (x - x0) / (x1 - x0)
    r0 = math.exp(-mu.potential[i] - mu.log_z)
    r1 = math.exp(-mu.potential[i + 1] - mu.log_z)
    rx = r0 + t * (r1 - r0)
    partial = 0.5 * (r0 + rx) * (x - x0)
    return float(base + partial)


def log_hardy_weight(mu, x):
    """log of int_median^x e^{V(t)} dt for x > median (criteria workhorse)."""
    nodes, v = mu.nodes, mu.potential
    med = mu.median_index
    x = float(x)
    if x <= nodes[med]:
        raise MeasureError("log_hardy_weight needs x above the median node")
    i = int(np.searchsorted(nodes, x, side="right")) - 1
    i = min(i, len(nodes) - 2)
    acc = mu._log_hardy_right[i - med - 1] if i > med else -math.inf
    x0, x1 = nodes[i], nodes[i + 1]
    if x > x0:
        t = (x - x0) / (x1 - x0)
        vx = v[i] + t * (v[i + 1] - v[i])
        acc = np.logaddexp(acc, _log_int_exp_linear(v[i], vx, x - x0))
    return float(acc)


def log_hardy_weight_left(mu, x):
    """log of int_x^median e^{V(t)} dt for x < median."""
    nodes, v = mu.nodes, mu.potential
    med = mu.median_index
    x = float(x)
    if x >= nodes[med]:
        raise MeasureError("log_hardy_weight_left needs x below the median node")
    j = int(np.searchsorted(nodes, x, side="left"))
    acc = mu._log_hardy_left[med - j - 1] if j < med else -math.inf
    x0 = nodes[j]
    if x < x0 and j > 0:
        t = (x0 - x) / (x0 - nodes[j - 1])
        vx = v[j] + t * (v[j - 1] - v[j])
        acc = np.logaddexp(acc, _log_int_exp_linear(v[j], vx, x0 - x))
    return float(acc)


def hardy_weight(mu, x):
    """int_median^x e^{V(t)} dt, signed (negative of the left integral
    for x below the median); overflow raises, naming the location."""
    med_x = mu.nodes[mu.median_index]
    if x == med_x:
        return 0.0
    log_val = log_hardy_weight(mu, x) if x > med_x else log_hardy_weight_left(mu, x)
    if log_val > 700.0:
        raise MeasureError(f"hardy_weight overflows near x = {x:.6g} (log value {log_val:.1f})")
    val = math.exp(log_val)
    return val if x > med_x else -val


@dataclass(frozen=True)
class Perturbation:
    """Bounded log-density perturbation; delta_u = sup log rho - inf log rho."""

    log_density: np.ndarray
    delta_u: float

    def __post_init__(self):
        if not (math.isfinite(self.delta_u) and self.delta_u >= 0):
            raise MeasureError(f"delta_u must be finite and nonnegative, got {self.delta_u}")


def perturb(mu, log_density):
    """Reweight mu by rho = e^{log_density} and renormalize.

    Returns (perturbed measure, Perturbation carrying delta_u).
    """
    lr = np.asarray(
        log_density(mu.nodes) if callable(log_density) else log_density, dtype=float
    )
    if lr.shape != mu.nodes.shape or np.any(~np.isfinite(lr)):
        raise MeasureError("log_density must be finite on the whole grid")
    delta_u = float(lr.max() - lr.min())
    new_v = mu.potential - lr
    new_mu = from_arrays(mu.nodes, new_v, meta=dict(mu.meta))
    return new_mu, Perturbation(lr, delta_u)


def from_arrays(nodes, vx, vp=None, meta=None):
    """GridMeasure directly from node/potential arrays (no grid rebuild)."""
    nodes = np.asarray(nodes, dtype=float)
    vx = np.asarray(vx, dtype=float)
    if np.any(np.isnan(vx)):
        raise MeasureError("NaN in potential")
    if vp is None:
        vp = np.gradient(vx, nodes)
    h = np.diff(nodes)
    log_seg = np.logaddexp(-vx[:-1], -vx[1:]) + np.log(h / 2.0)
    log_z = float(np.logaddexp.reduce(log_seg))
    if not math.isfinite(log_z):
        raise MeasureError("zero or non-finite total mass on the grid")
    w = np.zeros(len(nodes))
    seg = np.exp(log_seg - log_z)
    w[:-1] += seg / 2.0
    w[1:] += seg / 2.0
    w /= w.sum()
    return GridMeasure(nodes, w, vx, np.asarray(vp, dtype=float), log_z, dict(meta or {}))


def to_csv(mu, path):
    """Serialize as rows (x, weight, V, V_prime)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "weight", "V", "V_prime"])
        for i in range(len(mu)):
            writer.writerow(
                [
                    f"{mu.nodes[i]:.17g}",
                    f"{mu.weights[i]:.17g}",
                    f"{mu.potential[i]:.17g}",
                    f"{mu.potential_slope[i]:.17g}",
                ]
            )


def from_csv(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    x, w, v, vp = rows.T
    log_z = float(np.log(np.trapezoid(np.exp(-v), x)))
    return GridMeasure(x, w / w.sum(), v, vp, log_z)
