"""Young and N-function algebra.

Evaluation, derivatives, monotone inverses and Legendre conjugates for the
parametric families used throughout the package:

    Power(p)          phi(x) = |x|^p,                      p >= 1
    LogPower(b, g)    phi(x) = |x| * log(g + |x|)**b,      b in [0,1], g >= 1
    NashPsi(d)        psi(x) = x^2 / log(1 + |x|)**d,      d in (0,1)
    ExpLogPsi(d)      psi(x) = x^2 / (exp(log(1+|x|)**d) - 1)
    Squared(base)     phi2(x) = base(x^2)
    TableBacked       user-supplied monotone table, log-log interpolated

Every family accepts an optional ``scale`` c realizing phi(. / c).  All
evaluation methods are numpy-vectorized and even in x; values above the
saturation threshold come back as ``inf`` (the overflow flag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

SATURATION = 1e300

# Numeric inverse tolerance: 1e-12 relative, 200-iteration cap.  Criterion
# constants are quotients of inverses and need headroom below test tolerances.
INVERSE_RTOL = 1e-12
INVERSE_MAXITER = 200

CONJUGATE_TABLE_SIZE = 1024
VALIDATION_GRID_SIZE = 513


class YoungFunctionError(ValueError):
    """A family parameter or structural Young-function check failed."""


def _saturate(v):
    return np.where(v > SATURATION, np.inf, v)


class YoungFunction:
    """Base for even convex functions with phi(0) = 0.

    Subclasses implement ``_val``, ``_d1``, ``_d2`` on the rescaled
    nonnegative argument u = |x| / scale.  Instances are immutable and safe
    to share across workers.
    """

    scale: float = 1.0

    # -- family hooks -------------------------------------------------
    def _val(self, u):
        raise NotImplementedError

    def _d1(self, u):
        raise NotImplementedError

    def _d2(self, u):
        raise NotImplementedError

    def _log_val(self, t):
        """log phi(e^t) for large t, where e^t itself may overflow."""
        raise NotImplementedError

    # -- public surface ------------------------------------------------
    def value(self, x):
        u = np.abs(np.asarray(x, dtype=float)) / self.scale
        with np.errstate(over="ignore"):
            out = _saturate(self._val(u))
        return float(out) if out.ndim == 0 else out

    __call__ = value

    def deriv(self, x):
        """phi'(x), odd extension; at 0 the right derivative phi'(0+)."""
        xa = np.asarray(x, dtype=float)
        u = np.abs(xa) / self.scale
        with np.errstate(over="ignore"):
            out = self._d1(u) / self.scale * np.where(xa < 0, -1.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def deriv2(self, x):
        u = np.abs(np.asarray(x, dtype=float)) / self.scale
        with np.errstate(over="ignore"):
            out = self._d2(u) / self.scale**2
        return float(out) if out.ndim == 0 else out

    @property
    def slope_sup(self):
        """sup of phi(x)/x (the conjugate is +inf beyond this slope)."""
        return math.inf

    @property
    def differentiable(self):
        return True

    def is_n_function(self):
        """phi vanishes only at 0, phi(x)/x -> 0 at 0 and -> inf at inf."""
        return (
            self.deriv(0.0) == 0.0
            and self.slope_sup == math.inf
            and self.value(1e-6) > 0.0
        )


@dataclass(frozen=True)
class Power(YoungFunction):
    p: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.p >= 1.0 and math.isfinite(self.p)):
            raise YoungFunctionError(f"Power exponent must be >= 1, got {self.p}")
        if not (self.scale > 0.0):
            raise YoungFunctionError("scale must be positive")

    def _val(self, u):
        return u**self.p

    def _d1(self, u):
        if self.p == 1.0:
            return np.ones_like(u)
        return self.p * u ** (self.p - 1.0)

    def _d2(self, u):
        if self.p == 1.0:
            return np.zeros_like(u)
        if self.p == 2.0:
            return np.full_like(u, 2.0)
        with np.errstate(divide="ignore"):
            return self.p * (self.p - 1.0) * u ** (self.p - 2.0)

    def _log_val(self, t):
        return self.p * (t - math.log(self.scale))

    @property
    def slope_sup(self):
        return 1.0 / self.scale if self.p == 1.0 else math.inf


@dataclass(frozen=True)
class LogPower(YoungFunction):
    """phi(x) = |x| * log(gamma + |x|)**beta, interpolating |x| and |x|log(1+|x|)."""

    beta: float
    gamma: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise YoungFunctionError(f"beta must lie in [0, 1], got {self.beta}")
        if not (self.gamma >= 1.0):
            raise YoungFunctionError(f"gamma must be >= 1, got {self.gamma}")
        if not (self.scale > 0.0):
            raise YoungFunctionError("scale must be positive")

    def _logterm(self, u):
        # log(gamma + u) written to stay accurate for gamma = 1 and small u
        if self.gamma == 1.0:
            return np.log1p(u)
        return np.log(self.gamma + u)

    def _val(self, u):
        return u * self._logterm(u) ** self.beta

    def _d1(self, u):
        b, g = self.beta, self.gamma
        if b == 0.0:
            return np.ones_like(u)
        L = self._logterm(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = L**b + b * u * L ** (b - 1.0) / (g + u)
        at0 = math.log(g) ** b if g > 1.0 else 0.0
        return np.where(u == 0.0, at0, out)

    def _d2(self, u):
        b, g = self.beta, self.gamma
        if b == 0.0:
            return np.zeros_like(u)
        L = self._logterm(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                2.0 * b * L ** (b - 1.0) / (g + u)
                + b * u * ((b - 1.0) * L ** (b - 2.0) - L ** (b - 1.0)) / (g + u) ** 2
            )
        if g == 1.0:
            # second derivative blows up at 0 for beta < 1 (C^1 family only)
            at0 = math.inf if b < 1.0 else 2.0
        else:
            lg = math.log(g)
            at0 = b * lg ** (b - 2.0) * (2.0 * lg + (b - 1.0) - lg) / g**2 if lg > 0 else math.inf
        return np.where(u == 0.0, at0, out)

    def _log_val(self, t):
        # log(gamma + e^t) = t + log1p(gamma e^-t) for large t
        lg = t + np.log1p(self.gamma * np.exp(-np.minimum(t, 700.0)))
        return t - math.log(self.scale) + self.beta * np.log(lg)

    @property
    def slope_sup(self):
        return 1.0 / self.scale if self.beta == 0.0 else math.inf


class _RatioPsi(YoungFunction):
    """psi-quotient N-functions Psi(x) = x^2 / psi(|x|)."""

    def _psi(self, u):
        raise NotImplementedError

    def _psi_d1(self, u):
        raise NotImplementedError

    def _psi_d2(self, u):
        raise NotImplementedError

    def _val(self, u):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = u * u / self._psi(u)
        out = np.where(u >= 1e150, np.inf, out)  # u^2 overflow regime
        return np.where(u == 0.0, 0.0, out)

    def _d1(self, u):
        with np.errstate(divide="ignore", invalid="ignore"):
            p = self._psi(u)
            out = 2.0 * u / p - u * u * self._psi_d1(u) / p**2
        return np.where(u == 0.0, 0.0, out)

    def _d2(self, u):
        with np.errstate(divide="ignore", invalid="ignore"):
            p = self._psi(u)
            p1 = self._psi_d1(u)
            p2 = self._psi_d2(u)
            out = (
                2.0 / p
                - 4.0 * u * p1 / p**2
                - u * u * p2 / p**2
                + 2.0 * u * u * p1**2 / p**3
            )
        return np.where(u == 0.0, math.inf, out)


@dataclass(frozen=True)
class NashPsi(_RatioPsi):
    """Psi(x) = x^2 / log(1 + |x|)**delta."""

    delta: float
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise YoungFunctionError(f"delta must lie in (0, 1), got {self.delta}")

    def _psi(self, u):
        return np.log1p(u) ** self.delta

    def _psi_d1(self, u):
        return self.delta * np.log1p(u) ** (self.delta - 1.0) / (1.0 + u)

    def _psi_d2(self, u):
        d = self.delta
        L = np.log1p(u)
        return d * L ** (d - 2.0) * ((d - 1.0) - L) / (1.0 + u) ** 2

    def _log_val(self, t):
        # log(1 + e^t) ~ t;  psi(e^t) ~ t^delta
        return 2.0 * (t - math.log(self.scale)) - self.delta * np.log(t)


@dataclass(frozen=True)
class ExpLogPsi(_RatioPsi):
    """Psi(x) = x^2 / (exp(log(1 + |x|)**delta) - 1)."""

    delta: float
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise YoungFunctionError(f"delta must lie in (0, 1), got {self.delta}")

    def _psi(self, u):
        return np.expm1(np.log1p(u) ** self.delta)

    def _psi_d1(self, u):
        d = self.delta
        w = np.log1p(u) ** d
        return np.exp(w) * d * np.log1p(u) ** (d - 1.0) / (1.0 + u)

    def _psi_d2(self, u):
        d = self.delta
        L = np.log1p(u)
        w = L**d
        w1 = d * L ** (d - 1.0) / (1.0 + u)
        w2 = d * L ** (d - 2.0) * ((d - 1.0) - L) / (1.0 + u) ** 2
        return np.exp(w) * (w1 * w1 + w2)

    def _log_val(self, t):
        return 2.0 * (t - math.log(self.scale)) - t**self.delta


@dataclass(frozen=True)
class Squared(YoungFunction):
    """phi2(x) = base(x^2); phi2''(0) = 2 * base'(0)."""

    base: YoungFunction
    scale: float = 1.0

    def _val(self, u):
        return self.base.value(u * u)

    def _d1(self, u):
        return 2.0 * u * self.base.deriv(u * u)

    def _d2(self, u):
        return 2.0 * self.base.deriv(u * u) + 4.0 * u * u * self.base.deriv2(u * u)

    def _log_val(self, t):
        return self.base._log_val(2.0 * (t - math.log(self.scale)))


@dataclass(frozen=True, eq=False)
class TableBacked(YoungFunction):
    """Young function from a monotone (x, phi(x)) table, x > 0 increasing.

    Values interpolate log phi against log x with end-slope extrapolation;
    derivatives use central differences with step 1e-6 * max(1, |x|).
    """

    xs: np.ndarray
    ys: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 3:
            raise YoungFunctionError("table needs matching 1D arrays, length >= 3")
        if not (np.all(np.diff(xs) > 0) and np.all(xs > 0)):
            raise YoungFunctionError("table abscissae must be positive increasing")
        if not (np.all(np.diff(ys) > 0) and np.all(ys > 0)):
            raise YoungFunctionError("table values must be positive increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "_lx", np.log(xs))
        object.__setattr__(self, "_ly", np.log(ys))

    @property
    def differentiable(self):
        return False

    def _val(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            lu = np.log(u)
        lo_slope = (self._ly[1] - self._ly[0]) / (self._lx[1] - self._lx[0])
        hi_slope = (self._ly[-1] - self._ly[-2]) / (self._lx[-1] - self._lx[-2])
        ly = np.interp(lu, self._lx, self._ly)
        ly = np.where(lu < self._lx[0], self._ly[0] + lo_slope * (lu - self._lx[0]), ly)
        ly = np.where(lu > self._lx[-1], self._ly[-1] + hi_slope * (lu - self._lx[-1]), ly)
        return np.where(u == 0.0, 0.0, np.exp(ly))

    def _d1(self, u):
        u = np.asarray(u, dtype=float)
        h = 1e-6 * np.maximum(1.0, u)
        return (self._val(u + h) - self._val(np.maximum(u - h, 0.0))) / (
            h + np.minimum(u, h)
        )

    def _d2(self, u):
        u = np.asarray(u, dtype=float)
        h = 1e-6 * np.maximum(1.0, u)
        return (self._val(u + h) - 2.0 * self._val(u) + self._val(np.abs(u - h))) / h**2


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def evaluate(phi, x):
    return phi.value(x)


def inverse(phi, y):
    """The unique x >= 0 with phi(x) = y, for scalar y >= 0."""
    if y < 0:
        raise YoungFunctionError(f"inverse needs y >= 0, got {y}")
    if y == 0:
        return 0.0
    return float(inverse_many(phi, np.array([y]))[0])


def inverse_many(phi, y):
    """Vectorized monotone inverse by bracketing + bisection.

    Handles y = 0 (-> 0) and y = inf (-> inf).  Raises if phi fails to be
    strictly increasing over the expanding bracket.
    """
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    out[np.isinf(y)] = np.inf
    live = np.isfinite(y) & (y > 0)
    if not np.any(live):
        return out
    yl = y[live]
    hi = np.ones_like(yl)
    for _ in range(1100):
        mask = phi.value(hi) < yl
        if not np.any(mask):
            break
        hi[mask] *= 2.0
    else:
        raise YoungFunctionError("inverse: no upper bracket found (phi not increasing to inf?)")
    lo = np.zeros_like(yl)
    small = phi.value(np.full_like(yl, np.finfo(float).tiny)) >= yl
    if np.any(small & (yl > 0)):
        raise YoungFunctionError("inverse: phi not strictly increasing near 0 at requested level")
    for _ in range(INVERSE_MAXITER):
        mid = 0.5 * (lo + hi)
        take_hi = phi.value(mid) >= yl
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
        if np.all((hi - lo) <= INVERSE_RTOL * np.maximum(hi, 1e-300)):
            break
    out[live] = 0.5 * (lo + hi)
    return out


def inverse_log(phi, log_y):
    """log of phi^{-1}(e^{log_y}) for arguments far beyond overflow."""
    log_y = np.asarray(log_y, dtype=float)
    scalar = log_y.ndim == 0
    ly = np.atleast_1d(log_y).astype(float)
    out = np.empty_like(ly)
    small = ly < 600.0
    out[small] = np.log(inverse_many(phi, np.exp(ly[small])))
    big = ~small
    if np.any(big):
        lo = np.zeros(big.sum())
        hi = np.full(big.sum(), 1.0)
        target = ly[big]
        for _ in range(1100):
            mask = phi._log_val(hi) < target
            if not np.any(mask):
                break
            hi[mask] *= 2.0
        for _ in range(INVERSE_MAXITER):
            mid = 0.5 * (lo + hi)
            take_hi = phi._log_val(mid) >= target
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
        out[big] = 0.5 * (lo + hi)
    return float(out[0]) if scalar else out.reshape(log_y.shape)


def derivative(phi, x):
    out = phi.deriv(x)
    if np.any(~np.isfinite(np.atleast_1d(out))) and np.all(np.isfinite(np.atleast_1d(x))):
        raise YoungFunctionError(f"phi not differentiable at x = {x}")
    return out


def second_derivative(phi, x):
    return phi.deriv2(x)


def delta2_constant(phi, lo=1e-6, hi=1e6, n=4097):
    """sup over sampled x of phi(2x)/phi(x) (the doubling constant)."""
    if not (0 < lo < hi):
        raise YoungFunctionError("delta2_constant needs 0 < lo < hi")
    x = np.logspace(math.log10(lo), math.log10(hi), n)
    num = phi.value(2.0 * x)
    den = phi.value(x)
    good = (den > 0) & np.isfinite(num)
    if not np.any(good):
        raise YoungFunctionError("delta2_constant: phi vanished on the whole sample")
    return float(np.max(num[good] / den[good]))


def k_zero(phi, shift=0.0):
    """Unique positive root of x * (phi'(x) + shift) = 1.

    ``shift`` is the lambda of the shifted family phi(x) + lambda|x|, whose
    derivative gains the constant lambda away from 0.
    """

    def g(x):
        return x * (phi.deriv(x) + shift) - 1.0

    hi = 1.0
    for _ in range(600):
        if g(hi) > 0:
            break
        hi *= 2.0
    lo = hi
    for _ in range(600):
        if g(lo) < 0:
            break
        lo /= 2.0
    if not (g(lo) < 0 < g(hi)):
        raise YoungFunctionError("k_zero: no sign change found for x phi'(x) = 1")
    return float(brentq(g, lo, hi, rtol=INVERSE_RTOL, maxiter=INVERSE_MAXITER))


def l1_domination_threshold(phi):
    """Smallest D with |x| <= phi(x) for all |x| >= D (tau = 1 embedding)."""
    if phi.value(1e-9) >= 1e-9 and phi.value(1.0) >= 1.0:
        return 0.0
    hi = 1.0
    for _ in range(600):
        if phi.value(hi) >= hi:
            break
        hi *= 2.0
    else:
        raise YoungFunctionError("phi never dominates |x|; not superlinear")
    lo = hi / 2.0
    if phi.value(lo) >= lo:
        lo = 1e-12
    return float(brentq(lambda x: phi.value(x) - x, lo, hi, rtol=1e-12, maxiter=200))


# ---------------------------------------------------------------------------
# Legendre conjugation
# ---------------------------------------------------------------------------


class ConjugateHandle(YoungFunction):
    """The complementary function phi*(y) = sup_x (x|y| - phi(x)).

    Scalar queries (``value_exact``/``conjugate_eval``) solve the concave
    maximization exactly.  Array evaluation interpolates a cached monotone
    table (1024 slopes, log-log PCHIP) built at construction; points outside
    the table range fall back to the exact path or the closed tail form.
    """

    scale = 1.0

    def __init__(self, base):
        self.base = base
        self._slope0 = float(base.deriv(0.0))
        self._slope_sup = base.slope_sup
        self._closed_power = isinstance(base, Power) and base.p > 1.0
        # asymptotically linear phi: the conjugate is the indicator of
        # [0, slope_sup] (0 inside, +inf beyond), no table needed
        self._indicator = math.isfinite(self._slope_sup) and self._slope0 >= self._slope_sup
        if self._closed_power or self._indicator:
            self._table_y = None
            self._table_v = None
        else:
            # dense over the working range, sparse out to the saturation
            # domain so array sweeps never fall back to per-point solves
            xs = np.concatenate(
                [
                    np.logspace(-9.0, 12.0, CONJUGATE_TABLE_SIZE - 256),
                    np.logspace(12.1, 290.0, 256),
                ]
            )
            if math.isfinite(self._slope_sup):
                xs = xs[base.deriv(xs) < self._slope_sup]
            ys = base.deriv(xs)
            vals = xs * ys - base.value(xs)
            keep = np.isfinite(ys) & np.isfinite(vals) & (vals > 0)
            ys, vals = ys[keep], vals[keep]
            keep2 = np.concatenate([[True], np.diff(ys) > 0])
            self._table_y = ys[keep2]
            self._table_v = vals[keep2]
            if len(self._table_y) < 8:
                raise YoungFunctionError("conjugate table degenerate; phi' not increasing")
            self._log_y = np.log(self._table_y)
            self._log_v = np.log(self._table_v)

    # -- exact scalar path ---------------------------------------------
    def _argmax(self, y):
        """x*(y) solving phi'(x) = y on the increasing branch.

        Slopes first attained beyond the saturation domain (x > 1e290)
        report x* = inf; the conjugate saturates there.
        """
        if y <= self._slope0:
            return 0.0
        if y >= self._slope_sup:
            return math.inf

        def g(x):
            return self.base.deriv(x) - y

        lo, hi = 0.0, 1.0
        while hi < 1e290 and g(hi) <= 0:
            lo = hi
            hi = min(hi * 16.0, 1e290)
        if g(hi) <= 0:
            return math.inf
        if g(lo) >= 0:
            lo = 0.0
        return float(brentq(g, lo, hi, rtol=1e-14, maxiter=300))

    def value_exact(self, y):
        y = abs(float(y))
        if self._indicator:
            return 0.0 if y <= self._slope_sup else math.inf
        if y <= self._slope0:
            return 0.0
        if y > self._slope_sup:
            return math.inf
        if self._closed_power:
            p, c = self.base.p, self.base.scale
            q = p / (p - 1.0)
            v = c * y
            return float((p - 1.0) * (v / p) ** q)
        if self.base.differentiable:
            xstar = self._argmax(y)
            if math.isinf(xstar):
                return math.inf
            return max(0.0, xstar * y - self.base.value(xstar))
        return self._golden(y)

    def _golden(self, y):
        # golden-section fallback for non-differentiable bases
        val = lambda x: x * y - self.base.value(x)
        hi = 1.0
        for _ in range(1100):
            if val(2.0 * hi) <= val(hi):
                break
            hi *= 2.0
        else:
            return math.inf
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = 0.0, 2.0 * hi
        for _ in range(200):
            c = b - invphi * (b - a)
            d = a + invphi * (b - a)
            if c * y - self.base.value(c) >= d * y - self.base.value(d):
                b = d
            else:
                a = c
            if b - a <= 1e-13 * max(1.0, b):
                break
        xm = 0.5 * (a + b)
        return max(0.0, xm * y - self.base.value(xm))

    # -- vectorized table path -------------------------------------------
    def value(self, y):
        ya = np.abs(np.asarray(y, dtype=float))
        if ya.ndim == 0:
            return self.value_exact(float(ya))
        if self._indicator:
            return np.where(ya <= self._slope_sup, 0.0, np.inf)
        if self._closed_power:
            p, c = self.base.p, self.base.scale
            q = p / (p - 1.0)
            return _saturate((p - 1.0) * (c * ya / p) ** q)
        out = np.zeros(ya.shape, dtype=float)
        out[ya >= self._slope_sup] = np.inf
        lo_y, hi_y = self._table_y[0], self._table_y[-1]
        inside = (ya > lo_y) & (ya < hi_y)
        if np.any(inside):
            out[inside] = np.exp(np.interp(np.log(ya[inside]), self._log_y, self._log_v))
        below = (ya > self._slope0) & (ya <= lo_y)
        out[below] = 0.0  # phi* below the first tabulated slope is < 1e-18*scale
        above = (ya >= hi_y) & (ya < self._slope_sup)
        for idx in np.nonzero(above.ravel())[0]:
            out.ravel()[idx] = self.value_exact(ya.ravel()[idx])
        return out

    __call__ = value

    def deriv(self, y):
        ya = np.asarray(y, dtype=float)
        if ya.ndim == 0:
            s = -1.0 if float(ya) < 0 else 1.0
            return s * self._argmax(abs(float(ya)))
        return np.array([self.deriv(float(v)) for v in ya.ravel()]).reshape(ya.shape)

    def deriv2(self, y):
        raise YoungFunctionError("second derivative of a conjugate handle is not provided")

    @property
    def slope_sup(self):
        # phi*(y)/y -> sup of the maximizer x; infinite for superlinear duals
        return math.inf

    @property
    def differentiable(self):
        return self.base.differentiable

    def is_n_function(self):
        return self._slope0 == 0.0 and self.base.is_n_function()


@lru_cache(maxsize=128)
def _conjugate_cached(phi):
    return ConjugateHandle(phi)


def conjugate(phi):
    """ConjugateHandle for phi (cached per hashable spec)."""
    try:
        return _conjugate_cached(phi)
    except TypeError:
        return ConjugateHandle(phi)


def conjugate_eval(phi, y):
    """phi*(|y|) by exact concave maximization."""
    return conjugate(phi).value_exact(y)


def conjugate_inverse(phi, y):
    """(phi*)^{-1}(y) for y >= 0 (right edge of the flat region at y = 0).

    Bisection on value_exact; robust to the conjugate saturating to inf.
    """
    if y < 0 or not math.isfinite(y):
        raise YoungFunctionError(f"conjugate_inverse needs finite y >= 0, got {y}")
    handle = conjugate(phi)
    if y == 0.0:
        return handle._slope0
    if math.isfinite(handle._slope_sup) and handle.value_exact(handle._slope_sup * (1 - 1e-12)) < y:
        # conjugate jumps to +inf at slope_sup (asymptotically linear phi)
        return handle._slope_sup
    hi = max(1.0, 2.0 * handle._slope0)
    for _ in range(1100):
        if handle.value_exact(hi) >= y:
            break
        hi *= 2.0
    else:
        raise YoungFunctionError("conjugate_inverse: no bracket")
    lo = handle._slope0
    for _ in range(INVERSE_MAXITER):
        mid = 0.5 * (lo + hi)
        if handle.value_exact(mid) >= y:
            hi = mid
        else:
            lo = mid
        if hi - lo <= INVERSE_RTOL * max(hi, 1e-300):
            break
    return float(hi)


def conjugate_inverse_many(phi, y):
    """Vectorized (phi*)^{-1} by bisection on the handle's fast array path.

    Accuracy follows the handle's interpolated table (~1e-6 relative);
    use the scalar conjugate_inverse where full precision matters.
    """
    handle = conjugate(phi)
    y = np.asarray(y, dtype=float)
    out = np.full(y.shape, handle._slope0, dtype=float)
    out[~np.isfinite(y)] = np.inf  # saturated modular values
    live = np.isfinite(y) & (y > 0)
    if not np.any(live):
        return out
    if handle._indicator:
        out[live] = handle._slope_sup
        return out
    yl = y[live]
    lo = np.full(yl.shape, handle._slope0)
    hi = np.maximum(1.0, 2.0 * handle._slope0) * np.ones_like(yl)
    for _ in range(600):
        vals = handle.value(hi)
        mask = vals <= yl
        if not np.any(mask):
            break
        hi[mask] *= 4.0
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        take_hi = handle.value(mid) >= yl
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
    out[live] = 0.5 * (lo + hi)
    return out


def log_derivative_at_exp(phi, w, h=1e-6):
    """log of phi'(e^w), evaluated entirely in log space via _log_val."""
    hh = h * max(1.0, abs(w))
    dlog = (phi._log_val(w + hh) - phi._log_val(w - hh)) / (2.0 * hh)
    if dlog <= 0:
        raise YoungFunctionError(f"phi not increasing at log-argument {w}")
    return math.log(dlog) + float(phi._log_val(w)) - w


def log_conjugate(phi, y):
    """log of phi*(y), usable when phi*(y) itself overflows.

    Solves phi'(e^w) = y in w-space, then
    log phi* = w* + log y + log(1 - phi(e^w*)/(e^w* y)).
    """
    if y <= phi.deriv(0.0):
        return -math.inf
    target = math.log(y)
    lo, hi = -30.0, 1.0
    for _ in range(600):
        if log_derivative_at_exp(phi, hi) >= target:
            break
        lo = hi
        hi *= 2.0
    else:
        raise YoungFunctionError("log_conjugate: slope bracket not found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if log_derivative_at_exp(phi, mid) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
    w = 0.5 * (lo + hi)
    ratio = float(phi._log_val(w)) - w - target  # log(phi/(x y)) at x = e^w
    ratio = min(ratio, -1e-300)
    if ratio > -1e-8:
        comp = math.log(-ratio)  # log(1 - e^r) ~ log(-r) for tiny r
    else:
        comp = math.log1p(-math.exp(ratio))
    return w + target + comp


def conjugate_inverse_log(phi, log_z):
    """(phi*)^{-1}(e^{log_z}) for arbitrarily large log_z (scalar).

    Single bisection in w = log x* using the parameterization
    log phi*(phi'(e^w)) = w + log phi'(e^w) + log(1 - phi/(x phi')).
    """
    if log_z < 690.0:
        return conjugate_inverse(phi, math.exp(log_z))

    def f_of_w(w):
        ld = log_derivative_at_exp(phi, w)
        ratio = min(float(phi._log_val(w)) - w - ld, -1e-300)
        comp = math.log(-ratio) if ratio > -1e-8 else math.log1p(-math.exp(ratio))
        return w + ld + comp, ld

    lo, hi = 1.0, 2.0
    while f_of_w(hi)[0] < log_z:
        if hi >= 1e15:
            # the maximizing argument sits beyond any representable scale
            return math.inf
        lo = hi
        hi = min(hi * 2.0, 1e15)
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        val, _ = f_of_w(mid)
        if val >= log_z:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    _, ld = f_of_w(hi)
    return math.exp(ld) if ld < 700.0 else math.inf


def biconjugate(phi, x):
    """phi**(x) computed through the numeric conjugate (involution check)."""
    handle = conjugate(phi)
    x = abs(float(x))
    if x == 0.0:
        return 0.0
    # sup_y (x y - phi*(y)); concave in y, maximizer near phi'(x)
    y_hi = 1.0
    val = lambda y: x * y - handle.value_exact(y)
    for _ in range(1100):
        if handle.value_exact(y_hi) == math.inf or val(2 * y_hi) <= val(y_hi):
            break
        y_hi *= 2.0
    a, b = 0.0, 2 * y_hi
    if math.isfinite(handle._slope_sup):
        b = min(b, handle._slope_sup)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(300):
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        if val(c) >= val(d):
            b = d
        else:
            a = c
        if b - a <= 1e-14 * max(1.0, b):
            break
    ym = 0.5 * (a + b)
    return max(0.0, val(ym))


# ---------------------------------------------------------------------------
# structural validation (sampling based; families are user-extensible)
# ---------------------------------------------------------------------------


def validate_young(phi, lo=1e-6, hi=1e6, n=VALIDATION_GRID_SIZE):
    """Sampled Young-function checks: even, phi(0)=0, convex, increasing to inf.

    Convexity failure at any sampled triple raises, naming the point.
    """
    if phi.value(0.0) != 0.0:
        raise YoungFunctionError(f"phi(0) = {phi.value(0.0)} != 0")
    x = np.logspace(math.log10(lo), math.log10(hi), n)
    v = phi.value(x)
    if np.any(~np.isfinite(v) & (x < 1e2)):
        raise YoungFunctionError("phi not finite on moderate arguments")
    for probe in (0.5, 3.0, 17.0):
        if not math.isclose(phi.value(probe), phi.value(-probe), rel_tol=1e-12):
            raise YoungFunctionError(f"phi not even at x = {probe}")
    if np.any(np.diff(v) < -1e-12 * np.maximum(v[:-1], 1.0)):
        i = int(np.argmax(np.diff(v) < 0))
        raise YoungFunctionError(f"phi decreasing near x = {x[i]:.6g}")
    fin = np.isfinite(v)
    xs, vs = x[fin], v[fin]
    slopes = np.diff(vs) / np.diff(xs)
    bad = np.nonzero(np.diff(slopes) < -1e-9 * np.maximum(1.0, np.abs(slopes[1:])))[0]
    if bad.size:
        raise YoungFunctionError(f"convexity fails at sampled triple around x = {xs[bad[0] + 1]:.6g}")
    if vs[-1] < max(1.0, 10.0 * phi.value(1.0)):
        raise YoungFunctionError("phi does not grow to infinity on the sampled range")
    return True


def validate_n_function(phi):
    validate_young(phi)
    if not phi.is_n_function():
        raise YoungFunctionError(f"{phi!r} is not an N-function")
    return True
