"""Nash-type inequality machinery: theta construction, deficits, the decay
envelope m(t), condition (D), and the capacity equivalence loop.

The envelope is defined by int_{m(t)}^infty dx/(x theta(x/2)) = 2t/C.  Note
the consistent ODE is m' = -(2/C) m theta(m/2): differentiating the integral
in t gives -m'/(m theta(m/2)) = 2/C, and the closed power-law solution
m(t) = 2 (C/(2 s t))^{1/s} for theta(x) = x^s satisfies exactly that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from ineqlab import norms, young

ENVELOPE_POINTS_PER_DECADE = 257
FIT_GRID = np.logspace(-3, 6, 513)


class NashError(ValueError):
    """Inadmissible theta/psi data."""


class EnvelopeUndefinedError(NashError):
    """The tail integral of 1/(x theta(x/2)) diverges (m is not defined)."""


# ---------------------------------------------------------------------------
# psi and theta
# ---------------------------------------------------------------------------


def make_psi(kind, delta):
    """Built-in psi families: "log" -> log(1+x)^delta (with closed inverse),
    "explog" -> exp(log(1+x)^delta) - 1.

    Also returns log1p_inv: the stable log(1 + psi^{-1}(x)).
    """
    if not (0.0 < delta < 1.0):
        raise NashError(f"delta must lie in (0, 1), got {delta}")
    if kind == "log":
        psi = lambda x: np.log1p(x) ** delta
        psi_inv = lambda y: np.expm1(y ** (1.0 / delta))
        log1p_inv = lambda y: y ** (1.0 / delta)
        big_psi = young.NashPsi(delta)
    elif kind == "explog":
        psi = lambda x: np.expm1(np.log1p(x) ** delta)
        psi_inv = lambda y: np.expm1(np.log1p(y) ** (1.0 / delta))
        log1p_inv = lambda y: np.log1p(y) ** (1.0 / delta)
        big_psi = young.ExpLogPsi(delta)
    else:
        raise NashError(f"unknown psi kind {kind!r}")
    return psi, psi_inv, big_psi, log1p_inv


@dataclass(frozen=True, eq=False)
class ThetaSpec:
    """theta = (Phi*)^{-1} o Psi o psi^{-1} with Psi(x) = x^2/psi(|x|)."""

    phi: object
    psi: object
    psi_inverse: object
    big_psi: object
    log1p_inverse: object = None
    label: str = ""

    def theta(self, x):
        return theta_eval(self, x)

    def theta_many(self, x):
        """Vectorized theta on nonnegative arrays (table-accuracy inverse)."""
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            u = np.asarray(self.psi_inverse(x), dtype=float)
            vals = self.big_psi.value(u)
        return young.conjugate_inverse_many(self.phi, vals)

    def theta_log(self, x):
        """theta at x through the log-domain composition; needed where
        psi^{-1}(x) overflows.  Uses psi(psi^{-1}(x)) = x, so the inner
        modular value has log Psi = 2 log u - log x.  Returns inf where
        theta itself exceeds the double range.
        """
        if self.log1p_inverse is None:
            raise NashError("no stable log inverse available for this psi")
        try:
            big_l = float(self.log1p_inverse(x))  # log(1 + u)
        except OverflowError:
            return math.inf
        if not math.isfinite(big_l):
            return math.inf
        log_u = big_l + math.log1p(-math.exp(-big_l)) if big_l < 35 else big_l
        log_target = 2.0 * log_u - math.log(x)
        try:
            return young.conjugate_inverse_log(self.phi, log_target)
        except OverflowError:
            return math.inf

    @classmethod
    def from_family(cls, phi, kind, delta):
        psi, psi_inv, big_psi, log1p_inv = make_psi(kind, delta)
        return cls(phi, psi, psi_inv, big_psi, log1p_inv, label=f"{kind}:{delta}")

    def validate(self):
        """psi increasing from 0 to inf; Psi an N-function; the composed
        H(x) = Psi(psi^{-1}(x^2)) a Young function -- all sampled."""
        xs = FIT_GRID
        pv = np.array([float(self.psi(x)) for x in xs])
        if np.any(np.diff(pv) <= 0) or pv[0] < 0:
            raise NashError("psi must be increasing and nonnegative")
        if float(self.psi(0.0)) != 0.0:
            raise NashError("psi(0) must be 0")
        # sampled growth proxy: a bounded psi plateaus across the top decades
        if pv[-1] < 1.02 * pv[len(pv) // 2]:
            raise NashError("psi must grow to infinity (plateau on samples)")
        young.validate_young(self.big_psi)
        if not self.big_psi.is_n_function():
            raise NashError("Psi = x^2/psi is not an N-function")
        with np.errstate(over="ignore", invalid="ignore"):
            h = np.array(
                [float(self.big_psi.value(self.psi_inverse(x * x))) for x in xs]
            )
        fin = np.isfinite(h)  # saturation truncates the sampled range
        hs, xf = h[fin], xs[fin]
        slopes = np.diff(hs) / np.diff(xf)
        if np.any(np.diff(slopes) < -1e-7 * np.maximum(1.0, np.abs(slopes[1:]))):
            raise NashError("Psi o psi^{-1}(x^2) fails sampled convexity")
        return True

    def fit_lambda(self, factor):
        """inf over the sampled grid of theta(x/factor) / theta(x)."""
        t_num = self.theta_many(FIT_GRID / factor)
        t_den = self.theta_many(FIT_GRID)
        good = (t_den > 0) & np.isfinite(t_den) & np.isfinite(t_num)
        ratios = list(t_num[good] / t_den[good])
        if self.log1p_inverse is not None:
            # continue through the overflow regime in log space
            for x in FIT_GRID[~good]:
                if x <= 0:
                    continue
                ratios.append(self.theta_log(x / factor) / self.theta_log(x))
        if not ratios:
            raise NashError("theta vanished on the whole fit grid")
        lam = float(min(ratios))
        if lam <= 0:
            raise NashError(f"theta(x/{factor}) >= lam theta(x) fit failed")
        return lam

    def fit_lambda_prime(self):
        """Smallest lam' >= 4 (coarse-to-fine scan) with
        (Phi*)^{-1}(lam' x) <= lam' (Phi*)^{-1}(x)/4 on sampled x >= 2.

        The scan runs on the fast table path; the returned candidate is
        re-certified against the exact scalar inverse and nudged up until
        it passes there too.
        """
        xs = np.logspace(math.log10(2.0), 8, 97)
        f_x = young.conjugate_inverse_many(self.phi, xs)

        def admissible(cand):
            lhs = young.conjugate_inverse_many(self.phi, cand * xs)
            return bool(np.all(lhs <= cand * f_x / 4.0 * (1 + 1e-9)))

        cand = 4.0
        for _ in range(12):
            if admissible(cand):
                break
            cand *= 2.0
        else:
            raise NashError("no admissible lambda' <= 16384 found")
        lo, hi = max(4.0, cand / 2.0), cand
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if admissible(mid):
                hi = mid
            else:
                lo = mid
        xs_exact = xs[:: 4]
        f_exact = [young.conjugate_inverse(self.phi, x) for x in xs_exact]
        for _ in range(60):
            ok = all(
                young.conjugate_inverse(self.phi, hi * x) <= hi * fx / 4.0
                for x, fx in zip(xs_exact, f_exact)
            )
            if ok:
                return float(hi)
            hi *= 1.002
        raise NashError("lambda' certification failed to stabilize")


def theta_eval(spec, x):
    """theta(x) = (Phi*)^{-1}(Psi(psi^{-1}(x))) for scalar x >= 0."""
    if x < 0:
        raise NashError("theta is defined on x >= 0")
    if x == 0.0:
        return float(young.conjugate_inverse(spec.phi, 0.0))
    with np.errstate(over="ignore"):
        u = float(spec.psi_inverse(x))
        val = float(spec.big_psi.value(u)) if math.isfinite(u) else math.inf
    if not math.isfinite(val):
        if spec.log1p_inverse is not None:
            return spec.theta_log(x)
        return math.inf
    return float(young.conjugate_inverse(spec.phi, val))


def nash_deficit(f, spec, mu, c_phi, centered=True):
    """var(f) theta(var / (2 ||f_c||_Psi^2)) against 4 C_Phi * energy,
    with f_c the centered (default) or raw function in the Psi norm."""
    v = np.asarray(f, dtype=float) if not isinstance(f, norms.GridFunction) else f.values
    var = norms.variance(v, mu)
    energy = norms.dirichlet_energy(v, mu)
    if var == 0.0:
        return norms.DeficitReport("nash", 0.0, 4.0 * c_phi * energy, 0.0, {})
    base = v - norms.integral(v, mu) if centered else v
    psi_norm = norms.luxemburg(base, spec.big_psi, mu)
    if psi_norm == 0.0:
        raise NashError("zero Psi norm with nonzero variance")
    arg = 0.5 * var / psi_norm**2
    left = var * theta_eval(spec, arg)
    right = 4.0 * c_phi * energy
    ratio = left / right if right > 0 else math.inf
    return norms.DeficitReport(
        "nash" if centered else "nash_uncentered",
        left,
        right,
        ratio,
        {"theta_arg": arg, "psi_norm": psi_norm},
    )


# ---------------------------------------------------------------------------
# decay envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedTheta:
    """Explicit theta forms: "power" -> x^s, "log" -> log(1+x)^s."""

    form: str
    s: float

    def __call__(self, x):
        if self.form == "power":
            return x**self.s
        if self.form == "log":
            return np.log1p(x) ** self.s
        raise NashError(f"unknown closed theta form {self.form!r}")


@dataclass(frozen=True, eq=False)
class DecayEnvelope:
    """m(t) with int_{m(t)}^inf dx/(x theta(x/2)) = 2t/C.

    Closed power form evaluates exactly; otherwise a monotone table over the
    requested times backed by the cumulative tail integral, which also
    extends the envelope beyond the tabulated range.
    """

    c_const: float
    theta: object
    closed_power_s: float = None
    times: np.ndarray = None
    m_values: np.ndarray = None
    _q_interp: object = field(default=None, repr=False)
    _u_range: tuple = None
    gamma_d: float = None

    def m(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise NashError("m(t) is defined for t > 0")
        if self.closed_power_s is not None:
            s = self.closed_power_s
            out = 2.0 * (self.c_const / (2.0 * s * t)) ** (1.0 / s)
            return float(out) if out.ndim == 0 else out
        scalar = t.ndim == 0
        vals = np.array([self._m_scalar(float(tt)) for tt in np.atleast_1d(t)])
        return float(vals[0]) if scalar else vals

    def _m_scalar(self, t):
        target = 2.0 * t / self.c_const
        u_lo, u_hi = self._u_range
        q = self._q_interp
        # q is decreasing in u; find u with q(u) = target
        if target > float(q(u_lo)):
            raise NashError(f"t = {t} below the resolvable envelope range")
        if target < float(q(u_hi)):
            raise NashError(f"t = {t} beyond the resolvable envelope range")
        u = brentq(lambda uu: float(q(uu)) - target, u_lo, u_hi, rtol=1e-13)
        return math.exp(u)

    def theta_at_half(self, m_val):
        th = self.theta
        return float(th(m_val / 2.0))

    def m_prime(self, t):
        """m'(t) = -(2/C) m theta(m/2), exact from the defining relation."""
        m_val = self.m(t)
        return -(2.0 / self.c_const) * m_val * self.theta_at_half(m_val)

    def big_m_prime(self, t):
        """M'(t) for M = -log m: (2/C) theta(m(t)/2)."""
        return (2.0 / self.c_const) * self.theta_at_half(self.m(t))

    def m_inverse(self, y):
        """t with m(t) = y."""
        if self.closed_power_s is not None:
            s = self.closed_power_s
            return self.c_const / (2.0 * s) * (2.0 / y) ** s
        u = math.log(y)
        u_lo, u_hi = self._u_range
        if not (u_lo <= u <= u_hi):
            raise NashError(f"y = {y} outside the tabulated envelope range")
        return 0.5 * self.c_const * float(self._q_interp(u))


def _tail_exponent(u, g):
    """Local decay exponent s of the integrand g ~ u^{-s} at the grid end."""
    k = max(2, len(u) // 20)
    lu = np.log(u[-k:])
    lg = np.log(np.maximum(g[-k:], 1e-300))
    return float(-np.polyfit(lu, lg, 1)[0])


def envelope_solve(theta, c_const, times, u_max=None, tol=1e-10):
    """Solve the envelope for the given times.

    theta may be a ClosedTheta, a ThetaSpec, or any increasing callable.
    Power-law thetas return the exact closed form.  Otherwise the tail
    integral Q is accumulated by cumulative Simpson on a dense log grid
    (substitution x = e^u) plus an asymptotic tail; a tail integrand
    decaying no faster than 1/u marks the envelope undefined.
    """
    if c_const <= 0:
        raise NashError("envelope needs C > 0")
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise NashError("envelope times must be positive")
    if isinstance(theta, ClosedTheta) and theta.form == "power":
        if theta.s <= 0:
            raise EnvelopeUndefinedError(
                "theta = x^s with s <= 0: the envelope integral diverges"
            )
        env = DecayEnvelope(c_const, theta, closed_power_s=theta.s)
        mv = env.m(times)
        return DecayEnvelope(
            c_const, theta, closed_power_s=theta.s, times=times, m_values=mv
        )
    if isinstance(theta, ClosedTheta) and theta.form == "log" and theta.s <= 1.0:
        raise EnvelopeUndefinedError(
            f"theta = log(1+x)^{theta.s}: tail integral diverges (s <= 1)"
        )
    th = theta.theta if isinstance(theta, ThetaSpec) else theta

    def theta_vals(x):
        if isinstance(theta, ThetaSpec):
            return theta.theta_many(x)
        out = np.empty(len(x))
        with np.errstate(over="ignore"):
            for i, xx in enumerate(x):
                try:
                    out[i] = float(th(min(xx, 1e290)))
                except OverflowError:
                    out[i] = math.inf
        return out

    # dense u-grid covering the m-range the requested times will need
    u_lo = -40.0
    u_hi = 600.0 if u_max is None else u_max
    n = int((u_hi - u_lo) * 64) + 1
    u = np.linspace(u_lo, u_hi, n)
    with np.errstate(over="ignore"):
        x_pts = np.exp(np.minimum(u, 660.0)) / 2.0
    tv = theta_vals(x_pts)
    sat = ~np.isfinite(tv)
    if np.any(sat) and isinstance(theta, ThetaSpec):
        # the composed theta saturates through psi^{-1} long before it is
        # genuinely infinite; continue with the log-domain composition on a
        # coarse subgrid (log theta is smooth in u out there)
        if theta.log1p_inverse is None:
            raise NashError(
                "theta overflows before the tail integral resolves; "
                "use a ThetaSpec with a log-capable psi"
            )
        us = u[sat]
        n_sub = max(9, int((us[-1] - us[0]) * 2) + 1)
        u_sub = np.linspace(us[0], us[-1], n_sub)
        log_th = []
        for uu in u_sub:
            val = theta.theta_log(math.exp(min(uu, 700.0)) / 2.0)
            log_th.append(math.log(val) if math.isfinite(val) else math.inf)
        log_th = np.array(log_th)
        fin = np.isfinite(log_th)
        if np.any(fin):
            with np.errstate(over="ignore"):
                tv[sat] = np.exp(np.interp(us, u_sub[fin], log_th[fin]))
            # beyond the last finite subgrid point theta has left the
            # double range for good (theta is increasing)
            if not np.all(fin):
                first_inf = u_sub[~fin][0]
                tv[sat & (u >= first_inf)] = np.inf
        sat = ~np.isfinite(tv)
    if np.any(tv[~sat] <= 0):
        raise NashError("theta must be positive on the envelope range")
    with np.errstate(divide="ignore"):
        g = np.where(sat, 0.0, 1.0 / tv)
    g = np.where(g > 0, g, 1e-300)
    s_tail = _tail_exponent(u[u > 1.0], g[u > 1.0])
    if s_tail <= 1.02 and g[-1] > 1e-12:
        raise EnvelopeUndefinedError(
            f"tail integrand decays like u^{-s_tail:.3f}; envelope undefined"
        )
    tail = g[-1] * u[-1] / (s_tail - 1.0) if s_tail > 1.0 else 0.0
    from scipy.integrate import cumulative_simpson

    # accumulate from the right so small tail values of Q stay accurate
    cum_r = cumulative_simpson(g[::-1], x=-u[::-1], initial=0.0)
    q_vals = cum_r[::-1] + tail  # Q at each grid u, decreasing
    keep = q_vals > 0
    interp = PchipInterpolator(u[keep], np.log(q_vals[keep]))
    q_interp = lambda uu, _i=interp: math.exp(float(_i(uu)))
    env = DecayEnvelope(
        c_const,
        th,
        times=times,
        m_values=None,
        _q_interp=q_interp,
        _u_range=(float(u[keep][0]), float(u[keep][-1])),
    )
    mv = np.array([env._m_scalar(float(t)) for t in times])
    return DecayEnvelope(
        c_const,
        th,
        times=times,
        m_values=mv,
        _q_interp=q_interp,
        _u_range=env._u_range,
    )


def envelope_from_table(times, m_values):
    """Envelope wrapper around raw (t, m) data (monotone-cubic in log-log);
    derivatives come from the interpolant, not a defining theta."""
    times = np.asarray(times, dtype=float)
    m_values = np.asarray(m_values, dtype=float)
    if np.any(np.diff(times) <= 0) or np.any(np.diff(m_values) >= 0):
        raise NashError("table must have increasing times and decreasing m")
    interp = PchipInterpolator(np.log(times), np.log(m_values))
    dinterp = interp.derivative()

    class _TableEnvelope:
        def __init__(self):
            self.times = times
            self.m_values = m_values
            self.c_const = math.nan
            self.gamma_d = None

        def m(self, t):
            t = np.asarray(t, dtype=float)
            if np.any(t < times[0] * (1 - 1e-12)) or np.any(t > times[-1] * (1 + 1e-12)):
                raise NashError("t outside the tabulated envelope range")
            out = np.exp(interp(np.log(t)))
            return float(out) if out.ndim == 0 else out

        def m_prime(self, t):
            return float(dinterp(math.log(t))) * self.m(t) / t

        def big_m_prime(self, t):
            # M' = -m'/m = -(dlog m/dlog t)/t
            return -float(dinterp(math.log(t))) / t

        def m_inverse(self, y):
            lo, hi = float(times[0]), float(times[-1])
            return float(brentq(lambda t: self.m(t) - y, lo, hi, rtol=1e-12))

    return _TableEnvelope()


def condition_d(envelope, t_grid, u_samples=17):
    """Largest gamma with M'(u) >= gamma M'(t) for u in [t, 2t], sampled."""
    worst = math.inf
    for t in np.asarray(t_grid, dtype=float):
        base = envelope.big_m_prime(t)
        if base <= 0:
            raise NashError("M' must be positive (m strictly decreasing)")
        for u in t * (1.0 + np.arange(u_samples) / (u_samples - 1.0)):
            worst = min(worst, envelope.big_m_prime(u) / base)
    return float(worst)


def theta_tilde_full(envelope, x, t_lo=None, t_hi=None, extensions=3):
    """sup_{t>0} (1/t) log(2x / m(t)) on a log t grid with golden refinement.

    Returns (value, attained_interior); a sup still climbing at the window
    edge triggers window extension and, failing that, the flag False.
    """
    if x <= 0:
        raise NashError("theta_tilde needs x > 0")
    if t_lo is None:
        t_lo = float(envelope.times[0]) if envelope.times is not None else 1e-4
    if t_hi is None:
        t_hi = float(envelope.times[-1]) if envelope.times is not None else 1e4

    def val(t):
        return math.log(2.0 * x / envelope.m(t)) / t

    for _ in range(extensions + 1):
        ts = np.logspace(math.log10(t_lo), math.log10(t_hi), 257)
        vals = np.array([val(t) for t in ts])
        j = int(np.argmax(vals))
        if 0 < j < len(ts) - 1:
            a, b = ts[j - 1], ts[j + 1]
            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            for _ in range(80):
                c = b - invphi * (b - a)
                d = a + invphi * (b - a)
                if val(c) >= val(d):
                    b = d
                else:
                    a = c
            return max(float(vals[j]), val(0.5 * (a + b))), True
        try:
            if j == 0:
                t_lo /= 100.0
            else:
                t_hi *= 100.0
            val(t_lo), val(t_hi)  # probe: table envelopes raise out of range
        except NashError:
            return float(vals[j]), False
    return float(vals[j]), False


def theta_tilde(envelope, x, **kw):
    return theta_tilde_full(envelope, x, **kw)[0]


def grigoryan_check(envelope, gamma, x_grid, safety=0.25):
    """Verify theta_tilde(x) >= safety * gamma * (-m'(m^{-1}(2x)) / x).

    The provable condition-(D) bound carries the factor gamma/4 (choose
    u = 2 t0 in the window [t0, 2t0]); safety defaults to 1/4 accordingly.
    """
    rows = []
    ok = True
    for x in np.asarray(x_grid, dtype=float):
        t0 = envelope.m_inverse(2.0 * x)
        bound = -safety * gamma * envelope.m_prime(t0) / x
        tt, attained = theta_tilde_full(envelope, x)
        good = tt >= bound * (1.0 - 1e-8)
        ok = ok and good
        rows.append({"x": x, "theta_tilde": tt, "bound": bound,
                     "attained": attained, "ok": good})
    return ok, rows


# ---------------------------------------------------------------------------
# the capacity equivalence loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopReport:
    c_os: float
    c_nash: float
    c_nash_uncentered: float
    capacity_const: float
    c_os_final: float
    blowup_factor: float
    lambda9: float
    lambda16: float
    lambda_prime: float
    k_const: float
    link_ratios: dict
    passed: bool


def equivalence_loop(mu, phi, spec, f_batch, c_os=None, halfline_count=24):
    """Run squared-centered Orlicz -> Nash -> half-line capacity -> Orlicz,
    verifying each link's inequality on f_batch and on the dyadic
    truncations of the half-line capacity witnesses.
    """
    from ineqlab import criteria

    spec.validate()
    if c_os is None:
        rep = criteria.b_plus_minus(phi, mu)
        if rep.diverged:
            raise NashError("criterion diverged; no finite Orlicz-Sobolev constant")
        c_os = rep.upper_bound
        k_const = rep.k_const
    else:
        k_const = norms.indicator_embedding_k(phi)
    lam9 = spec.fit_lambda(9.0)
    lam16 = spec.fit_lambda(16.0)
    lam_p = spec.fit_lambda_prime()
    c_nash = 4.0 * c_os
    c_unc = c_nash / lam9
    cap_const = 8.0 * lam_p * c_unc / lam16
    c_final = 8.0 * (1.0 + k_const) * cap_const
    ratios = {"nash": 0.0, "nash_uncentered": 0.0, "capacity": 0.0, "os_final": 0.0}
    for f in f_batch:
        d = nash_deficit(f, spec, mu, c_os, centered=True)
        ratios["nash"] = max(ratios["nash"], d.ratio)
        du = nash_deficit(f, spec, mu, c_unc / 4.0, centered=False)
        ratios["nash_uncentered"] = max(ratios["nash_uncentered"], du.ratio)
        od = norms.orlicz_sobolev_deficit(f, phi, mu)
        if od.right > 0:
            ratios["os_final"] = max(ratios["os_final"], od.left / (c_final * od.right))
    # half-line capacity bound plus the dyadic truncations of its witnesses
    from ineqlab import measure as ms
    from ineqlab import criteria as cr

    med = ms.median_point(mu)
    xs = np.quantile(mu.nodes[mu.nodes > med], np.linspace(0.3, 0.98, halfline_count))
    for x in xs:
        t = ms.tail_mass(mu, x)
        if not (0 < t < 0.5):
            continue
        lhs = 1.0 / young.inverse(phi, 1.0 / t)
        cap = 1.0 / ms.hardy_weight(mu, x)  # optimal half-line capacity
        ratios["capacity"] = max(ratios["capacity"], lhs / (cap_const * cap))
        g = cr.halfline_witness(mu, x)
        g = g / g.max()
        for k in range(-8, 1):
            gk = np.minimum(np.maximum(g - 2.0**k, 0.0), 2.0**k)
            if gk.max() <= 0:
                continue
            dk = nash_deficit(gk, spec, mu, c_unc / 4.0, centered=False)
            ratios["nash_uncentered"] = max(ratios["nash_uncentered"], dk.ratio)
    passed = all(r <= 1.0 + 1e-9 for r in ratios.values())
    return LoopReport(
        c_os=c_os,
        c_nash=c_nash,
        c_nash_uncentered=c_unc,
        capacity_const=cap_const,
        c_os_final=c_final,
        blowup_factor=c_final / c_os,
        lambda9=lam9,
        lambda16=lam16,
        lambda_prime=lam_p,
        k_const=k_const,
        link_ratios=ratios,
        passed=passed,
    )
