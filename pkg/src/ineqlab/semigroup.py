"""mu-symmetric diffusion semigroup P_t = e^{tL}, L = d^2/dx^2 - V' d/dx,
discretized in finite-volume divergence form on the measure grid.

The generator is built so that mu-symmetry, zero row sums and the Markov
sign structure hold by construction; zero-flux ends preserve mass exactly.
Time stepping is Crank-Nicolson with a short backward-Euler (Rannacher)
startup that damps the high modes the trapezoidal rule leaves ringing, so
norm traces decay monotonically from the first sample on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu

from ineqlab import norms

SYMMETRY_TOL = 1e-12
ROWSUM_TOL = 1e-10
DEFAULT_DT = 1e-3


class SemigroupError(ValueError):
    """Generator construction or evolution failure."""


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Tridiagonal generator (sub, diag, sup) with zero-flux ends."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    mu: object
    boundary: str = "zero-flux"

    def __post_init__(self):
        w = self.mu.weights
        n = len(w)
        if not (len(self.diag) == n and len(self.sub) == n - 1 == len(self.sup)):
            raise SemigroupError("band shapes do not match the grid")
        if np.any(self.sub < 0) or np.any(self.sup < 0):
            raise SemigroupError("off-diagonal entries must be nonnegative")
        sym = np.max(np.abs(w[:-1] * self.sup - w[1:] * self.sub))
        scale = max(1.0, float(np.max(np.abs(w[:-1] * self.sup))))
        if sym > SYMMETRY_TOL * scale:
            raise SemigroupError(f"mu-symmetry violated by {sym:.3e}")
        rows = np.abs(self.apply(np.ones(n)))
        if np.max(rows) > ROWSUM_TOL * max(1.0, float(np.max(np.abs(self.diag)))):
            raise SemigroupError("row sums are not zero (constants not harmonic)")
        for name in ("sub", "diag", "sup"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def apply(self, f):
        out = self.diag * f
        out[:-1] += self.sup * f[1:]
        out[1:] += self.sub * f[:-1]
        return out

    def __len__(self):
        return len(self.diag)


def build_generator(mu):
    """Finite-volume divergence form: (Lf)_i is the flux difference of
    rho_face * df/dx across the cell, divided by the node's own trapezoid
    mass, so mu-symmetry holds exactly against the measure weights."""
    x = mu.nodes
    h = np.diff(x)
    log_rho = -mu.potential  # unnormalized; L is invariant under scaling
    shift = float(np.max(log_rho))
    rho = np.exp(log_rho - shift)
    face = 0.5 * (rho[:-1] + rho[1:]) / h
    seg = 0.5 * (rho[:-1] + rho[1:]) * h
    wcell = np.zeros(len(x))
    wcell[:-1] += seg / 2.0
    wcell[1:] += seg / 2.0
    if np.any(face <= 0) or np.any(wcell <= 0):
        raise SemigroupError("nonpositive face weight or cell mass")
    sup = face / wcell[:-1]
    sub = face / wcell[1:]
    diag = np.zeros(len(x))
    diag[:-1] -= sup
    diag[1:] -= sub
    return GeneratorMatrix(sub, diag, sup, mu)


def spectral_gap(gen, n_eigs=2):
    """Second-smallest eigenvalue of -L (the gap), plus C_P = 1/gap.

    Computed on the symmetrized D^{1/2} L D^{-1/2} tridiagonal form with
    bisection/Sturm selection of the lowest indices.
    """
    w = gen.mu.weights
    d = -gen.diag
    e = -gen.sup * np.sqrt(w[:-1] / w[1:])
    vals = eigh_tridiagonal(
        d, e, select="i", select_range=(0, n_eigs), eigvals_only=True
    )
    gap = float(vals[1])
    if not math.isfinite(gap) or gap <= 0:
        raise SemigroupError(f"eigen-solve returned nonpositive gap {gap}")
    return gap, 1.0 / gap


@dataclass(frozen=True, eq=False)
class DecayTrace:
    """Per-time records along a semigroup orbit."""

    times: np.ndarray
    variance: np.ndarray
    energy: np.ndarray
    mean: float
    f0: np.ndarray
    mu: object
    phi: object = None
    orlicz: np.ndarray = None  # ||P_t f - mu f||_phi
    orlicz_sq: np.ndarray = None  # ||(P_t f - mu f)^2||_phi
    entropy_sq: np.ndarray = None  # Ent_mu((P_t f)^2)
    states: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise SemigroupError("trace times must be strictly increasing")
        # roundoff floor: solver dust of order (eps * max f^2)^2
        floor = (1e-14 * (1.0 + float(np.max(self.f0 * self.f0)))) ** 2
        slack = 1e-12 * float(self.variance[0]) + floor
        if np.any(np.diff(self.variance) > slack):
            raise SemigroupError("variance must be nonincreasing along the trace")


def evolve(
    gen,
    f,
    t_final,
    dt=None,
    n_samples=51,
    phi=None,
    rannacher=2,
    track_entropy=True,
    keep_states=(),
):
    """Crank-Nicolson evolution recording a DecayTrace at n_samples times.

    dt defaults to min(1e-3, sample interval); sample times are snapped to
    whole-step multiples so records carry exact times.  The first
    ``rannacher`` steps run as pairs of backward-Euler half-steps.
    """
    if t_final <= 0:
        raise SemigroupError("t_final must be positive")
    mu = gen.mu
    f = np.asarray(f, dtype=float).copy()
    if f.shape != mu.nodes.shape:
        raise SemigroupError("initial function does not match the grid")
    delta = t_final / (n_samples - 1)
    dt_target = DEFAULT_DT if dt is None else dt
    steps_per = max(1, int(math.ceil(delta / dt_target - 1e-12)))
    dt = delta / steps_per
    n = len(f)
    lmat = diags([gen.sub, gen.diag, gen.sup], [-1, 0, 1], format="csc")
    eye = identity(n, format="csc")
    cn_left = splu((eye - (dt / 2.0) * lmat).tocsc())
    cn_right = eye + (dt / 2.0) * lmat
    # Rannacher startup: 8 backward-Euler substeps per replaced step; small
    # substeps keep the low-mode rate deficit below the decay-check tolerance
    be_sub = splu((eye - (dt / 16.0) * lmat).tocsc())

    mean = norms.integral(f, mu)
    records = {"t": [], "var": [], "energy": [], "orl": [], "orl2": [], "ent2": []}
    states = {}

    def record(t, u):
        records["t"].append(t)
        c = u - mean
        records["var"].append(float(np.dot(mu.weights, c * c)))
        records["energy"].append(norms.dirichlet_energy(u, mu))
        if phi is not None:
            records["orl"].append(norms.luxemburg(c, phi, mu))
            records["orl2"].append(norms.luxemburg(c * c, phi, mu))
        if track_entropy:
            sq = u * u
            msq = norms.integral(sq, mu)
            if msq > 0:
                with np.errstate(divide="ignore", invalid="ignore"):
                    term = np.where(sq > 0, sq * np.log(sq / msq), 0.0)
                records["ent2"].append(float(np.dot(mu.weights, term)))
            else:
                records["ent2"].append(0.0)

    record(0.0, f)
    if 0.0 in keep_states:
        states[0.0] = f.copy()
    u = f
    step_index = 0
    total_steps = steps_per * (n_samples - 1)
    for k in range(1, n_samples):
        for _ in range(steps_per):
            if step_index < rannacher:
                for _ in range(16):
                    u = be_sub.solve(u)
            else:
                u = cn_left.solve(cn_right @ u)
            step_index += 1
        t = k * delta
        record(t, u)
        if any(abs(t - ts) < 1e-12 for ts in keep_states):
            states[t] = u.copy()
    drift = abs(norms.integral(u, mu) - mean)
    if drift > 1e-8 * max(1.0, abs(mean)) * max(1.0, t_final):
        raise SemigroupError(f"mass conservation drifted by {drift:.3e}")
    return DecayTrace(
        times=np.array(records["t"]),
        variance=np.array(records["var"]),
        energy=np.array(records["energy"]),
        mean=mean,
        f0=f,
        mu=mu,
        phi=phi,
        orlicz=np.array(records["orl"]) if phi is not None else None,
        orlicz_sq=np.array(records["orl2"]) if phi is not None else None,
        entropy_sq=np.array(records["ent2"]) if track_entropy else None,
        states=states,
    )


@dataclass(frozen=True)
class Verdict:
    passed: bool
    first_violation_time: float | None
    max_violation: float
    detail: str

    def __bool__(self):
        return self.passed


def _envelope_verdict(times, values, envelope, tol_abs, name):
    bad_t = None
    worst = 0.0
    for t, v, e in zip(times, values, envelope):
        excess = v - e
        if excess > worst:
            worst = excess
        if excess > tol_abs and bad_t is None:
            bad_t = float(t)
    return Verdict(
        passed=bad_t is None,
        first_violation_time=bad_t,
        max_violation=worst,
        detail=name,
    )


def check_orlicz_decay(trace, m_rate, tol=1e-6):
    """e^{Mt} N(t)^2 nonincreasing across the trace (N the centered Orlicz
    norm), plus raw monotonicity of N itself."""
    if trace.orlicz is None:
        raise SemigroupError("trace was recorded without an Orlicz norm")
    n2 = trace.orlicz**2
    tol_abs = tol * n2[0]
    g = np.exp(m_rate * trace.times) * n2
    mono = _envelope_verdict(trace.times[1:], g[1:], g[:-1], tol_abs, "exp-weighted norm^2")
    raw = _envelope_verdict(
        trace.times[1:], trace.orlicz[1:], trace.orlicz[:-1],
        tol * trace.orlicz[0], "raw norm monotone",
    )
    passed = mono.passed and raw.passed
    first = mono.first_violation_time if not mono.passed else raw.first_violation_time
    return Verdict(passed, first, max(mono.max_violation, raw.max_violation),
                   f"M={m_rate:.6g}")


def check_square_norm_decay(trace, ell, B, c_phi, tol=1e-6):
    """Decay of ||(P_t f - mu f)^2||_phi at rate M = 2 ell / (B C_phi)."""
    if trace.orlicz_sq is None:
        raise SemigroupError("trace was recorded without the squared norm")
    if ell <= 0:
        raise SemigroupError("ell <= 0: use the two-regime envelope instead")
    m_rate = 2.0 * ell / (B * c_phi)
    n2 = trace.orlicz_sq
    tol_abs = tol * n2[0]
    g = np.exp(m_rate * trace.times) * n2
    return _envelope_verdict(trace.times[1:], g[1:], g[:-1], tol_abs,
                             f"square-norm decay M={m_rate:.6g}")


def check_two_regime_decay(trace, c_os, beta, tol=1e-6):
    """gamma = 1 envelope: flat up to t* = 4^beta C e, then
    (t / 4^beta C) e^{-t / (4^beta C e)} times the initial value."""
    if trace.orlicz_sq is None:
        raise SemigroupError("trace was recorded without the squared norm")
    n = trace.orlicz_sq
    c4 = 4.0**beta * c_os
    t_star = c4 * math.e
    env = np.where(
        trace.times <= t_star,
        n[0],
        (trace.times / c4) * np.exp(-trace.times / (c4 * math.e)) * n[0],
    )
    return _envelope_verdict(trace.times, n, env, tol * n[0],
                             f"two-regime envelope t*={t_star:.6g}")


def c1_rate(beta, gamma, c_os):
    """(log gamma)^beta / (4^beta C (1 + e (log gamma)^beta))."""
    if gamma <= 1.0:
        raise SemigroupError("c1 rate needs gamma > 1")
    lg = math.log(gamma) ** beta
    return lg / (4.0**beta * c_os * (1.0 + math.e * lg))


def rothaus_bound(f, mu):
    """Ent((f - mu f)^2) + 2 var(f): dominates sup_a Ent((f + a)^2)."""
    c = np.asarray(f, dtype=float) - norms.integral(f, mu)
    return norms.entropy(c * c, mu) + 2.0 * norms.variance(f, mu)


def entropy_decay_check(trace, c_ls, tol=1e-9):
    """Ent((P_t f)^2) <= (15 t / 16 C) e^{-t/(4 e C)} (Ent(ftilde^2) + 2 var)
    at trace times t >= 4 C e; returns the verdict and the minimal slack."""
    if trace.entropy_sq is None:
        raise SemigroupError("trace was recorded without entropy")
    t_star = 4.0 * c_ls * math.e
    budget = rothaus_bound(trace.f0, trace.mu)
    checked = 0
    slack = math.inf
    bad_t = None
    worst = 0.0
    for t, ent in zip(trace.times, trace.entropy_sq):
        if t < t_star:
            continue
        checked += 1
        rhs = (15.0 * t / (16.0 * c_ls)) * math.exp(-t / (4.0 * math.e * c_ls)) * budget
        if ent > tol * max(1.0, budget):
            slack = min(slack, rhs / ent)
        excess = ent - rhs
        worst = max(worst, excess)
        if excess > tol * max(1.0, budget) and bad_t is None:
            bad_t = float(t)
    detail = f"checked {checked} times t >= {t_star:.4g}, min slack {slack:.3g}"
    return Verdict(bad_t is None and checked > 0, bad_t, worst, detail)


def measure_decay_rate(times, values, floor_rel=1e-8, start_rel=0.5):
    """Least-squares slope of log(values) over the window where the
    quantity sits in [floor_rel, start_rel] of its initial value."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    v0 = values[0]
    ok = (values > floor_rel * v0) & (values <= start_rel * v0)
    if ok.sum() < 3:
        raise SemigroupError("decay window too short to fit a rate")
    slope = np.polyfit(times[ok], np.log(values[ok]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# monotone functionals
# ---------------------------------------------------------------------------


def a_functional(f, mu):
    """A(f) = Ent(f^2) + var(f)."""
    v = np.asarray(f, dtype=float)
    return norms.entropy(v * v, mu) + norms.variance(v, mu)


@dataclass(frozen=True)
class MonotoneRecords:
    omega: float
    t_char: float
    check_times: np.ndarray
    a_values: np.ndarray
    sup_functional: np.ndarray  # A_omega(P_t f)
    avg_functional: np.ndarray  # B_omega(P_t f)
    sup_bound: np.ndarray  # e^{-omega t} A_omega(f)
    avg_bound: np.ndarray
    sup_passed: bool
    avg_passed: bool


def _refined_sup(s, g, lo, hi):
    """Discrete sup of g over s in [lo, hi] with 3-point parabolic refinement."""
    sel = (s >= lo - 1e-12) & (s <= hi + 1e-12)
    idx = np.nonzero(sel)[0]
    vals = g[idx]
    j = int(np.argmax(vals))
    best = float(vals[j])
    if 0 < j < len(idx) - 1:
        x0, x1, x2 = s[idx[j - 1]], s[idx[j]], s[idx[j + 1]]
        y0, y1, y2 = vals[j - 1], vals[j], vals[j + 1]
        denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
        if denom != 0:
            a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
            b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
            if a < 0:
                xv = -b / (2 * a)
                if x0 < xv < x2:
                    best = max(best, float(a * xv**2 + b * xv + (y1 - a * x1**2 - b * x1)))
    return best


def monotone_functionals(
    f, gen, omega, t_char, m_rate=None, check_times=None, dt=None, s_points=129
):
    """Time-averaged monotone functionals over windows [t, t + T]:

        A_omega(g) = sup_{s in [0,T]} A(P_s g) e^{omega s}
        B_omega(g) = (1/T) int_0^T A(P_s g) e^{omega s} ds

    verified to decay as e^{-omega t} at the requested check times.  The
    s-grid carries s_points nodes per window; sups get local 3-point
    parabolic refinement.  Requires omega < m_rate (measured from the
    A-trace when not supplied).
    """
    if t_char <= 0 or omega < 0:
        raise SemigroupError("need t_char > 0 and omega >= 0")
    if check_times is None:
        check_times = [0.25 * t_char * k for k in range(0, 9)]
    check_times = np.asarray(sorted(set(float(t) for t in check_times)))
    delta = t_char / (s_points - 1)
    check_times = np.round(check_times / delta) * delta
    check_times = np.unique(check_times)
    t_total = float(check_times[-1]) + t_char
    n_samples = int(round(t_total / delta)) + 1
    trace = evolve(gen, f, t_total, dt=dt, n_samples=n_samples, track_entropy=True)
    a_vals = trace.entropy_sq + trace.variance  # Ent(u^2) + var(u)
    if m_rate is None:
        m_rate = measure_decay_rate(trace.times, a_vals)
    if omega >= m_rate:
        raise SemigroupError(f"omega = {omega} must be below the decay rate {m_rate}")
    s = trace.times

    def sup_at(t):
        g = a_vals * np.exp(omega * (s - t))
        return _refined_sup(s, g, t, t + t_char)

    def avg_at(t):
        sel = (s >= t - 1e-12) & (s <= t + t_char + 1e-12)
        ss = s[sel]
        gg = a_vals[sel] * np.exp(omega * (ss - t))
        return float(np.trapezoid(gg, ss) / t_char)

    sup0 = sup_at(0.0)
    avg0 = avg_at(0.0)
    sups = np.array([sup_at(t) for t in check_times])
    avgs = np.array([avg_at(t) for t in check_times])
    sup_bound = np.exp(-omega * check_times) * sup0
    avg_bound = np.exp(-omega * check_times) * avg0
    tol = 1e-6
    sup_ok = bool(np.all(sups <= sup_bound * (1 + tol) + tol * sup0))
    avg_ok = bool(np.all(avgs <= avg_bound * (1 + tol) + tol * avg0))
    return MonotoneRecords(
        omega=omega,
        t_char=t_char,
        check_times=check_times,
        a_values=np.interp(check_times, s, a_vals),
        sup_functional=sups,
        avg_functional=avgs,
        sup_bound=sup_bound,
        avg_bound=avg_bound,
        sup_passed=sup_ok,
        avg_passed=avg_ok,
    )
