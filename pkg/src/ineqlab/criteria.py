"""Computable one-dimensional criteria and constant algebra.

Half-line quantities drive everything: B+ takes the sup over grid nodes x
above the median of ||1_[x,inf)||_Phi * int_m^x e^V (and B- mirrored), with
one golden-section refinement between the argmax's neighbors.  Products are
assembled in log space since the Hardy factor reaches e^{V} scales.

Capacities are restricted to half-lines: in 1D the general-set reduction of
the two-sided criterion passes through half-lines, and the same reduction is
applied to the Beckner-type criterion (reported as "half-line" values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ineqlab import measure as ms
from ineqlab import norms
from ineqlab import young

# a criterion integrand still rising by more than this over the last
# doubling of the window is reported as divergent (sup = +inf flag)
DIVERGENCE_RATIO = 1.02

A_GRID = np.logspace(-3, 3, 65)  # sampled a-grid for inf_a constant algebra


class CriterionError(ValueError):
    """Inadmissible input (T, varphi, F, sequence) or overflow."""


@dataclass(frozen=True)
class CriterionReport:
    """Half-line criterion values and the derived two-sided constant bounds."""

    name: str
    b_plus: float
    b_minus: float
    argmax_plus: float
    argmax_minus: float
    k_const: float
    lower_bound: float
    upper_bound: float
    diverged: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def b_max(self):
        return max(self.b_plus, self.b_minus)

    def csv_row(self):
        return [
            self.name,
            f"{self.b_plus:.17g}",
            f"{self.b_minus:.17g}",
            f"{self.lower_bound:.17g}",
            f"{self.upper_bound:.17g}",
            f"{self.argmax_plus:.17g}",
            f"{self.k_const:.17g}",
        ]


def _halfline_sup(mu, log_factor_of_tail, refine=True):
    """sup over half-lines of factor(tail) * hardy, one side at a time.

    log_factor_of_tail maps an array of tail masses to log factors.
    Returns (sup, argmax, diverged) for the right side and the left side.
    """
    med = mu.median_index
    nodes = mu.nodes
    out = []
    for side in ("right", "left"):
        if side == "right":
            idx = np.arange(med + 1, len(nodes))
            tails = mu._ccdf[idx]
            log_hardy = np.array([ms.log_hardy_weight(mu, nodes[i]) for i in idx])
        else:
            idx = np.arange(0, med)
            tails = mu._cdf[idx]
            log_hardy = np.array([ms.log_hardy_weight_left(mu, nodes[i]) for i in idx])
        good = tails > 0
        idx, tails, log_hardy = idx[good], tails[good], log_hardy[good]
        if len(idx) == 0:
            out.append((0.0, float(nodes[med]), False))
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            log_vals = log_factor_of_tail(tails) + log_hardy
        log_vals = np.where(np.isnan(log_vals), -math.inf, log_vals)
        j = int(np.argmax(log_vals))
        best_x = float(nodes[idx[j]])
        best = math.exp(log_vals[j]) if log_vals[j] < 700 else math.inf
        diverged = _check_divergence(nodes[idx], log_vals, side)
        if refine and 0 < j < len(idx) - 1 and math.isfinite(best):
            lo_x = float(nodes[idx[j - 1]])
            hi_x = float(nodes[idx[j + 1]])

            def val(x):
                t = ms.tail_mass(mu, x) if side == "right" else ms.head_mass(mu, x)
                if t <= 0:
                    return -math.inf
                lh = (
                    ms.log_hardy_weight(mu, x)
                    if side == "right"
                    else ms.log_hardy_weight_left(mu, x)
                )
                return float(log_factor_of_tail(np.array([t]))[0] + lh)

            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            a, b = lo_x, hi_x
            for _ in range(60):
                c = b - invphi * (b - a)
                d = a + invphi * (b - a)
                if val(c) >= val(d):
                    b = d
                else:
                    a = c
            xm = 0.5 * (a + b)
            vm = val(xm)
            if vm > log_vals[j]:
                best, best_x = math.exp(vm), xm
        out.append((best, best_x, diverged))
    return out  # [(b_plus, x_plus, div_plus), (b_minus, x_minus, div_minus)]


def _check_divergence(xs, log_vals, side):
    """Nested-window growth test: the sup over the full window exceeding the
    sup over the inner half-window marks a divergent (continuum) sup.  Near
    the domain edge the truncated tails collapse, so edge values alone
    cannot witness convergence."""
    if len(xs) < 16:
        return False
    x_mid = xs[0] + 0.5 * (xs[-1] - xs[0])
    inner = xs <= x_mid if side == "right" else xs >= x_mid
    if not np.any(inner):
        return False
    sup_full = float(np.max(log_vals))
    sup_half = float(np.max(log_vals[inner]))
    if not math.isfinite(sup_half):
        return math.isfinite(sup_full)
    return bool(sup_full - sup_half > math.log(DIVERGENCE_RATIO))


def b_plus_minus(phi, mu, k=None):
    """The two half-line suprema for the squared-centered Orlicz inequality,
    with constant bounds [max(B+,B-)/8, 8(1+k) max(B+,B-)]."""
    if k is None:
        k = norms.indicator_embedding_k(phi)

    def log_factor(tails):
        inv = young.inverse_many(phi, 1.0 / tails)
        with np.errstate(divide="ignore"):
            return -np.log(inv)

    (bp, xp, dp), (bm, xm, dm) = _halfline_sup(mu, log_factor)
    diverged = dp or dm
    bmax = math.inf if diverged else max(bp, bm)
    return CriterionReport(
        name="orlicz_sobolev",
        b_plus=math.inf if dp else bp,
        b_minus=math.inf if dm else bm,
        argmax_plus=xp,
        argmax_minus=xm,
        k_const=k,
        lower_bound=bmax / 8.0,
        upper_bound=8.0 * (1.0 + k) * bmax,
        diverged=diverged,
    )


def check_admissible_t(T, n=64):
    """T nondecreasing with T(x)/x nonincreasing and T > 0 on (0, 1]."""
    r = np.logspace(-8, 0, n)
    t = np.array([T(x) for x in r])
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise CriterionError("T must be positive and finite on (0, 1]")
    if np.any(np.diff(t) < -1e-12 * t[:-1]):
        raise CriterionError("T must be nondecreasing")
    slope = t / r
    if np.any(np.diff(slope) > 1e-9 * slope[:-1]):
        raise CriterionError("T(x)/x must be nonincreasing")
    return True


def beckner_b(T, mu):
    """Half-line B(T): sup of tail / T(1/log(1+1/tail)) * hardy, with the
    Beckner constant bounds [B/6, 20 B]."""
    check_admissible_t(T)

    def log_factor(tails):
        tv = np.array([T(1.0 / math.log1p(1.0 / t)) for t in tails])
        return np.log(tails) - np.log(tv)

    (bp, xp, dp), (bm, xm, dm) = _halfline_sup(mu, log_factor)
    diverged = dp or dm
    bmax = math.inf if diverged else max(bp, bm)
    return CriterionReport(
        name="beckner",
        b_plus=math.inf if dp else bp,
        b_minus=math.inf if dm else bm,
        argmax_plus=xp,
        argmax_minus=xm,
        k_const=0.0,
        lower_bound=bmax / 6.0,
        upper_bound=20.0 * bmax,
        diverged=diverged,
    )


def fit_comparability(phi, T, x_lo=2.0, x_hi=1e6, n=512, margin=1e-4):
    """Fit (c1, c2) with c1 x T(1/log(1+x)) <= phi^{-1}(x) <= c2 x T(...).

    Extremal ratios over a log sample, widened by ``margin`` so the fitted
    band also covers points between the samples.
    """
    xs = np.logspace(math.log10(x_lo * (1 + 1e-9)), math.log10(x_hi), n)
    inv = young.inverse_many(phi, xs)
    t = np.array([T(1.0 / math.log1p(x)) for x in xs])
    ratios = inv / (xs * t)
    c1 = float(ratios.min()) * (1.0 - margin)
    c2 = float(ratios.max()) * (1.0 + margin)
    if c1 <= 0:
        raise CriterionError("comparability fit failed: c1 <= 0")
    return c1, c2


def equivalence_transfer(c_phi_bounds, c1, c2, k, reverse=False):
    """Two-sided Beckner bounds from squared-centered Orlicz bounds
    (c1/(48(1+k)) C_Phi <= C_T <= 160 c2 C_Phi), or the reverse direction."""
    if c1 <= 0 or c2 < c1:
        raise CriterionError(f"need 0 < c1 <= c2, got ({c1}, {c2})")
    lo, hi = c_phi_bounds
    if not reverse:
        return (c1 / (48.0 * (1.0 + k)) * lo, 160.0 * c2 * hi)
    return (lo / (160.0 * c2), 48.0 * (1.0 + k) / c1 * hi)


@dataclass(frozen=True)
class AsymptoticReport:
    verdict: str  # PASS | FAIL | INCONCLUSIVE
    inf_g: float
    g_at_end: float
    slope: float
    sup_curvature_ratio: float
    window: tuple

    def csv_row(self):
        return [
            "asymptotic",
            self.verdict,
            f"{self.inf_g:.17g}",
            f"{self.g_at_end:.17g}",
            f"{self.slope:.17g}",
            f"{self.sup_curvature_ratio:.17g}",
        ]


def asymptotic_criterion(phi, V, V_prime, V_second, window, n=513):
    """Window estimate of liminf V' e^{-V} phi^{-1}(V' e^{V}) > 0.

    A finite machine cannot certify a liminf, so the verdict is PASS when
    the integrand's tail log-log slope is nonnegative, FAIL when it decays
    at a definite negative rate, INCONCLUSIVE otherwise.
    """
    x_lo, x_hi = window
    if not (0 < x_lo < x_hi):
        raise CriterionError("window must satisfy 0 < x_lo < x_hi")
    xs = np.logspace(math.log10(x_lo), math.log10(x_hi), n)
    vp = np.asarray(V_prime(xs), dtype=float)
    if np.any(vp <= 0):
        raise CriterionError("sign(x) V'(x) > 0 fails inside the window")
    v = np.asarray(V(xs), dtype=float)
    vs = np.asarray(V_second(xs), dtype=float)
    curv = np.abs(vs) / vp**2
    # log g = log V' - V + log phi^{-1}(V' e^{V})
    log_arg = np.log(vp) + v
    log_inv = young.inverse_log(phi, log_arg)
    log_g = np.log(vp) - v + log_inv
    tail = xs >= x_hi / 10.0  # last decade of the window
    lx = np.log(xs[tail])
    ly = log_g[tail]
    slope = float(np.polyfit(lx, ly, 1)[0])
    inf_g = float(np.exp(log_g.min())) if log_g.min() > -700 else 0.0
    g_end = float(np.exp(log_g[-1])) if log_g[-1] > -700 else 0.0
    if slope >= -0.01 and g_end > 0:
        verdict = "PASS"
    elif slope <= -0.05:
        verdict = "FAIL"
    else:
        verdict = "INCONCLUSIVE"
    return AsymptoticReport(
        verdict=verdict,
        inf_g=inf_g,
        g_at_end=g_end,
        slope=slope,
        sup_curvature_ratio=float(curv.max()),
        window=(x_lo, x_hi),
    )


# ---------------------------------------------------------------------------
# x varphi(x)-type criterion
# ---------------------------------------------------------------------------


def _fd1(f, x, h=None):
    h = h if h is not None else 1e-6 * max(1.0, abs(x))
    return (f(x + h) - f(max(x - h, 1e-300))) / (h + min(x - 1e-300, h))


def _fd2(f, x, h=None):
    h = h if h is not None else 1e-5 * max(1.0, abs(x))
    return (f(x + h) - 2.0 * f(x) + f(abs(x - h))) / h**2


def fit_varphi_admissibility(varphi, require=True):
    """Sampled admissibility constants for Phi(x) = x varphi(x):

    gamma with x varphi'(x) <= gamma, kappa with varphi(xy) <= kappa +
    varphi(x) + varphi(y), and the smallest lam >= 2 with
    lam varphi(x / varphi(x)) >= varphi(x) for sampled x >= 2 lam.
    """
    xs = np.logspace(-6, 8, 257)
    vals = np.array([varphi(x) for x in xs])
    ok = True
    reasons = []
    if varphi(0.0) <= 0:
        ok = False
        reasons.append("varphi(0) <= 0")
    if np.any(np.diff(vals) < -1e-10 * np.maximum(np.abs(vals[:-1]), 1e-30)):
        ok = False
        reasons.append("varphi not nondecreasing")
    slopes = np.diff(vals) / np.diff(xs)
    if np.any(np.diff(slopes) > 1e-9 * np.maximum(np.abs(slopes[:-1]), 1e-30)):
        ok = False
        reasons.append("varphi not concave on samples")
    grows = vals[-1] > vals[len(vals) // 2] + 1e-12
    if not grows:
        ok = False
        reasons.append("varphi does not grow to infinity")
    gamma = float(max(x * _fd1(varphi, x) for x in np.logspace(-4, 8, 129)))
    pair = np.logspace(-2, 5, 24)
    kappa = float(
        max(varphi(a * b) - varphi(a) - varphi(b) for a in pair for b in pair)
    )
    lam = None
    if grows:
        for cand in np.linspace(2.0, 64.0, 249):
            xs2 = np.logspace(math.log10(2.0 * cand), 9, 129)
            if all(cand * varphi(x / varphi(x)) >= varphi(x) for x in xs2):
                lam = float(cand)
                break
    if lam is None:
        ok = False
        reasons.append("no lambda <= 64 with lam varphi(x/varphi(x)) >= varphi(x)")
    if require and not ok:
        raise CriterionError("varphi fails admissibility sampling: " + "; ".join(reasons))
    return {
        "admissible": ok,
        "reasons": reasons,
        "gamma": gamma,
        "kappa": max(kappa, 0.0),
        "lam": lam if lam is not None else math.nan,
    }


def phi_sobolev_b_tilde(varphi, mu, M=None, c_p=None, require_admissible=True):
    """Half-line sup of tail * varphi(2/tail) * hardy, with the additive
    Phi-Sobolev constant bounds assembled from the fitted admissibility
    constants.  M defaults to the fitted kappa; c_p defaults to the
    measure's own half-line Poincare upper bound."""
    fit = fit_varphi_admissibility(varphi, require=require_admissible)

    def log_factor(tails):
        fv = np.array([varphi(2.0 / t) for t in tails])
        if np.any(fv <= 0):
            raise CriterionError("varphi(2/mu(A)) must be positive")
        return np.log(tails) + np.log(fv)

    (bp, xp, dp), (bm, xm, dm) = _halfline_sup(mu, log_factor)
    diverged = dp or dm
    btilde = math.inf if diverged else max(bp, bm)
    lower, upper = 0.0, math.inf
    if fit["admissible"] and not diverged:
        phi_full = _VarphiYoung(varphi)
        k0 = young.k_zero(phi_full)
        phi0 = varphi(0.0)
        lam = fit["lam"]
        best = 0.0
        for a in A_GRID:
            dd = _fd2(lambda t: t * varphi(t), a)
            if dd > 0:
                best = max(best, k0 * a * dd * phi0 / (8.0 * lam * (phi0 + 2.0 * a * dd)))
        lower = best * btilde
        if c_p is None:
            poincare = b_plus_minus(young.Power(1), mu)
            c_p = poincare.upper_bound
        m_const = fit["kappa"] if M is None else M
        upper = (18.0 * fit["gamma"] * c_p + 24.0 * (1.0 + m_const / varphi(8.0))) * btilde
    return CriterionReport(
        name="phi_sobolev",
        b_plus=math.inf if dp else bp,
        b_minus=math.inf if dm else bm,
        argmax_plus=xp,
        argmax_minus=xm,
        k_const=fit.get("kappa", math.nan),
        lower_bound=lower,
        upper_bound=upper,
        diverged=diverged,
        extras=fit,
    )


class _VarphiYoung(young.YoungFunction):
    """Adapter Phi(x) = x varphi(x) for k_zero root finding."""

    scale = 1.0

    def __init__(self, varphi):
        self._varphi = varphi

    def _val(self, u):
        u = np.asarray(u, dtype=float)
        return u * np.array([self._varphi(t) for t in np.atleast_1d(u)]).reshape(u.shape)

    def _d1(self, u):
        u = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u)
        out = np.array([self._varphi(t) + t * _fd1(self._varphi, t) for t in flat])
        return out.reshape(u.shape)

    def _d2(self, u):
        u = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u)
        out = np.array([_fd2(lambda s: s * self._varphi(s), t) for t in flat])
        return out.reshape(u.shape)


# ---------------------------------------------------------------------------
# pure constant algebra
# ---------------------------------------------------------------------------


def mpp_transfer(c, delta_u):
    """Mild perturbation: constant c becomes c e^{delta_u}."""
    if c <= 0 or delta_u < 0:
        raise CriterionError("mpp_transfer needs c > 0, delta_u >= 0")
    return c * math.exp(delta_u)


def lo_transfer(c, m, beta, p):
    """Uncentered Beckner coefficient (p-1) c (2-p)^beta + (2-p) m."""
    if not (1.0 <= p <= 2.0):
        raise CriterionError("p must lie in [1, 2]")
    if c <= 0 or m <= 0:
        raise CriterionError("constants must be positive")
    return (p - 1.0) * c * (2.0 - p) ** beta + (2.0 - p) * m


@dataclass(frozen=True)
class InfOverA:
    value: float
    argmin_a: float
    at_grid_edge: bool


def poincare_from_phi(phi, c_phi, a_grid=None):
    """Poincare constant bound inf_a C_Phi / (2 a Phi''(a)), sampled a-grid.

    at_grid_edge flags an inf still improving at the grid boundary
    (unbounded improvement for convex power-like Phi).
    """
    if c_phi <= 0:
        raise CriterionError("c_phi must be positive")
    grid = A_GRID if a_grid is None else np.asarray(a_grid, dtype=float)
    dd = phi.deriv2(grid)
    with np.errstate(divide="ignore"):
        vals = np.where(dd > 0, c_phi / (2.0 * grid * np.maximum(dd, 1e-300)), math.inf)
    if np.all(np.isinf(vals)):
        return InfOverA(math.inf, math.nan, False)
    j = int(np.argmin(vals))
    return InfOverA(float(vals[j]), float(grid[j]), j in (0, len(grid) - 1))


def os_from_additive(phi, c_phi, lam=None, a_grid=None):
    """Squared-centered Orlicz constant from the additive constant:
    inf_a (C_Phi / k0) (1/(2 a Phi''(a)) + 1/Phi'(0)), with the lam-shifted
    family phi + lam|x| when Phi'(0) = 0."""
    if c_phi <= 0:
        raise CriterionError("c_phi must be positive")
    d0 = phi.deriv(0.0)
    if lam is None:
        if d0 <= 0:
            raise CriterionError("Phi'(0) = 0: supply lam for the shifted family")
        shift = 0.0
        slope0 = d0
    else:
        if lam <= 0:
            raise CriterionError("lam must be positive")
        shift = lam
        slope0 = d0 + lam
    k0 = young.k_zero(phi, shift=shift)
    grid = A_GRID if a_grid is None else np.asarray(a_grid, dtype=float)
    dd = phi.deriv2(grid)  # the |x|-shift has no curvature away from 0
    with np.errstate(divide="ignore"):
        vals = np.where(
            dd > 0,
            (c_phi / k0) * (1.0 / (2.0 * grid * np.maximum(dd, 1e-300)) + 1.0 / slope0),
            math.inf,
        )
    if np.all(np.isinf(vals)):
        return InfOverA(math.inf, math.nan, False)
    j = int(np.argmin(vals))
    return InfOverA(float(vals[j]), float(grid[j]), j in (0, len(grid) - 1))


# ---------------------------------------------------------------------------
# dyadic-sequence implication
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DyadicSequenceVerdict:
    hypothesis_holds: bool
    conclusion_holds: bool
    implication_holds: bool
    counterexample_k: int | None
    hypothesis_sup: float
    conclusion_sup: float


def dyadic_sequence_check(a_seq, F, lambda_prime, C, k_start=0):
    """Verify on a finite sequence: 2^{2k} a_{k+1} F(1/a_k) <= C for all k
    implies 2^{2k} a_k F(1/a_k) <= lambda' C.

    a_seq is indexed k = k_start, k_start+1, ...; returns the first index
    where the hypothesis holds but the conclusion fails (an implementation
    bug if it ever happens), or None.
    """
    a = np.asarray(a_seq, dtype=float)
    if np.any(a < 0) or np.any(a > 0.5):
        raise CriterionError("sequence must live in [0, 1/2]")
    if np.any(np.diff(a) > 1e-15):
        raise CriterionError("sequence must be nonincreasing")
    if lambda_prime < 4:
        raise CriterionError("lambda' must be >= 4")
    xs = np.logspace(math.log10(2.0), 8, 129)
    fv = np.array([F(x) for x in xs])
    if np.any(np.diff(fv) < -1e-12 * np.maximum(fv[:-1], 1e-300)):
        raise CriterionError("F must be nondecreasing")
    slope = fv / xs
    if np.any(np.diff(slope) > 1e-9 * np.maximum(slope[:-1], 1e-300)):
        raise CriterionError("F(x)/x must be nonincreasing")
    if any(F(lambda_prime * x) > lambda_prime * F(x) / 4.0 * (1 + 1e-12) for x in xs):
        raise CriterionError("F(lambda' x) <= lambda' F(x) / 4 fails on samples")

    hyp_sup = 0.0
    con_sup = 0.0
    counter = None
    hyp_ok = True
    for i, ak in enumerate(a):
        if ak <= 0:
            continue
        k = k_start + i
        f_val = F(1.0 / ak)
        if i + 1 < len(a):
            hyp_val = 4.0**k * a[i + 1] * f_val
            hyp_sup = max(hyp_sup, hyp_val)
            if hyp_val > C * (1 + 1e-12):
                hyp_ok = False
        con_val = 4.0**k * ak * f_val
        con_sup = max(con_sup, con_val)
    con_ok = con_sup <= lambda_prime * C * (1 + 1e-12)
    if hyp_ok and not con_ok:
        for i, ak in enumerate(a):
            if ak > 0 and 4.0 ** (k_start + i) * ak * F(1.0 / ak) > lambda_prime * C:
                counter = k_start + i
                break
    return DyadicSequenceVerdict(
        hypothesis_holds=hyp_ok,
        conclusion_holds=con_ok,
        implication_holds=not (hyp_ok and not con_ok),
        counterexample_k=counter,
        hypothesis_sup=hyp_sup,
        conclusion_sup=con_sup,
    )


def halfline_witness(mu, x):
    """The capacity-optimal half-line test function h(y) = int_m^y e^V
    clipped at x (the criterion's near-extremal witness)."""
    med = ms.median_point(mu)
    if x <= med:
        raise CriterionError("witness needs x above the median")
    vals = np.zeros(len(mu))
    cap = ms.hardy_weight(mu, x)
    for i, y in enumerate(mu.nodes):
        if y <= med:
            continue
        vals[i] = cap if y >= x else ms.hardy_weight(mu, y)
    return vals
