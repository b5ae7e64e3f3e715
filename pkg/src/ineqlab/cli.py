"""Command-line front end: TOML-configured experiment runs emitting
deterministic CSV reports (RFC-4180, 17 significant digits).

    ineqlab <norm|criterion|simulate|envelope|report>
            --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

Exit codes: 0 success (FAIL verdicts are data), 1 usage error,
2 computational error.  INEQLAB_THREADS is the --threads fallback.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ineqlab import criteria, measure, nash, norms, semigroup, young


class UsageError(Exception):
    pass


def fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_plot_data(path, xs, ys):
    """Plot-ready two-column data (whitespace-delimited, gnuplot-style)."""
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{x:.17g} {y:.17g}\n")


_SCHEMA = {
    "measure": {"family", "alpha", "grid"},
    "young": {"family", "p", "beta", "gamma", "delta", "scale"},
    "norm": {"f", "count"},
    "criterion": {"kind", "alphas", "t_beta", "eta", "vbeta", "window", "young_beta"},
    "simulate": {"f", "t_final", "dt", "n_samples", "checks", "omega_frac", "t_char"},
    "envelope": {"form", "beta", "delta", "c", "t_min", "t_max", "n_times", "loop",
                 "batch"},
    "output": {"dir", "seed"},
}


def load_config(path):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad TOML in {path}: {exc}") from exc
    for section, table in cfg.items():
        if section not in _SCHEMA:
            raise UsageError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise UsageError(f"section [{section}] must be a table")
        unknown = set(table) - _SCHEMA[section]
        if unknown:
            raise UsageError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return cfg


def build_measure(cfg, alpha=None):
    spec = cfg.get("measure", {})
    family = spec.get("family", "mu_alpha")
    if family != "mu_alpha":
        raise UsageError(f"unsupported measure family {family!r}")
    a = float(alpha if alpha is not None else spec.get("alpha", 2.0))
    grid = spec.get("grid")
    if grid is not None:
        grid = (float(grid[0]), float(grid[1]), int(grid[2]))
    return measure.mu_alpha(a, grid=grid)


def matched_beta(alpha):
    return 2.0 * (1.0 - 1.0 / alpha)


def build_young(cfg, mu=None):
    spec = cfg.get("young", {})
    family = spec.get("family", "log_power")
    beta = spec.get("beta", "matched")
    if beta == "matched":
        if mu is None or "beta" not in mu.meta:
            raise UsageError('young.beta = "matched" needs a mu_alpha measure')
        beta = mu.meta["beta"]
    if family == "power":
        return young.Power(float(spec.get("p", 2.0)), float(spec.get("scale", 1.0)))
    if family == "log_power":
        return young.LogPower(float(beta), float(spec.get("gamma", 1.0)),
                              float(spec.get("scale", 1.0)))
    if family == "squared_log_power":
        return young.Squared(young.LogPower(float(beta), float(spec.get("gamma", 1.0))))
    if family == "nash_psi":
        return young.NashPsi(float(spec.get("delta", 0.5)))
    if family == "exp_log_psi":
        return young.ExpLogPsi(float(spec.get("delta", 0.5)))
    raise UsageError(f"unknown young family {family!r}")


def build_function(name, mu, rng):
    x = mu.nodes
    if name == "x":
        return x.copy()
    if name == "x2":
        return x * x - norms.integral(x * x, mu)
    if name == "sin":
        return np.sin(x)
    if name == "abs_capped":
        return np.sign(x) * np.minimum(np.abs(x), 1.0)
    if name == "random":
        return norms.random_piecewise_linear(mu, rng)
    raise UsageError(f"unknown test function {name!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_norm(cfg, out, seed, threads):
    mu = build_measure(cfg)
    phi = build_young(cfg, mu)
    spec = cfg.get("norm", {})
    rng = np.random.default_rng(seed)
    names = [spec.get("f", "x")] * 1
    if spec.get("f", "x") == "random":
        names = ["random"] * int(spec.get("count", 3))
    rows = []
    for i, name in enumerate(names):
        f = build_function(name, mu, rng)
        lux = norms.luxemburg(f, phi, mu)
        orl = norms.orlicz_norm(f, phi, mu)
        rows.append([f"{name}-{i}", lux, orl, norms.variance(f, mu),
                     norms.dirichlet_energy(f, mu)])
    write_csv(out / "norms.csv",
              ["function", "luxemburg", "orlicz", "variance", "energy"], rows)
    return 0


def _criterion_row(kind, cfg, alpha):
    mu = measure_for_sweep(cfg, alpha)
    beta = matched_beta(alpha)
    spec = cfg.get("criterion", {})
    if kind == "b_plus_minus":
        yb = spec.get("young_beta", "matched")
        b = beta if yb == "matched" else float(yb)
        rep = criteria.b_plus_minus(young.LogPower(b, 1.0), mu)
        return [alpha, b] + rep.csv_row()
    if kind == "beckner":
        tb = spec.get("t_beta", "matched")
        b = beta if tb == "matched" else float(tb)
        rep = criteria.beckner_b(lambda r: r**b, mu)
        return [alpha, b] + rep.csv_row()
    if kind == "phi_sobolev":
        eta = float(spec.get("eta", 2.0))
        vb = float(spec.get("vbeta", 0.5))
        rep = criteria.phi_sobolev_b_tilde(
            lambda x: math.log(eta + x) ** vb, mu
        )
        return [alpha, vb] + rep.csv_row()
    if kind == "asymptotic":
        win = spec.get("window", [10.0, 1e4])
        a = alpha
        rep = criteria.asymptotic_criterion(
            young.LogPower(beta, 1.0),
            lambda x: x**a,
            lambda x: a * x ** (a - 1.0),
            lambda x: a * (a - 1.0) * x ** (a - 2.0) if a != 1.0 else 0.0 * x,
            (float(win[0]), float(win[1])),
        )
        return [alpha, beta] + rep.csv_row()
    raise UsageError(f"unknown criterion kind {kind!r}")


def measure_for_sweep(cfg, alpha):
    return build_measure(cfg, alpha=alpha)


def cmd_criterion(cfg, out, seed, threads):
    spec = cfg.get("criterion", {})
    kind = spec.get("kind", "b_plus_minus")
    alphas = [float(a) for a in spec.get("alphas", [])]
    if not alphas:
        alphas = [float(cfg.get("measure", {}).get("alpha", 2.0))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda a: _criterion_row(kind, cfg, a), alphas))
    header = (
        ["alpha", "param", "criterion", "verdict", "inf_g", "g_end", "slope", "curvature"]
        if kind == "asymptotic"
        else ["alpha", "param", "criterion", "b_plus", "b_minus", "lower", "upper",
              "argmax_x", "k_const"]
    )
    write_csv(out / "criterion.csv", header, rows)
    return 0


def cmd_simulate(cfg, out, seed, threads):
    mu = build_measure(cfg)
    phi = build_young(cfg, mu)
    spec = cfg.get("simulate", {})
    rng = np.random.default_rng(seed)
    f = build_function(spec.get("f", "x"), mu, rng)
    gen = semigroup.build_generator(mu)
    trace = semigroup.evolve(
        gen,
        f,
        float(spec.get("t_final", 1.0)),
        dt=float(spec.get("dt", 1e-3)),
        n_samples=int(spec.get("n_samples", 21)),
        phi=phi,
    )
    rows = list(
        zip(trace.times, trace.variance, trace.orlicz, trace.orlicz_sq,
            trace.entropy_sq, trace.energy)
    )
    write_csv(out / "trace.csv",
              ["t", "variance", "orlicz_norm", "orlicz_norm_sq", "entropy", "energy"],
              rows)
    _write_plot_data(out / "plot_variance.dat", trace.times, trace.variance)
    _write_plot_data(out / "plot_orlicz.dat", trace.times, trace.orlicz)
    verdict_rows = []
    if spec.get("checks", True):
        gap, c_p = semigroup.spectral_gap(gen)
        verdict_rows.append(["spectral_gap", "VALUE", gap, ""])
        beta = mu.meta.get("beta", 0.0)
        crep = criteria.b_plus_minus(
            young.LogPower(beta, 1.0) if beta > 0 else young.Power(1), mu
        )
        if not crep.diverged:
            c_os = crep.upper_bound
            base = getattr(phi, "base", None)
            if base is not None and getattr(base, "gamma", 1.0) > 1.0:
                ell = 2.0 * math.log(base.gamma) ** base.beta
                bconst = 4.0 ** (1.0 + base.beta) - 1.0
                v = semigroup.check_square_norm_decay(trace, ell, bconst, c_os)
                verdict_rows.append(
                    ["square_norm_decay", "PASS" if v.passed else "FAIL",
                     v.max_violation, v.detail]
                )
            else:
                v = semigroup.check_two_regime_decay(trace, c_os, beta)
                verdict_rows.append(
                    ["two_regime_decay", "PASS" if v.passed else "FAIL",
                     v.max_violation, v.detail]
                )
            # raw Orlicz-norm monotonicity holds for every Young phi
            v2 = semigroup.check_orlicz_decay(trace, 0.0)
            verdict_rows.append(
                ["orlicz_monotone", "PASS" if v2.passed else "FAIL",
                 v2.max_violation, v2.detail]
            )
        rec = semigroup.monotone_functionals(
            f, gen, omega=float(spec.get("omega_frac", 0.5)) *
            semigroup.measure_decay_rate(trace.times, trace.variance),
            t_char=float(spec.get("t_char", 1.0)),
        )
        verdict_rows.append(
            ["monotone_sup", "PASS" if rec.sup_passed else "FAIL", rec.omega, ""]
        )
        verdict_rows.append(
            ["monotone_avg", "PASS" if rec.avg_passed else "FAIL", rec.omega, ""]
        )
    write_csv(out / "verdicts.csv", ["check", "verdict", "value", "detail"],
              verdict_rows)
    return 0


def cmd_envelope(cfg, out, seed, threads):
    spec = cfg.get("envelope", {})
    beta = float(spec.get("beta", 2.0 / 3.0))
    delta = float(spec.get("delta", 1.0 / 3.0))
    c = float(spec.get("c", 1.0))
    form = spec.get("form", "power")
    times = np.logspace(
        math.log10(float(spec.get("t_min", 0.01))),
        math.log10(float(spec.get("t_max", 10.0))),
        int(spec.get("n_times", 100)),
    )
    if form == "power":
        theta = nash.ClosedTheta("power", beta / delta)
    elif form == "log":
        theta = nash.ClosedTheta("log", beta / delta)
    elif form == "matched":
        mu = build_measure(cfg)
        phi = build_young(cfg, mu)
        theta = nash.ThetaSpec.from_family(phi, "log", delta)
    else:
        raise UsageError(f"unknown envelope form {form!r}")
    env = nash.envelope_solve(theta, c, times)
    gamma = nash.condition_d(env, times[:: max(1, len(times) // 16)])
    rows = [
        [t, m, env.big_m_prime(t), gamma]
        for t, m in zip(env.times, env.m_values)
    ]
    write_csv(out / "envelope.csv", ["t", "m", "M_prime", "gamma_local"], rows)
    _write_plot_data(out / "plot_envelope.dat", env.times, env.m_values)
    if spec.get("loop", False):
        mu = build_measure(cfg)
        phi = build_young(cfg, mu)
        tspec = nash.ThetaSpec.from_family(phi, "log", delta)
        rng = np.random.default_rng(seed)
        batch = [norms.random_piecewise_linear(mu, rng)
                 for _ in range(int(spec.get("batch", 10)))]
        rep = nash.equivalence_loop(mu, phi, tspec, batch)
        rows = [
            ["c_os", rep.c_os], ["c_nash", rep.c_nash],
            ["c_nash_uncentered", rep.c_nash_uncentered],
            ["capacity_const", rep.capacity_const],
            ["c_os_final", rep.c_os_final], ["blowup", rep.blowup_factor],
            ["lambda9", rep.lambda9], ["lambda16", rep.lambda16],
            ["lambda_prime", rep.lambda_prime],
            ["passed", 1.0 if rep.passed else 0.0],
        ]
        write_csv(out / "loop.csv", ["constant", "value"], rows)
    return 0


_NETWORK_SOURCES = {
    "norm_duality": ("norms.csv", "||f||_Phi <= N_Phi(f) <= 2||f||_Phi"),
    "poincare": ("criterion.csv", "Poincare var <= C energy"),
    "orlicz_sobolev": ("criterion.csv", "||(f-mu f)^2||_Phi <= C energy"),
    "beckner": ("criterion.csv", "Beckner sup_p deficit / T(2-p) <= C energy"),
    "phi_sobolev": ("criterion.csv", "additive Phi-Sobolev"),
    "decay": ("verdicts.csv", "exponential Orlicz decay of P_t"),
    "nash": ("loop.csv", "Nash-type var theta(...) <= C energy"),
    "envelope": ("envelope.csv", "var(P_t f) <= m(t) ||f - mu f||_Psi^2"),
}


def cmd_report(cfg, out, seed, threads):
    present = {p.name for p in out.glob("*.csv")}
    if not present:
        raise criteria.CriterionError(f"no input CSVs found in {out}")
    rows = []
    for node, (src, statement) in sorted(_NETWORK_SOURCES.items()):
        status = "available" if src in present else "missing"
        detail = ""
        if src in present and src == "criterion.csv":
            with open(out / src, newline="") as fh:
                data = list(csv.reader(fh))
            detail = f"{len(data) - 1} rows"
        if src in present and src == "verdicts.csv":
            with open(out / src, newline="") as fh:
                data = list(csv.reader(fh))[1:]
            fails = [r for r in data if r[1] == "FAIL"]
            detail = "all PASS" if not fails else f"{len(fails)} FAIL"
        rows.append([node, statement, src, status, detail])
    write_csv(out / "implication_network.csv",
              ["node", "statement", "source", "status", "detail"], rows)
    return 0


_COMMANDS = {
    "norm": cmd_norm,
    "criterion": cmd_criterion,
    "simulate": cmd_simulate,
    "envelope": cmd_envelope,
    "report": cmd_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="ineqlab", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        out_dir = args.out or cfg.get("output", {}).get("dir", "out")
        seed = args.seed if args.seed is not None else int(
            cfg.get("output", {}).get("seed", 0)
        )
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("INEQLAB_THREADS", "1"))
        if threads < 1:
            raise UsageError("--threads must be >= 1")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, seed, threads)
    except UsageError as exc:
        print(f"ineqlab: usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # computational failures -> exit 2
        print(f"ineqlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
