"""Command-line reproduction of the cavity and trapped-ion scenarios.

Exit codes: 0 success, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .analysis import (
    FitError,
    TimeSeries,
    estimate_tau_exact,
    estimate_tau_small,
    fit_damped_cosine,
    fit_power_law,
    transit_time_spread,
)
from .averaging import (
    RNG_ALGORITHM,
    GammaTimeLaw,
    IntegrationError,
    PulseAreaLaw,
    area_moments,
    area_pdf,
    averaged_propagate_mc,
    gamma_pdf,
    integrate_me_second_order,
    kernel_moments,
)
from .models import (
    CavityQedParams,
    IonTrapParams,
    damped_rabi_probability,
    gamma_n_predicted,
    gamma_nu_exact,
    gamma_small_tau,
    ion_probability,
    ion_rabi_frequency,
    jc_hamiltonian,
    jc_index,
    omega_from_omega0,
    vacuum_rabi_probability,
)
from .qcore import ValidationError, pure_state, spectral_decompose

SCHEMA_VERSION = 1
TWO_PI = 2.0 * math.pi


class InputError(ValueError):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer)) else _fmt(v)) for v in row])
    return buf.getvalue()


def _json_text(summary) -> str:
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, (np.floating, float)):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        return o

    return json.dumps(clean(summary), indent=2, sort_keys=True) + "\n"


def _emit(args, csv_text, summary) -> None:
    # build everything first so a failure never leaves a partial file
    json_text = _json_text(summary)
    if args.out_csv and csv_text is not None:
        _atomic_write(args.out_csv, csv_text)
    if args.out_json:
        _atomic_write(args.out_json, json_text)
    else:
        sys.stdout.write(json_text)


def _base_summary(args, scenario):
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "nondissipative", "version": __version__},
        "scenario": scenario,
        "rng": {"algorithm": RNG_ALGORITHM, "seed": args.seed},
    }


def _positive(name, value, allow_zero=False):
    if value is None:
        raise InputError(f"--{name.replace('_', '-')} is required")
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise InputError(f"--{name.replace('_', '-')} must be {'>= 0' if allow_zero else '> 0'}, got {value}")
    return value


def _resolve_tau(args, default):
    if args.tau_s is not None and args.tau_us is not None:
        raise InputError("give either --tau-s or --tau-us, not both")
    if args.tau_us is not None:
        return _positive("tau_us", args.tau_us, allow_zero=True) * 1e-6
    if args.tau_s is not None:
        return _positive("tau_s", args.tau_s, allow_zero=True)
    return default


def run_cavity(args):
    omega_r = TWO_PI * _positive("rabi_khz", args.rabi_khz) * 1e3
    t_max = _positive("t_max_us", args.t_max_us) * 1e-6
    steps = int(_positive("steps", args.steps))
    gamma_exp = 1.0 / (_positive("gamma_inv_us", args.gamma_inv_us) * 1e-6)
    tau_small = estimate_tau_small(gamma_exp, omega_r)
    try:
        tau_exact = estimate_tau_exact(gamma_exp, omega_r)
    except FitError:
        tau_exact = None
    tau = tau_small if args.estimate_tau else _resolve_tau(args, 5.066e-7)

    t = np.linspace(0.0, t_max, steps + 1)
    p_unitary = vacuum_rabi_probability(omega_r, t)
    p_closed = damped_rabi_probability(omega_r, tau, t) if tau > 0 else p_unitary.copy()

    g = jc_hamiltonian(CavityQedParams(omega_r, 1))
    spec = spectral_decompose(g)
    rho0 = pure_state(g.dim, jc_index("e", 0, 1))
    target = jc_index("g", 1, 1)
    p_me2 = integrate_me_second_order(rho0, g, tau, t, spec=spec).expectation(target)

    columns = [t, p_unitary, p_closed]
    header = ["t_s", "p_unitary", "p_avg_closed"]
    if args.mc_samples > 0:
        if tau > 0:
            p_mc = np.empty_like(t)
            p_mc[0] = 0.0
            for k in range(1, t.size):
                rho = averaged_propagate_mc(rho0, g, GammaTimeLaw(t[k], tau), args.mc_samples, args.seed + k, spec=spec)
                p_mc[k] = rho.population(target)
        else:
            p_mc = p_unitary.copy()
        columns.append(p_mc)
        header.append("p_avg_mc")
    columns.append(p_me2)
    header.append("p_me2")

    summary = _base_summary(args, "cavity")
    summary["parameters"] = {
        "omega_r_rad_s": omega_r,
        "tau_s": tau,
        "t_max_s": t_max,
        "steps": steps,
        "mc_samples": args.mc_samples,
        "gamma_experimental_per_s": gamma_exp,
    }
    derived = {"gamma_small_tau_per_s": float(gamma_small_tau(omega_r, tau))}
    if tau > 0:
        gamma, nu = gamma_nu_exact(omega_r, tau)
    else:
        gamma, nu = 0.0, 2 * omega_r
    derived.update(
        gamma_exact_per_s=gamma,
        nu_rad_s=nu,
        nu_over_2omega_r=nu / (2 * omega_r),
        tau_estimate_small_s=tau_small,
        tau_estimate_exact_s=tau_exact,
    )
    t_mean, dt = transit_time_spread(args.waist_cm * 1e-2, args.velocity, args.frac_v)
    derived["transit_time"] = {
        "waist_m": args.waist_cm * 1e-2,
        "v_mean_m_s": args.velocity,
        "frac_v": args.frac_v,
        "t_mean_s": t_mean,
        "delta_t_s": dt,
    }
    summary["derived"] = derived
    return _csv_text(header, zip(*columns)), summary


def _ion_params(args):
    eta = args.eta
    if not 0 < eta < 1:
        raise InputError(f"--eta must lie in (0, 1), got {eta}")
    if args.omega_khz is not None and args.omega0_khz is not None:
        raise InputError("give either --omega0-khz or --omega-khz, not both")
    if args.omega_khz is not None:
        omega = TWO_PI * _positive("omega_khz", args.omega_khz) * 1e3
    else:
        omega0 = TWO_PI * _positive("omega0_khz", args.omega0_khz if args.omega0_khz is not None else 94.0) * 1e3
        omega = omega_from_omega0(omega0, eta)
    n_max = args.n_max
    if n_max < 0:
        raise InputError("--n-max must be >= 0")
    return IonTrapParams(omega, eta, n_max)


def run_ion(args):
    p = _ion_params(args)
    omega0 = ion_rabi_frequency(p, 0)
    gamma0 = _positive("gamma0_khz", args.gamma0_khz) * 1e3
    tau_from_gamma0 = estimate_tau_small(gamma0, omega0)
    tau = _resolve_tau(args, tau_from_gamma0)
    t_max = _positive("t_max_us", args.t_max_us) * 1e-6
    steps = int(_positive("steps", args.steps))
    t = np.linspace(0.0, t_max, steps + 1)

    rows = []
    table = []
    for n in range(p.n_max + 1):
        pd = ion_probability(n, t, tau, p, mode=args.decay_mode)
        rows.extend((n, tk, pk) for tk, pk in zip(t, pd))
        om = ion_rabi_frequency(p, n)
        if tau > 0 and args.decay_mode == "exact":
            g_exact, nu = gamma_nu_exact(abs(om), tau)
        else:
            g_exact, nu = gamma_n_predicted(p, tau, n), 2 * abs(om)
        table.append(
            {
                "n": n,
                "omega_n_rad_s": om,
                "omega_n_over_omega_0": om / omega0,
                "gamma_n_per_s": g_exact,
                "gamma_n_small_tau_per_s": gamma_n_predicted(p, tau, n),
                "nu_n_rad_s": nu,
            }
        )

    summary = _base_summary(args, "ion")
    summary["parameters"] = {
        "omega_rad_s": p.omega,
        "omega_0_rad_s": omega0,
        "eta": p.eta,
        "n_max": p.n_max,
        "tau_s": tau,
        "decay_mode": args.decay_mode,
        "t_max_s": t_max,
        "steps": steps,
        "gamma_0_experimental_per_s": gamma0,
    }
    derived = {"table": table, "tau_from_gamma0_s": tau_from_gamma0}
    if p.n_max >= 2:
        ratios = [(row["n"] + 1, abs(row["omega_n_over_omega_0"])) for row in table]
        om_fit = fit_power_law(ratios)
        g_fit = fit_power_law([(x, r * r) for x, r in ratios])
        derived["omega_power_law"] = om_fit.as_dict()
        derived["gamma_power_law"] = g_fit.as_dict()
    summary["derived"] = derived
    return _csv_text(["n", "t_s", "p_down"], rows), summary


def run_kernel(args):
    t = args.t_s
    tau = args.tau_s
    if t is None or t <= 0:
        raise InputError("--t-s must be > 0: at t = 0 the kernel is a Dirac delta with no density")
    if tau is None or tau <= 0:
        raise InputError("--tau-s must be > 0")
    points = int(_positive("points", args.points))
    summary = _base_summary(args, "kernel")
    if args.area:
        omega = TWO_PI * _positive("omega_khz", args.omega_khz) * 1e3
        law = PulseAreaLaw(t, tau, omega)
        scale = omega
        pdf = area_pdf
        mean, var = area_moments(law)
    else:
        law = GammaTimeLaw(t, tau)
        scale = 1.0
        pdf = gamma_pdf
        mean, var = t, t * tau
    x_max = args.x_max if args.x_max is not None else scale * (t + 12.0 * math.sqrt(t * tau) + 30.0 * tau)
    _positive("x_max", x_max)
    x = np.linspace(0.0, x_max, points)
    # the density diverges at 0 when t < tau
    if t < tau:
        x = x[1:]
    y = pdf(law, x)
    m = kernel_moments(law)
    summary["parameters"] = {"t_s": t, "tau_s": tau, "area": bool(args.area), "x_max": x_max, "points": points}
    if args.area:
        summary["parameters"]["omega_rad_s"] = law.omega
    summary["moments"] = {
        "normalization": m["normalization"],
        "mean": m["mean"],
        "variance": m["variance"],
        "skewness": m["skewness"],
        "mean_closed_form": mean,
        "variance_closed_form": var,
        "skewness_closed_form": 2.0 / math.sqrt(t / tau),
        "fractional_spread": math.sqrt(var) / mean,
    }
    return _csv_text(["x", "pdf"], zip(x, y)), summary


def _read_csv(path, wanted):
    """Read numeric columns; raises InputError naming the offending line."""
    try:
        with open(path, newline="") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    lines = [(i + 1, row) for i, row in enumerate(lines) if row and any(c.strip() for c in row)]
    if not lines:
        raise InputError(f"{path}: empty file")
    lineno, header = lines[0]
    header = [h.strip() for h in header]
    idx = []
    for options in wanted:
        found = [header.index(o) for o in options if o in header]
        if not found:
            raise InputError(f"{path}:{lineno}: header lacks column {' or '.join(options)}")
        idx.append(found[0])
    data = []
    for lineno, row in lines[1:]:
        try:
            data.append([float(row[i]) for i in idx])
        except (ValueError, IndexError) as exc:
            raise InputError(f"{path}:{lineno}: malformed row {row!r}") from exc
    if not data:
        raise InputError(f"{path}: no data rows")
    return np.array(data)


def run_fit(args):
    if args.input is None and args.power_law is None:
        raise InputError("fit needs --input and/or --power-law")
    summary = _base_summary(args, "fit")
    summary["parameters"] = {"input": args.input, "column": args.column, "power_law": args.power_law}
    if args.input is not None:
        data = _read_csv(args.input, [("t_s",), (args.column,)])
        try:
            series = TimeSeries(data[:, 0], data[:, 1])
        except ValueError as exc:
            raise InputError(f"{args.input}: {exc}") from exc
        fit = fit_damped_cosine(series)
        summary["damped_cosine"] = fit.as_dict()
    if args.power_law is not None:
        data = _read_csv(args.power_law, [("n_plus_1", "n"), ("value",)])
        with open(args.power_law, newline="") as fh:
            head = next(csv.reader(fh))
        x = data[:, 0] if "n_plus_1" in [h.strip() for h in head] else data[:, 0] + 1.0
        try:
            pl = fit_power_law(np.column_stack([x, data[:, 1]]))
        except ValueError as exc:
            raise InputError(f"{args.power_law}: {exc}") from exc
        summary["power_law"] = pl.as_dict()
    return None, summary


def _shared(p):
    p.add_argument("--out-csv", help="CSV output path")
    p.add_argument("--out-json", help="JSON summary path (stdout if omitted)")
    p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    p.add_argument("--mc-samples", type=int, default=10000, help="Monte-Carlo draws per time point (0 disables)")
    p.add_argument("--config", help="JSON file with the same keys as the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nondissipative", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cavity", help="damped vacuum Rabi oscillation")
    _shared(c)
    c.add_argument("--rabi-khz", type=float, default=25.0, help="Omega_R / 2pi in kHz")
    c.add_argument("--tau-s", type=float)
    c.add_argument("--tau-us", type=float)
    c.add_argument("--t-max-us", type=float, default=100.0)
    c.add_argument("--steps", type=int, default=1000)
    c.add_argument("--estimate-tau", action="store_true", help="simulate with tau estimated from --gamma-inv-us")
    c.add_argument("--gamma-inv-us", type=float, default=40.0, help="measured 1/gamma in microseconds")
    c.add_argument("--waist-cm", type=float, default=0.6)
    c.add_argument("--velocity", type=float, default=300.0, help="mean atomic velocity, m/s")
    c.add_argument("--frac-v", type=float, default=0.01, help="relative velocity spread")
    c.set_defaults(func=run_cavity)

    i = sub.add_parser("ion", help="trapped-ion blue-sideband oscillations")
    _shared(i)
    i.add_argument("--omega0-khz", type=float, help="Omega_0 / 2pi at n = 0 in kHz (default 94)")
    i.add_argument("--omega-khz", type=float, help="bare Omega / 2pi in kHz")
    i.add_argument("--eta", type=float, default=0.202)
    i.add_argument("--n-max", type=int, default=16)
    i.add_argument("--tau-s", type=float)
    i.add_argument("--tau-us", type=float)
    i.add_argument("--gamma0-khz", type=float, default=11.9, help="measured gamma_0 in 10^3 1/s")
    i.add_argument("--decay-mode", choices=("exact", "small-tau"), default="exact")
    i.add_argument("--t-max-us", type=float, default=20.0)
    i.add_argument("--steps", type=int, default=400)
    i.set_defaults(func=run_ion)

    k = sub.add_parser("kernel", help="Gamma kernel of the evolution time or pulse area")
    _shared(k)
    k.add_argument("--t-s", type=float, default=1e-6)
    k.add_argument("--tau-s", type=float, default=1.706e-8)
    k.add_argument("--x-max", type=float)
    k.add_argument("--points", type=int, default=1001)
    k.add_argument("--area", action="store_true", help="pulse-area law instead of the time law")
    k.add_argument("--omega-khz", type=float, default=94.0)
    k.set_defaults(func=run_kernel)

    f = sub.add_parser("fit", help="fit an external trace")
    _shared(f)
    f.add_argument("--input", help="CSV with t_s and value columns")
    f.add_argument("--column", default="value", help="value column name in --input")
    f.add_argument("--power-law", help="CSV with n (or n_plus_1) and value columns")
    f.set_defaults(func=run_fit)
    return parser


def _apply_config(parser, argv):
    """Config values become defaults; explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load config {known.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a JSON object")
    cfg = {key.replace("-", "_"): v for key, v in cfg.items() if key not in ("scenario", "command")}
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    known_keys = set()
    for sp in sub.choices.values():
        dests = {a.dest for a in sp._actions}
        known_keys |= dests
        sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
    unknown = sorted(set(cfg) - known_keys)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.mc_samples < 0:
        print("error: --mc-samples must be >= 0", file=sys.stderr)
        return 2
    try:
        csv_text, summary = args.func(args)
        _emit(args, csv_text, summary)
    except (InputError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, IntegrationError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
