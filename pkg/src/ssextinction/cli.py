"""Command-line interface: ``ssextinction <command> --model ... [options]``.

Commands: phi, mellin, density, tail, simulate, verify, table.  Tables go to
stdout (or ``--output``) as CSV or JSON with floats at 17 significant digits.
Exit codes: 0 success, 1 numeric failure, 2 precondition or membership failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from .bernstein import (
    DomainError,
    IndeterminateError,
    IntegrationError,
    MembershipError,
    ModelSpec,
    ModelSpecError,
    STransform,
    load_model_spec,
    parse_model_spec,
    rescale,
)
from .mellin_models import (
    DensityNotAvailable,
    MellinLaw,
    StripError,
    TruncationError,
    _extinction_from_phi_beta,
    chi_law,
    extinction_law,
    density_mellin_barnes,
    density_series_gen_frechet,
    gen_frechet_law,
    lambda_law,
    markov_T_law,
    persistence_report,
    smoothness_index,
    survival,
    verify_theorem3,
)
from .monte_carlo import (
    SimConfig,
    sample_chi,
    sample_exponential_functional,
    sample_extinction,
    sample_inverse_subordinator,
    write_samples_csv,
)
from .special import PoleError
from .wphi import NonConvergenceError, euler_product, residual, w_phi_eval

EXIT_OK, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 1, 2
WORKERS_ENV = "SSEXTINCTION_WORKERS"
LAWS = ("T", "lambda", "extinction", "frechet", "chi")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# formatting


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def emit_table(columns, rows, fmt_name="csv"):
    if fmt_name == "json":
        return json.dumps([_jsonable(dict(zip(columns, r))) for r in rows], indent=2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def parse_table(text):
    """Inverse of the CSV emitter (numbers come back as floats)."""
    rows = list(csv.reader(io.StringIO(text)))
    out = []
    for r in rows[1:]:
        parsed = []
        for v in r:
            try:
                parsed.append(float(v))
            except ValueError:
                parsed.append(v)
        out.append(parsed)
    return rows[0], out


def parse_grid(text):
    """``start:stop:count[:lin|log]`` or a comma-separated list of values."""
    if ":" not in text:
        vals = [float(v) for v in text.split(",") if v.strip()]
        if not vals:
            raise CliError("empty grid", EXIT_PRECONDITION)
        return np.array(vals)
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise CliError(f"bad grid {text!r}", EXIT_PRECONDITION)
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    mode = parts[3] if len(parts) == 4 else "lin"
    if count < 1:
        raise CliError("grid count must be >= 1", EXIT_PRECONDITION)
    if mode == "log":
        if start <= 0 or stop <= 0:
            raise CliError("log grid needs positive endpoints", EXIT_PRECONDITION)
        return np.geomspace(start, stop, count)
    if mode != "lin":
        raise CliError("grid mode must be lin or log", EXIT_PRECONDITION)
    return np.linspace(start, stop, count)


# ---------------------------------------------------------------------------
# model resolution


def resolve_model(args) -> ModelSpec:
    src = args.model
    if src is None:
        raise CliError("--model is required", EXIT_PRECONDITION)
    spec = parse_model_spec(src) if "=" in src and not os.path.exists(src) else load_model_spec(src)
    overrides = {"a": args.a, "rho": args.rho, "b": args.b, "x": args.x, "t": args.t}
    if args.beta is not None:
        if spec.kind == "stable_subordinator":
            overrides["beta"] = args.beta
        else:
            overrides["time_change_beta"] = args.beta
    if args.time_change is not None:
        overrides["time_change"] = args.time_change
    return spec.with_overrides(**overrides)


def _phi_beta(spec: ModelSpec):
    """(phi, phi_beta) for a pair model's time change."""
    phi = spec.time_change_phi()
    if isinstance(phi, STransform):
        return phi, phi  # S_{phi+} is used as phi_beta itself
    return phi, rescale(phi, spec.beta)


def build_law(spec: ModelSpec, law: str) -> MellinLaw:
    if law == "frechet":
        phi = spec.pair.phi_minus if spec.is_pair else spec.phi
        beta = spec.time_change_beta if spec.time_change_beta is not None else 1.0
        return gen_frechet_law(phi, beta)
    if law == "lambda":
        phi = spec.time_change_phi() if spec.is_pair else spec.phi
        return lambda_law(phi, spec.beta, spec.t)
    if law == "chi":
        _, phib = _phi_beta(spec) if spec.is_pair else (None, rescale(spec.phi, spec.beta))
        return chi_law(phib, spec.beta)
    if not spec.is_pair:
        raise CliError(f"law {law!r} needs a Wiener-Hopf pair model (brownian or stable_example)", EXIT_PRECONDITION)
    pair = spec.pair
    if law == "T":
        return markov_T_law(pair, spec.x)
    if law == "extinction":
        phi, phib = _phi_beta(spec)
        if not isinstance(phi, STransform):
            return extinction_law(pair, phi, spec.beta, spec.x)
        try:
            idx = smoothness_index(pair, phib)
        except IndeterminateError:
            idx = None
        return _extinction_from_phi_beta(pair, phib, spec.beta, spec.x, extra={"smoothness": idx})
    raise CliError(f"unknown law {law!r}", EXIT_PRECONDITION)


# ---------------------------------------------------------------------------
# commands


def cmd_phi(spec, args):
    u = parse_grid(args.grid)
    if spec.is_pair:
        pair = spec.pair
        cols = ["u", "phi_minus", "phi_plus", "psi_alpha"]
        rows = [
            (x, float(np.real(pair.phi_minus(x))), float(np.real(pair.phi_plus(x))), float(np.real(pair.psi(x))))
            for x in u
        ]
        return cols, rows
    phi = spec.phi
    cols = ["u", "phi", "W_phi"]
    rows = []
    for x in u:
        w = float(np.real(w_phi_eval(phi, x))) if x > -phi.abscissa_astar else float("nan")
        rows.append((x, float(np.real(phi(x))), w))
    return cols, rows


def cmd_mellin(spec, args):
    law = build_law(spec, args.law)
    re = parse_grid(args.grid)
    rows = []
    for r in re:
        z = complex(r, args.imag)
        v = complex(law.mellin(z))
        rows.append((r, args.imag, v.real, v.imag))
    return ["re_z", "im_z", "re_M", "im_M"], rows


def _series_ok(phi, beta, t):
    cap = phi.value_at_infinity
    y = t ** (-beta)
    return y <= 2.0 and (not math.isfinite(cap) or y < cap)


def cmd_density(spec, args):
    law = build_law(spec, args.law)
    ts = parse_grid(args.grid)
    rows = []
    for t in ts:
        method = args.method
        if method == "series" and args.law != "frechet":
            raise CliError("series density is available for the frechet law only", EXIT_PRECONDITION)
        if method == "auto":
            method = "mellin_barnes"
            if args.law == "frechet":
                phi = spec.pair.phi_minus if spec.is_pair else spec.phi
                beta = law.params.get("beta", 1.0)
                if _series_ok(phi, beta, t):
                    method = "series"
        if method == "series":
            phi = spec.pair.phi_minus if spec.is_pair else spec.phi
            val = density_series_gen_frechet(phi, law.params.get("beta", 1.0), t)
            rows.append((t, val, "series", 0.0))
        else:
            r = density_mellin_barnes(law, t, full=True)
            rows.append((t, r.value, "mellin_barnes", r.error_estimate))
    return ["t", "density", "method", "error_estimate"], rows


def _tail_setup(spec, args):
    law = build_law(spec, args.law)
    if args.law == "frechet":
        phi = spec.pair.phi_minus if spec.is_pair else spec.phi
        beta = law.params.get("beta", 1.0)
        return law, beta, 1.0 / float(np.real(phi(1.0)))
    if args.law != "extinction":
        raise CliError("tail is available for the extinction and frechet laws", EXIT_PRECONDITION)
    phi, _ = _phi_beta(spec)
    if isinstance(phi, STransform):
        raise CliError("persistence constant needs a rescaled time change", EXIT_PRECONDITION)
    rep = persistence_report(spec.pair, phi, spec.beta, spec.x)
    return law, rep.tail_exponent, rep.limit_constant


def cmd_tail(spec, args):
    law, expo, limit = _tail_setup(spec, args)
    rows = []
    for t in parse_grid(args.grid):
        s = survival(law, t)
        rows.append((t, s, t**expo * s, limit))
    return ["t", "survival", "plateau", "limit_constant"], rows


def cmd_table(spec, args):
    law = build_law(spec, args.law)
    rows = []
    for t in parse_grid(args.grid):
        rows.append((t, density_mellin_barnes(law, t), survival(law, t)))
    return ["t", "density", "survival"], rows


def _config(args):
    workers = args.workers if args.workers is not None else int(os.environ.get(WORKERS_ENV, "1"))
    return SimConfig(seed=args.seed, n_paths=int(args.n), dt=args.dt, workers=workers)


def _simulate(spec, law, cfg):
    if law == "chi":
        _, phib = _phi_beta(spec) if spec.is_pair else (None, rescale(spec.phi, spec.beta))
        return sample_chi(phib, spec.beta, cfg)
    if law == "lambda":
        if spec.is_pair and spec.time_change not in (None, "stable"):
            raise CliError("lambda simulation supports the stable time change only", EXIT_PRECONDITION)
        if not spec.is_pair and spec.kind != "stable_subordinator":
            raise CliError("lambda simulation supports stable_subordinator models only", EXIT_PRECONDITION)
        return sample_inverse_subordinator(spec.beta, spec.t, cfg)
    if not spec.is_pair:
        raise CliError(f"law {law!r} needs a Wiener-Hopf pair model", EXIT_PRECONDITION)
    pair = spec.pair
    if law == "T":
        return sample_exponential_functional(pair, pair.alpha, spec.x, cfg)
    if law == "extinction":
        phi, phib = _phi_beta(spec)
        return sample_extinction(pair, None, spec.beta, spec.x, cfg, phi_beta=phib)
    raise CliError(f"law {law!r} cannot be simulated", EXIT_PRECONDITION)


def cmd_simulate(spec, args):
    cfg = _config(args)
    emp = _simulate(spec, args.law, cfg)
    if args.samples:
        write_samples_csv(args.samples, emp, cfg)
    law = None
    try:
        law = build_law(spec, args.law)
    except (CliError, DomainError, MembershipError):
        pass
    rows = []
    for z in parse_grid(args.grid):
        m, se = emp.empirical_mellin(z)
        exact = float(np.real(law.mellin(z))) if law is not None else float("nan")
        rows.append((z, m, se, exact, (m - exact) / se if se > 0 else 0.0, cfg.digest()))
    return ["z", "empirical_mellin", "std_error", "analytic_mellin", "z_score", "config_hash"], rows


# verification suites


def _check(name, value, tol):
    return {"name": name, "discrepancy": float(value), "tolerance": tol, "pass": bool(value <= tol)}


def suite_wphi(spec, args):
    phis = [("phi_minus", spec.pair.phi_minus), ("phi_plus", spec.pair.phi_plus)] if spec.is_pair else [("phi", spec.phi)]
    re = np.linspace(0.5, 3.0, 6)
    im = np.linspace(-5.0, 5.0, 11)
    z = (re[:, None] + 1j * im[None, :]).ravel()
    out = []
    for name, phi in phis:
        ref = None
        if phi.w_closed_form(z) is not None or hasattr(phi, "barnes_w"):
            ref = np.asarray(w_phi_eval(phi, z))
        eu = np.asarray(euler_product(phi, z))
        if ref is not None:
            out.append(_check(f"{name}_euler_vs_reference", np.max(np.abs(eu - ref) / np.abs(ref)), 1e-8))
        out.append(_check(f"{name}_functional_equation", np.max(residual(phi, z)), 1e-8))
    return out


def suite_theorem1(spec, args):
    if not spec.is_pair:
        raise CliError("theorem1 suite needs a Wiener-Hopf pair model", EXIT_PRECONDITION)
    law = build_law(spec, "extinction")
    out = [_check("mellin_at_zero", abs(complex(law.mellin(0.0)) - 1.0), 1e-10)]
    phi, phib = _phi_beta(spec)
    idx = smoothness_index(spec.pair, phib)
    if idx.N > 1:
        lo, hi = law.strip
        v = np.arange(-12.0, 45.0, 0.2)
        f = density_mellin_barnes(law, np.exp(v))
        for s in (max(lo, -1.0) * 0.5 + hi * 0.5 - 0.3, max(lo, -1.0) * 0.5 + hi * 0.5 - 0.6):
            num = float(np.trapezoid(np.exp((s + 1) * v) * f, v))
            out.append(_check(f"moment_closure_s={s:.3g}", abs(num - float(np.real(law.mellin(s)))), 1e-6))
    if not isinstance(phi, STransform):
        rep = persistence_report(spec.pair, phi, spec.beta, spec.x)
        t = 1e3
        plateau = t**rep.tail_exponent * survival(law, t)
        out.append(_check("persistence_plateau_t=1e3", abs(plateau / rep.limit_constant - 1), 0.10))
    return out


def suite_theorem3(spec, args):
    if not spec.is_pair:
        raise CliError("theorem3 suite needs a Wiener-Hopf pair model", EXIT_PRECONDITION)
    rep = verify_theorem3(spec.pair, spec.beta, spec.x)
    return [_check(k, v, 1e-8) for k, v in rep["checks"].items()]


def suite_mc(spec, args):
    cfg = _config(args)
    band = 3.0 if cfg.n_paths >= 100_000 else 4.0
    law_name = "extinction" if spec.is_pair else "lambda"
    law = build_law(spec, law_name)
    emp = _simulate(spec, law_name, cfg)
    lo, hi = law.strip
    lo = max(lo, -1.0)
    out = []
    for z in (lo + 0.35 * (min(hi, 1.0) - lo), lo + 0.65 * (min(hi, 1.0) - lo)):
        m, se = emp.empirical_mellin(z)
        exact = float(np.real(law.mellin(z)))
        out.append(_check(f"mellin_z={z:.3g}_in_se", abs(m - exact) / se, band))
    return out


SUITES = {"wphi": suite_wphi, "theorem1": suite_theorem1, "theorem3": suite_theorem3, "mc": suite_mc}


def cmd_verify(spec, args):
    checks = SUITES[args.suite](spec, args)
    return {"suite": args.suite, "model": spec.kind, "checks": checks, "pass": all(c["pass"] for c in checks)}


COMMANDS = {
    "phi": cmd_phi,
    "mellin": cmd_mellin,
    "density": cmd_density,
    "tail": cmd_tail,
    "table": cmd_table,
    "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="ssextinction", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(COMMANDS) + ["verify"])
    p.add_argument("--model", help="model-spec file or inline 'kind=..., key=value' text")
    p.add_argument("--law", choices=LAWS, default="extinction")
    p.add_argument("--grid", default="0.5:5:10", help="start:stop:count[:lin|log] or comma list")
    p.add_argument("--imag", type=float, default=0.0, help="imaginary part for mellin")
    p.add_argument("--method", choices=("series", "mellin_barnes", "auto"), default="auto")
    p.add_argument("--suite", choices=list(SUITES), default="wphi")
    p.add_argument("--output", help="write the table/report here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--samples", help="simulate: dump samples as CSV")
    for name in ("a", "rho", "b", "beta", "x", "t"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--alpha", type=float, help="checked against a*b for stable examples")
    p.add_argument("--time-change", dest="time_change", choices=("stable", "identity", "s_transform"))
    p.add_argument("--n", type=float, default=1e4)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--workers", type=int)
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        spec = resolve_model(args)
        if args.alpha is not None and spec.is_pair and abs(spec.pair.alpha - args.alpha) > 1e-12:
            raise CliError(f"--alpha {args.alpha} disagrees with the model's alpha {spec.pair.alpha}", EXIT_PRECONDITION)
        if args.command == "verify":
            report = cmd_verify(spec, args)
            text = json.dumps(_jsonable(report), indent=2)
            code = EXIT_OK if report["pass"] else EXIT_NUMERIC
        else:
            cols, rows = COMMANDS[args.command](spec, args)
            text = emit_table(cols, rows, args.format)
            code = EXIT_OK
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DensityNotAvailable as exc:
        print(f"density-not-available: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ModelSpecError, MembershipError, StripError, DomainError, PoleError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NonConvergenceError, TruncationError, IntegrationError, IndeterminateError, ArithmeticError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        stdout.write(text if text.endswith("\n") else text + "\n")
    return code


def main(argv: Optional[list] = None):
    sys.exit(run(argv))
