"""Command-line interface.

Every subcommand emits a single JSON object on stdout (results or a run
manifest for file-producing commands), prints numbers with 17 significant
digits, and uses exit codes 0 (success), 1 (computational failure),
2 (usage error).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .chifactor import ChiContext, chi, chi_derivative, chi_log_deriv_ratio
from .forms import (FormError, build_eigenform, cache_checksum, cache_path,
                    lambda_coeff)
from .lseries import EvalRequest, EvaluationError, evaluate
from .meanvalue import QuadSpec, moment_report, rankin_constant, report_to_csv
from .smoothing import k_phi, make_phi, phi_norm

_G = ".17g"


def _fmt(x) -> str:
    return format(x, _G)


def _manifest(subcommand: str, params: dict, output_bytes: bytes,
              wall: float, cache_file: Path | None = None) -> dict:
    return {
        "subcommand": subcommand,
        "parameters": params,
        "library_version": __version__,
        "coefficient_cache_checksum": cache_checksum(cache_file) if cache_file else "",
        "wall_clock_seconds": wall,
        "output_checksum": hashlib.sha256(output_bytes).hexdigest(),
    }


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_coeffs(args) -> int:
    start = time.time()
    form = build_eigenform(args.weight, args.n_max)
    lines = ["n,a,lambda"]
    for n in range(1, args.n_max + 1):
        lines.append(f"{n},{form.coeffs[n]},{_fmt(lambda_coeff(form, n))}")
    csv_text = "\n".join(lines) + "\n"
    data = csv_text.encode()
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(csv_text)
    manifest = _manifest("coeffs", {"weight": args.weight, "n_max": args.n_max,
                                    "out": args.out}, data, time.time() - start,
                         cache_path(args.weight, args.n_max))
    if args.out:
        _emit({"manifest": manifest})
    else:
        sys.stderr.write(json.dumps({"manifest": manifest}) + "\n")
    return 0


def _cmd_eval(args) -> int:
    start = time.time()
    form = build_eigenform(args.weight, args.n_max)
    request = EvalRequest(form=form, m=args.m, s=complex(args.sigma, args.t),
                          method=args.method, l=args.l, y1=args.y1, y2=args.y2)
    result = evaluate(request)
    body = {
        "re": float(result.value.real),
        "im": float(result.value.imag),
        "re_str": _fmt(result.value.real),
        "im_str": _fmt(result.value.imag),
        "method": result.method,
        "err_estimate": float(result.err_estimate),
        "terms_used": result.terms_used,
    }
    params = {k: getattr(args, k) for k in
              ("weight", "m", "sigma", "t", "method", "l", "y1", "y2", "n_max")}
    body["manifest"] = _manifest("eval", params,
                                 json.dumps(body, sort_keys=True).encode(),
                                 time.time() - start,
                                 cache_path(args.weight, args.n_max))
    _emit(body)
    return 0


def _cmd_meanvalue(args) -> int:
    start = time.time()
    form = build_eigenform(args.weight, args.n_max)
    grid = [float(x) for x in args.T_grid.split(",")]
    quad = QuadSpec(threads=args.threads, oracle_cutoff=args.oracle_cutoff)
    report = moment_report(form, args.m, args.sigma, grid, quad)
    csv_text = report_to_csv(report)
    data = csv_text.encode()
    out = Path(args.out)
    out.write_bytes(data)
    from .meanvalue import report_metadata
    meta = report_metadata(report, {"weight": args.weight})
    out.with_suffix(out.suffix + ".meta.json").write_text(meta)
    params = {k: getattr(args, k) for k in
              ("weight", "m", "sigma", "T_grid", "out", "threads", "n_max")}
    _emit({"manifest": _manifest("meanvalue", params, data, time.time() - start,
                                 cache_path(args.weight, args.n_max))})
    return 0


def _cmd_chi(args) -> int:
    start = time.time()
    form = build_eigenform(args.weight, max(args.n_max, 16))
    ctx = ChiContext(form)
    s = complex(args.sigma, args.t)
    value = chi_derivative(ctx, args.r, s) if args.r else chi(ctx, s)
    body = {
        "re": float(value.real),
        "im": float(value.imag),
        "re_str": _fmt(value.real),
        "im_str": _fmt(value.imag),
        "modulus": _fmt(abs(value)),
        "r": args.r,
    }
    if args.r:
        ratio = chi_log_deriv_ratio(ctx, args.r, s)
        body["log_deriv_ratio"] = {"re": _fmt(ratio.real), "im": _fmt(ratio.imag)}
    params = {k: getattr(args, k) for k in ("weight", "r", "sigma", "t")}
    body["manifest"] = _manifest("chi", params,
                                 json.dumps(body, sort_keys=True).encode(),
                                 time.time() - start)
    _emit(body)
    return 0


def _cmd_smoothing_test(args) -> int:
    start = time.time()
    phi = make_phi()
    checks = {}
    checks["k_phi_zero"] = {"value": _fmt(abs(k_phi(phi, 0.0))), "expected": "1", "pass": k_phi(phi, 0.0) == 1.0}
    w = complex(1.0, 1.0)
    k1 = k_phi(phi, w, l=1)
    k3 = k_phi(phi, w, l=3)
    checks["representation_agreement"] = {
        "difference": _fmt(abs(k1 - k3)), "pass": abs(k1 - k3) < 1e-9}
    phi0 = phi.reflected()
    refl = abs(k_phi(phi, w, l=2) - k_phi(phi0, -w, l=2))
    checks["reflection_identity"] = {"difference": _fmt(refl), "pass": refl < 1e-8}
    checks["unit_gradient_norm"] = {
        "value": _fmt(phi_norm(phi, 1)), "pass": phi_norm(phi, 1) == 1.0}
    body = {"checks": checks, "all_pass": all(c["pass"] for c in checks.values())}
    body["manifest"] = _manifest("smoothing-test", {},
                                 json.dumps(body, sort_keys=True).encode(),
                                 time.time() - start)
    _emit(body)
    return 0 if body["all_pass"] else 1


def _cmd_rankin(args) -> int:
    start = time.time()
    form = build_eigenform(args.weight, args.x_max)
    est = rankin_constant(form, args.x_max)
    body = {
        "c_f": _fmt(est.c_f),
        "fluctuation": _fmt(est.fluctuation),
        "table": [{"x": x, "slope": _fmt(sl)}
                  for x, sl in zip(est.x_grid, est.partial_slopes)],
    }
    params = {"weight": args.weight, "x_max": args.x_max}
    body["manifest"] = _manifest("rankin", params,
                                 json.dumps(body, sort_keys=True).encode(),
                                 time.time() - start,
                                 cache_path(args.weight, args.x_max))
    _emit(body)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cusplfn",
        description="L-functions of level-1 Hecke eigenforms: coefficients, "
                    "evaluation, functional-equation factor, second moments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="write a CSV of exact coefficients")
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--n-max", dest="n_max", type=int, default=1024)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("eval", help="evaluate L^(m)(sigma + it)")
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--method", type=str, default="auto",
                   choices=["auto", "dirichlet", "oracle", "afe_sharp", "afe_smoothed"])
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--y1", type=float, default=None)
    p.add_argument("--y2", type=float, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=2048)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("meanvalue", help="second-moment report over a T grid")
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--T-grid", dest="T_grid", type=str, required=True)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--oracle-cutoff", dest="oracle_cutoff", type=float, default=40.0)
    p.add_argument("--n-max", dest="n_max", type=int, default=4096)
    p.set_defaults(func=_cmd_meanvalue)

    p = sub.add_parser("chi", help="functional-equation factor and derivatives")
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--n-max", dest="n_max", type=int, default=16)
    p.set_defaults(func=_cmd_chi)

    p = sub.add_parser("smoothing-test", help="cutoff self-checks (K identities)")
    p.set_defaults(func=_cmd_smoothing_test)

    p = sub.add_parser("rankin", help="Rankin slope estimate")
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--x-max", dest="x_max", type=int, required=True)
    p.set_defaults(func=_cmd_rankin)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormError, EvaluationError, ValueError, ArithmeticError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
