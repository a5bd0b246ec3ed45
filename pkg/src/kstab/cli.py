"""Command-line front end: ``kstab info|check|eval|scan``.

Exit codes: 0 when a report was produced (whatever the verdict), 2 for
input or usage errors, 3 when an internal invariant fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from decimal import Decimal, localcontext
from fractions import Fraction

from . import ratlat as rl
from .io import SchemaError, load_family, load_pl, serialize_pl
from .kfun import (
    functional_J,
    functional_L,
    functional_L_smooth,
    min_value,
    twist_reduced_jna,
)
from .polyint import integrate_facet
from .polytope import GeometryError
from .spherical import DatumError, SphericalDatum, SphericalFamily
from .verdict import (
    DEFAULT_DEPTH,
    Bracket,
    ScanError,
    Verdict,
    bisect_threshold,
    fano_check,
    full_criterion,
    grid,
    parametric_scan,
    search_chi,
)

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3
TWIST_TOL = Fraction(1, 1000)


class InvariantViolation(RuntimeError):
    pass


class UsageError(ValueError):
    pass


def q(x) -> str | None:
    return None if x is None else rl.format_rational(x)


def qv(v) -> list | None:
    return None if v is None else [q(x) for x in v]


def decimal_approx(x: Fraction, digits: int = 12) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(x.numerator) / Decimal(x.denominator))


# -- report builders ---------------------------------------------------------------


def _header(cmd: str, fam: SphericalFamily, digest: str, s, chi) -> dict:
    param = None
    if fam.parameter is not None:
        param = {"name": fam.parameter.name, "value": q(s)}
    return {
        "command": cmd,
        "input_sha256": digest,
        "name": fam.name,
        "rank": fam.rank,
        "parameter": param,
        "chi_index": chi,
    }


def info_report(d: SphericalDatum) -> dict:
    facets = []
    for f in d.delta.facets:
        facets.append(
            {
                "index": f.index,
                "normal": list(f.normal),
                "n": q(f.offset),
                "n_inv": q(d.n_inv(f.index)),
                "P_vanishes": d.p_vanishes_on(f.index),
                "int_P_dsigma": q(integrate_facet(d.P, f)),
            }
        )
    return {
        "V": q(d.V),
        "two_a": q(d.two_a),
        "P": repr(d.P),
        "Q": repr(d.Q),
        "P_degree": d.P.degree(),
        "Q_degree": d.Q.degree(),
        "vertices": [qv(v) for v in d.delta.vertices],
        "facets": facets,
        "valuation_cone": {
            "lin_basis": [list(v) for v in d.cone.lin_basis],
            "rays": [list(v) for v in d.cone.ray_gens],
        },
        "fano_mode": d.fano,
    }


def verdict_report(v: Verdict) -> dict:
    r = v.report
    cert = r.certificate
    counter = None
    if cert.point is not None:
        counter = {"point": qv(cert.point), "value": q(cert.value), "facet": cert.facet}
    cone = None
    if r.cone is not None:
        cone = {
            "lin_values": qv(r.cone.lin_values),
            "ray_values": qv(r.cone.ray_values),
            "lin_annihilated": r.cone.lin_annihilated,
            "rays_strict": r.cone.rays_strict,
        }
    mins = [rec.min_coefficient for rec in cert.records]
    return {
        "verdict": v.kind.value,
        "reason": v.reason,
        "witness": None if v.witness is None else {"slope": list(v.witness), "L": q(v.witness_value)},
        "V": q(r.V),
        "two_a": q(r.two_a),
        "mass": q(r.mass),
        "barycenter": qv(r.barycenter),
        "generators": [{"slope": list(s), "kind": k, "L": q(val)} for s, k, val in r.generators],
        "cone_check": cone,
        "certificate": {
            "outcome": cert.outcome.value,
            "depth": cert.depth,
            "simplices": len(cert.records),
            "leaves": sum(rec.leaves for rec in cert.records),
            "min_coefficient": q(min(mins)) if mins else None,
            "counterexample": counter,
        },
    }


def fano_report(d: SphericalDatum) -> dict:
    fc = fano_check(d)
    return {
        "two_a": q(fc.two_a),
        "expected_two_a": q(fc.expected_two_a),
        "two_a_ok": fc.two_a_ok,
        "identity_ok": fc.identity_ok,
        "residuals": [{"facet": i, "residual": repr(p)} for i, p in fc.residuals],
    }


def eval_report(d: SphericalDatum, g) -> dict:
    L = functional_L(d, g)
    Ls = functional_L_smooth(d, g)
    J = functional_J(d, g)
    tw = twist_reduced_jna(d, g, TWIST_TOL)
    slopes_ok = all(d.cone.contains(s) for s, _ in g.pieces)
    return {
        "pl": serialize_pl(g),
        "L": q(L),
        "L_smooth": q(Ls),
        "identity_holds": L == Ls,
        "J": q(J),
        "MNA": q(L / (2 * d.V)),
        "JNA": q(J / d.V),
        "JNA_twist_reduced": {
            "value": q(tw.value),
            "twist": qv(tw.twist),
            "tol": q(TWIST_TOL),
            "bracket_width": q(tw.bracket_width),
            "value_bound": q(tw.value_bound),
            "converged": tw.converged,
        },
        "test_configuration": {"slopes_in_cone": slopes_ok, "positive": min_value(d, g) > 0},
    }


def bracket_report(b: Bracket, width: Fraction) -> dict:
    return {
        "bracket": [q(b.lo), q(b.hi)],
        "requested_width": q(width),
        "midpoint": q(b.midpoint),
        "midpoint_decimal_approx": decimal_approx(b.midpoint),
        "bisection_steps": b.steps,
        "verdict_lo": verdict_report(b.verdict_lo),
        "verdict_hi": verdict_report(b.verdict_hi),
    }


# -- text rendering ------------------------------------------------------------------


def render_text(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for k, v in report.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(render_text(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for item in v:
                lines.append(render_text(item, indent + 1))
                lines.append(f"{pad}  --")
        else:
            lines.append(f"{pad}{k}: {_inline(v)}")
    return "\n".join(x for x in lines if x)


def _inline(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, list):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def dump_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


# -- argument handling ---------------------------------------------------------------


def _parse_param(text: str | None, fam: SphericalFamily):
    if text is None:
        return fam.resolve_param(None)
    if "=" not in text:
        raise UsageError("--param expects NAME=P/Q")
    name, val = text.split("=", 1)
    if fam.parameter is None:
        raise UsageError("input declares no parameter")
    if name.strip() != fam.parameter.name:
        raise UsageError(f"unknown parameter {name!r}; expected {fam.parameter.name!r}")
    try:
        return rl.parse_rational(val.strip())
    except ValueError as exc:
        raise UsageError(f"--param: {exc}") from None


def _parse_rat(text: str, flag: str) -> Fraction:
    try:
        return rl.parse_rational(text)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _parse_chi(text: str | None, fam: SphericalFamily):
    if text is None or text == "auto":
        return text
    try:
        k = int(text)
    except ValueError:
        raise UsageError("--chi expects a candidate index or 'auto'") from None
    if not 0 <= k < len(fam.chi_candidates):
        raise UsageError(f"--chi {k}: file has {len(fam.chi_candidates)} chi candidates")
    return k


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kstab",
        description="Exact K-stability checks for polarized spherical data.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("path", help="input JSON file or gallery:NAME")
        sp.add_argument("--param", metavar="NAME=P/Q", help="parameter value")
        sp.add_argument("--chi", metavar="IDX", help="chi candidate index, or 'auto' to search")
        sp.add_argument("--json", action="store_true", help="emit a JSON report")

    common(sub.add_parser("info", help="constants, polynomials and facet data"))
    c = sub.add_parser("check", help="run the stability criterion")
    common(c)
    c.add_argument("--depth", type=int, default=DEFAULT_DEPTH, metavar="N")
    e = sub.add_parser("eval", help="evaluate functionals on a PL function")
    common(e)
    e.add_argument("--pl", required=True, metavar="FILE")
    s = sub.add_parser("scan", help="sample or bisect over the parameter")
    common(s)
    s.add_argument("--range", nargs=2, metavar=("A", "B"))
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--steps", type=int, metavar="N")
    mode.add_argument("--bisect", action="store_true")
    s.add_argument("--width", metavar="P/Q", default="1/512")
    s.add_argument("--depth", type=int, default=DEFAULT_DEPTH, metavar="N")
    s.add_argument("--jobs", type=int, default=1, metavar="N")
    return p


def run(args) -> dict:
    fam, digest = load_family(args.path)
    chi = _parse_chi(args.chi, fam)
    if args.command == "scan":
        return _run_scan(args, fam, digest, chi)
    s = _parse_param(args.param, fam)
    depth = getattr(args, "depth", DEFAULT_DEPTH)
    if depth < 0:
        raise UsageError("--depth must be non-negative")

    if args.command == "check" and chi == "auto":
        idx, verdict = search_chi(fam, s, depth)
        out = _header("check", fam, digest, s, idx)
        out.update(verdict_report(verdict))
        if fam.fano:
            out["fano"] = fano_report(fam.instantiate(s, idx))
        return out
    if chi == "auto":
        raise UsageError("--chi auto is only meaningful for check")

    d = fam.instantiate(s, chi)
    out = _header(args.command, fam, digest, s, chi)
    if args.command == "info":
        out.update(info_report(d))
    elif args.command == "check":
        out.update(verdict_report(full_criterion(d, depth)))
        if d.fano:
            out["fano"] = fano_report(d)
    elif args.command == "eval":
        g = load_pl(args.pl)
        if g.rank != d.rank:
            raise SchemaError(f"{args.pl}: slopes have length {g.rank}, datum has rank {d.rank}")
        out.update(eval_report(d, g))
        if not out["identity_holds"]:
            raise InvariantViolation(f"L = {out['L']} but L_smooth = {out['L_smooth']}")
    return out


def _run_scan(args, fam: SphericalFamily, digest: str, chi) -> dict:
    if fam.parameter is None:
        raise UsageError("scan needs an input with a parameter")
    if chi == "auto":
        raise UsageError("--chi auto is only meaningful for check")
    if args.param is not None:
        raise UsageError("scan takes --range, not --param")
    if args.range is not None:
        lo, hi = (_parse_rat(x, "--range") for x in args.range)
    elif fam.parameter.range is not None:
        lo, hi = fam.parameter.range
    else:
        raise UsageError("--range is required (input declares no default range)")
    if not lo < hi:
        raise UsageError("--range: empty parameter range")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.depth < 0:
        raise UsageError("--depth must be non-negative")
    out = _header("scan", fam, digest, None, chi)
    out["range"] = [q(lo), q(hi)]
    if args.bisect:
        width = _parse_rat(args.width, "--width")
        if width <= 0:
            raise UsageError("--width must be positive")
        b = bisect_threshold(fam, lo, hi, width, chi, args.depth, jobs=args.jobs)
        out["mode"] = "bisect"
        out.update(bracket_report(b, width))
    else:
        if args.steps < 1:
            raise UsageError("--steps must be at least 1")
        rows = parametric_scan(fam, grid(lo, hi, args.steps), chi, args.depth, args.jobs)
        out["mode"] = "samples"
        out["samples"] = [
            {
                "s": q(s),
                "verdict": v.kind.value,
                "certificate": v.report.certificate.outcome.value,
                "V": q(v.report.V),
                "two_a": q(v.report.two_a),
            }
            for s, v in rows
        ]
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report = run(args)
    except (SchemaError, UsageError, DatumError, GeometryError, ScanError, OSError) as exc:
        print(f"kstab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"kstab: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except Exception as exc:  # anything unexpected is a bug, never a verdict
        print(f"kstab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(dump_json(report) if args.json else render_text(report))
    # timing goes to stderr so reports stay byte-identical across runs
    print(f"kstab: {args.command} finished in {time.perf_counter() - start:.3f}s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
