"""JSON input schema, parsing and canonical serialization."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from . import ratlat as rl
from .kfun import PLConcave
from .spherical import Affine, Parameter, RootSpec, SphericalFamily, ValuationCone

RATIONAL_PATTERN = r"^-?\d+(/0*[1-9]\d*)?$"

_rational = {
    "oneOf": [
        {"type": "string", "pattern": RATIONAL_PATTERN},
        {"type": "integer"},
    ]
}
_affine = {
    "oneOf": [
        _rational,
        {
            "type": "object",
            "properties": {"const": _rational, "param_coeff": _rational},
            "required": ["const"],
            "additionalProperties": False,
        },
    ]
}
_ratvec = {"type": "array", "items": _rational, "minItems": 1}
_intvec = {"type": "array", "items": {"type": "integer"}, "minItems": 1}

INPUT_SCHEMA = {
    "type": "object",
    "required": ["rank", "lattice_basis", "polytope", "roots", "valuation_cone"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "rank": {"type": "integer", "minimum": 1, "maximum": 8},
        "ambient_dim": {"type": "integer", "minimum": 1, "maximum": 8},
        "lattice_basis": {"type": "array", "items": _ratvec, "minItems": 1},
        "polytope": {
            "type": "object",
            "required": ["inequalities"],
            "additionalProperties": False,
            "properties": {
                "inequalities": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "object",
                        "required": ["normal", "offset"],
                        "additionalProperties": False,
                        "properties": {"normal": _ratvec, "offset": _affine},
                    },
                }
            },
        },
        "roots": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["pairing", "chi_pairing", "weyl_pairing"],
                "additionalProperties": False,
                "properties": {
                    "pairing": _ratvec,
                    "chi_pairing": _affine,
                    "weyl_pairing": _rational,
                    "two_varpi_pairing": _rational,
                    "two_varpi_X_pairing": _rational,
                },
            },
        },
        "valuation_cone": {
            "type": "object",
            "required": ["lin_basis", "rays"],
            "additionalProperties": False,
            "properties": {
                "lin_basis": {"type": "array", "items": _intvec},
                "rays": {"type": "array", "items": _intvec},
            },
        },
        "parameter": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string", "pattern": r"^[A-Za-z_][A-Za-z0-9_]*$"},
                "range": {"type": "array", "items": _rational, "minItems": 2, "maxItems": 2},
                "default": _rational,
            },
        },
        "fano_mode": {"type": "boolean"},
        "facet_overrides": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["facet"],
                "additionalProperties": False,
                "properties": {
                    "facet": {"type": "integer", "minimum": 0},
                    "n_inv": _rational,
                    "n": {"oneOf": [_affine, {"const": "infinity"}]},
                },
                "oneOf": [{"required": ["n_inv"]}, {"required": ["n"]}],
            },
        },
        "chi_candidates": {"type": "array", "items": {"type": "array", "items": _affine}},
    },
}

PL_SCHEMA = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "required": ["slope", "constant"],
        "additionalProperties": False,
        "properties": {"slope": _ratvec, "constant": _rational},
    },
}


class SchemaError(ValueError):
    """Input rejected before any computation; the message names the field."""


def _field_path(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _validate(doc, schema) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        # report the most specific error, located by its JSON path
        err = max(errors, key=lambda e: len(e.absolute_path))
        deepest = err
        for ctx in err.context or ():
            if len(ctx.absolute_path) > len(deepest.absolute_path):
                deepest = ctx
        raise SchemaError(f"{_field_path(deepest.absolute_path)}: {deepest.message}")


def _rat(x) -> Fraction:
    return rl.parse_rational(x)


def _aff(x) -> Affine:
    if isinstance(x, dict):
        return Affine(_rat(x["const"]), _rat(x.get("param_coeff", 0)))
    return Affine(_rat(x))


def _fmt(q) -> str:
    return rl.format_rational(q)


def _fmt_aff(a: Affine):
    if a.coeff == 0:
        return _fmt(a.const)
    return {"const": _fmt(a.const), "param_coeff": _fmt(a.coeff)}


def parse_family(doc: dict) -> SphericalFamily:
    _validate(doc, INPUT_SCHEMA)
    r = doc["rank"]

    def need(cond, where, msg):
        if not cond:
            raise SchemaError(f"{where}: {msg}")

    need(doc.get("ambient_dim", r) == r, "ambient_dim", "must equal rank")
    basis = tuple(tuple(_rat(x) for x in v) for v in doc["lattice_basis"])
    need(len(basis) == r and all(len(v) == r for v in basis), "lattice_basis", f"must be {r} vectors of length {r}")
    need(rl.det(basis) != 0, "lattice_basis", "vectors are linearly dependent")
    ineqs = []
    for k, e in enumerate(doc["polytope"]["inequalities"]):
        normal = tuple(_rat(x) for x in e["normal"])
        need(len(normal) == r, f"polytope.inequalities[{k}].normal", f"must have length {r}")
        need(any(x != 0 for x in normal), f"polytope.inequalities[{k}].normal", "must be nonzero")
        ineqs.append((normal, _aff(e["offset"])))
    roots = []
    for k, e in enumerate(doc["roots"]):
        pairing = tuple(_rat(x) for x in e["pairing"])
        need(len(pairing) == r, f"roots[{k}].pairing", f"must have length {r}")
        w = _rat(e["weyl_pairing"])
        need(w > 0, f"roots[{k}].weyl_pairing", "must be positive")
        opt = {
            key: _rat(e[key]) for key in ("two_varpi_pairing", "two_varpi_X_pairing") if key in e
        }
        roots.append(RootSpec(pairing, _aff(e["chi_pairing"]), w, **opt))
    vc = doc["valuation_cone"]
    for key in ("lin_basis", "rays"):
        for k, v in enumerate(vc[key]):
            need(len(v) == r, f"valuation_cone.{key}[{k}]", f"must have length {r}")
    cone = ValuationCone(tuple(map(tuple, vc["lin_basis"])), tuple(map(tuple, vc["rays"])))
    gens = cone.generators
    need(len(gens) == r and rl.rank(gens) == r, "valuation_cone", "lin_basis and rays must together form a basis")
    param = None
    if "parameter" in doc:
        p = doc["parameter"]
        rng = tuple(_rat(x) for x in p["range"]) if "range" in p else None
        need(rng is None or rng[0] < rng[1], "parameter.range", "must be an increasing pair")
        param = Parameter(p["name"], rng, _rat(p["default"]) if "default" in p else None)
    overrides = []
    seen = set()
    for k, e in enumerate(doc.get("facet_overrides", [])):
        i = e["facet"]
        need(i < len(ineqs), f"facet_overrides[{k}].facet", "index out of range")
        need(i not in seen, f"facet_overrides[{k}].facet", "duplicate facet")
        seen.add(i)
        if "n_inv" in e:
            q = _rat(e["n_inv"])
            need(q >= 0, f"facet_overrides[{k}].n_inv", "must be non-negative")
            overrides.append((i, ("inv", q)))
        elif e["n"] == "infinity":
            overrides.append((i, ("inf",)))
        else:
            overrides.append((i, ("n", _aff(e["n"]))))
    chis = []
    for k, c in enumerate(doc.get("chi_candidates", [])):
        need(len(c) == r, f"chi_candidates[{k}]", f"must have length {r}")
        chis.append(tuple(_aff(x) for x in c))
    fam = SphericalFamily(
        lattice_basis=basis,
        inequalities=tuple(ineqs),
        roots=tuple(roots),
        cone=cone,
        parameter=param,
        fano=bool(doc.get("fano_mode", False)),
        overrides=tuple(sorted(overrides)),
        chi_candidates=tuple(chis),
        name=doc.get("name", ""),
    )
    need(param is not None or not fam.is_parametric(), "parameter", "required when offsets depend on it")
    return fam


def serialize_family(fam: SphericalFamily) -> dict:
    """Canonical JSON form; ``parse_family(serialize_family(f)) == f``."""
    doc: dict = {}
    if fam.name:
        doc["name"] = fam.name
    doc["rank"] = fam.rank
    doc["ambient_dim"] = fam.rank
    doc["lattice_basis"] = [[_fmt(x) for x in v] for v in fam.lattice_basis]
    doc["polytope"] = {
        "inequalities": [
            {"normal": [_fmt(x) for x in a], "offset": _fmt_aff(c)} for a, c in fam.inequalities
        ]
    }
    roots = []
    for rt in fam.roots:
        e = {
            "pairing": [_fmt(x) for x in rt.pairing],
            "chi_pairing": _fmt_aff(rt.chi_pairing),
            "weyl_pairing": _fmt(rt.weyl_pairing),
        }
        if rt.two_varpi_pairing is not None:
            e["two_varpi_pairing"] = _fmt(rt.two_varpi_pairing)
        if rt.two_varpi_X_pairing is not None:
            e["two_varpi_X_pairing"] = _fmt(rt.two_varpi_X_pairing)
        roots.append(e)
    doc["roots"] = roots
    doc["valuation_cone"] = {
        "lin_basis": [list(v) for v in fam.cone.lin_basis],
        "rays": [list(v) for v in fam.cone.ray_gens],
    }
    if fam.parameter is not None:
        p = {"name": fam.parameter.name}
        if fam.parameter.range is not None:
            p["range"] = [_fmt(x) for x in fam.parameter.range]
        if fam.parameter.default is not None:
            p["default"] = _fmt(fam.parameter.default)
        doc["parameter"] = p
    doc["fano_mode"] = fam.fano
    if fam.overrides:
        out = []
        for i, spec in fam.overrides:
            if spec[0] == "inv":
                out.append({"facet": i, "n_inv": _fmt(spec[1])})
            elif spec[0] == "inf":
                out.append({"facet": i, "n": "infinity"})
            else:
                out.append({"facet": i, "n": _fmt_aff(spec[1])})
        doc["facet_overrides"] = out
    if fam.chi_candidates:
        doc["chi_candidates"] = [[_fmt_aff(a) for a in c] for c in fam.chi_candidates]
    return doc


def parse_pl(doc) -> PLConcave:
    _validate(doc, PL_SCHEMA)
    r = len(doc[0]["slope"])
    for k, e in enumerate(doc):
        if len(e["slope"]) != r:
            raise SchemaError(f"[{k}].slope: all slopes must have the same length")
    return PLConcave(tuple((tuple(_rat(x) for x in e["slope"]), _rat(e["constant"])) for e in doc))


def serialize_pl(g: PLConcave) -> list:
    return [{"slope": [_fmt(x) for x in s], "constant": _fmt(c)} for s, c in g.pieces]


# -- files -----------------------------------------------------------------------


GALLERY_PREFIX = "gallery:"


def gallery_names() -> list[str]:
    root = resources.files("kstab") / "gallery"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_source(path: str) -> bytes:
    """Raw bytes of a file path or ``gallery:NAME`` reference."""
    if path.startswith(GALLERY_PREFIX):
        name = path[len(GALLERY_PREFIX):]
        res = resources.files("kstab") / "gallery" / f"{name}.json"
        if not res.is_file():
            raise FileNotFoundError(f"no gallery entry {name!r}; available: {', '.join(gallery_names())}")
        return res.read_bytes()
    return Path(path).read_bytes()


def load_json(raw: bytes, what: str):
    try:
        return json.loads(raw)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{what}: not valid JSON ({exc})") from None


def load_family(path: str) -> tuple[SphericalFamily, str]:
    """Parsed family plus the sha256 of the input bytes."""
    raw = read_source(path)
    return parse_family(load_json(raw, path)), hashlib.sha256(raw).hexdigest()


def load_pl(path: str) -> PLConcave:
    return parse_pl(load_json(read_source(path), path))
