"""Deterministic JSON and text rendering of reports."""

from __future__ import annotations

import json
import math

import numpy as np

SCHEMA_VERSION = 1


def _float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    out = format(x, ".17g")
    if all(c not in out for c in ".en"):
        out += ".0"
    return out


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(v is None or isinstance(v, (int, float, np.integer, np.floating, bool, np.bool_)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and stable layout."""
    return _encode(obj, indent, 0) + "\n"


def envelope(command: str, config: dict, **body) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": config, **body}


def analyze_text(doc: dict) -> str:
    s = doc["summary"]
    lines = [
        f"immersion {doc['immersion']['name']}  n={doc['immersion']['n']}  p={doc['immersion']['p']}",
        f"points {s['points']}  interior {s['interior_points']}  stratum boundaries {s['stratum_boundary_count']}",
        f"chern-kuiper violations {s['chern_kuiper_violations']}",
        "cases (all / interior):",
    ]
    for case, count in s["case_histogram"].items():
        if count or s["interior_case_histogram"][case]:
            lines.append(f"  {case:24s} {count:6d} {s['interior_case_histogram'][case]:6d}")
    lines.append("worst residuals:")
    for name, value in s["worst_residuals"].items():
        lines.append(f"  {name:40s} {value:.3e}")
    if s["audit_failures"]:
        lines.append("audit failures:")
        for name, count in s["audit_failures"].items():
            lines.append(f"  {name:40s} {count}")
    return "\n".join(lines) + "\n"


def extend_text(doc: dict) -> str:
    e = doc["extension"]
    lines = [
        f"immersion {e['immersion']}  case {e['case']}  route {e['route']}",
        f"n={e['n']} p={e['p']} mu={e['mu']} nu_g={e['nu_g']} ell={e['ell']} k={e['k']}",
        f"max |R_phi| {e['max_r_phi']:.3e}  codazzi {e['codazzi_residual']:.3e}  "
        f"bianchi1 {e['bianchi1_residual']:.3e}  bianchi2 {e['bianchi2_residual']:.3e}",
    ]
    if e["nu_G"] is not None:
        lines.append(f"nu_G {e['nu_G']}  dim Gamma_hat {e['dim_gamma_hat']}  max |R_N| {e['max_r_n']:.3e}")
    lines.append("audits:")
    for a in e["audits"]:
        flag = "PASS" if a["passed"] else "FAIL"
        lines.append(f"  {flag}  {a['name']:40s} {a['value']}")
    return "\n".join(lines) + "\n"
