"""Solution-file schema (version 1) and CSV emitters.

Floats are written with 17 significant digits so doubles round-trip
bit-for-bit; NaN is written as null.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable

from . import __version__
from .spectra import ScanConfig, SpectralPoint, derive_context

SCHEMA_VERSION = 1

POINT_FIELDS = (
    "x0", "t", "E", "lB", "eB", "b0", "b", "c", "x0p", "bp", "cp",
    "epsilon", "epsilonp", "Qcoeffs", "Pcoeffs", "branch",
)
RESIDUAL_FIELDS = ("kernel_r0", "kernel_r1", "sigma_min", "divis_rem", "ode_Q", "ode_P", "dirac_max")
TOP_FIELDS = ("schema_version", "context", "point", "residuals", "provenance")


class RecordError(ValueError):
    pass


def fmt_float(v: float, nonfinite: str = "null") -> str:
    if not math.isfinite(v):
        return nonfinite
    return format(v, ".17g")


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    # numpy scalars and the like
    return fmt_float(float(obj))


def record_from_point(point: SpectralPoint, scan: ScanConfig | None = None, timestamp: str | None = None) -> dict:
    body = {}
    for name in POINT_FIELDS:
        v = getattr(point, name)
        if isinstance(v, list):
            v = [float(a) for a in v]
        elif name in ("epsilon", "epsilonp"):
            v = int(v)
        elif name != "branch":
            v = float(v)
        body[name] = v
    return {
        "schema_version": SCHEMA_VERSION,
        "context": point.ctx.to_dict(),
        "point": body,
        "residuals": {k: float(point.residuals.get(k, math.nan)) for k in RESIDUAL_FIELDS},
        "provenance": {
            "scan": (scan or ScanConfig()).to_dict(),
            "tool_version": __version__,
            "timestamp": timestamp,
        },
    }


def _num(v, name: str) -> float:
    if v is None:
        return math.nan
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise RecordError(f"{name}: expected a number, got {v!r}")
    return float(v)


def point_from_record(rec: dict, strict: bool = False) -> SpectralPoint:
    if not isinstance(rec, dict):
        raise RecordError("record must be an object")
    missing = [k for k in TOP_FIELDS if k not in rec]
    if missing:
        raise RecordError(f"missing fields {missing}")
    if rec["schema_version"] != SCHEMA_VERSION:
        raise RecordError(f"unsupported schema_version {rec['schema_version']!r}")
    if strict:
        extra = set(rec) - set(TOP_FIELDS)
        extra |= {f"point.{k}" for k in set(rec["point"]) - set(POINT_FIELDS)}
        extra |= {f"residuals.{k}" for k in set(rec["residuals"]) - set(RESIDUAL_FIELDS)}
        if extra:
            raise RecordError(f"unknown fields {sorted(extra)}")
    c = rec["context"]
    try:
        ctx = derive_context(c["m"], c["zalpha"], c["l"], c["n"])
    except KeyError as exc:
        raise RecordError(f"context missing {exc}") from None
    p = rec["point"]
    try:
        kwargs = {k: _num(p[k], k) for k in POINT_FIELDS if k not in ("Qcoeffs", "Pcoeffs", "branch", "epsilon", "epsilonp")}
        Q = [_num(a, "Qcoeffs") for a in p["Qcoeffs"]]
        P = [_num(a, "Pcoeffs") for a in p["Pcoeffs"]]
        eps, epsp = int(p["epsilon"]), int(p["epsilonp"])
        branch = str(p["branch"])
    except (KeyError, TypeError) as exc:
        raise RecordError(f"malformed point: {exc}") from None
    residuals = {k: _num(v, k) for k, v in rec["residuals"].items()}
    return SpectralPoint(
        ctx=ctx, epsilon=eps, epsilonp=epsp, Qcoeffs=Q, Pcoeffs=P,
        residuals=residuals, branch=branch, **kwargs,
    )


def load_records(path: str | Path) -> list[dict]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RecordError(f"cannot read {path}: {exc}") from None
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise RecordError("solution file must hold an array of records")
    return data


def csv_lines(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else fmt_float(float(v), "nan") for v in row))
    return "\n".join(out) + "\n"


def summary_csv(points: list[SpectralPoint]) -> str:
    return csv_lines(
        ("x0", "E", "eB", "t", "branch", "dirac_max"),
        ((p.x0, p.E, p.eB, p.t, p.branch, p.residuals.get("dirac_max", math.nan)) for p in points),
    )


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

