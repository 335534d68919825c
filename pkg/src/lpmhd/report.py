"""Deterministic JSON/CSV report emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ARTIFACT_VERSION = "0.1.0"


@dataclass(frozen=True)
class RunManifest:
    command: str
    grid: dict
    profile: dict
    seeds: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    artifact_version: str = ARTIFACT_VERSION

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "grid": dict(self.grid),
            "profile": dict(self.profile),
            "seeds": list(self.seeds),
            "tolerances": dict(self.tolerances),
            "artifact_version": self.artifact_version,
        }


def _plain(obj):
    """Convert numpy scalars, tuples and non-string keys into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return _plain(obj.as_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _emit(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        return "%.17g" % obj
    return json.dumps(obj)


def dumps(payload: dict) -> str:
    """Sorted-key JSON with every float written as 17 significant digits; non-finite -> null."""
    return _emit(_plain(payload), 0) + "\n"


def make_report(manifest: RunManifest, results: dict, status: str = "ok") -> dict:
    return {"manifest": manifest.as_dict(), "results": results, "status": status}


def flatten(obj, prefix: str = "") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k in sorted(obj, key=str):
            out.update(flatten(obj[k], f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}[{i}]"))
    else:
        out[prefix] = obj
    return out


def to_csv(payload: dict) -> str:
    """Two-column ``key,value`` export of the flattened report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in flatten(_plain(payload)).items():
        w.writerow([k, "" if v is None else ("%.17g" % v if isinstance(v, float) else v)])
    return buf.getvalue()


def write_report(payload: dict, out_dir, name: str, fmt: str = "json") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{name}.json"]
    paths[0].write_text(dumps(payload))
    if fmt == "csv":
        p = out / f"{name}.csv"
        p.write_text(to_csv(payload))
        paths.append(p)
    return paths
