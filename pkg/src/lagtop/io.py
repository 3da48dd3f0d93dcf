"""Bit-stable CSV/JSON emission with provenance headers.

Every file starts with the package version, the sha256 of the canonical
JSON of the effective configuration, the seed and the configuration itself
(defaults included).  Floats are written with 17 significant digits, which
round-trips any double exactly.
"""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .kernels import BACKEND

__all__ = [
    "canonical_json", "config_hash", "Provenance", "format_value", "write_csv", "read_csv",
    "write_json", "to_jsonable",
]


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # enums
        return obj.value
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(config: Mapping) -> str:
    return hashlib.sha256(canonical_json(config).encode("ascii")).hexdigest()


@dataclass(frozen=True)
class Provenance:
    command: str
    config: Mapping
    seed: int
    defaults_applied: tuple = ()
    extra: Mapping = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def as_dict(self) -> dict:
        out = {"package": "lagtop", "version": __version__, "command": self.command,
               "config_sha256": self.config_hash, "seed": int(self.seed), "backend": BACKEND,
               "defaults_applied": list(self.defaults_applied), "config": to_jsonable(self.config)}
        out.update(to_jsonable(dict(self.extra)))
        return out

    def comment_lines(self) -> list:
        d = self.as_dict()
        keys = ("package", "version", "command", "config_sha256", "seed", "backend")
        lines = [f"# {k}: {d[k]}" for k in keys]
        lines.append("# defaults_applied: " + canonical_json(d["defaults_applied"]))
        lines.append("# config: " + canonical_json(d["config"]))
        for k in sorted(set(d) - set(keys) - {"defaults_applied", "config"}):
            lines.append(f"# {k}: " + canonical_json(d[k]))
        return lines


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return str(x)


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(text)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence], prov: Provenance) -> str:
    """Write '#' provenance lines, a header row and the data rows; returns the path."""
    buf = _io.StringIO()
    for line in prov.comment_lines():
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(x) for x in row])
    _write_text(path, buf.getvalue())
    return path


def read_csv(path: str):
    """Return (comment lines, column names, list of string rows)."""
    comments, body = [], []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            (comments if line.startswith("#") else body).append(line.rstrip("\n"))
    rows = list(csv.reader(body))
    return comments, rows[0], rows[1:]


def write_json(path: str, payload: Mapping, prov: Provenance) -> str:
    doc = {"provenance": prov.as_dict(), "result": to_jsonable(payload)}
    _write_text(path, json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n")
    return path
