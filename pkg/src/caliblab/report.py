"""Versioned report records, CSV/JSON emission and atomic file writes."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

SCHEMA = "caliblab-report/1"
FORMATS = ("csv", "json")


def _num(x: Any) -> Any:
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return float(repr(x))
    return x


def _fmt(x: float) -> str:
    """Shortest repr that round-trips."""
    return repr(float(x))


@dataclass
class Row:
    check: str  # stable check identifier, e.g. "signsum.blocks.max"
    case: str
    value: float
    bound: float
    relation: str  # "<=", ">=", "==" (within tol) or "info"
    tol: float
    ok: bool

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "case": self.case,
            "value": _num(float(self.value)),
            "bound": _num(float(self.bound)),
            "relation": self.relation,
            "tol": _num(float(self.tol)),
            "ok": bool(self.ok),
        }


def compare(check: str, case: str, value: float, bound: float, relation: str, tol: float) -> Row:
    value, bound = float(value), float(bound)
    if relation == "<=":
        ok = value <= bound + tol
    elif relation == ">=":
        ok = value >= bound - tol
    elif relation == "==":
        ok = abs(value - bound) <= tol
    elif relation == "info":
        ok = True
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return Row(check, case, value, bound, relation, tol, bool(ok))


@dataclass
class Report:
    command: str
    config: dict
    rows: list[Row] = field(default_factory=list)

    def add(self, *args, **kw) -> Row:
        row = compare(*args, **kw)
        self.rows.append(row)
        return row

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    @property
    def failures(self) -> list[Row]:
        return [r for r in self.rows if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {"rows": len(self.rows), "failures": len(self.failures), "status": "pass" if self.ok else "fail"}

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "failures": [failure_record(r) for r in self.failures],
            "rows": [r.as_dict() for r in self.rows],
            "summary": self.summary(),
        }
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["#schema", SCHEMA, "command", self.command, "config", json.dumps(self.config, sort_keys=True)])
        w.writerow(["kind", "check", "case", "value", "bound", "relation", "tol", "ok"])
        for r in self.failures:
            w.writerow(["failure", r.check, r.case, _fmt(r.value), _fmt(r.bound), r.relation, _fmt(r.tol), "false"])
        for r in self.rows:
            w.writerow(["row", r.check, r.case, _fmt(r.value), _fmt(r.bound), r.relation, _fmt(r.tol), str(r.ok).lower()])
        s = self.summary()
        w.writerow(["summary", s["status"], "", s["rows"], s["failures"], "", "", ""])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")


def failure_record(r: Row) -> dict:
    return {"case": f"{r.check}:{r.case}", "expected": f"{r.relation} {r.bound!r} (tol {r.tol!r})", "observed": _num(r.value)}


def error_document(command: str, kind: str, message: str, fmt: str) -> str:
    """Machine-readable record for a run that could not produce a report."""
    rec = {"schema": SCHEMA, "command": command, "error": kind, "message": message}
    if fmt == "json":
        return json.dumps(rec, indent=1) + "\n"
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(["error", SCHEMA, command, kind, message])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".caliblab-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
