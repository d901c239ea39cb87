"""Self-describing result tables written as CSV or JSON.

CSV layout: '#'-prefixed ``key: json`` metadata lines, one header row, then
data rows.  Floats are written with 17 significant digits so they read back
bit-exactly; missing values are empty fields.  JSON layout is a single
object ``{"metadata": ..., "columns": [...], "rows": [...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class ResultTable:
    columns: list[str]
    units: list[str] = field(default_factory=list)
    rows: list[list[Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.units:
            self.units = [""] * len(self.columns)
        if len(self.units) != len(self.columns):
            raise ValueError("one unit per column required")

    def append(self, row) -> None:
        if isinstance(row, dict):
            row = [row.get(c) for c in self.columns]
        row = [_clean(v) for v in row]
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, table has {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        meta = dict(self.metadata)
        meta["units"] = self.units
        for key in sorted(meta):
            buf.write(f"# {key}: {json.dumps(_jsonable(meta[key]), sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "metadata": _jsonable(self.metadata),
            "columns": [{"name": c, "unit": u} for c, u in zip(self.columns, self.units)],
            "rows": [[_jsonable(v) for v in r] for r in self.rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    def dumps(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta: dict[str, Any] = {}
        body = []
        for line in text.splitlines(keepends=True):
            if line.startswith("# ") and not body:
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            else:
                body.append(line)
        reader = csv.reader(io.StringIO("".join(body)))
        columns = next(reader)
        units = meta.pop("units", [])
        rows = [[_parse(v) for v in r] for r in reader]
        return cls(columns, units, rows, meta)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        doc = json.loads(text)
        cols = doc["columns"]
        return cls([c["name"] for c in cols], [c["unit"] for c in cols], doc["rows"], doc["metadata"])

    @classmethod
    def loads(cls, text: str) -> "ResultTable":
        return cls.from_json(text) if text.lstrip().startswith("{") else cls.from_csv(text)


def _clean(v):
    if hasattr(v, "item") and not isinstance(v, (list, tuple, str)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _format(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        s = format(v, ".17g")
        return s if any(ch in s for ch in ".en") else s + ".0"
    return str(v)


def _parse(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return _clean(v)
