"""Per-iteration metrics and the trace container written to CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, fields

import numpy as np

TRACE_COLUMNS = ("iter", "epoch", "agent_evals_total", "residual", "consensus_error",
                 "train_acc", "test_acc", "wall_ms")


def residual(z_all, z_star) -> float:
    """Average distance of the agents' estimates to the optimum, ``(1/m) sum_i ||z_i - z*||``."""
    Z = np.atleast_2d(z_all)
    return float(np.mean(np.linalg.norm(Z - np.asarray(z_star)[None, :], axis=1)))


def consensus_error(z_all) -> float:
    """Plain 2-norm distance of the stacked estimates to their average."""
    Z = np.atleast_2d(z_all)
    return float(np.linalg.norm(Z - Z.mean(axis=0, keepdims=True)))


@dataclass
class TraceRecord:
    iter: int
    epoch: float
    agent_evals_total: int
    residual: float
    consensus_error: float
    train_acc: float = float("nan")
    test_acc: float = float("nan")
    wall_ms: float = 0.0

    def values(self):
        return tuple(getattr(self, f.name) for f in fields(self))


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if np.isnan(v) else repr(v)


@dataclass
class Trace:
    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, rec: TraceRecord):
        if self.records:
            last = self.records[-1]
            if rec.iter <= last.iter or rec.epoch < last.epoch:
                raise ValueError("trace iterations must increase and epochs must not decrease")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def to_csv(self, path=None, include_wall=True) -> str:
        buf = io.StringIO()
        for k in sorted(self.meta):
            buf.write(f"# {k}={self.meta[k]}\n")
        cols = TRACE_COLUMNS if include_wall else TRACE_COLUMNS[:-1]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.records:
            w.writerow([_fmt(v) for v in r.values()[:len(cols)]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Trace":
        meta, rows = {}, []
        with open(path) as fh:
            lines = fh.read().splitlines()
        body = []
        for ln in lines:
            if ln.startswith("# "):
                k, _, v = ln[2:].partition("=")
                meta[k] = v
            elif ln:
                body.append(ln)
        reader = csv.DictReader(body)
        for row in reader:
            def num(key, conv=float):
                s = row.get(key, "")
                return conv(s) if s not in ("", None) else float("nan")
            rows.append(TraceRecord(int(row["iter"]), num("epoch"), int(row["agent_evals_total"]),
                                    num("residual"), num("consensus_error"), num("train_acc"),
                                    num("test_acc"), num("wall_ms") if "wall_ms" in row else 0.0))
        return cls(rows, meta)
