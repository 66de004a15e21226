"""Solver configuration, per-iteration records and the trace CSV format."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from .errors import ConfigurationError, TraceParseError

TRACE_COLUMNS = ("k", "i_k", "L", "f", "f_tilde", "grad_map_norm", "tau", "a", "A",
                 "phi_star", "step_norm")


@dataclass
class SolverConfig:
    """Inputs shared by the four methods.

    Only ``eps`` matters to the methods themselves; ``delta`` is the
    gradient-norm target of the nonconvex method.  ``L0`` is the initial
    curvature guess (``M0`` for the nonconvex method).  ``D`` is an upper
    bound on ``beta_d(x0, x*)`` used for stopping; when ``None`` the problem's
    known optimum supplies it if ``use_known_optimum`` is set.

    ``proof_indexing`` selects where the dual method tests its step (see
    :func:`gcbopt.solvers.dgm_solve`); ``aggressive_l`` lets the fast method
    halve its estimate after an accepted step.  Online certificate failures
    raise unless ``strict`` is off, in which case they are collected in the
    report.
    """

    eps: float = 1e-2
    delta: Optional[float] = None
    L0: float = 1e-3
    max_iters: int = 100_000
    max_doublings_per_iter: int = 60
    D: Optional[float] = None
    use_known_optimum: bool = True
    aggressive_l: bool = False
    proof_indexing: bool = True
    check_tol: float = 1e-9
    strict: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if not self.L0 > 0:
            raise ConfigurationError("L0 must be positive")
        if self.max_iters < 1 or self.max_doublings_per_iter < 1:
            raise ConfigurationError("iteration caps must be positive")
        if self.D is not None and not self.D >= 0:
            raise ConfigurationError("D must be non-negative")


@dataclass
class Violation:
    """A checked inequality ``lhs <= rhs`` that failed at ``iteration``."""

    name: str
    iteration: int
    lhs: float
    rhs: float

    def __str__(self):
        return f"{self.name} at k={self.iteration}: {self.lhs!r} > {self.rhs!r}"


@dataclass
class IterationRecord:
    k: int
    i_k: int
    L: float
    f: Optional[float] = None
    f_tilde: Optional[float] = None
    grad_map_norm: Optional[float] = None
    tau: Optional[float] = None
    a: Optional[float] = None
    A: Optional[float] = None
    phi_star: Optional[float] = None
    step_norm: Optional[float] = None


@dataclass
class Trace:
    method: str
    records: List[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, item):
        return self.records[item]

    def append(self, rec):
        self.records.append(rec)

    def column(self, name):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name)
                         for r in self.records], dtype=float)

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, method="unknown"):
        """Parse a trace from a path or from CSV text (if it contains a newline)."""
        if "\n" in str(source):
            text = str(source)
        else:
            with open(source) as fh:
                text = fh.read()
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError("empty trace file", row=0) from None
        if tuple(h.strip() for h in header) != TRACE_COLUMNS:
            raise TraceParseError(f"bad header {header!r}", row=1)
        trace = cls(method=method)
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_COLUMNS):
                raise TraceParseError(f"row {rowno}: expected {len(TRACE_COLUMNS)} fields",
                                      row=rowno)
            vals = {}
            for name, cell in zip(TRACE_COLUMNS, row):
                cell = cell.strip()
                try:
                    if cell == "":
                        vals[name] = None
                    elif name in ("k", "i_k"):
                        vals[name] = int(cell)
                    else:
                        vals[name] = float(cell)
                except ValueError:
                    raise TraceParseError(f"row {rowno}: bad value {cell!r} for {name}",
                                          row=rowno) from None
            if vals["k"] is None or vals["i_k"] is None or vals["L"] is None:
                raise TraceParseError(f"row {rowno}: k, i_k and L are required", row=rowno)
            trace.append(IterationRecord(**vals))
        return trace


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class RunReport:
    method: str
    x: np.ndarray
    f_tilde: float
    best_f_tilde: float
    iterations: int
    oracle_calls: int
    doublings: int
    termination: str
    L0: float
    L_final: float
    eps: float
    certified_gap: Optional[float] = None
    averaged_f_tilde: Optional[float] = None
    grad_map_norm: Optional[float] = None
    M_bar: Optional[float] = None
    warnings: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["x"] = np.asarray(self.x).tolist()
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        return d


def record_fields():
    return [f.name for f in fields(IterationRecord)]
