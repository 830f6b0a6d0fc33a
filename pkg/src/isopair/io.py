"""Reading samples from CSV and serializing fit results.

Input CSV has a header ``x,y,z`` optionally extended by ``w1`` and ``w2``;
weights default to 1.  Records sharing the same x are merged into one point
whose responses are the weighted means and whose weights are the sums, which
leaves the fitting objective unchanged up to a constant.  All files are UTF-8
with LF line endings.

The JSON fit document is tagged ``fit-result-v1`` and echoes the inputs, both
fitted vectors, the multipliers when the dual solver produced them, the
objective, iteration counts, and the tolerances in force.  Floats are written
with full ``repr`` precision, so a read-back reproduces the fit bit for bit.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_KKT_TOL,
    DimensionError,
    DomainError,
    DualState,
    PairFit,
    PairedSample,
    SolverConfig,
)

__all__ = [
    "ParseError",
    "RawRecord",
    "FitRecord",
    "read_sample",
    "write_sample",
    "write_fit",
    "read_fit_record",
    "SCHEMA_TAG",
]

SCHEMA_TAG = "fit-result-v1"

FORMATS = ("json", "csv", "plotcsv")


class ParseError(ValueError):
    """Malformed input; carries the 1-based line number where known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RawRecord:
    """One CSV row before sorting and tie merging."""

    x: float
    y: float
    z: float
    w1: float = 1.0
    w2: float = 1.0


@dataclass(frozen=True)
class FitRecord:
    """A deserialized fit document; fitted values are taken at face value."""

    sample: PairedSample
    a: np.ndarray
    b: np.ndarray
    objective: float
    max_coupling_violation: float
    solver_tag: str
    converged: bool
    lam: np.ndarray | None
    dual_value: float | None
    iterations: int | None
    feas_tol: float
    gap_tol: float
    kkt_tol: float


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return fh.read()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _open_sink(sink):
    """Return (file_object, should_close)."""
    if isinstance(sink, (str, os.PathLike)):
        return open(sink, "w", encoding="utf-8", newline=""), True
    return sink, False


_COLUMNS = ("x", "y", "z", "w1", "w2")


def _parse_records(text: str) -> list[RawRecord]:
    rows = list(csv.reader(text.splitlines()))
    rows = [(i + 1, row) for i, row in enumerate(rows) if any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError("empty input, expected a header row")
    header_line, header = rows[0]
    names = [cell.strip().lower() for cell in header]
    for name in names:
        if name not in _COLUMNS:
            raise ParseError(f"unknown column {name!r}", header_line)
    if len(set(names)) != len(names):
        raise ParseError("duplicate column names", header_line)
    for required in ("x", "y", "z"):
        if required not in names:
            raise ParseError(f"missing required column {required!r}", header_line)
    pos = {name: i for i, name in enumerate(names)}

    records = []
    for line, row in rows[1:]:
        if len(row) != len(names):
            raise ParseError(f"expected {len(names)} fields, got {len(row)}", line)
        values = {}
        for name, i in pos.items():
            cell = row[i].strip()
            try:
                values[name] = float(cell)
            except ValueError:
                raise ParseError(f"could not parse {name}={cell!r} as a number", line) from None
        for name in ("x", "y", "z"):
            if not np.isfinite(values[name]):
                raise DomainError(f"line {line}: {name} must be finite")
        for name in ("w1", "w2"):
            if name in values and not (np.isfinite(values[name]) and values[name] > 0):
                raise DomainError(f"line {line}: {name} must be a positive finite weight")
        records.append(RawRecord(values["x"], values["y"], values["z"],
                                 values.get("w1", 1.0), values.get("w2", 1.0)))
    if not records:
        raise DomainError("no data rows")
    return records


def read_sample(source, fmt: str = "csv") -> PairedSample:
    """Parse a sample from CSV, sorting by x and merging duplicate x values.

    ``source`` is a path or an open file.  Merging replaces tied records by
    one record with weighted-mean responses and summed weights.
    """
    if fmt != "csv":
        raise DomainError(f"unsupported input format {fmt!r}")
    records = _parse_records(_read_text(source))

    x = np.array([r.x for r in records])
    y = np.array([r.y for r in records])
    z = np.array([r.z for r in records])
    w1 = np.array([r.w1 for r in records])
    w2 = np.array([r.w2 for r in records])

    order = np.argsort(x, kind="stable")
    x, y, z, w1, w2 = x[order], y[order], z[order], w1[order], w2[order]

    first = np.ones(x.size, dtype=bool)
    first[1:] = x[1:] != x[:-1]
    if np.all(first):
        return PairedSample(x, y, z, w1, w2)
    gid = np.cumsum(first) - 1
    ngroups = int(gid[-1]) + 1
    w1_sum = np.bincount(gid, weights=w1, minlength=ngroups)
    w2_sum = np.bincount(gid, weights=w2, minlength=ngroups)
    y_mean = np.bincount(gid, weights=w1 * y, minlength=ngroups) / w1_sum
    z_mean = np.bincount(gid, weights=w2 * z, minlength=ngroups) / w2_sum
    return PairedSample(x[first], y_mean, z_mean, w1_sum, w2_sum)


def write_sample(sample: PairedSample, sink) -> None:
    """Write a sample in the input CSV schema."""
    fh, should_close = _open_sink(sink)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "z", "w1", "w2"])
        for j in range(sample.n):
            writer.writerow([repr(float(sample.x[j])), repr(float(sample.y[j])),
                             repr(float(sample.z[j])), repr(float(sample.w1[j])),
                             repr(float(sample.w2[j]))])
    finally:
        if should_close:
            fh.close()


def _to_list(arr) -> list[float]:
    return [float(v) for v in arr]


def write_fit(sample: PairedSample, fit: PairFit, dual: DualState | None = None,
              diag=None, *, sink, fmt: str = "json",
              config: SolverConfig | None = None,
              kkt_tol: float = DEFAULT_KKT_TOL) -> None:
    """Serialize a fit to ``sink`` in one of the supported formats.

    ``json`` is the archival format used by the checking command.  ``csv``
    writes ``x,a,b`` rows.  ``plotcsv`` writes long-format ``curve,x,value``
    rows tracing each constant block by its two endpoints, ready for a step
    plot.
    """
    if fmt not in FORMATS:
        raise DomainError(f"unsupported output format {fmt!r}")
    cfg = config if config is not None else SolverConfig()
    fh, should_close = _open_sink(sink)
    try:
        if fmt == "json":
            doc = {
                "schema": SCHEMA_TAG,
                "inputs": {
                    "x": _to_list(sample.x),
                    "y": _to_list(sample.y),
                    "z": _to_list(sample.z),
                    "w1": _to_list(sample.w1),
                    "w2": _to_list(sample.w2),
                },
                "fit": {
                    "a": _to_list(fit.a.values),
                    "b": _to_list(fit.b.values),
                    "objective": float(fit.objective),
                    "max_coupling_violation": float(fit.max_coupling_violation),
                    "solver_tag": fit.solver_tag,
                    "converged": bool(fit.converged),
                },
                "dual": None if dual is None else {
                    "lam": _to_list(dual.lam),
                    "dual_value": float(dual.dual_value),
                    "iteration": int(dual.iteration),
                },
                "iterations": None if diag is None else int(diag.iterations),
                "config": {
                    "feas_tol": cfg.feas_tol,
                    "gap_tol": cfg.gap_tol,
                    "max_iter": cfg.max_iter,
                    "step_rule": cfg.step_rule,
                    "step_constant": cfg.step_constant,
                    "kkt_tol": float(kkt_tol),
                },
            }
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        elif fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "a", "b"])
            for j in range(sample.n):
                writer.writerow([repr(float(sample.x[j])), repr(float(fit.a.values[j])),
                                 repr(float(fit.b.values[j]))])
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["curve", "x", "value"])
            for name, mono in (("a", fit.a), ("b", fit.b)):
                for start, stop in mono.blocks:
                    level = repr(float(mono.values[start]))
                    writer.writerow([name, repr(float(sample.x[start])), level])
                    writer.writerow([name, repr(float(sample.x[stop - 1])), level])
    finally:
        if should_close:
            fh.close()


def _require(doc: dict, key: str):
    if key not in doc:
        raise ParseError(f"fit document is missing {key!r}")
    return doc[key]


def read_fit_record(source) -> FitRecord:
    """Load a JSON fit document without judging the fitted values.

    The inputs are validated as a sample; fitted vectors, multipliers, and the
    recorded objective are returned as-is so a checker can evaluate them.
    """
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_TAG:
        raise ParseError(f"expected a {SCHEMA_TAG!r} document")

    inputs = _require(doc, "inputs")
    sample = PairedSample(
        np.asarray(_require(inputs, "x"), dtype=np.float64),
        np.asarray(_require(inputs, "y"), dtype=np.float64),
        np.asarray(_require(inputs, "z"), dtype=np.float64),
        np.asarray(_require(inputs, "w1"), dtype=np.float64),
        np.asarray(_require(inputs, "w2"), dtype=np.float64),
    )
    fit = _require(doc, "fit")
    a = np.asarray(_require(fit, "a"), dtype=np.float64)
    b = np.asarray(_require(fit, "b"), dtype=np.float64)
    if a.size != sample.n or b.size != sample.n:
        raise DimensionError("fitted vectors must match the input length")
    dual = doc.get("dual")
    lam = None
    dual_value = None
    if dual is not None:
        lam = np.asarray(_require(dual, "lam"), dtype=np.float64)
        if lam.size != sample.n:
            raise DimensionError("multipliers must match the input length")
        dual_value = float(_require(dual, "dual_value"))
    cfg = doc.get("config", {})
    iterations = doc.get("iterations")
    return FitRecord(
        sample=sample,
        a=a,
        b=b,
        objective=float(_require(fit, "objective")),
        max_coupling_violation=float(_require(fit, "max_coupling_violation")),
        solver_tag=str(_require(fit, "solver_tag")),
        converged=bool(_require(fit, "converged")),
        lam=lam,
        dual_value=dual_value,
        iterations=None if iterations is None else int(iterations),
        feas_tol=float(cfg.get("feas_tol", SolverConfig().feas_tol)),
        gap_tol=float(cfg.get("gap_tol", SolverConfig().gap_tol)),
        kkt_tol=float(cfg.get("kkt_tol", DEFAULT_KKT_TOL)),
    )
