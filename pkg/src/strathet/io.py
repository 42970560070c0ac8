"""CSV ingestion and stratification of individual observation records.

Input files are plain comma-separated UTF-8 with a header row and ``.`` as
the decimal mark.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .data import CONTROL, TREATMENT, StratifiedDataset, validate
from .errors import DegenerateBreakpoints, EmptyFile, EmptyStratumArm, MissingColumn, ParseError

TREATMENT_VALUES = ("1", "t", "treat", "treated", "treatment", "true", "yes")
CONTROL_VALUES = ("0", "c", "control", "untreated", "false", "no")


@dataclass(frozen=True)
class ObservationRecord:
    outcome: float
    arm: str  # TREATMENT or CONTROL
    stratum_key: str | None = None
    covariates: dict = field(default_factory=dict)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(row, column, text) from None
    if not math.isfinite(value):
        raise ParseError(row, column, text)
    return value


def _parse_arm(text: str, row: int, column: str, treatment_values, control_values) -> str:
    key = text.strip().lower()
    if key in treatment_values:
        return TREATMENT
    if key in control_values:
        return CONTROL
    raise ParseError(row, column, text)


def ingest_csv(
    path,
    outcome: str,
    arm: str,
    stratum: str | None = None,
    covariates: Sequence[str] | None = None,
    treatment_values: Sequence[str] = TREATMENT_VALUES,
    control_values: Sequence[str] = CONTROL_VALUES,
) -> list[ObservationRecord]:
    """Read one record per data row.

    ``covariates`` columns are required and must parse as numbers. When it is
    ``None``, every other column whose cell parses as a number is kept.
    ``ParseError.row`` is the 1-based line number in the file (header = 1).
    """
    treatment_values = tuple(v.lower() for v in treatment_values)
    control_values = tuple(v.lower() for v in control_values)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise EmptyFile(f"{path}: no header row")
        header = [h.strip() for h in header]
        reader.fieldnames = header
        required = [outcome, arm] + ([stratum] if stratum else []) + list(covariates or [])
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {missing}; header is {header}")
        optional = [] if covariates is not None else [
            c for c in header if c not in (outcome, arm, stratum)
        ]

        records = []
        for line, row in enumerate(reader, start=2):
            if not any((v or "").strip() for v in row.values()):
                continue
            y = _parse_float(row[outcome], line, outcome)
            a = _parse_arm(row[arm] or "", line, arm, treatment_values, control_values)
            cov = {c: _parse_float(row[c], line, c) for c in covariates or []}
            for c in optional:
                try:
                    v = float(row[c])
                except (TypeError, ValueError):
                    continue
                if math.isfinite(v):
                    cov[c] = v
            key = row[stratum].strip() if stratum else None
            records.append(ObservationRecord(y, a, key, cov))
    if not records:
        raise EmptyFile(f"{path}: no data rows")
    return records


@dataclass(frozen=True)
class ByColumn:
    """One stratum per distinct key; keys in first-appearance order unless
    ``order`` is given. ``column=None`` uses the records' ``stratum_key``."""

    column: str | None = None
    order: tuple | None = None


@dataclass(frozen=True)
class ByQuantiles:
    """``k`` strata cut at pooled inverse-ECDF quantiles of ``column``.

    ``breakpoints`` (``k + 1`` increasing edges) overrides the computed
    quantiles. Intervals are ``[b0, b1], (b1, b2], ..., (b_{k-1}, b_k]``.
    """

    column: str
    k: int = 4
    breakpoints: tuple | None = None

    def __post_init__(self):
        if self.breakpoints is not None:
            object.__setattr__(self, "k", len(self.breakpoints) - 1)
        if self.k < 2:
            raise ValueError("need at least two quantile strata")


@dataclass(frozen=True)
class ByThreshold:
    """Two strata split at ``cutpoint``: ``x <= cut`` vs ``x > cut`` when
    ``strict``, else ``x < cut`` vs ``x >= cut``."""

    column: str
    cutpoint: float
    strict: bool = True


def _covariate(records, column) -> np.ndarray:
    try:
        return np.array([r.covariates[column] for r in records], dtype=np.float64)
    except KeyError:
        raise MissingColumn(f"covariate {column!r} missing from records") from None


def quantile_breakpoints(values, k: int) -> np.ndarray:
    """Edges ``min, q_{1/k}, ..., q_{(k-1)/k}, max`` with inverse-ECDF quantiles."""
    probs = np.arange(k + 1) / k
    return np.quantile(np.asarray(values, dtype=np.float64), probs, method="inverted_cdf")


def _fmt(x: float) -> str:
    return f"{x:g}"


def _assign(records, rule) -> tuple[list[str], np.ndarray]:
    """Stratum labels and the per-record stratum index."""
    if isinstance(rule, ByColumn):
        if rule.column is None:
            keys = [r.stratum_key for r in records]
            if any(k is None for k in keys):
                raise MissingColumn("records carry no stratum key")
        else:
            keys = [_fmt(v) for v in _covariate(records, rule.column)]
        labels = list(rule.order) if rule.order else list(dict.fromkeys(keys))
        pos = {lab: i for i, lab in enumerate(labels)}
        unknown = sorted(set(keys) - set(pos))
        if unknown:
            raise ValueError(f"stratum keys {unknown} not in the given order")
        return labels, np.array([pos[k] for k in keys])

    x = _covariate(records, rule.column)
    if isinstance(rule, ByThreshold):
        c = rule.cutpoint
        if rule.strict:
            return [f"{rule.column} <= {_fmt(c)}", f"{rule.column} > {_fmt(c)}"], (x > c).astype(int)
        return [f"{rule.column} < {_fmt(c)}", f"{rule.column} >= {_fmt(c)}"], (x >= c).astype(int)

    if isinstance(rule, ByQuantiles):
        edges = np.asarray(rule.breakpoints if rule.breakpoints is not None
                           else quantile_breakpoints(x, rule.k), dtype=np.float64)
        if np.any(np.diff(edges) <= 0):
            raise DegenerateBreakpoints(f"breakpoints {edges.tolist()} are not strictly increasing")
        if x.min() < edges[0] or x.max() > edges[-1]:
            raise ValueError(f"{rule.column} values fall outside [{edges[0]}, {edges[-1]}]")
        idx = np.searchsorted(edges, x, side="left") - 1
        idx[x == edges[0]] = 0
        labels = [f"[{_fmt(edges[0])}, {_fmt(edges[1])}]"] + [
            f"({_fmt(edges[i])}, {_fmt(edges[i + 1])}]" for i in range(1, len(edges) - 1)
        ]
        return labels, idx

    raise TypeError(f"unknown stratification rule {rule!r}")


def stratify(records: Sequence[ObservationRecord], rule) -> StratifiedDataset:
    labels, idx = _assign(records, rule)
    outcomes = np.array([r.outcome for r in records], dtype=np.float64)
    is_t = np.array([r.arm == TREATMENT for r in records])
    strata = []
    for i, label in enumerate(labels):
        t = outcomes[(idx == i) & is_t]
        c = outcomes[(idx == i) & ~is_t]
        if t.size == 0 or c.size == 0:
            which = "treatment" if t.size == 0 else "control"
            raise EmptyStratumArm(f"stratum {label} has no {which} subjects")
        strata.append((label, t, c))
    return validate(strata)


def write_dataset_csv(data: StratifiedDataset, path, outcome: str = "outcome",
                      arm: str = "arm", stratum: str = "stratum") -> None:
    """Write a dataset as one row per subject; ``repr`` keeps floats exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([outcome, arm, stratum])
        for st in data.strata:
            for code, values in (("1", st.treatment), ("0", st.control)):
                for v in values:
                    writer.writerow([repr(float(v)), code, st.label])


def parse_rule(spec: str, kind: str):
    """Build a rule from CLI text: ``COL`` (column), ``COL:CUT`` (threshold),
    ``COL:K`` (quantiles) or ``COL:b0,b1,...`` (breaks)."""
    if kind == "column":
        return ByColumn(spec)
    column, sep, rest = spec.partition(":")
    if not sep or not column or not rest:
        raise ValueError(f"expected COLUMN:VALUE, got {spec!r}")
    if kind == "threshold":
        return ByThreshold(column, float(rest))
    if kind == "quantiles":
        return ByQuantiles(column, int(rest))
    if kind == "breaks":
        return ByQuantiles(column, breakpoints=tuple(float(b) for b in rest.split(",")))
    raise ValueError(f"unknown rule kind {kind!r}")
