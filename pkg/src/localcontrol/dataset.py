"""CSV ingestion, variable roles, missing-value filtering, and Pearson."""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

MISSING_MARKERS = {"", "NA", "NaN"}


class SchemaError(ValueError):
    """Invalid variable-role declaration."""


class DataError(ValueError):
    """Malformed or unusable input data."""


class ConstantInputError(ValueError):
    """Correlation undefined because an input has no variation."""


@dataclass(frozen=True)
class VariableSchema:
    """Variable roles for one analysis: a unit id, one outcome, one
    exposure, at least two confounders, and optional passenger columns
    carried along unfiltered."""

    id: str
    outcome: str
    exposure: str
    confounders: tuple
    passengers: tuple = ()
    declared_ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "confounders", tuple(self.confounders))
        object.__setattr__(self, "passengers", tuple(self.passengers))
        names = self.names()
        if any(not n for n in names):
            raise SchemaError("variable names must be non-empty")
        core = (self.id, self.outcome, self.exposure)
        if len(set(core)) != 3:
            raise SchemaError("id, outcome, and exposure must be distinct")
        if len(set(self.confounders)) != len(self.confounders):
            raise SchemaError("confounder names must be unique")
        # the exposure may double as a confounder; no other overlap is allowed
        if self.id in self.confounders or self.outcome in self.confounders:
            raise SchemaError("id and outcome cannot be confounders")
        role_set = set(core) | set(self.confounders)
        if len(set(self.passengers)) != len(self.passengers) or any(
                p in role_set for p in self.passengers):
            raise SchemaError("passenger names must be unique and role-free")
        if len(self.confounders) < 2:
            raise SchemaError("at least two confounders are required")
        for name in self.declared_ranges:
            if name not in names:
                raise SchemaError(f"declared_range for unknown variable {name!r}")

    def names(self):
        return self.role_bearing() + self.passengers

    def role_bearing(self):
        """Names whose missingness drops a unit (everything but passengers),
        deduplicated when the exposure doubles as a confounder."""
        seen = (self.id, self.outcome, self.exposure)
        return seen + tuple(c for c in self.confounders if c not in seen)

    @classmethod
    def from_dict(cls, d):
        return cls(
            id=d["id"],
            outcome=d["outcome"],
            exposure=d["exposure"],
            confounders=tuple(d["confounders"]),
            passengers=tuple(d.get("passengers", ())),
            declared_ranges={k: tuple(v) for k, v in d.get("declared_ranges", {}).items()},
        )


@dataclass(frozen=True)
class AnalysisFrame:
    """Validated units-by-variables table, ordered by ascending unit id.

    Role-bearing columns are complete; passenger columns may hold NaN for
    values that were missing in the input.
    """

    schema: VariableSchema
    ids: np.ndarray
    data: dict
    n_dropped: int

    @property
    def n_units(self):
        return len(self.ids)

    def column(self, name):
        """Values of one variable, aligned with ``ids``."""
        if name not in self.data:
            raise KeyError(f"unknown variable {name!r}")
        return self.data[name]

    def matrix(self, names):
        """Column-stacked values for the given variables (n_units x len(names))."""
        return np.column_stack([self.column(n) for n in names])


def _parse_cell(text):
    """Parse one CSV cell: float, None for a missing marker, or raise."""
    s = text.strip()
    if s in MISSING_MARKERS:
        return None
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def load_csv(path, schema):
    """Load and filter a CSV file under the given schema.

    Rows with missing or unparseable role-bearing cells are dropped and
    counted in ``n_dropped``; missing passenger cells become NaN.  Units
    are reordered by ascending id.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        col_of = {}
        for name in schema.names():
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
            col_of[name] = header.index(name)

        role_names = schema.role_bearing()
        kept = []
        n_dropped = 0
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            values = {}
            ok = True
            for name in role_names:
                try:
                    v = _parse_cell(row[col_of[name]])
                except (ValueError, IndexError):
                    v = None
                if v is None:
                    ok = False
                    break
                values[name] = v
            if ok:
                uid = values[schema.id]
                if uid != int(uid) or uid <= 0:
                    ok = False
            if not ok:
                n_dropped += 1
                continue
            for name in schema.passengers:
                try:
                    v = _parse_cell(row[col_of[name]])
                except (ValueError, IndexError):
                    v = None
                values[name] = math.nan if v is None else v
            kept.append(values)

    if not kept:
        raise DataError(f"{path}: no rows survived filtering")

    ids = np.array([int(r[schema.id]) for r in kept], dtype=np.int64)
    uniq, counts = np.unique(ids, return_counts=True)
    if (counts > 1).any():
        raise DataError(f"duplicate unit ids (e.g. {int(uniq[counts > 1][0])})")
    order = np.argsort(ids, kind="stable")
    ids = ids[order]
    data = {}
    for name in schema.names():
        if name == schema.id:
            data[name] = ids.astype(np.float64)
        else:
            data[name] = np.array([r[name] for r in kept], dtype=np.float64)[order]

    for name, (lo, hi) in schema.declared_ranges.items():
        col = data[name]
        finite = col[np.isfinite(col)]
        if finite.size and (finite.min() < lo or finite.max() > hi):
            warnings.warn(
                f"variable {name!r} outside declared range [{lo}, {hi}]",
                stacklevel=2,
            )

    return AnalysisFrame(schema=schema, ids=ids, data=data, n_dropped=n_dropped)


def pearson(x, y):
    """Product-moment correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if x.size < 2:
        raise ValueError("need at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise ConstantInputError("correlation undefined for constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))
