import math
import os
from pathlib import Path

import numpy as np
import pytest

from localcontrol.dataset import AnalysisFrame, VariableSchema

COUNTY_DATA_ENV = "LOCALCONTROL_DATA"
COUNTY_DATA_DEFAULT = Path(__file__).resolve().parent.parent / "data" / "AnalysisFile.csv"

COUNTY_SCHEMA = VariableSchema(
    id="FIPS",
    outcome="AACRmort",
    exposure="Bvoc",
    confounders=("Bvoc", "Avoc", "pmSO4", "PREMdeath", "ASmoke", "ChildPOV", "IncomIEQ"),
)


def county_path():
    p = Path(os.environ.get(COUNTY_DATA_ENV, COUNTY_DATA_DEFAULT))
    return p if p.exists() else None


@pytest.fixture(scope="session")
def county_frame():
    path = county_path()
    if path is None:
        pytest.skip("county dataset AnalysisFile.csv not present")
    from localcontrol.dataset import load_csv

    return load_csv(path, COUNTY_SCHEMA)


def make_schema(n_confounders=2, passengers=()):
    return VariableSchema(
        id="id",
        outcome="y",
        exposure="x",
        confounders=tuple(f"c{i}" for i in range(n_confounders)),
        passengers=tuple(passengers),
    )


def make_frame(columns, schema=None, n_dropped=0):
    """AnalysisFrame from a dict of equal-length arrays (key 'id' optional)."""
    any_col = next(iter(columns.values()))
    n = len(any_col)
    if schema is None:
        n_conf = sum(1 for k in columns if k.startswith("c"))
        schema = make_schema(n_confounders=max(2, n_conf))
    ids = np.asarray(columns.get("id", np.arange(1, n + 1)), dtype=np.int64)
    data = {schema.id: ids.astype(np.float64)}
    for name in schema.names():
        if name == schema.id:
            continue
        data[name] = np.asarray(columns[name], dtype=np.float64)
    return AnalysisFrame(schema=schema, ids=ids, data=data, n_dropped=n_dropped)


# ---- independent oracles used across test modules ----------------------

def pearson_oracle(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def midrank_oracle(values):
    ranks = [0.0] * len(values)
    for i, v in enumerate(values):
        below = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        ranks[i] = below + (equal + 1) / 2.0
    return ranks


def spearman_oracle(x, y):
    return pearson_oracle(midrank_oracle(list(x)), midrank_oracle(list(y)))


def ecdf_oracle(values, point):
    return sum(1 for v in values if v <= point) / len(values)


def ks_oracle(a, b):
    pooled = sorted(set(list(a) + list(b)))
    best = -1.0
    at = None
    for p in pooled:
        gap = abs(ecdf_oracle(a, p) - ecdf_oracle(b, p))
        if round(gap, 12) > round(best, 12):
            best = gap
            at = p
    return max(abs(ecdf_oracle(a, p) - ecdf_oracle(b, p)) for p in pooled), at


def mahalanobis_sq_oracle(x_rows, i, j):
    x = np.asarray(x_rows, dtype=np.float64)
    cov = np.cov(x, rowvar=False)
    diff = x[i] - x[j]
    return float(diff @ np.linalg.inv(cov) @ diff)
