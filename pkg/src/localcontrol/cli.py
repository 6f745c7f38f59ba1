"""Pipeline orchestration and command-line interface.

Subcommands mirror the four analysis phases (aggregate, confirm, explore,
reveal) plus run-all; every stage reads one JSON config, writes plot-ready
CSV/JSON files into the output directory, and records digests, seeds and
timings in manifest.json.  All randomness flows from config seeds, so
reruns with the same config are byte-identical.
"""

import hashlib
import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, _backend
from . import cluster as cluster_mod
from . import confirm as confirm_mod
from . import explore as explore_mod
from . import forest as forest_mod
from . import mob as mob_mod
from .dataset import VariableSchema, load_csv
from .embed import pairwise_distances, principal_coordinates
from .lrc import lrc_distribution

DEFAULTS = {
    "method": "ward.D",
    "k": 50,
    "k_grid": list(explore_mod.DEFAULT_GRID),
    "embed_tolerance": 1e-9,
    "confirm": {"R": 100, "B": 1000, "seed": 0},
    "forest": {"trees": 500, "mtry": None, "min_leaf": 5, "seed": 0, "features": None},
    "mob": {
        "regressor": None,       # default: first confounder other than partition_var
        "partition_var": None,   # default: the exposure
        "min_size": 100,
        "max_depth": 3,
        "min_gain": 0.02,
    },
}


def load_config(path, overrides=None):
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    merged = json.loads(json.dumps(DEFAULTS))
    for key, val in cfg.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(val, dict):
            merged[key].update(val)
        else:
            merged[key] = val
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "seed":
            merged["confirm"]["seed"] = val
            merged["forest"]["seed"] = val
        elif key == "grid":
            merged["k_grid"] = val
        else:
            merged[key] = val
    for required in ("input", "output", "schema"):
        if required not in merged:
            raise ValueError(f"config is missing {required!r}")
    return merged


def _jsonable(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\r\n")


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


class Pipeline:
    """Lazy, memoizing composition of the pipeline stages for one config."""

    def __init__(self, config):
        self.config = config
        self.schema = VariableSchema.from_dict(config["schema"])
        self.outdir = Path(config["output"])
        self.outdir.mkdir(parents=True, exist_ok=True)
        self._cache = {}
        self.written = []
        self.timings = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def frame(self):
        return self._memo("frame", lambda: load_csv(self.config["input"], self.schema))

    @property
    def tree(self):
        def build():
            emb = principal_coordinates(
                self.frame, tolerance=self.config["embed_tolerance"]
            )
            return cluster_mod.agglomerate(pairwise_distances(emb), self.config["method"])

        return self._memo("tree", build)

    @property
    def assignment(self):
        return self._memo("assignment", self._load_or_cut)

    def _load_or_cut(self):
        # reuse a previously emitted aggregate stage when present
        path = self.outdir / "clusters.csv"
        if path.exists():
            ids, labels = [], []
            with open(path, encoding="utf-8") as fh:
                next(fh)
                for line in fh:
                    a, b = line.strip().split(",")
                    ids.append(int(a))
                    labels.append(int(b))
            ids = np.array(ids)
            labels = np.array(labels, dtype=np.int64)
            if ids.shape[0] == self.frame.n_units and np.array_equal(ids, self.frame.ids):
                k = int(labels.max())
                sizes = np.bincount(labels, minlength=k + 1)[1:]
                return cluster_mod.ClusterAssignment(k=k, labels=labels, sizes=sizes)
        return cluster_mod.cut(self.tree, int(self.config["k"]))

    @property
    def lrc(self):
        return self._memo("lrc", lambda: lrc_distribution(self.frame, self.assignment))

    def emit(self, name, writer, *args):
        path = self.outdir / name
        writer(path, *args)
        self.written.append(path)
        return path

    # ---- stages -------------------------------------------------------

    def run_aggregate(self):
        t0 = time.perf_counter()
        assignment = cluster_mod.cut(self.tree, int(self.config["k"]))
        self._cache["assignment"] = assignment
        self.emit(
            "clusters.csv", write_csv, ("id", "cluster_label"),
            zip(self.frame.ids.tolist(), assignment.labels.tolist()),
        )
        tree = self.tree
        self.emit(
            "dendrogram.csv", write_csv, ("step", "node_a", "node_b", "height"),
            zip(range(len(tree.heights)), tree.merge_a.tolist(),
                tree.merge_b.tolist(), tree.heights.tolist()),
        )
        self.emit(
            "cluster_size_histogram.csv", write_csv, ("size_lo", "size_hi", "count"),
            [(b["lo"], b["hi"], b["count"])
             for b in explore_mod.size_histogram(assignment, bin_width=10)],
        )
        self.timings["aggregate"] = time.perf_counter() - t0

    def run_confirm(self):
        t0 = time.perf_counter()
        cfg = self.config["confirm"]
        dist = self.lrc
        self.emit(
            "lrc_clusters.csv", write_csv, ("cluster_id", "lrc", "size"),
            [(int(c), "" if math.isnan(v) else repr(v), int(s))
             for c, v, s in dist.per_cluster],
        )
        value_of = dict(zip(dist.cluster_ids.tolist(), dist.values.tolist()))
        self.emit(
            "lrc_units.csv", write_csv, ("id", "cluster_id", "lrc"),
            [
                (int(uid), int(lab), "" if math.isnan(value_of[lab]) else repr(value_of[lab]))
                for uid, lab in zip(self.frame.ids.tolist(), self.assignment.labels.tolist())
            ],
        )
        null = confirm_mod.build_null_ensemble(
            self.frame, self.assignment.sizes, r=int(cfg["R"]), seed=int(cfg["seed"])
        )
        d_obs, d_at = confirm_mod.confirm(dist, null)
        t_confirm = time.perf_counter() - t0
        t1 = time.perf_counter()
        result = confirm_mod.ksperm(
            self.frame, self.assignment.sizes, null=null,
            d_observed=d_obs, d_location=d_at, b=int(cfg["B"]),
            seed=int(cfg["seed"]) + confirm_mod.PERM_SEED_OFFSET,
        )
        t_ksperm = time.perf_counter() - t1
        self.emit("confirm.json", write_json, result.to_dict())
        self.emit(
            "null_d.csv", write_csv, ("replicate", "d"),
            enumerate(result.null_d_sample.tolist()),
        )
        self.timings["confirm"] = t_confirm
        self.timings["ksperm"] = t_ksperm
        self._cache["confirm_result"] = result
        return result

    def run_explore(self):
        t0 = time.perf_counter()
        summary = explore_mod.compare_k(
            self.frame, self.tree, k_grid=self.config["k_grid"]
        )
        header = ("k", "min", "q1", "median", "q3", "max",
                  "fraction_negative", "n_undefined")
        self.emit(
            "explore.csv", write_csv, header,
            [tuple(getattr(r, h) for h in header) for r in summary.rows],
        )
        self.emit(
            "explore.json", write_json,
            {"rows": summary.as_dicts(), "advisory_k": summary.advisory_k,
             "advisory_note": "advisory IQR-inflation marker; K selection is manual"},
        )
        self.timings["explore"] = time.perf_counter() - t0
        return summary

    def run_reveal(self):
        t0 = time.perf_counter()
        fcfg = self.config["forest"]
        schema = self.schema
        features = fcfg.get("features")
        if not features:
            seen = []
            for name in (schema.exposure, *schema.confounders, schema.outcome):
                if name not in seen:
                    seen.append(name)
            features = seen
        # response: per-unit LRC; units in undefined clusters are excluded
        defined = ~np.isnan(self.lrc.values)
        unit_defined = defined[self.assignment.labels - 1]
        value_by_label = self.lrc.values
        response = value_by_label[self.assignment.labels[unit_defined] - 1]
        x = self.frame.matrix(features)[unit_defined]

        fit = forest_mod.fit_forest(
            x, response,
            n_trees=int(fcfg["trees"]),
            mtry=fcfg["mtry"],
            min_leaf=int(fcfg["min_leaf"]),
            seed=int(fcfg["seed"]),
            feature_names=tuple(features),
        )
        report = forest_mod.oob_importance(fit, x, response)
        self.emit(
            "importance.csv", write_csv,
            ("variable", "pct_inc_mse", "raw_inc_mse", "inc_node_purity"),
            [(r["variable"], r["pct_inc_mse"], r["raw_inc_mse"], r["inc_node_purity"])
             for r in report.rows()],
        )
        for name in features:
            pdp = forest_mod.partial_dependence(fit, x, name)
            self.emit(
                f"pdp_{name}.csv", write_csv, ("variable", "grid", "value"),
                [(name, g, v) for g, v in zip(pdp.grid.tolist(), pdp.values.tolist())],
            )

        mcfg = self.config["mob"]
        partition_var = mcfg["partition_var"] or schema.exposure
        regressor = mcfg["regressor"] or next(
            c for c in schema.confounders if c != partition_var
        )
        pv = self.frame.column(partition_var)[unit_defined]
        reg = self.frame.column(regressor)[unit_defined]
        tree = mob_mod.fit_mob(
            response, reg, pv,
            min_size=int(mcfg["min_size"]),
            max_depth=int(mcfg["max_depth"]),
            min_gain=float(mcfg["min_gain"]),
        )
        observed = (float(pv.min()), float(pv.max()))
        self.emit(
            "mob_table.csv", write_csv,
            ("node", "intercept", "slope", "lo", "hi", "n"),
            [(r["node"], r["intercept"], r["slope"], r["lo"], r["hi"], r["n"])
             for r in mob_mod.mob_table(tree, observed_range=observed)],
        )
        self.emit(
            "mob_tree.json", write_json,
            {"partition_var": partition_var, "regressor": regressor,
             "tree": tree.to_dict()},
        )
        self.timings["reveal"] = time.perf_counter() - t0
        if fit.constant_response:
            self.timings["reveal_flag_constant_response"] = 1.0

    def write_manifest(self, complete=True, error=None):
        files = {}
        for path in self.written:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            files[path.name] = digest
        manifest = {
            "version": __version__,
            "backend": _backend.BACKEND,
            "complete": complete,
            "error": error,
            "config": self.config,
            "seeds": {
                "confirm": self.config["confirm"]["seed"],
                "forest": self.config["forest"]["seed"],
            },
            "timings_seconds": self.timings,
            "files": files,
        }
        path = self.outdir / "manifest.json"
        write_json(path, manifest)
        return path

    def run_all(self):
        try:
            self.run_aggregate()
            self.run_confirm()
            self.run_explore()
            self.run_reveal()
        except Exception as exc:
            self.write_manifest(complete=False, error=str(exc))
            raise
        return self.write_manifest(complete=True)


def _overrides(input_, out, k, seed, method, grid):
    parsed_grid = None
    if grid:
        parsed_grid = [int(g) for g in grid.split(",")]
    return {
        "input": input_,
        "output": out,
        "k": k,
        "seed": seed,
        "method": method,
        "grid": parsed_grid,
    }


def _common(f):
    f = click.option("--config", "config_path", required=True, type=click.Path(exists=True))(f)
    f = click.option("--input", "input_", default=None, type=click.Path())(f)
    f = click.option("--out", default=None, type=click.Path())(f)
    f = click.option("--k", default=None, type=int)(f)
    f = click.option("--seed", default=None, type=int)(f)
    f = click.option("--method", default=None, type=str)(f)
    f = click.option("--grid", default=None, type=str, help="comma-separated K values")(f)
    return f


def _pipeline(config_path, input_, out, k, seed, method, grid):
    try:
        cfg = load_config(config_path, _overrides(input_, out, k, seed, method, grid))
        return Pipeline(cfg)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc


def _run(stage, pipeline):
    try:
        getattr(pipeline, stage)()
        pipeline.write_manifest()
    except click.ClickException:
        raise
    except Exception as exc:
        pipeline.write_manifest(complete=False, error=str(exc))
        raise click.ClickException(str(exc)) from exc


@click.group()
@click.version_option(__version__)
def main():
    """Local-control analysis pipeline for cross-sectional observational data."""


@main.command("aggregate")
@_common
def aggregate_cmd(config_path, input_, out, k, seed, method, grid):
    """Cluster units on confounders and write the assignment."""
    _run("run_aggregate", _pipeline(config_path, input_, out, k, seed, method, grid))


@main.command("confirm")
@_common
def confirm_cmd(config_path, input_, out, k, seed, method, grid):
    """Score local effect sizes and test them against random pseudo-clusterings."""
    _run("run_confirm", _pipeline(config_path, input_, out, k, seed, method, grid))


@main.command("explore")
@_common
def explore_cmd(config_path, input_, out, k, seed, method, grid):
    """Summarize the effect-size distribution across a grid of cluster counts."""
    _run("run_explore", _pipeline(config_path, input_, out, k, seed, method, grid))


@main.command("reveal")
@_common
def reveal_cmd(config_path, input_, out, k, seed, method, grid):
    """Fit the forest and partitioning-tree models of local effect sizes."""
    _run("run_reveal", _pipeline(config_path, input_, out, k, seed, method, grid))


@main.command("run-all")
@_common
def run_all_cmd(config_path, input_, out, k, seed, method, grid):
    """Run every stage and write the full report bundle."""
    pipeline = _pipeline(config_path, input_, out, k, seed, method, grid)
    try:
        pipeline.run_all()
    except click.ClickException:
        raise
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    sys.exit(main())
