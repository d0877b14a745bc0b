"""Multi-seed campaigns over (problem, method) cells and their aggregation.

Infeasible-only stretches of a run are scored with a per-problem sentinel:
the worst objective value observed on that problem by any method and seed.
The sentinel is only known once every cell has finished, so curves are built
after the campaign, never per run.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .optimizer import METHODS, OptimizerConfig, RunError, RunTrace
from .problems import DEFAULT_LOWER, DEFAULT_UPPER, make_problem

__all__ = [
    "CampaignSpec",
    "CampaignResult",
    "run_campaign",
    "worst_values",
    "feasible_best_curve",
    "summarize",
    "write_outputs",
    "read_curve_csv",
    "SUMMARY_FIELDS",
]

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ["problem", "method", "n_seeds", "mean", "std", "se", "median"]


@dataclass(frozen=True)
class CampaignSpec:
    problems: Sequence[str]
    methods: Sequence[str]
    seeds: Sequence[int]
    dim: int = 20
    lower: float = DEFAULT_LOWER
    upper: float = DEFAULT_UPPER
    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    method_configs: dict = field(default_factory=dict)
    out_dir: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        if not self.problems:
            raise ValueError("at least one problem is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be pairwise distinct")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {sorted(METHODS)}")

    def config_for(self, method: str, seed: int) -> OptimizerConfig:
        return replace(self.method_configs.get(method, self.config), seed=seed)

    def to_dict(self) -> dict:
        return {
            "problems": list(self.problems),
            "methods": list(self.methods),
            "seeds": [int(s) for s in self.seeds],
            "dim": self.dim,
            "lower": self.lower,
            "upper": self.upper,
            "config": self.config.resolve(self.dim).to_dict(),
            "method_configs": {m: c.resolve(self.dim).to_dict() for m, c in sorted(self.method_configs.items())},
            "workers": self.workers,
        }


@dataclass
class CampaignResult:
    spec: CampaignSpec
    traces: dict = field(default_factory=dict)  # (problem, method, seed) -> RunTrace
    errors: dict = field(default_factory=dict)  # (problem, method, seed) -> message
    worst: dict = field(default_factory=dict)  # problem -> sentinel value
    curves: dict = field(default_factory=dict)  # (problem, method) -> (seeds, array n_evals x n_seeds)

    def finals(self, problem: str, method: str) -> np.ndarray:
        seeds, mat = self.curves[(problem, method)]
        return mat[-1] if mat.size else np.zeros(0)


def _run_cell(args):
    problem_name, method, seed, dim, lower, upper, config = args
    problem = make_problem(problem_name, dim, lower, upper)
    try:
        return (problem_name, method, seed), METHODS[method](problem, config), None
    except RunError as exc:
        return (problem_name, method, seed), exc.trace, repr(exc)
    except Exception as exc:  # a failed cell must not abort the campaign
        return (problem_name, method, seed), None, repr(exc)


def feasible_best_curve(trace: RunTrace, worst_value: float) -> np.ndarray:
    """Running minimum of feasible objective values, ``worst_value`` until the first one."""
    out = np.empty(len(trace.records))
    best = math.inf
    for i, r in enumerate(trace.records):
        if r.feasible and r.f < best:
            best = r.f
        out[i] = worst_value if best == math.inf else min(best, worst_value)
    return out


def worst_values(traces) -> dict:
    """Per problem: the largest objective value observed by any run."""
    worst = {}
    for trace in traces:
        if trace is None or not trace.records:
            continue
        top = max(r.f for r in trace.records)
        worst[trace.problem] = max(worst.get(trace.problem, -math.inf), top)
    return worst


def run_campaign(spec: CampaignSpec) -> CampaignResult:
    cells = [
        (p, m, int(s), spec.dim, spec.lower, spec.upper, spec.config_for(m, int(s)))
        for p in sorted(spec.problems) for m in sorted(spec.methods) for s in sorted(spec.seeds)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_run_cell, cells))
    else:
        outcomes = [_run_cell(c) for c in cells]

    result = CampaignResult(spec)
    for key, trace, err in outcomes:
        if err is not None:
            log.warning("cell %s failed: %s", key, err)
            result.errors[key] = err
        if trace is not None and err is None:
            result.traces[key] = trace

    result.worst = worst_values(result.traces.values())
    for p in sorted(spec.problems):
        for m in sorted(spec.methods):
            seeds = [s for s in sorted(spec.seeds) if (p, m, s) in result.traces]
            cols = [feasible_best_curve(result.traces[(p, m, s)], result.worst[p]) for s in seeds]
            mat = np.column_stack(cols) if cols else np.zeros((0, 0))
            result.curves[(p, m)] = (seeds, mat)
    if spec.out_dir is not None:
        write_outputs(result, spec.out_dir)
    return result


def _stats(values) -> dict:
    v = np.sort(np.asarray(values, dtype=float))
    n = v.shape[0]
    if n == 0:
        return {"n_seeds": 0, "mean": math.nan, "std": math.nan, "se": math.nan, "median": math.nan}
    std = float(np.std(v, ddof=1)) if n > 1 else 0.0
    return {
        "n_seeds": n,
        "mean": float(np.mean(v)),
        "std": std,
        "se": std / math.sqrt(n),
        "median": float(np.median(v)),
    }


def summarize(result: CampaignResult) -> list[dict]:
    """One row per (problem, method), sorted lexicographically. ``std`` uses ``n - 1``."""
    rows = []
    for (p, m) in sorted(result.curves):
        seeds, mat = result.curves[(p, m)]
        finals = mat[-1] if mat.size else []
        rows.append({"problem": p, "method": m, **_stats(finals)})
    return rows


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_csv(path: Path, header: list, rows: list, config: dict):
    buf = io.StringIO()
    buf.write(_config_line(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_outputs(result: CampaignResult, out_dir) -> Path:
    """Write ``summary.csv``, ``curves/*.csv`` and ``traces/*.json`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    config = result.spec.to_dict()
    config["worst_values"] = {k: result.worst[k] for k in sorted(result.worst)}

    rows = summarize(result)
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, [[r[k] for k in SUMMARY_FIELDS] for r in rows], config)

    for (p, m), (seeds, mat) in sorted(result.curves.items()):
        header = ["eval_index", "mean", "se", "median"] + [f"seed_{s}" for s in seeds]
        body = []
        for t in range(mat.shape[0]):
            st = _stats(mat[t])
            body.append([t + 1, st["mean"], st["se"], st["median"], *mat[t]])
        _write_csv(out / "curves" / f"{p}_{m}.csv", header, body, config)

    for (p, m, s), trace in sorted(result.traces.items()):
        doc = {"campaign": config, **trace.to_dict()}
        (out / "traces" / f"{p}_{m}_{s}.json").write_text(
            json.dumps(doc, sort_keys=True, indent=1, default=_jsonable) + "\n")
    if result.errors:
        errs = {f"{p}/{m}/{s}": e for (p, m, s), e in sorted(result.errors.items())}
        (out / "errors.json").write_text(json.dumps(errs, indent=1, sort_keys=True) + "\n")
    return out


def read_curve_csv(path) -> dict:
    """Parse a curve CSV written by :func:`write_outputs` into numpy columns."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}
