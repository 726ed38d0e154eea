"""Experiment harness: JSON configs, seeded sweeps, deterministic CSV output.

A config file describes one problem/quantizer/run combination plus an
optional sweep section:

    {
      "problem":    {"dim": 200,
                     "spectrum": {"kind": "power_law", "a": 2.0},
                     "w_star":   {"kind": "constant", "value": 1.0},
                     "noise_var": 1.0},
      "quantizers": {"data": {"kind": "additive", "epsilon": 0.01}},
      "run":        {"steps": 10000, "batch": 1, "stepsize": "auto",
                     "checkpoints": null, "seed": 0},
      "sweep":      {"axes": [["quantizers.data.epsilon", [0.001, 0.01]]],
                     "n_seeds": 20}
    }

Sites left out of "quantizers" default to the identity.  Sweep axes are
(dotted path, values) pairs expanded as a full grid; each grid cell gets a
stable ``experiment_id`` (a hash of its resolved config, excluding the root
seed) and ``n_seeds`` trials whose seeds derive from
SeedSequence([root_seed, cell_id, trial]).

Determinism contract: identical configs produce byte-identical CSVs — rows
are emitted in sorted order and floats in shortest round-trip form.  A sweep
writes one file per cell under ``<out>/cells/`` before assembling the final
table, so an interrupted sweep resumes by skipping finished cells.
"""

from __future__ import annotations

import copy
import csv
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import Eps
from .engine import (
    DivergenceError,
    RunConfig,
    SiteQuantizers,
    resolve_stepsize,
    run_trajectory,
)
from .spectrum import ProblemSpec, constant_target, power_law_eigenvalues

CSV_COLUMNS = (
    "experiment_id",
    "seed",
    "regime",
    "d",
    "a",
    "B",
    "N",
    "gamma",
    "eps_d",
    "eps_l",
    "eps_p",
    "eps_a",
    "eps_o",
    "step",
    "risk_last",
    "risk_avg",
    "status",
)

SUMMARY_COLUMNS = (
    "experiment_id",
    "regime",
    "d",
    "a",
    "B",
    "N",
    "gamma",
    "eps_d",
    "eps_l",
    "eps_p",
    "eps_a",
    "eps_o",
    "n_seeds",
    "n_diverged",
    "median_risk_avg",
    "iqr_risk_avg",
    "mean_risk_avg",
    "stderr_risk_avg",
)

_TOP_KEYS = {"problem", "quantizers", "run", "sweep", "bounds"}


def _fail(msg: str):
    raise ValueError(f"invalid config: {msg}")


def load_config(source) -> dict:
    """Read and structurally validate a config, returning the raw dict."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                _fail(f"{source} is not valid JSON ({exc})")
    else:
        cfg = copy.deepcopy(source)
    if not isinstance(cfg, dict):
        _fail("top level must be an object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        _fail(f"unknown top-level keys {sorted(unknown)}")
    for key in ("problem", "run"):
        if key not in cfg:
            _fail(f"missing required section {key!r}")
    _parse_cell(cfg)  # raises on structural problems
    if "sweep" in cfg:
        sweep = cfg["sweep"]
        axes = sweep.get("axes")
        if not isinstance(axes, list) or not axes:
            _fail("sweep.axes must be a non-empty list of [path, values] pairs")
        for axis in axes:
            if (
                not isinstance(axis, list)
                or len(axis) != 2
                or not isinstance(axis[0], str)
                or not isinstance(axis[1], list)
                or not axis[1]
            ):
                _fail(f"malformed sweep axis {axis!r}")
        if not isinstance(sweep.get("n_seeds"), int) or sweep["n_seeds"] < 1:
            _fail("sweep.n_seeds must be a positive integer")
    return cfg


def _parse_cell(cfg: dict) -> tuple[ProblemSpec, SiteQuantizers, dict, float]:
    """Turn one (non-sweep) config dict into typed objects."""
    prob = cfg.get("problem")
    if not isinstance(prob, dict):
        _fail("problem must be an object")
    try:
        dim = int(prob["dim"])
        spectrum = prob["spectrum"]
        if spectrum.get("kind") != "power_law":
            _fail(f"unsupported spectrum kind {spectrum.get('kind')!r}")
        a = float(spectrum["a"])
        w_cfg = prob.get("w_star", {"kind": "constant", "value": 1.0})
        if w_cfg.get("kind") != "constant":
            _fail(f"unsupported w_star kind {w_cfg.get('kind')!r}")
        spec = ProblemSpec(
            power_law_eigenvalues(dim, a),
            constant_target(dim, float(w_cfg.get("value", 1.0))),
            float(prob.get("noise_var", 0.0)),
        )
    except KeyError as exc:
        _fail(f"problem section missing {exc}")
    sites = SiteQuantizers.from_json(cfg.get("quantizers", {}))
    run = cfg.get("run")
    if not isinstance(run, dict):
        _fail("run must be an object")
    unknown = set(run) - {"steps", "batch", "stepsize", "checkpoints", "seed"}
    if unknown:
        _fail(f"unknown run keys {sorted(unknown)}")
    try:
        run_args = {
            "steps": int(run["steps"]),
            "batch": int(run.get("batch", 1)),
            "stepsize": run.get("stepsize", "auto"),
            "checkpoints": run.get("checkpoints"),
            "seed": int(run.get("seed", 0)),
        }
    except KeyError as exc:
        _fail(f"run section missing {exc}")
    alpha_b = float(cfg.get("bounds", {}).get("alpha_b", 3.0))
    RunConfig(alpha_b=alpha_b, **run_args)  # validates values
    return spec, sites, {**run_args, "alpha_b": alpha_b}, a


def _set_path(cfg: dict, path: str, value):
    parts = path.split(".")
    node = cfg
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def _cell_id(cell_cfg: dict) -> str:
    import hashlib

    key = {
        "problem": cell_cfg["problem"],
        "quantizers": cell_cfg.get("quantizers", {}),
        "run": {k: v for k, v in cell_cfg["run"].items() if k != "seed"},
    }
    text = json.dumps(key, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class Cell:
    experiment_id: str
    config: dict
    spec: ProblemSpec
    sites: SiteQuantizers
    run_args: dict
    a: float

    @property
    def gamma(self) -> float:
        step = self.run_args["stepsize"]
        if isinstance(step, str):
            return resolve_stepsize(self.spec, self.sites, self.run_args["alpha_b"])
        return float(step)


def expand_cells(cfg: dict) -> list[Cell]:
    """Expand the sweep grid (or wrap the single configured cell)."""
    if "sweep" in cfg:
        axes = cfg["sweep"]["axes"]
        combos = itertools.product(*(values for _, values in axes))
        cell_dicts = []
        for combo in combos:
            cell = copy.deepcopy(
                {k: v for k, v in cfg.items() if k != "sweep"}
            )
            for (path, _), value in zip(axes, combo):
                _set_path(cell, path, value)
            cell_dicts.append(cell)
    else:
        cell_dicts = [copy.deepcopy(cfg)]
    cells = []
    for cd in cell_dicts:
        spec, sites, run_args, a = _parse_cell(cd)
        cells.append(Cell(_cell_id(cd), cd, spec, sites, run_args, a))
    return cells


def trial_seed(root_seed: int, experiment_id: str, trial: int) -> int:
    ss = np.random.SeedSequence([root_seed, int(experiment_id, 16), trial])
    return int(ss.generate_state(1, np.uint64)[0])


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cell_common(cell: Cell) -> dict:
    eps = Eps.from_sites(cell.sites)
    return {
        "experiment_id": cell.experiment_id,
        "regime": cell.sites.regime,
        "d": cell.spec.dim,
        "a": cell.a,
        "B": cell.run_args["batch"],
        "N": cell.run_args["steps"],
        "gamma": cell.gamma,
        "eps_d": eps.data,
        "eps_l": eps.label,
        "eps_p": eps.param,
        "eps_a": eps.activation,
        "eps_o": eps.output_grad,
    }


def run_cell(cell: Cell, n_seeds: int, root_seed: int) -> list[dict]:
    """One row per trial and recorded checkpoint; divergence becomes a row.

    By default only the final step is recorded (one row per trial).  Setting
    ``run.checkpoints`` records the whole curve, e.g. for plotting risk
    against iteration count downstream.
    """
    common = _cell_common(cell)
    n = cell.run_args["steps"]
    ckpts = cell.run_args["checkpoints"]
    rows = []
    for trial in range(n_seeds):
        seed = trial_seed(root_seed, cell.experiment_id, trial)
        run = RunConfig(
            steps=n,
            batch=cell.run_args["batch"],
            stepsize=cell.run_args["stepsize"],
            checkpoints=[n] if ckpts is None else ckpts,
            seed=seed,
            alpha_b=cell.run_args["alpha_b"],
            record_stats=False,
        )
        try:
            traj = run_trajectory(cell.spec, cell.sites, run)
        except DivergenceError as exc:
            rows.append(
                {
                    **common,
                    "seed": seed,
                    "step": exc.step,
                    "risk_last": math.nan,
                    "risk_avg": math.nan,
                    "status": "diverged",
                }
            )
            continue
        rows.extend(
            {
                **common,
                "seed": seed,
                "step": int(step),
                "risk_last": float(last),
                "risk_avg": float(avg),
                "status": "ok",
            }
            for step, last, avg in zip(traj.checkpoints, traj.risk_last, traj.risk_avg)
        )
    return rows


def simulate_rows(cfg: dict) -> list[dict]:
    """One trajectory at the configured seed, one row per checkpoint."""
    cells = expand_cells({k: v for k, v in cfg.items() if k != "sweep"})
    cell = cells[0]
    common = _cell_common(cell)
    run = RunConfig(
        steps=cell.run_args["steps"],
        batch=cell.run_args["batch"],
        stepsize=cell.run_args["stepsize"],
        checkpoints=cell.run_args["checkpoints"],
        seed=cell.run_args["seed"],
        alpha_b=cell.run_args["alpha_b"],
        record_stats=False,
    )
    try:
        traj = run_trajectory(cell.spec, cell.sites, run)
    except DivergenceError as exc:
        return [
            {
                **common,
                "seed": run.seed,
                "step": exc.step,
                "risk_last": math.nan,
                "risk_avg": math.nan,
                "status": "diverged",
            }
        ]
    return [
        {
            **common,
            "seed": run.seed,
            "step": int(step),
            "risk_last": float(last),
            "risk_avg": float(avg),
            "status": "ok",
        }
        for step, last, avg in zip(traj.checkpoints, traj.risk_last, traj.risk_avg)
    ]


def _sort_key(row: dict):
    return (row["experiment_id"], row.get("seed", 0), row.get("step", 0))


def emit_csv(rows: list[dict], path, columns=CSV_COLUMNS) -> None:
    """Write rows in canonical order with round-trippable float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in sorted(rows, key=_sort_key):
            writer.writerow([_fmt(row[c]) for c in columns])
    os.replace(tmp, path)


def read_csv(path) -> list[dict]:
    """Read a results CSV back into typed rows (inverse of :func:`emit_csv`)."""
    int_cols = {"seed", "d", "B", "N", "step"}
    str_cols = {"experiment_id", "regime", "status"}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for key, val in rec.items():
                if key in str_cols:
                    row[key] = val
                elif key in int_cols:
                    row[key] = int(val)
                else:
                    row[key] = float(val)
            rows.append(row)
    return rows


def _quantile(sorted_vals: list[float], p: float) -> float:
    # linear interpolation on (n-1)p, matching the conventional definition
    n = len(sorted_vals)
    if n == 1:
        return sorted_vals[0]
    h = (n - 1) * p
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    return sorted_vals[lo] + (h - lo) * (sorted_vals[hi] - sorted_vals[lo])


def summarize(rows: list[dict]) -> list[dict]:
    """Per-cell medians, IQRs, means and standard errors of the final risk.

    Each trial contributes its last recorded row (with ``run.checkpoints``
    set there is one row per checkpoint, otherwise just the final step).
    Deliberately computed with plain Python arithmetic so an independent
    reader of the CSV can reproduce every number exactly.
    """
    by_cell: dict[str, list[dict]] = {}
    for row in rows:
        by_cell.setdefault(row["experiment_id"], []).append(row)
    out = []
    for cell_id in sorted(by_cell):
        cell_rows = by_cell[cell_id]
        terminal: dict[int, dict] = {}
        for r in cell_rows:
            cur = terminal.get(r["seed"])
            if cur is None or r["step"] > cur["step"]:
                terminal[r["seed"]] = r
        trials = list(terminal.values())
        ok = [r for r in trials if r["status"] == "ok"]
        vals = sorted(r["risk_avg"] for r in ok)
        n = len(vals)
        mean = sum(vals) / n if n else math.nan
        if n > 1:
            var = sum((v - mean) ** 2 for v in vals) / (n - 1)
            stderr = math.sqrt(var / n)
        else:
            stderr = 0.0 if n == 1 else math.nan
        base = {
            k: cell_rows[0][k]
            for k in SUMMARY_COLUMNS
            if k in cell_rows[0]
        }
        out.append(
            {
                **base,
                "n_seeds": len(trials),
                "n_diverged": len(trials) - n,
                "median_risk_avg": _quantile(vals, 0.5) if n else math.nan,
                "iqr_risk_avg": (
                    _quantile(vals, 0.75) - _quantile(vals, 0.25) if n else math.nan
                ),
                "mean_risk_avg": mean,
                "stderr_risk_avg": stderr,
            }
        )
    return out


def _cell_cache_valid(rows: list[dict], n_seeds: int, last_step: int) -> bool:
    """True when a cached cell file holds every trial through its last row."""
    by_seed: dict[int, int] = {}
    status_at_max: dict[int, str] = {}
    for row in rows:
        seed = row["seed"]
        if seed not in by_seed or row["step"] > by_seed[seed]:
            by_seed[seed] = row["step"]
            status_at_max[seed] = row["status"]
    if len(by_seed) != n_seeds:
        return False
    return all(
        status_at_max[seed] == "diverged" or step == last_step
        for seed, step in by_seed.items()
    )


@dataclass
class SweepResult:
    rows: list[dict]
    summary: list[dict]
    results_path: Path | None = None
    summary_path: Path | None = None


def run_sweep(
    cfg: dict, out_dir=None, threads: int = 1, n_seeds: int | None = None
) -> SweepResult:
    """Run every cell of the sweep grid and assemble the canonical tables.

    When ``out_dir`` is given, per-cell CSVs are written under
    ``<out>/cells/`` as they finish; re-running the same sweep skips cells
    whose files already hold the expected number of rows.
    """
    cells = expand_cells(cfg)
    if n_seeds is None:
        n_seeds = cfg.get("sweep", {}).get("n_seeds", 1)
    root_seed = cfg["run"].get("seed", 0)
    cell_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        cell_dir = out_dir / "cells"
        cell_dir.mkdir(parents=True, exist_ok=True)

    def one(cell: Cell) -> list[dict]:
        if cell_dir is not None:
            cached = cell_dir / f"{cell.experiment_id}.csv"
            if cached.exists():
                rows = read_csv(cached)
                ckpts = cell.run_args["checkpoints"]
                last = (
                    cell.run_args["steps"]
                    if ckpts is None
                    else int(
                        RunConfig(
                            steps=cell.run_args["steps"], checkpoints=ckpts
                        ).resolved_checkpoints()[-1]
                    )
                )
                if _cell_cache_valid(rows, n_seeds, last):
                    return rows
            rows = run_cell(cell, n_seeds, root_seed)
            emit_csv(rows, cached)
            return rows
        return run_cell(cell, n_seeds, root_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_cell = list(pool.map(one, cells))
    else:
        per_cell = [one(cell) for cell in cells]
    rows = [row for cell_rows in per_cell for row in cell_rows]
    summary = summarize(rows)
    result = SweepResult(rows=rows, summary=summary)
    if out_dir is not None:
        result.results_path = out_dir / "results.csv"
        result.summary_path = out_dir / "summary.csv"
        emit_csv(rows, result.results_path)
        emit_csv(summary, result.summary_path, columns=SUMMARY_COLUMNS)
    return result
