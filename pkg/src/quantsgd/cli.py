"""Command-line front end.

Thin wrappers over the library: every subcommand loads a JSON config (except
``compare-fp-int``), runs the corresponding library call, writes its artifact
under ``--out`` and echoes a summary to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as bounds_mod
from .bounds import BoundInputs, check_matching_conditions, fp_int_preference
from .harness import (
    SUMMARY_COLUMNS,
    emit_csv,
    expand_cells,
    load_config,
    run_sweep,
    simulate_rows,
)
from .risk import r1_r2_monte_carlo


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # The shared flags hang off the root parser *and* every subcommand, so
    # both `quantsgd --config c simulate` and `quantsgd simulate --config c`
    # work.  The subcommand copies use SUPPRESS defaults: otherwise argparse
    # would reset flags given before the subcommand back to their defaults.
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument(
        "--config", type=Path, default=default(None), help="JSON experiment config"
    )
    parser.add_argument(
        "--seed", type=int, default=default(None), help="override run.seed"
    )
    parser.add_argument(
        "--out", type=Path, default=default(Path("out")), help="output directory"
    )
    parser.add_argument(
        "--threads", type=int, default=default(1), help="worker threads for sweeps"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantsgd",
        description="Quantized averaged-SGD simulation and bound evaluation",
    )
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_common(p, suppress=True)
        return p

    add_command("simulate", "run one trajectory, write per-checkpoint CSV")
    add_command("sweep", "run the config's sweep grid, write results + summary")
    p_bound = add_command("bound", "evaluate the closed-form risk bound")
    p_bound.add_argument(
        "--regime",
        choices=["auto", "multiplicative", "additive", "general"],
        default="auto",
    )
    add_command("check-conditions", "evaluate budget-matching thresholds")
    p_dec = add_command("decompose", "Monte Carlo four-term risk decomposition")
    p_dec.add_argument("--n-seeds", type=int, default=50)
    p_fpi = add_command(
        "compare-fp-int", "which rounding family wins at a given bit budget"
    )
    p_fpi.add_argument("--bits", type=int, required=True)
    p_fpi.add_argument("--mantissa", type=int, required=True)
    p_fpi.add_argument("--dim", type=int, required=True)
    return parser


def _load(args) -> dict:
    if args.config is None:
        raise ValueError(f"{args.command} requires --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("run", {})["seed"] = args.seed
    return cfg


def _write_json(obj: dict, path: Path) -> str:
    text = json.dumps(obj, indent=2) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def _bound_inputs(cfg: dict) -> BoundInputs:
    cell = expand_cells({k: v for k, v in cfg.items() if k != "sweep"})[0]
    overrides = cfg.get("bounds", {})
    return BoundInputs(
        spec=cell.spec,
        sites=cell.sites,
        n=cell.run_args["steps"],
        batch=cell.run_args["batch"],
        gamma=cell.run_args["stepsize"],
        alpha_b=cell.run_args["alpha_b"],
        sigma_sq=overrides.get("sigma_sq"),
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compare-fp-int":
            verdict = fp_int_preference(args.bits, args.mantissa, args.dim)
            print(verdict)
            return 0

        cfg = _load(args)
        out: Path = args.out
        if args.command == "simulate":
            rows = simulate_rows(cfg)
            emit_csv(rows, out / "trajectory.csv")
            last = rows[-1]
            print(
                f"wrote {out / 'trajectory.csv'} ({len(rows)} checkpoints, "
                f"final risk_avg {last['risk_avg']!r}, status {last['status']})"
            )
            return 0
        if args.command == "sweep":
            result = run_sweep(cfg, out_dir=out, threads=args.threads)
            print(
                f"wrote {result.results_path} ({len(result.rows)} rows) and "
                f"{result.summary_path} ({len(result.summary)} cells)"
            )
            return 0
        if args.command == "bound":
            inputs = _bound_inputs(cfg)
            regime = args.regime
            if regime == "auto":
                regime = inputs.sites.regime
                if regime == "identity":
                    regime = "multiplicative"
            fn = {
                "multiplicative": bounds_mod.bound_multiplicative,
                "additive": bounds_mod.bound_additive,
                "general": bounds_mod.bound_general,
            }[regime]
            report = fn(inputs).to_json()
            print(_write_json(report, out / "bound.json"), end="")
            return 0
        if args.command == "check-conditions":
            report = check_matching_conditions(_bound_inputs(cfg)).to_json()
            print(_write_json(report, out / "conditions.json"), end="")
            return 0
        if args.command == "decompose":
            cell = expand_cells({k: v for k, v in cfg.items() if k != "sweep"})[0]
            from .engine import RunConfig

            run = RunConfig(
                steps=cell.run_args["steps"],
                batch=cell.run_args["batch"],
                stepsize=cell.run_args["stepsize"],
                checkpoints=[cell.run_args["steps"]],
                seed=cell.run_args["seed"],
                alpha_b=cell.run_args["alpha_b"],
                record_stats=False,
            )
            br = r1_r2_monte_carlo(cell.spec, cell.sites, run, args.n_seeds)
            report = {
                "r1": br.r1,
                "r2": br.r2,
                "r3": br.r3,
                "r4": br.r4,
                "total": br.total,
                "direct": br.direct,
                "total_se": br.total_se,
                "n_seeds": br.n_seeds,
            }
            print(_write_json(report, out / "decompose.json"), end="")
            return 0
        raise AssertionError(args.command)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
