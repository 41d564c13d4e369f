"""Command line entry point: ``wireless-dpsgd <command> [options]``.

Commands
  channel   dump the pairwise capacity matrix
  optimize  choose per-node rates for each (lambda_target, epsilon) cell
  train     optimize, then run D-PSGD for the configured cell
  sweep     optimize and train over the [sweep] grid
  bound     write convergence-bound curves against lambda
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .propagation import build_channel_matrix
from .scenario import io
from .scenario.config import ScenarioConfig, ScenarioError, default_scenario, load_scenario
from .scenario.runner import bound_files, cell_name, resolved_config, run_plan

log = logging.getLogger("wireless_dpsgd")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _iterations(text: str) -> list[float]:
    out = []
    for v in text.replace(",", " ").split():
        out.append(math.inf if v.lower() in ("inf", "infinity") else float(int(v)))
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario file (INI format)")
    common.add_argument("--seed", type=int, help="training seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--lambda-target", type=_floats, help="comma-separated lambda_target values")
    common.add_argument("--epsilon", type=_floats, help="comma-separated path-loss indices")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wireless-dpsgd", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("channel", parents=[common], help="dump channel-capacity matrix")
    sub.add_parser("optimize", parents=[common], help="optimize rates only")
    sub.add_parser("train", parents=[common], help="optimize and train one configuration")
    sub.add_parser("sweep", parents=[common], help="optimize and train over the sweep grid")
    b = sub.add_parser("bound", parents=[common], help="convergence bound vs lambda")
    b.add_argument("--nodes", type=_floats, help="node counts, e.g. 6,20")
    b.add_argument("--iterations", type=_iterations, help="iteration counts, e.g. 1,100,inf")
    b.add_argument("--points", type=int, help="lambda grid points in [0, 0.999]")
    return p


def _config(args) -> ScenarioConfig:
    cfg = load_scenario(args.config) if args.config else default_scenario()
    return cfg.with_overrides(seed=args.seed, out=args.out, lambda_targets=args.lambda_target, epsilons=args.epsilon)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "bound" and args.points:
            from dataclasses import replace

            cfg = replace(cfg, bound_points=args.points)
        out = Path(cfg.output_dir)
        files = _dispatch(args, cfg, out)
    except (ScenarioError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    io.write_manifest(
        out / "manifest.json",
        args.command,
        cfg.source_text,
        resolved_config(cfg),
        {"training": cfg.training.seed, "data": cfg.data.seed},
        [str(Path(f).relative_to(out)) for f in files],
    )
    for f in files:
        print(f)
    return 0


def _dispatch(args, cfg: ScenarioConfig, out: Path) -> list[Path]:
    if args.command == "channel":
        files = []
        for eps in cfg.sweep_path_loss_indices or (cfg.radio.path_loss_index,):
            ch = build_channel_matrix(cfg.layout, cfg.radio.with_path_loss_index(eps))
            files.append(io.write_channel(out / f"channel_eps{eps:g}.csv", cfg.layout, ch))
        return files
    if args.command == "optimize":
        files, summary = run_plan(cfg, use_sweep=True, do_train=False)
        _print_summary(summary)
        return files
    if args.command == "train":
        files, summary = run_plan(cfg, use_sweep=args.lambda_target is not None or args.epsilon is not None)
        _print_summary(summary)
        return files
    if args.command == "sweep":
        files, summary = run_plan(cfg, use_sweep=True)
        _print_summary(summary)
        return files
    if args.command == "bound":
        return bound_files(cfg, out, args.nodes, args.iterations)
    raise AssertionError(args.command)


def _print_summary(summary) -> None:
    for row in summary:
        name = cell_name(row["lambda_target"], row["path_loss_index"])
        if row["status"] != "ok":
            print(f"# {name}: {row['status']} ({row.get('detail', '')})", file=sys.stderr)
            continue
        extra = ""
        if "time_to_accuracy_s" in row:
            tta = row["time_to_accuracy_s"]
            extra = f" final_acc={row['final_accuracy']:.4f} time_to_acc={'n/a' if tta is None else f'{tta:.4g}s'}"
        print(f"# {name}: lambda={row['lambda']:.6f} t_com={row['t_com_s']:.6g}s{extra}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
