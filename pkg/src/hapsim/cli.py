"""Command-line entry point: train / eval / baseline / plot / check.

Exit codes: 0 success, 1 configuration or validation error, 2 numerical
abort during training.
"""
from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from . import harness
from .baselines import BASELINE_NAMES
from .ppo import NumericalError


def _scenario_arg(value: str):
    if value == "random":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("scenario must be 1..4 or 'random'")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hapsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a positioning policy")
    t.add_argument("--config", help="JSON run config; defaults used when omitted")
    t.add_argument("--seed", type=int, help="override master_seed")
    t.add_argument("--episodes", type=int, help="override episode count")
    t.add_argument("--out", help="override output directory")

    e = sub.add_parser("eval", help="evaluate a checkpoint on a scenario")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config", help="verify the checkpoint against this config")
    e.add_argument("--scenario", type=_scenario_arg, default=1)
    e.add_argument("--episodes", type=int, default=20)
    e.add_argument("--seed", type=int, help="override master_seed for eval streams")

    b = sub.add_parser("baseline", help="run a scripted comparator policy")
    b.add_argument("--name", required=True, choices=BASELINE_NAMES)
    b.add_argument("--config")
    b.add_argument("--scenario", type=_scenario_arg, default=1)
    b.add_argument("--episodes", type=int, default=20)
    b.add_argument("--seed", type=int)

    g = sub.add_parser("plot", help="render metric curves from a metrics file")
    g.add_argument("--metrics", required=True)
    g.add_argument("--out", default="plots")
    g.add_argument("--window", type=int, default=25, help="moving-average window")

    sub.add_parser("check", help="run the fast invariant suite")
    return p


def _load_config(path, seed=None, episodes=None, out=None) -> cfgmod.RunConfig:
    cfg = cfgmod.load(path) if path else cfgmod.RunConfig()
    if seed is not None:
        cfg.master_seed = seed
    if episodes is not None:
        if episodes < 1:
            raise cfgmod.ConfigError("--episodes must be >= 1")
        cfg.episodes = episodes
    if out is not None:
        cfg.output_dir = out
    return cfg


def cmd_train(args) -> int:
    cfg = _load_config(args.config, args.seed, args.episodes, args.out)

    def progress(episode, stats, update_stats):
        if episode % max(1, cfg.episodes // 20) == 0 or episode == cfg.episodes - 1:
            print(f"episode {episode:6d}  reward {stats.mean_reward:.4f}  "
                  f"fair {stats.mean_fair_rate:8.2f}  entropy {update_stats['entropy']:.3f}")

    result = harness.train_run(cfg, cfg.output_dir, progress=progress)
    print(f"metrics: {result.metrics_path}")
    print(f"final checkpoint: {result.final_checkpoint}")
    print(f"best checkpoint:  {result.best_checkpoint} (eval reward {result.best_eval_reward:.4f})")
    return 0


def cmd_eval(args) -> int:
    expect = cfgmod.load(args.config) if args.config else None
    params, run_cfg, meta = harness.load_checkpoint(args.checkpoint, expect)
    if args.seed is not None:
        run_cfg.master_seed = args.seed
    stats = harness.evaluate_policy(run_cfg, params, args.scenario, args.episodes)
    print(f"scenario {args.scenario}: reward {stats.mean_reward:.4f} +- {stats.std_reward:.4f}  "
          f"throughput {stats.mean_throughput_mbps:.1f} +- {stats.std_throughput_mbps:.1f} Mbps  "
          f"({stats.episodes} episodes)")
    return 0


def cmd_baseline(args) -> int:
    cfg = _load_config(args.config, args.seed)
    stats = harness.evaluate_baseline(cfg, args.name, args.scenario, args.episodes)
    print(f"baseline {args.name} on scenario {args.scenario}: "
          f"reward {stats.mean_reward:.4f} +- {stats.std_reward:.4f}  "
          f"throughput {stats.mean_throughput_mbps:.1f} +- {stats.std_throughput_mbps:.1f} Mbps")
    return 0


def cmd_plot(args) -> int:
    from .plotting import render_curves

    paths = render_curves(args.metrics, args.out, window=args.window)
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_check(args) -> int:
    from .checks import run_all

    results = run_all()
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name} ({r.seconds:.1f}s): {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "train": cmd_train,
        "eval": cmd_eval,
        "baseline": cmd_baseline,
        "plot": cmd_plot,
        "check": cmd_check,
    }
    try:
        return handlers[args.command](args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
