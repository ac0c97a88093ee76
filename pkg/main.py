#!/usr/bin/env python3
"""
Main application for the semi-exponential extremes toolkit.
"""

import argparse
import sys
from dataclasses import replace
from typing import List, Optional

from database import ExperimentDatabase
from experiments import (EXPERIMENTS, ExperimentConfig, RunContext, load_experiment_config,
                         run_acceptance, run_experiment)
from report import ReportGenerator, RunLog
from utils import (CONFIG_FILE, CacheMiss, ConfigError, get_db_path, get_output_dir, get_thread_count,
                   load_environment)

SUBCOMMANDS = list(EXPERIMENTS) + ['accept']


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulate and verify extremes of stationary infinitely divisible processes "
                    "with semi-exponential tails.")
    parser.add_argument('subcommand', choices=SUBCOMMANDS)
    parser.add_argument('--config', default=CONFIG_FILE, help="JSON configuration file")
    parser.add_argument('--seed', type=int, help="root seed, overriding the configuration")
    parser.add_argument('--threads', type=int, help="worker processes (default: EVT_THREADS or CPU count)")
    parser.add_argument('--output-dir', help="artifact directory (default: EVT_OUTPUT_DIR or results)")
    parser.add_argument('--K', type=int, help="clusters in theorem-4joint")
    parser.add_argument('--m', type=int, help="intersections per cluster in theorem-4joint")
    return parser


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Command-line values win over the file, the environment only fills what the file leaves open."""
    changes = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", f"expected an integer >= 0, got {args.seed}")
        changes['seed'] = args.seed
    for flag, key in ((args.K, 'joint_K'), (args.m, 'joint_m')):
        if flag is not None:
            if flag < 1:
                raise ConfigError(key, f"expected an integer >= 1, got {flag}")
            changes[key] = flag
    if args.output_dir:
        changes['output_dir'] = args.output_dir
    elif config.output_dir == "results":
        changes['output_dir'] = get_output_dir(config.output_dir)
    if config.db_path == "evt_cache.db":
        changes['db_path'] = get_db_path(config.db_path)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("threads", f"expected an integer >= 1, got {args.threads}")
        changes['threads'] = args.threads
    elif config.threads is None:
        changes['threads'] = get_thread_count()
    return replace(config, **changes)


def run(subcommand: str, config: ExperimentConfig) -> int:
    """
    Run one subcommand.

    Returns:
        0 when every check passed, 1 when a check failed
    """
    reporter = ReportGenerator(config.output_dir)
    log = RunLog(tag=subcommand)
    db = ExperimentDatabase(config.db_path)
    ctx = RunContext(config=config, reporter=reporter, log=log, db=db, threads=config.threads or 1)
    ctx.say(f"📁 Output directory: {config.output_dir}")
    ctx.say(f"🌱 Seed: {config.seed}, threads: {ctx.threads}")

    if subcommand == 'accept':
        results = run_acceptance(ctx)
        verdicts = [v for vs in results.values() for v in vs]
    else:
        verdicts = run_experiment(ctx, subcommand)

    failed = [v.name for v in verdicts if not v.passed]
    if failed:
        ctx.say(f"\n❌ {len(failed)} of {len(verdicts)} checks failed: {', '.join(failed)}")
        return 1
    ctx.say(f"\n✅ All {len(verdicts)} checks passed.")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point."""
    print("📉 Semi-exponential extremes toolkit")
    print("=" * 50)

    load_environment()
    args = build_parser().parse_args(argv)

    try:
        config = apply_overrides(load_experiment_config(args.config), args)
        return run(args.subcommand, config)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return 2
    except CacheMiss as e:
        print(f"❌ {e}")
        return 2
    except KeyboardInterrupt:
        print("\n\n⏹️  Run interrupted by user.")
        return 1
    except Exception as e:
        print(f"\n❌ Error during run: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
