"""
Command-line entry point.

    python cli.py --config run.json pipeline
    python cli.py --config run.json --seed 7 metrics
    python cli.py make-fixture data/fixture
    python cli.py --config run.json snapshot 2020-04-13
    python cli.py serve

Exit codes: 0 success, 1 usage, 2 data error, 3 transient provider error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from config import Config, PipelineConfig
from tools.errors import PipelineError, TransientProviderError, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0


def configure_logging():
    # Fix Windows console encoding for Unicode
    if sys.platform == 'win32':
        if hasattr(sys.stdout, 'reconfigure'):
            sys.stdout.reconfigure(encoding='utf-8', errors='replace')
        if hasattr(sys.stderr, 'reconfigure'):
            sys.stderr.reconfigure(encoding='utf-8', errors='replace')

    log_file = Path(Config.LOG_FILE)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler(sys.stdout)
        ]
    )


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 means bad data"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> ArgumentParser:
    from pipeline import STAGES

    parser = ArgumentParser(prog="steam-networks", description="Steam game-network toolkit")
    parser.add_argument("--config", type=Path, help="pipeline configuration (JSON)")
    parser.add_argument("--seed", type=int, help="master seed, overrides the configuration")
    parser.add_argument("--out", type=Path, help="output directory, overrides the configuration")
    parser.add_argument("--jobs", type=int, help="worker threads for per-graph stages")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    for stage in STAGES:
        sub.add_parser(stage, help=f"run the {stage} stage")
    sub.add_parser("pipeline", help="run every stage in order")

    fixture = sub.add_parser("make-fixture", help="write the synthetic offline fixture")
    fixture.add_argument("root", type=Path)
    fixture.add_argument("--players", type=int, default=2000)
    fixture.add_argument("--games", type=int, default=20)
    fixture.add_argument("--min-nodes", type=int, default=20)

    snapshot = sub.add_parser("snapshot", help="archive one day of live playtime snapshots")
    snapshot.add_argument("day", help="ISO date of the snapshot")
    snapshot.add_argument("--players", type=Path, help="player list (defaults to the sampled graph)")

    sub.add_parser("serve", help="start the HTTP API")
    return parser


def load_config(args) -> PipelineConfig:
    if args.config is None:
        raise UsageError("--config is required for this command")
    try:
        cfg = PipelineConfig.from_file(args.config)
    except FileNotFoundError:
        raise UsageError(f"configuration file {args.config} not found")
    except ValidationError as e:
        raise UsageError(f"invalid configuration {args.config}: {e}")
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = cfg.model_copy(update={"output_dir": args.out})
    if args.jobs is not None:
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        cfg = cfg.model_copy(update={"jobs": args.jobs})
    return cfg


def _make_fixture(args) -> int:
    from tools.fixtures import write_synthetic_fixture

    info = write_synthetic_fixture(args.root, n_players=args.players, n_games=args.games,
                                   seed=args.seed if args.seed is not None else Config.MASTER_SEED,
                                   min_nodes=args.min_nodes)
    print(f"Fixture written to {info.root}: {info.n_players} players, {len(info.games)} games")
    return EXIT_OK


def _snapshot(args) -> int:
    from dateutil.parser import isoparse

    from tools.graph_core import read_edge_list
    from tools.sampling import read_seeds
    from tools.steam_client import SteamWebAPI, write_snapshot_fixture

    cfg = load_config(args)
    if cfg.provider is None or cfg.provider.mode != "live" or cfg.provider.fixture_root is None:
        raise UsageError("snapshot needs a live provider with fixture_root as the archive directory")
    try:
        day = isoparse(args.day).date()
    except ValueError:
        raise UsageError(f"not an ISO date: {args.day}")

    if args.players:
        players = read_seeds(args.players)
    else:
        graph = Path(cfg.output_dir) / "graph.tsv"
        if not graph.exists():
            raise UsageError(f"no sampled graph at {graph}; pass --players or run 'sample' first")
        players = sorted(read_edge_list(graph).nodes())
    written = write_snapshot_fixture(SteamWebAPI(cfg.provider), players, day, cfg.provider.fixture_root)
    print(f"Archived {written} snapshot(s) for {day}")
    return EXIT_OK


def _serve(args) -> int:
    import uvicorn

    logger.info("Starting uvicorn server...")
    uvicorn.run(
        "app:app",
        host=Config.API_HOST,
        port=Config.API_PORT,
        reload=Config.DEBUG,
        log_level=Config.LOG_LEVEL.lower(),
        access_log=False,
    )
    return EXIT_OK


def run(args) -> int:
    from pipeline import run_stage

    if args.command == "make-fixture":
        return _make_fixture(args)
    if args.command == "snapshot":
        return _snapshot(args)
    if args.command == "serve":
        return _serve(args)

    cfg = load_config(args)
    outputs = run_stage(args.command, cfg)
    print(f"{args.command}: {len(outputs)} artifact(s) in {cfg.output_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging()
    try:
        return run(args)
    except TransientProviderError as e:
        logger.error(f"Provider unavailable: {e}")
        if e.frontier_path:
            print(f"Partial crawl saved to {e.frontier_path}; rerun to resume", file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except PipelineError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
