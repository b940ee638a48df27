#!/usr/bin/env python3
"""
trajmt - metamorphic testing of robot manipulation trajectories
"""
import os
import sys
import logging
import argparse
from typing import List, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

import config
from analytics import (calibrate_thresholds, tc_distances, venn, rate_matrix, annotation_sample,
                       failing_followups, cochran_sample_size)
from campaign import run_from_config
from config import ConfigManager, CampaignConfig
from database import CampaignDatabase
from errors import MTError, ConfigError
from export_import import DataExporter, DataImporter
from generator import generate_suite
from report_builder import emit_report, FORMATS
from simulator import FaultProfile
from storage import StorageManager

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2


class FriendlyArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration-error code"""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_ERROR)


def _csv_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(',') if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", metavar="filename", help="Campaign configuration JSON file.")
    common.add_argument("--seed", type=int, help="Campaign seed.")
    common.add_argument("--output-dir", metavar="dir", help="Directory for suite, rows and reports.")
    common.add_argument("--db", metavar="filename", help="Rows database (default: <output-dir>/rows.db).")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="Increases verbosity. Can be specified multiple times to increase.")

    parser = FriendlyArgumentParser(prog=config.APP_NAME, description="Metamorphic testing of robot trajectories.")
    parser.add_argument("--version", action="version", version=f"{config.APP_NAME} {config.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=FriendlyArgumentParser)

    gen = sub.add_parser("gen", parents=[common], help="Generate a seeded source suite.")
    gen.add_argument("--tasks", type=_csv_list, help="Comma-separated task kinds.")
    gen.add_argument("--sources-per-task", type=int, help="Source cases per task kind.")
    gen.add_argument("--suite", metavar="filename", help="Suite file to write.")

    run = sub.add_parser("run", parents=[common], help="Run a campaign over a suite.")
    run.add_argument("suite", nargs="?", help="Suite file (default: <output-dir>/suite.json).")
    run.add_argument("--mrs", type=_csv_list, help="Comma-separated relations, e.g. MR1_Synonym,MR4_Negation.")
    run.add_argument("--strictness", type=_csv_list, help="Comma-separated levels: High,Medium,Low.")
    run.add_argument("--fault", metavar="kind[:magnitude[:trigger]]", help="Fault profile to inject.")
    run.add_argument("--alpha", type=float, help="MR5 lower proportionality bound for every level.")
    run.add_argument("--beta", type=float, help="MR5 upper proportionality bound for every level.")
    run.add_argument("-j", "--jobs", type=int, help="Worker processes.")
    run.add_argument("--fail-on-violation", action="store_true", default=None,
                     help="Exit with code 2 when any relation is violated.")
    run.add_argument("--dump-traces", action="store_true", default=None,
                     help="Write a JSON-lines trace per executed case.")

    stored = argparse.ArgumentParser(add_help=False)
    stored.add_argument("--run-id", type=int, help="Stored run to read (default: the latest).")

    report = sub.add_parser("report", parents=[common, stored], help="Emit report files for a stored run.")
    report.add_argument("--format", type=_csv_list, default=list(FORMATS),
                        help="Comma-separated formats: csv,json,svg.")
    report.add_argument("--sample", action="store_true",
                        help="Print the Cochran-sized annotation sample of failing follow-ups.")

    sub.add_parser("calibrate", parents=[common, stored], help="Percentile thresholds from TC distances.")
    sub.add_parser("runs", parents=[common], help="List the runs stored in the rows database.")

    import_rows = sub.add_parser("import", parents=[common], help="Store the rows of a report CSV as a new run.")
    import_rows.add_argument("csv_file", help="rows.csv written by the report command.")
    return parser


def setup_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]", force=True,
                        handlers=[RichHandler(console=Console(stderr=True), show_path=False)])


def load_config(args) -> CampaignConfig:
    manager = ConfigManager(args.config)
    overrides = {'seed': args.seed, 'output_dir': args.output_dir}
    if args.command == "gen":
        overrides.update(tasks=args.tasks, sources_per_task=args.sources_per_task)
    if args.command == "run":
        overrides.update(
            mrs=args.mrs,
            strictness=args.strictness,
            fault=FaultProfile.parse(args.fault).to_dict() if args.fault else None,
            mr5_alpha=args.alpha,
            mr5_beta=args.beta,
            jobs=args.jobs,
            fail_on_violation=args.fail_on_violation,
            dump_traces=args.dump_traces,
        )
    return manager.apply_overrides(overrides)


def _db_path(args, cfg: CampaignConfig) -> str:
    return args.db or os.path.join(cfg.output_dir, config.ROWS_DB_FILE)


def _open_db(args, cfg: CampaignConfig) -> CampaignDatabase:
    path = _db_path(args, cfg)
    if not os.path.exists(path):
        raise ConfigError(f"Rows file not found: {path}")
    return CampaignDatabase(path)


def _open_rows(args, cfg: CampaignConfig):
    with _open_db(args, cfg) as db:
        if args.run_id is not None and not db.count_rows(args.run_id):
            raise ConfigError(f"No rows stored for run {args.run_id}")
        return db.get_rows(args.run_id)


def cmd_gen(args, cfg: CampaignConfig) -> int:
    path = args.suite or os.path.join(cfg.output_dir, config.SUITE_FILE)
    cases = generate_suite(cfg)
    DataExporter().export_suite(cases, path, cfg.seed)
    console.print(f"Wrote {len(cases)} source cases to {path}")
    return EXIT_OK


def cmd_run(args, cfg: CampaignConfig) -> int:
    suite = args.suite or os.path.join(cfg.output_dir, config.SUITE_FILE)
    cases = DataImporter().import_suite(suite)
    storage = None
    if cfg.dump_traces:
        # the traces directory only ever holds the current run
        storage = StorageManager(os.path.join(cfg.output_dir, config.TRACES_DIR))
        storage.clear()

    rows = run_from_config(cases, cfg, storage)

    os.makedirs(cfg.output_dir, exist_ok=True)
    with CampaignDatabase(_db_path(args, cfg)) as db:
        run_id = db.save_campaign(cfg.seed, cfg.fault.get('kind', 'None'), cfg.to_dict(), rows)

    violations = sum(1 for r in rows if r.is_ok and r.violated)
    skipped = sum(1 for r in rows if not r.is_ok)
    console.print(f"Run {run_id}: {len(rows)} rows, {violations} violations, {skipped} skipped")
    if cfg.fail_on_violation and violations:
        return EXIT_VIOLATIONS
    return EXIT_OK


def _print_summary(rows):
    table = Table(show_header=True, header_style="bold magenta", title="MR violation rate")
    table.add_column("Relation")
    table.add_column("Strictness")
    table.add_column("Violations", justify="right")
    table.add_column("Evaluated", justify="right")
    table.add_column("Rate", justify="right")
    for cell in rate_matrix(rows).to_list():
        table.add_row(cell['mr'], cell['strictness'], str(cell['violations']),
                      str(cell['evaluated']), f"{cell['rate']:.2f}")
    console.print(table)

    overlap = Table(show_header=True, header_style="bold magenta", title="Failing follow-ups")
    overlap.add_column("Strictness")
    overlap.add_column("Oracle only", justify="right")
    overlap.add_column("MR only", justify="right")
    overlap.add_column("Both", justify="right")
    for level in config.STRICTNESS_LEVELS:
        at_level = [r for r in rows if r.is_ok and r.strictness == level]
        if at_level:
            v = venn(at_level)
            overlap.add_row(level, str(v.oracle_only), str(v.mr_only), str(v.both))
    console.print(overlap)
    console.print(f"Total rows: {len(rows)}")


def cmd_report(args, cfg: CampaignConfig) -> int:
    rows = _open_rows(args, cfg)
    paths = emit_report(rows, args.format, cfg.output_dir)
    _print_summary(rows)
    for path in paths:
        console.print(f"Wrote {path}")

    if args.sample:
        failing = failing_followups(rows)
        if failing:
            size = cochran_sample_size(len(failing))
            picked = annotation_sample(rows, size, cfg.seed)
            console.print(f"Annotation sample: {len(picked)} of {len(failing)} failing follow-ups")
            for followup in picked:
                console.print(f"  {followup}")
        else:
            console.print("No failing follow-ups to sample")
    return EXIT_OK


def cmd_calibrate(args, cfg: CampaignConfig) -> int:
    distances = tc_distances(_open_rows(args, cfg))
    p20, p50, p80 = calibrate_thresholds(distances)
    path = os.path.join(cfg.output_dir, config.THRESHOLDS_FILE)
    DataExporter().export_to_json({'p20': p20, 'p50': p50, 'p80': p80, 'samples': len(distances)}, path)

    table = Table(show_header=True, header_style="bold magenta", title="TC distance thresholds")
    table.add_column("Percentile")
    table.add_column("Distance (m)", justify="right")
    for name, value in (("p20", p20), ("p50", p50), ("p80", p80)):
        table.add_row(name, f"{value:.4f}")
    console.print(table)
    console.print(f"Wrote {path}")
    return EXIT_OK


def cmd_runs(args, cfg: CampaignConfig) -> int:
    with _open_db(args, cfg) as db:
        table = Table(show_header=True, header_style="bold magenta", title="Stored runs")
        table.add_column("Run", justify="right")
        table.add_column("Seed", justify="right")
        table.add_column("Fault")
        table.add_column("Rows", justify="right")
        runs = db.get_runs()
        for run in runs:
            table.add_row(str(run['id']), str(run['seed']), run['fault'], str(db.count_rows(run['id'])))
    console.print(table)
    if not runs:
        console.print("No runs stored")
    return EXIT_OK


def cmd_import(args, cfg: CampaignConfig) -> int:
    if not os.path.exists(args.csv_file):
        raise ConfigError(f"Rows CSV not found: {args.csv_file}")
    os.makedirs(cfg.output_dir, exist_ok=True)
    with CampaignDatabase(_db_path(args, cfg)) as db:
        count = DataImporter(db).import_rows_to_db(args.csv_file, cfg.seed)
        run_id = db.latest_run_id()
    console.print(f"Run {run_id}: imported {count} rows from {args.csv_file}")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "run": cmd_run,
    "report": cmd_report,
    "calibrate": cmd_calibrate,
    "runs": cmd_runs,
    "import": cmd_import,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    setup_logging(args.verbose)

    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (MTError, OSError) as e:
        logger.error("%s", e)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
