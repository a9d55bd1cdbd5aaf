"""Experiment manager: runs a config, persists its outputs and drives the command line."""

import argparse
import csv
import json
import logging
import sys
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .analyzer import ConfigAnalyzer, ExperimentConfig
from .errors import ConfigError, LabError
from .experiments import ExperimentResult, Table, list_experiments, run_experiment
from .utils import config_hash, format_float

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _tool_version() -> str:
    from . import __version__

    return __version__


@dataclass
class RunManifest:
    """Record of one run: what was configured, what was written, and what it concluded."""

    kind: str
    config_hash: str
    seed: int
    threads: int
    tool_version: str = field(default_factory=_tool_version)
    schema_version: int = SCHEMA_VERSION
    wall_time: float = 0.0
    outputs: list[str] = field(default_factory=list)
    summaries: dict[str, float] = field(default_factory=dict)
    verdicts: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        return cls(**json.loads(path.read_text(encoding="utf-8")))


class _WarningCollector(logging.Handler):
    """Keeps the text of WARNING records emitted by the package during a run."""

    def __init__(self) -> None:
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(record.getMessage())


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_table(table: Table, path: Path) -> None:
    """Write a table as CSV with round-trip float formatting."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])


def write_plot(table: Table, path: Path) -> None:
    """Write gnuplot-compatible whitespace-separated columns with a comment header."""
    lines = ["# " + " ".join(table.columns)]
    lines.extend(" ".join(_cell(v) for v in row) for row in table.rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class ExperimentManager:
    """
    Runs one experiment config end to end.

    Attributes:
        config: The validated config.
        result: Experiment output after ``run``.
        manifest: Run manifest after ``run``.
    """

    __slots__ = ("config", "result", "manifest")

    def __init__(self, config: ExperimentConfig) -> None:
        """
        Initialize the manager.

        Args:
            config: A validated experiment config.
        """
        self.config = config
        self.result: ExperimentResult | None = None
        self.manifest: RunManifest | None = None

    @classmethod
    def from_path(cls, path: Path | str, **overrides: Any) -> "ExperimentManager":
        """Read a config file and apply command-line overrides."""
        config = ConfigAnalyzer(Path(path)).analyze()
        return cls(config.with_overrides(**overrides))

    def run(self) -> RunManifest:
        """
        Execute the experiment and write its CSV tables, plot data and manifest.

        Returns:
            The manifest.
        """
        config = self.config
        collector = _WarningCollector()
        package_logger = logging.getLogger(__package__)
        package_logger.addHandler(collector)
        start = time.perf_counter()
        try:
            result = run_experiment(config)
        finally:
            package_logger.removeHandler(collector)
        elapsed = time.perf_counter() - start

        config.output_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        for table in result.tables:
            path = config.output_dir / f"{config.kind}_{table.name}.csv"
            write_table(table, path)
            outputs.append(path.name)
        if result.plot is not None:
            path = config.output_dir / f"{config.kind}_{result.plot.name}.dat"
            write_plot(result.plot, path)
            outputs.append(path.name)

        verdicts: dict[str, int] = {}
        for report in result.reports:
            verdicts[report.verdict.value] = verdicts.get(report.verdict.value, 0) + 1
        manifest = RunManifest(
            kind=config.kind,
            config_hash=config_hash(config.normalized()),
            seed=config.seed,
            threads=config.threads,
            wall_time=elapsed,
            outputs=outputs,
            summaries={k: float(v) for k, v in sorted(result.summaries.items())},
            verdicts=verdicts,
            warnings=collector.messages,
        )
        manifest.write(config.output_dir / MANIFEST_NAME)
        logger.info("wrote %d files to %s", len(outputs) + 1, config.output_dir)
        self.result = result
        self.manifest = manifest
        return manifest

    @property
    def exit_code(self) -> int:
        if self.result is not None and self.result.violated:
            return EXIT_VIOLATED
        return EXIT_OK

    def print_report(self) -> None:
        """Print a summary report of the run."""
        if self.result is None or self.manifest is None:
            print("No experiment has been run")
            return

        print(f"\nExperiment Report: {self.config.kind}")
        print("=" * 60)
        print(f"Seed: {self.config.seed}  Threads: {self.config.threads}")
        print(f"Output: {self.config.output_dir}")
        print(f"Wall time: {self.manifest.wall_time:.2f}s")
        print("-" * 60)
        for name, value in self.manifest.summaries.items():
            print(f"{name}: {value:.6g}")
        if self.result.reports:
            print("-" * 60)
            violated = self.result.violated
            shown = self.result.reports if len(self.result.reports) <= 50 else violated
            for report in shown:
                print(report)
            print(f"Reports: {len(self.result.reports)}, violated: {len(violated)}")
        for message in self.manifest.warnings:
            print(f"WARNING: {message}")


def _print_config(config: ExperimentConfig) -> None:
    print(json.dumps(config.normalized(), indent=2, sort_keys=True, default=str))
    print(f"threads: {config.threads}")
    print(f"output_dir: {config.output_dir}")


def main(argv: list[str] | None = None) -> None:
    """CLI entry point."""
    parser = argparse.ArgumentParser(
        description="Numerical experiments on random power series",
        prog="random-series-lab",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="Run an experiment config")
    run_parser.add_argument("config", help="Path to the TOML config")
    run_parser.add_argument("--threads", type=int, help="Worker threads")
    run_parser.add_argument("--seed", type=int, help="Master seed (overrides the config)")
    run_parser.add_argument("--out", type=Path, help="Output directory")
    sub.add_parser("list", help="List experiment kinds and their CSV columns")
    validate_parser = sub.add_parser("validate", help="Validate a config without running it")
    validate_parser.add_argument("config", help="Path to the TOML config")

    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )

    if args.command == "list":
        for line in list_experiments():
            print(line)
        sys.exit(EXIT_OK)

    try:
        if args.command == "validate":
            _print_config(ConfigAnalyzer(Path(args.config)).analyze())
            sys.exit(EXIT_OK)
        manager = ExperimentManager.from_path(
            args.config, seed=args.seed, threads=args.threads, output_dir=args.out
        )
    except (ConfigError, FileNotFoundError, tomllib.TOMLDecodeError) as err:
        print(f"Error: {err}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)

    try:
        manager.run()
    except ConfigError as err:
        print(f"Error: {err}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)
    except LabError as err:
        print(f"Error: {err}", file=sys.stderr)
        sys.exit(EXIT_RUNTIME)
    manager.print_report()
    sys.exit(manager.exit_code)


if __name__ == "__main__":
    main()
