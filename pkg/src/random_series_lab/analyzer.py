"""Experiment config analyzer: reads a TOML file into a validated ExperimentConfig."""

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .boundary_functionals import Psi, SignedLogPsi, psi_from_config
from .coeff_laws import LawSequence, law_sequence_from_config
from .errors import ConfigError, PreconditionError
from .experiments import CATALOG, KINDS_WITH_LAW, KINDS_WITH_PSI
from .series_engine import ArcSpec

logger = logging.getLogger(__name__)

THREADS_ENV = "RANDOM_SERIES_LAB_THREADS"
DEFAULT_SCHEDULE_LENGTH = 8
DEFAULT_REPLICATES = 500
DEFAULT_OUTPUT_DIR = "results"
SECTIONS = frozenset({"experiment", "law", "weights", "arc", "psi", "params"})


def default_threads() -> int:
    """Thread count from the environment, falling back to 1."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError as err:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from err
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A validated experiment description.

    Attributes:
        kind: Experiment family (a key of the catalog).
        sequence: Law sequence built from ``[law]`` and ``[weights]`` (None when absent).
        arc: Arc from ``[arc]`` (None when absent).
        psi: Test function from ``[psi]`` (None when absent).
        K: Schedule length.
        replicates: Replicate count R.
        seed: Master seed.
        output_dir: Directory receiving CSV, plot data and the manifest.
        threads: Worker threads.
        params: Free-form per-kind parameters.
        tables: The raw TOML tables, kept for hashing and ``validate`` output.
    """

    kind: str
    sequence: LawSequence | None
    arc: ArcSpec | None
    psi: Psi | None
    K: int
    replicates: int
    seed: int
    output_dir: Path
    threads: int
    params: Mapping[str, Any] = field(default_factory=dict)
    tables: Mapping[str, Any] = field(default_factory=dict)

    def with_overrides(
        self, seed: int | None = None, threads: int | None = None, output_dir: Path | None = None
    ) -> "ExperimentConfig":
        """Apply command-line overrides, which take precedence over the file."""
        changes: dict[str, Any] = {}
        if seed is not None:
            if seed < 0:
                raise ConfigError(f"seed must be >= 0, got {seed}")
            changes["seed"] = seed
        if threads is not None:
            if threads < 1:
                raise ConfigError(f"threads must be >= 1, got {threads}")
            changes["threads"] = threads
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        return replace(self, **changes) if changes else self

    def normalized(self) -> dict[str, Any]:
        """Plain-data view with every default filled in; thread count and output excluded."""
        experiment = {
            "kind": self.kind,
            "K": self.K,
            "replicates": self.replicates,
            "seed": self.seed,
        }
        payload: dict[str, Any] = {"experiment": experiment}
        for name in ("law", "weights", "params"):
            if self.tables.get(name):
                payload[name] = dict(self.tables[name])
        if self.arc is not None:
            payload["arc"] = {"a": self.arc.a, "b": self.arc.b, "m": self.arc.m}
        if self.psi is not None:
            payload["psi"] = {"name": self.psi.name}
        return payload


class ConfigAnalyzer:
    """
    Reads and validates one experiment config file.

    Attributes:
        file_path: Path to the TOML file.
        tables: Parsed top-level tables after analysis.
        config: The validated config after analysis.
    """

    __slots__ = ("file_path", "tables", "config")

    def __init__(self, file_path: Path) -> None:
        """
        Initialize the analyzer.

        Args:
            file_path: Path to the config file.
        """
        self.file_path = file_path
        self.tables: dict[str, Any] = {}
        self.config: ExperimentConfig | None = None

    def analyze(self) -> ExperimentConfig:
        """
        Parse and validate the config file.

        Returns:
            The validated config.

        Raises:
            FileNotFoundError: If the file does not exist.
            ConfigError: If the file is not valid TOML or fails validation.
        """
        text = self.file_path.read_text(encoding="utf-8")
        try:
            self.tables = tomllib.loads(text)
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"{self.file_path}: {err}") from err
        self.config = build_config(self.tables, base_dir=self.file_path.parent)
        logger.info("config %s: %s experiment", self.file_path, self.config.kind)
        return self.config


def _table(tables: Mapping[str, Any], name: str) -> dict[str, Any]:
    value = tables.get(name, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    return dict(value)


def _positive_int(table: Mapping[str, Any], key: str, default: int, minimum: int = 1) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"[experiment] {key} must be an integer >= {minimum}, got {value!r}")
    return value


def build_config(tables: Mapping[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    """
    Validate parsed tables into an ExperimentConfig.

    Args:
        tables: Top-level TOML tables.
        base_dir: Directory that relative output paths resolve against.

    Returns:
        The config.

    Raises:
        ConfigError: On unknown sections, kinds or fields, or incompatible law and ψ.
    """
    unknown = set(tables) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    experiment = _table(tables, "experiment")
    kind = experiment.get("kind")
    if kind not in CATALOG:
        raise ConfigError(f"unknown experiment kind {kind!r}; known: {sorted(CATALOG)}")

    law = _table(tables, "law")
    weights = _table(tables, "weights")
    sequence = None
    if law:
        sequence = law_sequence_from_config(law, weights or None, name=str(law.get("type", "")))
    elif weights:
        raise ConfigError("[weights] given without [law]")
    elif kind in KINDS_WITH_LAW:
        raise ConfigError(f"{kind} needs a [law] table")

    arc = None
    arc_table = _table(tables, "arc")
    if arc_table:
        try:
            arc = ArcSpec(float(arc_table["a"]), float(arc_table["b"]), int(arc_table.get("m", 1024)))
        except KeyError as err:
            raise ConfigError(f"[arc] needs {err}") from err
        except (TypeError, ValueError, PreconditionError) as err:
            raise ConfigError(f"invalid [arc]: {err}") from err

    psi = None
    psi_table = _table(tables, "psi")
    if psi_table or kind in KINDS_WITH_PSI:
        psi = psi_from_config(psi_table)
    if kind == "snb-profile" and isinstance(psi, SignedLogPsi):
        raise ConfigError("snb-profile needs a test function ψ; signed_log is not one")
    params = _table(tables, "params")
    if kind == "log-snb-profile" and sequence is not None:
        degree = int(params.get("degree", 200))
        for k in range(degree + 1):
            if sequence.law(k).density_bound is None:
                raise ConfigError(
                    f"log-snb-profile needs laws with a density bound; X_{k} is "
                    f"{sequence.law(k).label}"
                )

    output = experiment.get("output_dir", DEFAULT_OUTPUT_DIR)
    output_dir = Path(output)
    if base_dir is not None and not output_dir.is_absolute():
        output_dir = base_dir / output_dir
    threads = experiment.get("threads")
    return ExperimentConfig(
        kind=str(kind),
        sequence=sequence,
        arc=arc,
        psi=psi,
        K=_positive_int(experiment, "K", DEFAULT_SCHEDULE_LENGTH),
        replicates=_positive_int(experiment, "replicates", DEFAULT_REPLICATES),
        seed=_positive_int(experiment, "seed", 0, minimum=0),
        output_dir=output_dir,
        threads=default_threads() if threads is None else _positive_int(experiment, "threads", 1),
        params=params,
        tables={name: tables[name] for name in tables},
    )
