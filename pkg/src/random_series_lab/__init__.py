"""Random Series Lab - numerical experiments on random power series and their boundary behavior."""

from .analyzer import ConfigAnalyzer, ExperimentConfig
from .coeff_laws import CoeffLaw, LawSequence
from .errors import LabError
from .experiments import CATALOG, ExperimentResult
from .inequality_lab import BoundReport, Verdict
from .manager import ExperimentManager, RunManifest
from .series_engine import ArcSpec, SeriesSample
from .visitor import Formula

__version__ = "0.1.0"
__all__ = [
    "ArcSpec",
    "BoundReport",
    "CATALOG",
    "CoeffLaw",
    "ConfigAnalyzer",
    "ExperimentConfig",
    "ExperimentManager",
    "ExperimentResult",
    "Formula",
    "LabError",
    "LawSequence",
    "RunManifest",
    "SeriesSample",
    "Verdict",
]
