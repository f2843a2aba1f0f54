"""Desk-scale regime training and checkpoint export to the portable format."""

from .data import DATASET_NAME, REGIMES, make_regimes
from .export import ExportError, ExportSpec, export
from .regimes import RegimeArtifacts, RegimeConfig, train_regimes

__version__ = "0.1.0"
