"""Unsupervised attack-category discovery for network-flow CSVs.

Pipeline: ingest flow CSV -> clean/digitize/scale -> K-means clustering ->
pseudo-labels -> gradient-boosted tree classifier -> evaluation report.
"""

__version__ = "0.1.0"

from .errors import DataError, NetclustError

__all__ = ["DataError", "NetclustError", "__version__"]
