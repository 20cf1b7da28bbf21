"""Intrinsic-dimension based feature selection for regression.

Morisita estimator of intrinsic dimension, the Morisita-based forward
selection filter, synthetic benchmarks and an ELM evaluation harness.
"""

__version__ = "0.1.0"

from .dataset import Dataset, DataError, load_csv, rescale_unit, shuffle_target, subset
from .morisita import IdEstimate, ScaleSet, choose_scales, mindid, morisita_index
from .mbfr import (SelectionTrace, classify_rejected, dimensional_relevance,
                   dissimilarity, mbfr_select, redundancy_score)

__all__ = [
    "Dataset", "DataError", "load_csv", "rescale_unit", "shuffle_target", "subset",
    "IdEstimate", "ScaleSet", "choose_scales", "mindid", "morisita_index",
    "SelectionTrace", "classify_rejected", "dimensional_relevance", "dissimilarity",
    "mbfr_select", "redundancy_score",
]
