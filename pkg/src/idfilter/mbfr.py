"""Morisita-based filter for regression (MBFR).

Features are added one at a time, each time choosing the candidate whose
union with the already selected set has the lowest estimated
dissimilarity with the target,

    diss(F, Y) = M_2(F, Y) - M_2(F),

near 0 when F explains Y and near M_2(Y) when F is irrelevant.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import DataError, Dataset, rescale_unit, subset
from .morisita import (
    ScaleSet,
    cell_indices,
    counts_from_keys,
    dense_ids,
    estimate_from_log_index,
    extend_keys,
    log_index_from_counts,
    mindid,
)

KNEE_FRACTION = 0.05


def _scaleset(scales) -> ScaleSet:
    return scales if isinstance(scales, ScaleSet) else ScaleSet(tuple(scales))


def _unit(d: Dataset) -> Dataset:
    return d if d.is_rescaled else rescale_unit(d)


@dataclass
class StepRecord:
    feature: str
    diss: float
    id_with_target: float
    id_without_target: float
    candidate_scores: dict[str, float]


@dataclass
class SelectionTrace:
    steps: list[StepRecord]
    target_id: float
    scales: tuple[int, ...]
    target: str = "Y"

    @property
    def C(self) -> int:
        return len(self.steps)

    @property
    def selected(self) -> list[str]:
        return [s.feature for s in self.steps]

    @property
    def diss_profile(self) -> list[float]:
        return [s.diss for s in self.steps]

    @property
    def min_diss(self) -> float:
        return min(self.diss_profile)

    def knee(self, fraction: float = KNEE_FRACTION) -> int:
        """Heuristic cut-off: number of features at the first step whose
        dissimilarity is within ``fraction * M_2(Y)`` of the profile minimum.

        Only a suggestion; choosing the cut-off is up to the caller.
        """
        lo = self.min_diss
        tol = fraction * abs(self.target_id)
        for i, v in enumerate(self.diss_profile, start=1):
            if v - lo <= tol:
                return i
        return self.C

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "target_id": self.target_id,
            "scales": list(self.scales),
            "C": self.C,
            "knee": self.knee(),
            "steps": [
                {
                    "step": i,
                    "feature": s.feature,
                    "diss": s.diss,
                    "id_with_target": s.id_with_target,
                    "id_without_target": s.id_without_target,
                    "candidate_scores": s.candidate_scores,
                }
                for i, s in enumerate(self.steps, start=1)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "feature", "diss", "id_with", "id_without"])
        for i, s in enumerate(self.steps, start=1):
            w.writerow([i, s.feature, repr(s.diss), repr(s.id_with_target),
                        repr(s.id_without_target)])
        return buf.getvalue()


class Dissimilarity(NamedTuple):
    diss: float
    id_with: float
    id_without: float


@dataclass
class DrReport:
    dr: float
    dr_clipped: float
    diss: float
    target_id: float
    id_with: float
    id_without: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RedundancyReport:
    """How much of a rejected feature's information is already covered.

    ``score`` is 1 for a fully redundant feature and 0 for a fully
    irrelevant one; ``raw_score`` is the unclipped value.
    """

    feature: str
    selected: list[str]
    delta_id: float
    standalone_id: float
    raw_score: float
    score: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def dissimilarity(d: Dataset, features: Sequence[str], scales) -> Dissimilarity:
    """M_2(F, Y) - M_2(F) for the feature set ``features`` and the target of ``d``."""
    scales = _scaleset(scales)
    d = _unit(d)
    if not features:
        raise DataError("need at least one feature")
    id_without = mindid(d.columns(features), 2, scales).intrinsic_dim
    id_with = mindid(d.columns([*features, d.target]), 2, scales).intrinsic_dim
    return Dissimilarity(id_with - id_without, id_with, id_without)


def dimensional_relevance(d: Dataset, features: Sequence[str], scales) -> DrReport:
    """Coefficient of dimensional relevance 1 - diss(F, Y) / M_2(Y)."""
    scales = _scaleset(scales)
    d = _unit(d)
    target_id = mindid(d.columns([d.target]), 2, scales).intrinsic_dim
    if target_id <= 0:
        raise ValueError(f"degenerate target: M_2(Y) = {target_id:.4g}")
    dis = dissimilarity(d, features, scales)
    dr = 1.0 - dis.diss / target_id
    return DrReport(dr=dr, dr_clipped=min(max(dr, 0.0), 1.0), diss=dis.diss,
                    target_id=target_id, id_with=dis.id_with, id_without=dis.id_without)


class _Grid:
    """Per-column cell indices at every scale, computed on first use."""

    def __init__(self, values: np.ndarray, scales: ScaleSet):
        self.values = values
        self.scales = scales.inverse_edges
        self._cells: dict[int, list[np.ndarray]] = {}

    def cells(self, j: int) -> list[np.ndarray]:
        if j not in self._cells:
            col = self.values[:, j]
            self._cells[j] = [cell_indices(col, k) for k in self.scales]
        return self._cells[j]


def mbfr_select(d: Dataset, scales, C: int | None = None) -> SelectionTrace:
    """Sequential forward selection minimising the estimated dissimilarity.

    Parameters
    ----------
    d : Dataset
        Features plus target; rescaled to [0, 1] here if not already.
    scales : ScaleSet or sequence of int
        Inverse edge lengths used for every ID estimate.
    C : int, optional
        Number of selection steps, 1 <= C <= E - 1. Defaults to E - 1.

    Returns
    -------
    SelectionTrace
        One record per step with the chosen feature, its dissimilarity,
        both ID terms and the scores of every candidate at that step.
        Ties go to the candidate that comes first in column order.
    """
    scales = _scaleset(scales)
    d = _unit(d)
    n_feat = d.n_cols - 1
    if C is None:
        C = n_feat
    if not 1 <= C <= n_feat:
        raise ValueError(f"C must lie in [1, {n_feat}], got {C}")

    n = d.n_rows
    ks = scales.inverse_edges
    grid = _Grid(d.values, scales)
    y = d.index(d.target)
    y_cells = grid.cells(y)
    target_id = mindid(d.values[:, [y]], 2, scales).intrinsic_dim

    pool = [j for j in range(d.n_cols) if j != y]
    z_ids: list[np.ndarray | None] = [None] * len(ks)
    steps = []
    for i in range(C):
        e_without = i + 1
        best = None
        scores = {}
        for j in pool:
            cj = grid.cells(j)
            log_without, log_with = [], []
            for s, k in enumerate(ks):
                keys = extend_keys(z_ids[s], cj[s], k)
                log_without.append(log_index_from_counts(counts_from_keys(keys), n, 2, e_without, k))
                keys = extend_keys(keys, y_cells[s], k)
                log_with.append(log_index_from_counts(counts_from_keys(keys), n, 2, e_without + 1, k))
            id_without = estimate_from_log_index(log_without, ks, 2, e_without).intrinsic_dim
            id_with = estimate_from_log_index(log_with, ks, 2, e_without + 1).intrinsic_dim
            diss = id_with - id_without
            scores[d.names[j]] = diss
            if best is None or diss < best[1]:
                best = (j, diss, id_with, id_without)

        j, diss, id_with, id_without = best
        steps.append(StepRecord(d.names[j], diss, id_with, id_without, scores))
        pool.remove(j)
        cj = grid.cells(j)
        z_ids = [dense_ids(extend_keys(z_ids[s], cj[s], k)) for s, k in enumerate(ks)]

    return SelectionTrace(steps, target_id, ks, d.target)


def redundancy_score(d: Dataset, selected: Sequence[str], rejected: str, scales) -> RedundancyReport:
    """Split a rejected feature's contribution into redundant vs irrelevant.

    With Z the selected set, the ID increase M_2(Z + {rejected}) - M_2(Z)
    is compared with the feature's own M_2: no increase means fully
    redundant (score 1), an increase equal to its own ID means fully
    irrelevant (score 0).
    """
    scales = _scaleset(scales)
    d = _unit(d)
    if rejected in selected:
        raise DataError(f"{rejected!r} is among the selected features")
    if not selected:
        raise DataError("need at least one selected feature")
    standalone = mindid(d.columns([rejected]), 2, scales).intrinsic_dim
    if standalone <= 0:
        raise ValueError(f"M_2({rejected}) = {standalone:.4g} is not positive")
    base = mindid(d.columns(selected), 2, scales).intrinsic_dim
    grown = mindid(d.columns([*selected, rejected]), 2, scales).intrinsic_dim
    delta = grown - base
    raw = 1.0 - delta / standalone
    return RedundancyReport(rejected, list(selected), delta, standalone, raw,
                            min(max(raw, 0.0), 1.0))


def classify_rejected(d: Dataset, trace: SelectionTrace, rejected: str,
                      scales=None, n_selected: int | None = None) -> RedundancyReport:
    """:func:`redundancy_score` against the first ``n_selected`` features of a trace.

    ``n_selected`` defaults to the trace's knee suggestion and ``scales``
    to the scales the trace was built with.
    """
    k = trace.knee() if n_selected is None else n_selected
    selected = trace.selected[:k]
    return redundancy_score(d, selected, rejected, trace.scales if scales is None else scales)


def relevance_table(trace: SelectionTrace) -> list[tuple[str, float]]:
    """(feature, DR of the first i features) along the selection order."""
    if trace.target_id <= 0 or not math.isfinite(trace.target_id):
        raise ValueError("degenerate target ID")
    return [(s.feature, 1.0 - s.diss / trace.target_id) for s in trace.steps]
