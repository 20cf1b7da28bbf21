"""Multipoint Morisita index and the Morisita estimator of intrinsic dimension.

Points live in the unit cube [0, 1]^E. A grid with ``k`` cells per axis
(``k`` is the inverse quadrat edge length) is laid over the cube and only
occupied cells are ever materialised: each point is mapped to an integer
key and the keys are grouped, so one scale costs O(N E) plus the grouping.
"""

from __future__ import annotations

import json
import logging
import math
import re
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset

logger = logging.getLogger(__name__)

# a window counts as linear when its OLS fit reaches this R^2 ...
LINEARITY_R2 = 0.99
# ... or when its residuals are this small in log units (flat profiles
# have R^2 near 0 even when perfectly straight)
FLAT_RMS_TOL = 0.01
GEOMETRIC_THRESHOLD = 30

_KEY_LIMIT = 2 ** 62


class ScaleError(ValueError):
    """Raised when a scale set is malformed or too few scales are usable."""


@dataclass(frozen=True)
class ScaleSet:
    """Strictly increasing inverse edge lengths (cells per axis)."""

    inverse_edges: tuple[int, ...]

    def __post_init__(self):
        edges = tuple(int(k) for k in self.inverse_edges)
        if len(edges) < 2:
            raise ScaleError("a scale set needs at least 2 values")
        if edges[0] < 1:
            raise ScaleError("inverse edge lengths must be >= 1")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ScaleError(f"inverse edge lengths must increase strictly: {edges}")
        object.__setattr__(self, "inverse_edges", edges)

    def __iter__(self):
        return iter(self.inverse_edges)

    def __len__(self):
        return len(self.inverse_edges)

    @classmethod
    def range(cls, lo: int, hi: int) -> "ScaleSet":
        return cls(tuple(range(lo, hi + 1)))

    @classmethod
    def parse(cls, text: str) -> "ScaleSet":
        """Parse ``"5..20"`` or ``"1,2,4,8"``."""
        text = text.strip()
        m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
        if m:
            return cls.range(int(m.group(1)), int(m.group(2)))
        try:
            return cls(tuple(int(t) for t in text.split(",")))
        except ValueError:
            raise ScaleError(f"cannot parse scale set {text!r}") from None

    def __str__(self):
        e = self.inverse_edges
        if e == tuple(range(e[0], e[-1] + 1)):
            return f"{e[0]}..{e[-1]}"
        return ",".join(map(str, e))


@dataclass
class IdEstimate:
    m: int
    scales: tuple[int, ...]
    log_points: list[tuple[float, float]]
    slope: float
    intrinsic_dim: float
    embedding_dim: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scales"] = list(self.scales)
        d["log_points"] = [list(p) for p in self.log_points]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# quadrat assignment and counting
# ---------------------------------------------------------------------------

def point_to_quadrat(coords: Sequence[float], inv_edge: int) -> tuple[int, ...]:
    """Cell index of one point; coordinate 1.0 goes into the last cell."""
    key = []
    for c in coords:
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"coordinate {c} outside [0, 1]")
        key.append(min(math.floor(c * inv_edge), inv_edge - 1))
    return tuple(key)


def _as_unit_array(d) -> np.ndarray:
    x = d.values if isinstance(d, Dataset) else np.asarray(d, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.size and (x.min() < 0.0 or x.max() > 1.0 or not np.all(np.isfinite(x))):
        raise ValueError("values must lie in [0, 1]; rescale the data first")
    return x


def cell_indices(x: np.ndarray, inv_edge: int) -> np.ndarray:
    """Vectorised :func:`point_to_quadrat` over an array of any shape."""
    cells = np.floor(x * inv_edge).astype(np.int64)
    np.minimum(cells, inv_edge - 1, out=cells)
    return cells


def extend_keys(keys: np.ndarray | None, cells: np.ndarray, inv_edge: int) -> np.ndarray:
    """Append one axis of cell indices to per-point occupancy keys.

    Keys stay exact: when the mixed-radix code would overflow int64 the
    existing keys are first compressed to dense ranks (at most N values).
    """
    cells = cells.astype(np.int64, copy=False)
    if keys is None:
        return cells.copy()
    if (int(keys.max()) + 1) * inv_edge >= _KEY_LIMIT:
        keys = np.unique(keys, return_inverse=True)[1].astype(np.int64).ravel()
    return keys * inv_edge + cells


def occupancy_keys(x: np.ndarray, inv_edge: int) -> np.ndarray:
    keys = None
    for j in range(x.shape[1]):
        keys = extend_keys(keys, cell_indices(x[:, j], inv_edge), inv_edge)
    return keys


def counts_from_keys(keys: np.ndarray) -> np.ndarray:
    """Number of points in each occupied quadrat (order by key)."""
    s = np.sort(keys)
    edges = np.flatnonzero(s[1:] != s[:-1]) + 1
    bounds = np.concatenate(([0], edges, [s.size]))
    return np.diff(bounds)


def dense_ids(keys: np.ndarray) -> np.ndarray:
    """Relabel keys as dense ranks 0..U-1, preserving grouping."""
    return np.unique(keys, return_inverse=True)[1].astype(np.int64).ravel()


def quadrat_counts(d, inv_edge: int) -> np.ndarray:
    """Counts of the occupied quadrats of the grid with ``inv_edge`` cells per axis."""
    x = _as_unit_array(d)
    return counts_from_keys(occupancy_keys(x, inv_edge))


def falling_sum(counts: np.ndarray, m: int) -> int:
    """Exact sum over quadrats of n (n-1) ... (n-m+1)."""
    counts = counts[counts >= m]
    if counts.size == 0:
        return 0
    if m == 2 and int(counts.max()) < 2 ** 31:
        c = counts.astype(np.int64)
        return int(np.sum(c * (c - 1)))
    total = 0
    for n in counts.tolist():
        total += math.perm(n, m)
    return total


def morisita_index(d, m: int, inv_edge: int) -> float:
    """Multipoint Morisita index I_m at one grid resolution.

    Computed from exact integers and correctly rounded; ``inf`` when the
    value exceeds the float range (very large embedding dimensions).
    """
    x = _as_unit_array(d)
    n, e = x.shape
    if m < 2:
        raise ValueError("m must be >= 2")
    if n < m:
        raise ValueError(f"need at least m={m} points, got {n}")
    if inv_edge < 1:
        raise ValueError("inv_edge must be >= 1")
    s = falling_sum(quadrat_counts(x, inv_edge), m)
    num = inv_edge ** (e * (m - 1)) * s
    try:
        return num / math.perm(n, m)
    except OverflowError:
        return math.inf


def log_index_from_counts(counts: np.ndarray, n: int, m: int, e: int, inv_edge: int) -> float:
    """log I_m from quadrat counts; ``-inf`` when no quadrat holds m points."""
    s = falling_sum(counts, m)
    if s == 0:
        return -math.inf
    return (m - 1) * e * math.log(inv_edge) + math.log(s) - math.log(math.perm(n, m))


def log_morisita_index(d, m: int, inv_edge: int) -> float:
    x = _as_unit_array(d)
    n, e = x.shape
    if n < m:
        raise ValueError(f"need at least m={m} points, got {n}")
    return log_index_from_counts(quadrat_counts(x, inv_edge), n, m, e, inv_edge)


# ---------------------------------------------------------------------------
# slope fitting and MINDID
# ---------------------------------------------------------------------------

def ols_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Unweighted least squares line; returns (slope, intercept, r2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(np.dot(dx, dx))
    slope = float(np.dot(dx, dy)) / sxx
    intercept = ym - slope * xm
    syy = float(np.dot(dy, dy))
    resid = dy - slope * dx
    r2 = 1.0 - float(np.dot(resid, resid)) / syy if syy > 0 else 1.0
    return slope, float(intercept), r2


def estimate_from_log_index(log_index: Sequence[float], scales: Sequence[int],
                            m: int, e: int) -> IdEstimate:
    """Fit the Morisita slope to per-scale log indices and build the estimate."""
    notes = []
    pts = []
    dropped = []
    for k, li in zip(scales, log_index):
        if math.isfinite(li):
            pts.append((math.log(k), float(li)))
        else:
            dropped.append(k)
    if dropped:
        notes.append(f"scales with zero index excluded from fit: {dropped}")
    if len(pts) < 2:
        raise ScaleError(
            f"fewer than 2 usable scales (zero index at {dropped}); use coarser scales")
    xs, ys = zip(*pts)
    slope, _, _ = ols_fit(np.array(xs), np.array(ys))
    dim = e - slope / (m - 1)
    if slope < -0.1 * (m - 1):
        notes.append(f"implausible estimate: slope {slope:.3f} gives M_{m}={dim:.3f} > E={e}")
    return IdEstimate(m=m, scales=tuple(scales), log_points=pts, slope=slope,
                      intrinsic_dim=dim, embedding_dim=e, warnings=notes)


def mindid(d, m: int = 2, scales: ScaleSet | Sequence[int] = None) -> IdEstimate:
    """Morisita estimate M_m = E - S_m / (m - 1) of the intrinsic dimension.

    Parameters
    ----------
    d : Dataset or array of shape (N, E)
        Points in the unit cube.
    m : int
        Index order.
    scales : ScaleSet or sequence of int
        Inverse edge lengths over which the log-log slope is fitted.
        Scales where no quadrat holds ``m`` points are left out.
    """
    if scales is None:
        raise ScaleError("a scale set is required")
    scales = scales if isinstance(scales, ScaleSet) else ScaleSet(tuple(scales))
    x = _as_unit_array(d)
    n, e = x.shape
    if n < m:
        raise ValueError(f"need at least m={m} points, got {n}")
    logs = [log_index_from_counts(quadrat_counts(x, k), n, m, e, k) for k in scales]
    est = estimate_from_log_index(logs, scales.inverse_edges, m, e)
    for w in est.warnings:
        logger.debug("mindid: %s", w)
    return est


# ---------------------------------------------------------------------------
# scale selection
# ---------------------------------------------------------------------------

@dataclass
class ScaleProfile:
    """log I_2 against log k for k = 1..probe_max (``-inf`` where empty)."""

    inverse_edges: np.ndarray
    log_index: np.ndarray

    @property
    def occupied_limit(self) -> int:
        """Largest k such that every k' <= k has a quadrat holding 2 points."""
        finite = np.isfinite(self.log_index)
        if not finite[0]:
            return 0
        bad = np.flatnonzero(~finite)
        return int(self.inverse_edges[bad[0] - 1]) if bad.size else int(self.inverse_edges[-1])


def scale_profile(d, probe_max: int = 130, m: int = 2) -> ScaleProfile:
    x = _as_unit_array(d)
    n, e = x.shape
    ks = np.arange(1, probe_max + 1)
    logs = np.array([log_index_from_counts(quadrat_counts(x, int(k)), n, m, e, int(k))
                     for k in ks])
    return ScaleProfile(ks, logs)


def _window_fits(x: np.ndarray, y: np.ndarray, length: int):
    """Slope, R^2 and RMS residual of every window of ``length`` points."""
    c = [np.concatenate(([0.0], np.cumsum(v))) for v in (x, y, x * x, y * y, x * y)]
    sx, sy, sxx, syy, sxy = (v[length:] - v[:-length] for v in c)
    cxx = sxx - sx * sx / length
    cyy = np.maximum(syy - sy * sy / length, 0.0)
    cxy = sxy - sx * sy / length
    slope = cxy / cxx
    sse = np.maximum(cyy - slope * cxy, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(cyy > 0, 1.0 - sse / cyy, 1.0)
    return slope, r2, np.sqrt(sse / length)


def linear_window(profile: ScaleProfile, r2_min: float = LINEARITY_R2,
                  prefer_steepest: bool = False) -> tuple[int, int, bool]:
    """Longest contiguous run of scales whose log-log plot is linear.

    Returns ``(lo, hi, ok)``; ``ok`` is False when no window of at least
    three scales is linear and the best-R^2 window is returned instead.
    Among equally long linear windows the one with the smallest residual
    wins, or the steepest one with ``prefer_steepest``.
    """
    upper = profile.occupied_limit
    if upper < 2:
        raise ScaleError("data too sparse: no quadrat holds two points beyond k=1")
    ks = profile.inverse_edges[:upper]
    if upper == 2:
        return int(ks[0]), int(ks[1]), False
    x = np.log(ks.astype(np.float64))
    y = profile.log_index[:upper]

    fallback = (-np.inf, 0, 1)
    for length in range(upper, 2, -1):
        slope, r2, rms = _window_fits(x, y, length)
        linear = (r2 >= r2_min) | (rms <= FLAT_RMS_TOL)
        i = int(np.argmax(r2))
        if r2[i] > fallback[0]:
            fallback = (float(r2[i]), i, i + length - 1)
        if linear.any():
            cand = np.flatnonzero(linear)
            score = np.abs(slope[cand]) if prefer_steepest else -rms[cand]
            a = int(cand[np.argmax(score)])
            return int(ks[a]), int(ks[a + length - 1]), True
    _, a, b = fallback
    return int(ks[a]), int(ks[b]), False


def geometric_scales(lo: int, hi: int) -> tuple[int, ...]:
    out = [lo]
    while out[-1] * 2 <= hi:
        out.append(out[-1] * 2)
    return tuple(out)


def choose_scales(d, probe_max: int = 130, r2_min: float = LINEARITY_R2,
                  prefer_steepest: bool = False) -> ScaleSet:
    """Pick the scale set from the linear part of the full-data log-log plot.

    Integer scales are kept when the upper bound is below 30; otherwise
    the window is thinned to a ratio-2 progression starting at its lower
    bound.
    """
    profile = scale_profile(d, probe_max)
    lo, hi, ok = linear_window(profile, r2_min, prefer_steepest)
    if not ok:
        warnings.warn(f"no linear window found; using best-fitting window {lo}..{hi}",
                      RuntimeWarning, stacklevel=2)
    if hi >= GEOMETRIC_THRESHOLD:
        edges = geometric_scales(lo, hi)
        if len(edges) < 2:
            edges = (lo, hi)
        return ScaleSet(edges)
    return ScaleSet.range(lo, hi)
