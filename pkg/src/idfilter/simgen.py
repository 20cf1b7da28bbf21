"""Seeded synthetic regression benchmarks and a Monte Carlo driver.

All randomness comes from ``numpy.random.default_rng`` (PCG64) seeded with
the integer in the config, so a config fully determines its dataset.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset, rescale_unit, shuffle_target, subset

# (omega_1j, omega_2j, beta_j) for the ten hidden neurons
BUTTERFLY_WEIGHTS: tuple[tuple[float, float, float], ...] = (
    (0.6655, 0.8939, 1.3446),
    (1.2611, -0.3512, -0.0115),
    (0.3961, -1.7827, 1.2770),
    (-1.7065, -0.5297, 0.5962),
    (0.8807, 1.9574, -0.8530),
    (1.8260, 0.7962, -0.7290),
    (1.3400, 1.5001, 1.2339),
    (1.2919, -0.4462, 0.1186),
    (-1.3902, 1.6856, 0.5277),
    (0.0743, 1.5625, -0.6952),
)

BUTTERFLY_COLUMNS = ("X1", "X2", "J3", "J4", "J5", "I6", "I7", "I8", "Y")
FRIEDMAN_COLUMNS = ("X1", "X2", "X3", "X4", "X5", "I6", "I7", "I8", "I9", "I10", "Y")

_ACTIVATIONS = {
    "logistic": lambda z: 1.0 / (1.0 + np.exp(-z)),
    "tanh": np.tanh,
}


@dataclass(frozen=True)
class ButterflyConfig:
    """Butterfly benchmark: Y from a fixed 2-10-1 network of X1, X2.

    ``noise_sd_fraction`` scales the Gaussian noise relative to the sample
    standard deviation of the noise-free Y. ``pure_linear`` replaces the
    redundant columns by copies of X1 and I7, I8 by copies of I6.
    """

    n: int = 10000
    noise_sd_fraction: float = 0.0
    seed: int = 0
    weights: tuple[tuple[float, float, float], ...] = BUTTERFLY_WEIGHTS
    sig: str = "logistic"
    pure_linear: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.noise_sd_fraction <= 1.0:
            raise ValueError("noise_sd_fraction must lie in [0, 1]")
        if self.sig not in _ACTIVATIONS:
            raise ValueError(f"sig must be one of {sorted(_ACTIVATIONS)}")
        if len(self.weights) != 10 or any(len(w) != 3 for w in self.weights):
            raise ValueError("weights must be 10 (omega1, omega2, beta) triples")


@dataclass(frozen=True)
class FriedmanConfig:
    n: int = 40000
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


def butterfly_response(x1, x2, weights=BUTTERFLY_WEIGHTS, sig: str = "logistic") -> np.ndarray:
    """Noise-free butterfly output for arrays ``x1``, ``x2``."""
    w = np.asarray(weights, dtype=np.float64)
    act = _ACTIVATIONS[sig]
    z = np.multiply.outer(np.asarray(x1, float), w[:, 0]) + np.multiply.outer(np.asarray(x2, float), w[:, 1])
    return act(z) @ w[:, 2]


def friedman_response(x: np.ndarray) -> np.ndarray:
    """Noise-free Friedman #1 output; ``x`` has at least 5 columns."""
    x = np.atleast_2d(x)
    return (10.0 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20.0 * (x[:, 2] - 0.5) ** 2
            + 10.0 * x[:, 3] + 5.0 * x[:, 4])


def gen_butterfly(cfg: ButterflyConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    x1 = rng.uniform(-5.0, 5.0, cfg.n)
    x2 = rng.uniform(-5.0, 5.0, cfg.n)
    i6 = rng.uniform(-5.0, 5.0, cfg.n)
    y = butterfly_response(x1, x2, cfg.weights, cfg.sig)
    if cfg.noise_sd_fraction > 0:
        sd = float(np.std(y, ddof=1)) if cfg.n > 1 else 0.0
        y = y + rng.normal(0.0, cfg.noise_sd_fraction * sd, cfg.n)

    if cfg.pure_linear:
        j3 = j4 = j5 = x1
        i7 = i8 = i6
    else:
        j3 = np.log10(x1 + 5.0)
        j4 = x1 ** 2 - x2 ** 2
        j5 = x1 ** 4 - x2 ** 4
        i7 = np.log10(i6 + 5.0)
        i8 = i6 + i7
    values = np.column_stack([x1, x2, j3, j4, j5, i6, i7, i8, y])
    return Dataset(BUTTERFLY_COLUMNS, values, "Y")


def gen_friedman(cfg: FriedmanConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    x = rng.uniform(0.0, 1.0, (cfg.n, 10))
    y = friedman_response(x)
    if cfg.noise_sd > 0:
        y = y + rng.normal(0.0, cfg.noise_sd, cfg.n)
    return Dataset(FRIEDMAN_COLUMNS, np.column_stack([x, y]), "Y")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    """One simulated MBFR experiment, repeated over seeds by :func:`monte_carlo`.

    ``params`` are passed to the generator config (without the seed);
    ``drop`` lists columns removed before selection.
    """

    generator: str = "butterfly"
    params: tuple[tuple[str, object], ...] = ()
    scales: tuple[int, ...] = tuple(range(5, 21))
    C: int | None = None
    shuffle: bool = False
    drop: tuple[str, ...] = ()
    first_k: int = 2

    def make_dataset(self, seed: int) -> Dataset:
        kw = dict(self.params)
        if self.generator == "butterfly":
            d = gen_butterfly(ButterflyConfig(seed=seed, **kw))
        elif self.generator == "friedman":
            d = gen_friedman(FriedmanConfig(seed=seed, **kw))
        else:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.drop:
            d = subset(d, [c for c in d.names if c not in self.drop])
        if self.shuffle:
            shuffle_seed = int(np.random.SeedSequence((seed, 1)).generate_state(1)[0])
            d = shuffle_target(d, shuffle_seed)
        return d


@dataclass
class SimulationRun:
    seed: int
    selected: list[str]
    diss: list[float]
    id_with: list[float]
    id_without: list[float]
    target_id: float

    @property
    def min_diss(self) -> float:
        return min(self.diss)


@dataclass
class MonteCarloSummary:
    experiment: dict
    seeds: list[int]
    step_mean_diss: list[float]
    step_sd_diss: list[float] | None
    step_mean_id_with: list[float]
    step_sd_id_with: list[float] | None
    step_mean_id_without: list[float]
    step_sd_id_without: list[float] | None
    mean_target_id: float
    sd_target_id: float | None
    mean_min_diss: float
    sd_min_diss: float | None
    first_k_counts: dict[str, int]
    runs: list[SimulationRun] = field(repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("runs")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def selections_csv(self) -> str:
        k = self.experiment["first_k"]
        lines = ["seed," + ",".join(f"feature_{i + 1}" for i in range(k)) + ",min_diss,target_id"]
        for r in self.runs:
            lines.append(",".join([str(r.seed), *r.selected[:k],
                                   repr(r.min_diss), repr(r.target_id)]))
        return "\n".join(lines) + "\n"


def run_once(exp: Experiment, seed: int) -> SimulationRun:
    from .mbfr import mbfr_select

    d = rescale_unit(exp.make_dataset(seed))
    trace = mbfr_select(d, exp.scales, exp.C)
    return SimulationRun(
        seed=seed,
        selected=trace.selected,
        diss=[s.diss for s in trace.steps],
        id_with=[s.id_with_target for s in trace.steps],
        id_without=[s.id_without_target for s in trace.steps],
        target_id=trace.target_id,
    )


def _moments(rows: Sequence[Sequence[float]]):
    a = np.asarray(rows, dtype=np.float64)
    mean = a.mean(axis=0)
    sd = a.std(axis=0, ddof=1) if a.shape[0] > 1 else None
    return mean, sd


def _listify(v):
    if v is None:
        return None
    return [float(t) for t in np.atleast_1d(v)]


def monte_carlo(exp: Experiment, sims: int, base_seed: int = 0, n_jobs: int = 1) -> MonteCarloSummary:
    """Repeat ``exp`` with seeds ``base_seed .. base_seed + sims - 1``.

    Per-step statistics are taken position-wise over the selection
    order, whatever feature was picked at that step.
    """
    if sims < 1:
        raise ValueError("sims must be >= 1")
    seeds = list(range(base_seed, base_seed + sims))
    if n_jobs > 1 and sims > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(run_once, [exp] * sims, seeds))
    else:
        runs = [run_once(exp, s) for s in seeds]
    runs.sort(key=lambda r: r.seed)

    diss_m, diss_sd = _moments([r.diss for r in runs])
    with_m, with_sd = _moments([r.id_with for r in runs])
    wo_m, wo_sd = _moments([r.id_without for r in runs])
    tid_m, tid_sd = _moments([[r.target_id] for r in runs])
    min_m, min_sd = _moments([[r.min_diss] for r in runs])

    counts: dict[str, int] = {}
    for r in runs:
        key = ",".join(r.selected[:exp.first_k])
        counts[key] = counts.get(key, 0) + 1
    counts = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))

    return MonteCarloSummary(
        experiment={**asdict(exp), "params": dict(exp.params),
                    "scales": list(exp.scales), "drop": list(exp.drop)},
        seeds=seeds,
        step_mean_diss=_listify(diss_m), step_sd_diss=_listify(diss_sd),
        step_mean_id_with=_listify(with_m), step_sd_id_with=_listify(with_sd),
        step_mean_id_without=_listify(wo_m), step_sd_id_without=_listify(wo_sd),
        mean_target_id=float(tid_m[0]),
        sd_target_id=None if tid_sd is None else float(tid_sd[0]),
        mean_min_diss=float(min_m[0]),
        sd_min_diss=None if min_sd is None else float(min_sd[0]),
        first_k_counts=counts,
        runs=runs,
    )


def butterfly_sd_y(seeds: Sequence[int], n: int = 10000, sig: str = "logistic") -> float:
    """Mean over seeds of the sample sd of noise-free butterfly Y."""
    sds = [float(np.std(gen_butterfly(ButterflyConfig(n=n, seed=s, sig=sig)).column("Y"), ddof=1))
           for s in seeds]
    return math.fsum(sds) / len(sds)
