"""Synthetic truth process and per-level base forecasters.

The bottom-level truth is a stationary AR(1) path. Each hierarchy level is
then modelled independently: an AR(1)-plus-intercept fit on the level's own
(native-unit) training aggregate, with multi-step sample paths generated
recursively and innovations drawn by bootstrapping the fit residuals. That
keeps the within-level temporal dependence of the paths while making no
distributional assumption, and it gives the reconciliation layer the same
shape of input a production forecasting model would: one (f_1/f_l) x N
matrix per level per forecast origin.

Forecast origins advance one whole cycle at a time and model parameters are
fitted once, on the training window only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, SimkitError, TooShort
from .hierarchy import HierarchySpec, aggregate_to_level, build_summing_matrix
from .sampling import LevelSample, OriginData

__all__ = [
    "SyntheticScenario",
    "LevelForecaster",
    "Dataset",
    "simulate_truth",
    "fit_level",
    "sample_paths",
    "build_dataset",
    "dataset_from_series",
]


@dataclass(frozen=True)
class SyntheticScenario:
    """Parameters of the bottom-level AR(1) truth process.

    ``x_t = mu + phi * x_{t-1} + sigma * eps_t`` with standard normal
    innovations, started from the stationary distribution. ``sigma = 0`` is
    allowed as the degenerate noise-free limit. ``clip_at_zero`` floors the
    path at zero for nonnegative quantities like generated power.
    """

    phi: float
    sigma: float
    mu: float = 0.0
    cycle_length: int = 24
    train_cycles: int = 30
    val_cycles: int = 10
    test_cycles: int = 10
    seed: int = 0
    clip_at_zero: bool = False

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise SimkitError(f"autoregressive coefficient must satisfy |phi| < 1, got {self.phi}")
        if self.sigma < 0:
            raise SimkitError(f"innovation scale must be nonnegative, got {self.sigma}")
        if min(self.train_cycles, self.val_cycles, self.test_cycles) < 1:
            raise SimkitError("train/val/test cycle counts must all be at least 1")
        if self.cycle_length < 1:
            raise SimkitError("cycle length must be positive")

    @property
    def total_cycles(self) -> int:
        return self.train_cycles + self.val_cycles + self.test_cycles

    @property
    def stationary_mean(self) -> float:
        return self.mu / (1.0 - self.phi)


@dataclass(frozen=True)
class LevelForecaster:
    """AR(1)+intercept fit for one level, with its residual pool.

    ``window`` is the level's sampling interval in bottom periods, kept so
    sampled paths can be converted to common units.
    """

    level: int
    window: int
    phi: float
    intercept: float
    residuals: np.ndarray

    def __post_init__(self):
        res = np.asarray(self.residuals, dtype=float)
        if res.size == 0:
            raise SimkitError("residual pool must be nonempty")
        res.setflags(write=False)
        object.__setattr__(self, "residuals", res)


def simulate_truth(scn: SyntheticScenario) -> np.ndarray:
    """Simulate the bottom-level truth path for all configured cycles.

    The path starts from a draw of the stationary distribution (or its mean
    when ``sigma`` is zero), so a long run averages to mu/(1-phi).
    """
    n = scn.cycle_length * scn.total_cycles
    rng = np.random.default_rng(scn.seed)
    mean = scn.stationary_mean
    out = np.empty(n)
    if scn.sigma == 0.0:
        out.fill(mean)
    else:
        sd_stat = scn.sigma / np.sqrt(1.0 - scn.phi**2)
        prev = rng.normal(mean, sd_stat)
        noise = rng.normal(0.0, scn.sigma, size=n)
        for t in range(n):
            prev = scn.mu + scn.phi * prev + noise[t]
            out[t] = prev
    if scn.clip_at_zero:
        np.clip(out, 0.0, None, out=out)
    out.setflags(write=False)
    return out


def fit_level(series: np.ndarray, level: int, h: HierarchySpec) -> LevelForecaster:
    """Least-squares AR(1)+intercept fit on one level's training series.

    Falls back to an intercept-only model (phi = 0) when the series is
    constant and the slope is unidentifiable.

    Raises:
        TooShort: fewer than 10 observations.
    """
    values = np.asarray(series, dtype=float).ravel()
    if values.size < 10:
        raise TooShort(f"need at least 10 observations to fit, got {values.size}")
    lagged = values[:-1]
    target = values[1:]
    design = np.column_stack([np.ones_like(lagged), lagged])
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < 2:
        mean = float(values.mean())
        return LevelForecaster(
            level=level,
            window=h.f[level - 1],
            phi=0.0,
            intercept=mean,
            residuals=values - mean,
        )
    intercept, phi = coef
    return LevelForecaster(
        level=level,
        window=h.f[level - 1],
        phi=float(phi),
        intercept=float(intercept),
        residuals=target - design @ coef,
    )


def sample_paths(
    fc: LevelForecaster,
    origin_state: float,
    horizon: int,
    n_paths: int,
    seed,
    origin: int = 0,
) -> LevelSample:
    """Generate recursive multi-step sample paths from one forecast origin.

    Innovations are drawn by residual bootstrap, so each column is one
    dependent path of the fitted recursion started at ``origin_state`` (the
    last observed native-unit value at this level). The returned matrix is
    in common units.
    """
    if horizon < 1:
        raise SimkitError(f"horizon must be at least 1, got {horizon}")
    if n_paths < 2:
        raise SimkitError(f"need at least 2 sample paths, got {n_paths}")
    rng = np.random.default_rng(seed)
    draws = rng.choice(fc.residuals, size=(horizon, n_paths), replace=True)
    paths = np.empty((horizon, n_paths))
    prev = np.full(n_paths, float(origin_state))
    for t in range(horizon):
        prev = fc.intercept + fc.phi * prev + draws[t]
        paths[t] = prev
    return LevelSample(level=fc.level, matrix=paths / fc.window, origin=origin)


@dataclass(frozen=True)
class Dataset:
    """Fitted forecasters plus assembled validation and test origins."""

    hierarchy: HierarchySpec
    bottom: np.ndarray
    train_cycles: int
    val_cycles: int
    test_cycles: int
    forecasters: tuple[LevelForecaster, ...]
    val_origins: tuple[OriginData, ...]
    test_origins: tuple[OriginData, ...]


def dataset_from_series(
    bottom: np.ndarray,
    h: HierarchySpec,
    train_cycles: int,
    val_cycles: int,
    test_cycles: int,
    n_paths: int,
    seed: int = 0,
) -> Dataset:
    """Split a bottom-level series, fit per-level models on the training
    window, and generate base samples for every validation and test origin.

    The split is by whole cycles in chronological order: the first
    ``train_cycles`` cycles train the models, the next ``val_cycles`` are
    validation origins, the following ``test_cycles`` are test origins.
    Per-origin sample paths use independent substreams of ``seed``, so a
    given origin's samples do not depend on how many origins follow it.
    """
    values = np.asarray(bottom, dtype=float).ravel()
    f1 = h.cycle_length
    total = train_cycles + val_cycles + test_cycles
    if values.size < total * f1:
        raise DataError(
            f"need {total} cycles of {f1} periods ({total * f1} values), "
            f"got {values.size}"
        )
    values = values[: total * f1]

    train = values[: train_cycles * f1]
    forecasters = tuple(
        fit_level(aggregate_to_level(train, h, lev), lev, h) for lev in range(1, h.L + 1)
    )
    # native-unit series per level over the full span, for origin states
    level_series = [aggregate_to_level(values, h, lev) for lev in range(1, h.L + 1)]
    S = build_summing_matrix(h).entries

    def make_origin(cycle: int) -> OriginData:
        samples = []
        for fc in forecasters:
            nodes = h.nodes_at(fc.level)
            state = level_series[fc.level - 1][cycle * nodes - 1]
            path_seed = np.random.SeedSequence([seed % 2**64, cycle, fc.level])
            samples.append(
                sample_paths(fc, state, nodes, n_paths, path_seed, origin=cycle)
            )
        actual = S @ values[cycle * f1 : (cycle + 1) * f1]
        return OriginData(levels=tuple(samples), actual=actual, origin=cycle)

    val_origins = tuple(
        make_origin(c) for c in range(train_cycles, train_cycles + val_cycles)
    )
    test_origins = tuple(
        make_origin(c) for c in range(train_cycles + val_cycles, total)
    )
    return Dataset(
        hierarchy=h,
        bottom=values,
        train_cycles=train_cycles,
        val_cycles=val_cycles,
        test_cycles=test_cycles,
        forecasters=forecasters,
        val_origins=val_origins,
        test_origins=test_origins,
    )


def build_dataset(
    scn: SyntheticScenario,
    h: HierarchySpec,
    n_paths: int,
    seed: int | None = None,
) -> Dataset:
    """Simulate a scenario's truth path and assemble the full dataset."""
    if h.cycle_length != scn.cycle_length:
        raise SimkitError(
            f"hierarchy cycle length {h.cycle_length} does not match "
            f"scenario cycle length {scn.cycle_length}"
        )
    return dataset_from_series(
        simulate_truth(scn),
        h,
        scn.train_cycles,
        scn.val_cycles,
        scn.test_cycles,
        n_paths,
        seed=scn.seed if seed is None else seed,
    )
