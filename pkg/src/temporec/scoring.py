"""Sample-based scoring: CRPS, median point forecasts, level-wise tables.

The continuous ranked probability score of an ensemble {x_1..x_N} against a
realization z is estimated in energy form,

    (1/N) sum_i |x_i - z|  -  (1/(2N^2)) sum_i sum_j |x_i - x_j|,

computed in O(N log N) by sorting (the double sum of a sorted vector
telescopes into a weighted single sum). Scores for a hierarchy are averaged
per node over forecast origins, then per level over nodes, then over levels;
that triple average is both the reported table layout and the objective the
cross-validated weights minimize. Evaluation tables rescale each node back
to its level's native units first; the cross-validation criterion stays in
common units, where the realizations it scores against live.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, EmptySample, ScoringError
from .hierarchy import HierarchySpec, build_summing_matrix
from .reconcile import WeightMatrix, weights_from_levels
from .sampling import OriginData, assemble

__all__ = [
    "ScoreTable",
    "crps_sample",
    "median_point",
    "score_hierarchy",
    "assemble_origins",
    "cv_criterion",
    "cv_objective",
]


@dataclass(frozen=True)
class ScoreTable:
    """Per-level mean scores (coarse to fine) and their overall mean."""

    level_scores: tuple[float, ...]
    overall: float
    metric: str


def crps_sample(sample, z: float) -> float:
    """CRPS of one ensemble against one realization (energy form)."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("cannot score an empty sample")
    return float(_crps_rows(x[None, :], np.array([float(z)]))[0])


def median_point(sample) -> float:
    """Empirical median; for even sizes the mean of the central pair."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("cannot take the median of an empty sample")
    return float(np.median(x))


def _crps_rows(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized energy-form CRPS along the last axis.

    ``x`` has shape (..., N) and ``z`` shape (...,); returns shape (...,).
    """
    n = x.shape[-1]
    xs = np.sort(x, axis=-1)
    term1 = np.abs(x - z[..., None]).mean(axis=-1)
    weights = 2.0 * np.arange(n) - n + 1.0
    term2 = (xs * weights).sum(axis=-1) / (n * n)
    return term1 - term2


def _native_scale(h: HierarchySpec) -> np.ndarray:
    return np.concatenate(
        [np.full(h.nodes_at(lev), float(h.f[lev - 1])) for lev in range(1, h.L + 1)]
    )


def _node_scores(
    tensor: np.ndarray,
    actuals: np.ndarray,
    h: HierarchySpec,
    metric: str,
    units: str,
) -> np.ndarray:
    """Per-node scores averaged over origins.

    ``tensor`` holds one M x N sample per origin, shape (T, M, N);
    ``actuals`` the realized common-unit node values, shape (T, M).
    """
    if units == "native":
        scale = _native_scale(h)
        tensor = tensor * scale[None, :, None]
        actuals = actuals * scale[None, :]
    elif units != "common":
        raise ScoringError(f"units must be 'native' or 'common', got {units!r}")

    if metric == "crps":
        scores = _crps_rows(tensor, actuals)
    elif metric == "mae":
        scores = np.abs(np.median(tensor, axis=-1) - actuals)
    else:
        raise ScoringError(f"metric must be 'crps' or 'mae', got {metric!r}")
    return scores.mean(axis=0)


def _table_from_nodes(node_scores: np.ndarray, h: HierarchySpec, metric: str) -> ScoreTable:
    level_scores = tuple(
        float(node_scores[h.level_slice(lev)].mean()) for lev in range(1, h.L + 1)
    )
    return ScoreTable(
        level_scores=level_scores,
        overall=float(np.mean(level_scores)),
        metric=metric.upper(),
    )


def score_hierarchy(
    samples: Sequence,
    actuals: Sequence[np.ndarray],
    h: HierarchySpec,
    metric: str = "crps",
    units: str = "native",
) -> ScoreTable:
    """Score joint samples over forecast origins, level by level.

    Args:
        samples: one M x N sample per origin - reconciled or raw; anything
            with a ``matrix`` attribute or array-like.
        actuals: realized node values per origin, length-M vectors in
            common units.
        h: the hierarchy.
        metric: ``"crps"`` for the ensemble score, ``"mae"`` for the
            absolute error of the ensemble median.
        units: ``"native"`` rescales each node to its level's own units
            before scoring (the reporting convention); ``"common"`` scores
            the bottom-level-unit values directly.

    Raises:
        AlignmentError: origin counts or shapes do not line up.
    """
    mats = [np.asarray(getattr(s, "matrix", s), dtype=float) for s in samples]
    acts = [np.asarray(a, dtype=float).ravel() for a in actuals]
    if len(mats) != len(acts):
        raise AlignmentError(f"{len(mats)} samples but {len(acts)} actual vectors")
    if not mats:
        raise AlignmentError("no forecast origins to score")
    for mat, act in zip(mats, acts):
        if mat.ndim != 2 or mat.shape[0] != h.M:
            raise AlignmentError(f"sample shape {mat.shape} does not have {h.M} rows")
        if act.shape != (h.M,):
            raise AlignmentError(f"actuals shape {act.shape} is not ({h.M},)")
    if len({mat.shape[1] for mat in mats}) != 1:
        raise AlignmentError("origins disagree on the number of sample paths")

    tensor = np.stack(mats)
    actual_mat = np.stack(acts)
    metric = metric.lower()
    return _table_from_nodes(_node_scores(tensor, actual_mat, h, metric, units), h, metric)


def assemble_origins(
    origins: Sequence[OriginData],
    h: HierarchySpec,
    scheme: str,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble every origin's joint sample under one scheme.

    Returns the (T, M, N) tensor of joint samples and the (T, M) matrix of
    common-unit actuals. For the permuted scheme each origin shuffles under
    its own substream derived from (seed, origin position), so the output
    is deterministic and independent of any weights applied afterwards.
    """
    joints = []
    actuals = []
    for idx, origin in enumerate(origins):
        joint = assemble(origin.levels, h, scheme, seed=_origin_seed(seed, idx))
        joints.append(joint.matrix)
        actuals.append(origin.actual)
    if not joints:
        raise AlignmentError("no validation origins supplied")
    return np.stack(joints), np.stack(actuals)


def _origin_seed(base: int, idx: int) -> int:
    return int(np.random.SeedSequence([base % 2**64, idx]).generate_state(1)[0])


def cv_criterion(
    P: WeightMatrix,
    joint_tensor: np.ndarray,
    actuals: np.ndarray,
    h: HierarchySpec,
) -> float:
    """Level-averaged CRPS of the reconciled samples in common units.

    For each origin the joint sample is projected through S @ P, each node
    scored against its realized value, node scores averaged over origins,
    then over nodes within a level, then over levels. Origin averaging (in
    place of summing) is a monotone rescaling that keeps objective values
    comparable across validation lengths without moving the minimizer.
    """
    S = build_summing_matrix(h).entries
    base = np.tensordot(P.entries, joint_tensor, axes=([1], [1]))  # (m, T, N)
    reconciled = np.tensordot(S, base, axes=([1], [0]))  # (M, T, N)
    reconciled = np.moveaxis(reconciled, 0, 1)  # (T, M, N)
    node_scores = _node_scores(reconciled, actuals, h, metric="crps", units="common")
    return _table_from_nodes(node_scores, h, "crps").overall


def cv_objective(
    v,
    scheme: str,
    origins: Sequence[OriginData],
    h: HierarchySpec,
    seed: int = 0,
) -> float:
    """Cross-validation objective for a vector of per-level weights.

    Builds the level-constrained weight matrix from ``v``, reconciles every
    validation origin's joint sample under ``scheme``, and returns the
    level-averaged CRPS (common units).
    """
    joint_tensor, actuals = assemble_origins(origins, h, scheme, seed=seed)
    return cv_criterion(weights_from_levels(v, h), joint_tensor, actuals, h)
