"""Stability-based variable selection.

The selection threshold is chosen by repeatedly splitting the training
data into two halves, fitting the full model on each half, thresholding
each half's coefficient group norms at every candidate value, and
keeping the candidate whose two selected sets agree best on average, as
measured by Cohen's kappa.  Feature positions are 1-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InvalidInputError
from .model import AdditiveCoefficients
from .optimizer import HyperParams, TrainConfig, train


@dataclass(eq=False)
class SelectionReport:
    """Outcome of one selection run: per-feature coefficient group norms,
    the chosen threshold with its kappa curve, and the active set."""

    group_norms: np.ndarray
    threshold: float
    kappa_curve: list[tuple[float, float]]
    active_set: list[int]
    partitions: int


def group_norms(alpha: AdditiveCoefficients) -> np.ndarray:
    """Euclidean norm of each coefficient group, shape (p,)."""
    return alpha.group_norms()


def cohen_kappa(set_a, set_b, p: int) -> float:
    """Chance-corrected agreement between two selected-feature sets.

    Each of the p features is rated selected/unselected by both sets.
    When chance agreement is exact (both sets empty or both full), the
    convention is 1 for equal sets and 0 otherwise.
    """
    a = frozenset(set_a)
    b = frozenset(set_b)
    if p < 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    for s in (a, b):
        for j in s:
            if not (1 <= j <= p):
                raise InvalidInputError(f"feature index {j} outside 1..{p}")
    both = len(a & b)
    neither = p - len(a | b)
    # kappa = (p_o - p_e) / (1 - p_e); exact in integer arithmetic:
    # p_o = (both + neither)/p,  p_e = (|a||b| + (p-|a|)(p-|b|))/p^2
    chance = len(a) * len(b) + (p - len(a)) * (p - len(b))
    denom = p * p - chance
    if denom == 0:
        return 1.0 if a == b else 0.0
    return (p * (both + neither) - chance) / denom


def select_variables(alpha: AdditiveCoefficients, threshold: float) -> list[int]:
    """1-based positions of features whose group norm is >= threshold."""
    if threshold < 0:
        raise InvalidInputError(f"threshold must be >= 0, got {threshold}")
    norms = alpha.group_norms()
    return [j + 1 for j in range(alpha.p) if norms[j] >= threshold]


def _select_from_norms(norms: np.ndarray, threshold: float) -> frozenset[int]:
    return frozenset(j + 1 for j in range(len(norms)) if norms[j] >= threshold)


def half_fit_norms(
    train_ds: Dataset,
    config: TrainConfig,
    hyper: HyperParams,
    partitions: int,
    rng: np.random.Generator,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group norms from fitting the model on each half of ``partitions``
    random equal splits of the training data.

    Each half is itself split 50/50 into an inner training and validation
    part so the full bilevel procedure applies unchanged.  Fit seeds are
    drawn from ``rng``, keeping the whole sweep reproducible.
    """
    if train_ds.n < 4:
        raise InvalidInputError(f"need n >= 4 for half-splits, got n={train_ds.n}")
    if partitions < 1:
        raise InvalidInputError(f"partitions must be >= 1, got {partitions}")
    out = []
    n = train_ds.n
    for _ in range(partitions):
        perm = rng.permutation(n)
        halves = (perm[: n // 2], perm[n // 2 :])
        pair = []
        for half_idx in halves:
            ds = train_ds.take(half_idx)
            m = ds.n // 2
            inner_tr = ds.take(np.arange(m))
            inner_val = ds.take(np.arange(m, ds.n))
            cfg = TrainConfig(
                lam=config.lam,
                iters=config.iters,
                batch_size=config.batch_size,
                schedule_c=config.schedule_c,
                smoothness=config.smoothness,
                seed=int(rng.integers(2**31)),
                identity_link=config.identity_link,
                group_floor=config.group_floor,
            )
            model, _ = train(inner_tr, inner_val, cfg, hyper)
            pair.append(model.alpha.group_norms())
        out.append((pair[0], pair[1]))
    return out


def candidate_grid(norm_pairs: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """All distinct observed group norms plus midpoints between neighbors.

    Every selection set reachable by thresholding the observed norms is
    reachable from this grid."""
    values = np.unique(np.concatenate([np.concatenate(pair) for pair in norm_pairs]))
    if len(values) > 1:
        mids = 0.5 * (values[:-1] + values[1:])
        values = np.unique(np.concatenate([values, mids]))
    return values


def threshold_from_norms(
    norm_pairs: list[tuple[np.ndarray, np.ndarray]],
) -> tuple[float, list[tuple[float, float]]]:
    """Pick the grid value maximizing mean kappa across partitions.

    Ties go to the largest candidate (the sparser selection)."""
    grid = candidate_grid(norm_pairs)
    p = len(norm_pairs[0][0])
    curve = []
    for v in grid:
        kappas = [
            cohen_kappa(_select_from_norms(n1, v), _select_from_norms(n2, v), p)
            for n1, n2 in norm_pairs
        ]
        curve.append((float(v), float(np.mean(kappas))))
    best = max(curve, key=lambda pair: (pair[1], pair[0]))
    return best[0], curve


def stability_threshold(
    train_ds: Dataset,
    config: TrainConfig,
    hyper: HyperParams,
    partitions: int,
    rng: np.random.Generator,
) -> tuple[float, list[tuple[float, float]]]:
    """Half-split fits followed by the kappa-maximizing threshold search."""
    pairs = half_fit_norms(train_ds, config, hyper, partitions, rng)
    return threshold_from_norms(pairs)
