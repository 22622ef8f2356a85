"""Retrieval trigger predicate and two-stage threshold search.

Retrieval fires for a sample exactly when all three confidence scores fall
strictly below their thresholds.  Thresholds are tuned on a validation set
whose plain and retrieval-augmented correctness has been precomputed once
(the :class:`ValidationCache`), so that scoring a candidate triple is pure
arithmetic over cached booleans.

The search runs in two stages: uniform Monte Carlo sampling over the
empirical score ranges (global exploration), then a small local grid around
the best candidates (local exploitation).  The best-scoring triple over all
candidates from both stages wins; ties break toward fewer triggers, then
lexicographically, so the result is a pure function of cache and seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence, Tuple

import numpy as np

from .confidence import ConfidenceTriple
from .errors import EmptyCache


@dataclass(frozen=True)
class ThresholdTriple:
    theta_label: float
    theta_tok: float
    theta_sent: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.theta_label, self.theta_tok, self.theta_sent)

    def as_dict(self) -> dict:
        return {
            "theta_label": self.theta_label,
            "theta_tok": self.theta_tok,
            "theta_sent": self.theta_sent,
        }


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the hybrid search.

    ``local_step`` is a fraction of each dimension's empirical range;
    ``local_radius`` counts grid steps each way, so the default explores a
    5 x 5 x 5 neighborhood around each of the top centers.
    """

    n_iter: int = 100
    top_k_centers: int = 5
    local_step: float = 0.02
    local_radius: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        if self.top_k_centers < 1 or self.n_iter < self.top_k_centers:
            raise ValueError("need n_iter >= top_k_centers >= 1")
        if self.local_step <= 0:
            raise ValueError("local_step must be positive")
        if self.local_radius < 0:
            raise ValueError("local_radius must be >= 0")


class ValidationCache:
    """Per-sample confidence scores and plain/augmented correctness.

    Immutable once built; thresholds are scored against it without any
    further backend calls.
    """

    def __init__(self, sample_ids: Sequence[str], triples: Sequence[ConfidenceTriple],
                 correct_plain: Sequence[bool], correct_aug: Sequence[bool]):
        n = len(sample_ids)
        if not (len(triples) == len(correct_plain) == len(correct_aug) == n):
            raise ValueError("cache columns must have equal length")
        self.sample_ids = tuple(sample_ids)
        self.taus = np.array(
            [[t.tau_label, t.tau_tok, t.tau_sent] for t in triples], dtype=np.float64
        ).reshape(n, 3)
        self.correct_plain = np.asarray(correct_plain, dtype=bool).copy()
        self.correct_aug = np.asarray(correct_aug, dtype=bool).copy()
        for arr in (self.taus, self.correct_plain, self.correct_aug):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.sample_ids)

    def ranges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-dimension empirical (min, max) of the observed scores."""
        if len(self) == 0:
            raise EmptyCache("validation cache is empty")
        return self.taus.min(axis=0), self.taus.max(axis=0)


def should_trigger(c: ConfidenceTriple, t: ThresholdTriple) -> bool:
    """True iff every score is strictly below its threshold."""
    return (
        c.tau_label < t.theta_label
        and c.tau_tok < t.theta_tok
        and c.tau_sent < t.theta_sent
    )


def _trigger_mask(cache: ValidationCache, thetas: np.ndarray) -> np.ndarray:
    # thetas: (m, 3) -> boolean (m, n) trigger matrix.
    return np.all(cache.taus[None, :, :] < thetas[:, None, :], axis=2)


def score_many(cache: ValidationCache, thetas: np.ndarray) -> np.ndarray:
    """Vectorized scoring: count correct_aug where triggered, else correct_plain."""
    if len(cache) == 0:
        raise EmptyCache("validation cache is empty")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    mask = _trigger_mask(cache, thetas)
    correct = np.where(mask, cache.correct_aug[None, :], cache.correct_plain[None, :])
    return correct.sum(axis=1)


def score(t: ThresholdTriple, cache: ValidationCache) -> int:
    """Validation-set count of correct final predictions under thresholds t."""
    return int(score_many(cache, np.array([t.as_tuple()]))[0])


def hybrid_search(cache: ValidationCache,
                  cfg: Optional[SearchConfig] = None) -> Tuple[ThresholdTriple, int]:
    """Two-stage threshold search; returns the best triple and its score.

    Stage 1 draws ``n_iter`` uniform triples over the per-dimension
    empirical ranges.  Stage 2 perturbs each of the ``top_k_centers`` best
    triples on a local grid of +-``local_radius`` steps of size
    ``local_step`` x range per dimension, clamped to the range box.
    Deterministic for a fixed cache and seed.
    """
    cfg = cfg or SearchConfig()
    lows, highs = cache.ranges()
    rng = np.random.default_rng(cfg.rng_seed)

    stage1 = rng.uniform(lows, highs, size=(cfg.n_iter, 3))
    scores1 = score_many(cache, stage1)
    triggers1 = _trigger_mask(cache, stage1).sum(axis=1)

    # Deterministic center selection: score desc, then fewer triggers, then
    # lexicographic triple order.
    order = sorted(
        range(cfg.n_iter),
        key=lambda i: (-scores1[i], triggers1[i], tuple(stage1[i])),
    )
    centers = stage1[order[: cfg.top_k_centers]]

    deltas = cfg.local_step * (highs - lows)
    offsets = np.array(
        list(product(range(-cfg.local_radius, cfg.local_radius + 1), repeat=3)),
        dtype=np.float64,
    )
    stage2 = (centers[:, None, :] + offsets[None, :, :] * deltas[None, None, :]).reshape(-1, 3)
    np.clip(stage2, lows, highs, out=stage2)

    candidates = np.vstack([stage1, stage2])
    scores = score_many(cache, candidates)
    triggers = _trigger_mask(cache, candidates).sum(axis=1)

    best = min(
        range(len(candidates)),
        key=lambda i: (-scores[i], triggers[i], tuple(candidates[i])),
    )
    triple = ThresholdTriple(*(float(x) for x in candidates[best]))
    return triple, int(scores[best])
