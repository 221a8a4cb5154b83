"""Feedback likelihoods and the multiplicative relevance ranking.

Every piece of feedback (an attribute comparison or a sketch embedding)
contributes a per-item likelihood in (0, 1]; an item's relevance is the
product of the likelihoods of all feedback received so far. Scores are
accumulated in the log domain so long sessions cannot underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .catalog import Catalog

__all__ = [
    "Polarity",
    "AttributeCompare",
    "Sketch",
    "FeedbackConstraint",
    "LikelihoodParams",
    "RelevanceState",
    "default_params",
    "constraint_likelihood",
    "sketch_likelihood",
    "likelihood_vector",
    "update_relevance",
    "rank",
    "percentile_rank",
    "top_k",
]


class Polarity(str, Enum):
    MORE = "more"
    LESS = "less"
    EQUAL = "equal"


@dataclass(frozen=True)
class AttributeCompare:
    """'Target is more/less/equally <attr> than item ref_id'."""

    attr: int
    ref_id: int
    polarity: Polarity


@dataclass(frozen=True)
class Sketch:
    """A sketch rendered down to a feature-space embedding."""

    embedding: np.ndarray

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64)
        emb.flags.writeable = False
        object.__setattr__(self, "embedding", emb)


FeedbackConstraint = AttributeCompare | Sketch


@dataclass(frozen=True)
class LikelihoodParams:
    """Shapes of the per-constraint likelihoods.

    sigma_more / sigma_eq may be scalars or per-attribute arrays (length m).
    ``floor`` clamps every likelihood away from zero so a single disagreeing
    constraint can never erase an item.
    """

    sigma_more: float | np.ndarray
    sigma_eq: float | np.ndarray
    tau_sketch: float
    floor: float = 1e-4

    def __post_init__(self):
        if np.any(np.asarray(self.sigma_more) <= 0) or np.any(np.asarray(self.sigma_eq) <= 0):
            raise ValueError("sigma_more and sigma_eq must be positive")
        if self.tau_sketch <= 0:
            raise ValueError("tau_sketch must be positive")
        if not 0.0 < self.floor < 0.5:
            raise ValueError("floor must lie in (0, 0.5)")

    def sigma_more_for(self, attr: int) -> float:
        s = np.asarray(self.sigma_more, dtype=np.float64)
        return float(s) if s.ndim == 0 else float(s[attr])

    def sigma_eq_for(self, attr: int) -> float:
        s = np.asarray(self.sigma_eq, dtype=np.float64)
        return float(s) if s.ndim == 0 else float(s[attr])


def default_params(catalog: Catalog, sigma_scale: float = 0.25,
                   tau_scale: float = 0.5, floor: float = 1e-4) -> LikelihoodParams:
    """Catalog-calibrated defaults.

    Comparison scales are ``sigma_scale`` times each attribute's score std;
    the sketch kernel width is ``tau_scale`` times the RMS feature distance
    from the catalog centroid.
    """
    stds = np.maximum(catalog.attrs.std(axis=0), 1e-6)
    spread = catalog.features - catalog.features.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum(spread * spread, axis=1))))
    return LikelihoodParams(
        sigma_more=sigma_scale * stds,
        sigma_eq=sigma_scale * stds,
        tau_sketch=max(tau_scale * rms, 1e-6),
        floor=floor,
    )


@dataclass(frozen=True)
class RelevanceState:
    """Cumulative log-likelihood per item plus the constraint log."""

    log_scores: np.ndarray  # (N,) float64
    constraints: tuple[FeedbackConstraint, ...] = field(default=())

    @classmethod
    def fresh(cls, n: int) -> "RelevanceState":
        return cls(log_scores=np.zeros(n))

    def __post_init__(self):
        scores = np.asarray(self.log_scores, dtype=np.float64)
        if not np.isfinite(scores).all():
            raise ValueError("log_scores must be finite")
        scores = scores.copy()
        scores.flags.writeable = False
        object.__setattr__(self, "log_scores", scores)
        object.__setattr__(self, "constraints", tuple(self.constraints))


def _logistic(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def likelihood_vector(catalog: Catalog, c: FeedbackConstraint,
                      params: LikelihoodParams) -> np.ndarray:
    """Likelihood of every catalog item under one constraint, clamped to [floor, 1]."""
    if isinstance(c, AttributeCompare):
        if not 0 <= c.attr < catalog.m:
            raise ValueError(f"attribute index {c.attr} out of range")
        if not 0 <= c.ref_id < catalog.n:
            raise ValueError(f"unknown reference item {c.ref_id}")
        delta = catalog.attrs[:, c.attr] - catalog.attrs[c.ref_id, c.attr]
        if c.polarity is Polarity.MORE:
            lik = _logistic(delta / params.sigma_more_for(c.attr))
        elif c.polarity is Polarity.LESS:
            lik = _logistic(-delta / params.sigma_more_for(c.attr))
        else:
            sig = params.sigma_eq_for(c.attr)
            lik = np.exp(-(delta * delta) / (2.0 * sig * sig))
    elif isinstance(c, Sketch):
        emb = np.asarray(c.embedding, dtype=np.float64)
        if emb.shape != (catalog.d,):
            raise ValueError(f"sketch embedding length {emb.shape} != d={catalog.d}")
        diff = catalog.features - emb
        sq = np.sum(diff * diff, axis=1)
        lik = np.exp(-sq / (2.0 * params.tau_sketch**2))
    else:
        raise TypeError(f"unknown constraint type {type(c)!r}")
    return np.clip(lik, params.floor, 1.0)


def constraint_likelihood(catalog: Catalog, item_id: int, c: AttributeCompare,
                          params: LikelihoodParams) -> float:
    """Single-item attribute-comparison likelihood in [floor, 1]."""
    return float(likelihood_vector(catalog, c, params)[item_id])


def sketch_likelihood(catalog: Catalog, item_id: int, embedding: np.ndarray,
                      params: LikelihoodParams) -> float:
    """Single-item sketch likelihood in [floor, 1]."""
    return float(likelihood_vector(catalog, Sketch(embedding), params)[item_id])


def update_relevance(state: RelevanceState, c: FeedbackConstraint,
                     catalog: Catalog, params: LikelihoodParams) -> RelevanceState:
    """Multiply the constraint's likelihoods into the running relevance."""
    lik = likelihood_vector(catalog, c, params)
    return RelevanceState(
        log_scores=state.log_scores + np.log(lik),
        constraints=state.constraints + (c,),
    )


def rank(state: RelevanceState) -> list[int]:
    """Item ids by descending relevance; ties go to the smaller id."""
    n = state.log_scores.shape[0]
    order = np.lexsort((np.arange(n), -state.log_scores))
    return [int(i) for i in order]


def percentile_rank(ordering: list[int], target: int) -> float:
    """Fraction of other items ranked strictly below the target (1.0 = first)."""
    try:
        pos = ordering.index(target)
    except ValueError:
        raise ValueError(f"target {target} not present in ordering") from None
    n = len(ordering)
    return (n - 1 - pos) / (n - 1)


def top_k(ordering: list[int], k: int) -> list[int]:
    if k > len(ordering):
        raise ValueError(f"k={k} exceeds N={len(ordering)}")
    return ordering[:k]
