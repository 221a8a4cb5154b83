"""Seeded simulated users for training and offline evaluation.

A user knows its target item and a subset of the attribute vocabulary. It
answers all three interaction types: free-form comparisons chosen to shrink
the candidate pool the most, noisy answers to pivot questions, and sketches
rendered as noisy copies of the target embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog
from .relevance import Polarity

__all__ = ["SimulatedUser", "UserNoise"]


def _relation(delta: float, eps: float) -> Polarity:
    if delta > eps:
        return Polarity.MORE
    if delta < -eps:
        return Polarity.LESS
    return Polarity.EQUAL


@dataclass
class SimulatedUser:
    """One search's user. Owns an rng stream keyed by (rng_seed, target_id).

    ``eps_eq`` may be a scalar or a per-attribute array; score differences
    within it read as 'equally'. ``sigma_user`` perturbs question answers,
    ``sigma_sketch`` the sketch embedding. With a noise std of exactly 0 the
    corresponding call consumes no randomness, so noiseless users are pure.
    """

    target_id: int
    catalog: Catalog
    rng_seed: int = 0
    sigma_user: float = 0.0
    eps_eq: float | np.ndarray = 0.0
    sigma_sketch: float = 0.0
    attr_subset: frozenset[int] | None = None
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.target_id < self.catalog.n:
            raise ValueError(f"unknown target id {self.target_id}")
        self._rng = np.random.default_rng([int(self.rng_seed), int(self.target_id), 0x05E2])
        if self.attr_subset is None:
            # half the vocabulary, rounded up, drawn from the user's own stream
            m = self.catalog.m
            size = (m + 1) // 2
            chosen = self._rng.choice(m, size=size, replace=False)
            self.attr_subset = frozenset(int(a) for a in chosen)
        if not self.attr_subset:
            raise ValueError("attr_subset must be non-empty")

    def _eps_for(self, attr: int) -> float:
        eps = np.asarray(self.eps_eq, dtype=np.float64)
        return float(eps) if eps.ndim == 0 else float(eps[attr])

    def choose_freeform(self, displayed_refs: list[int]) -> tuple[int, int, Polarity]:
        """Pick the (attr, ref, polarity) whose truthful constraint fits fewest items.

        The polarity is the true (noiseless) relation of the target to the
        ref; the satisfying count uses strict inequalities for more/less and
        |delta| <= eps for equally. Ties prefer the earlier displayed ref,
        then the lower attribute index.
        """
        if not displayed_refs:
            raise ValueError("displayed_refs must be non-empty")
        scores = self.catalog.attrs
        t = scores[self.target_id]
        best: tuple[int, int, int, Polarity] | None = None  # (count, ref_pos, attr, pol)
        for ref_pos, ref in enumerate(displayed_refs):
            r = scores[ref]
            for attr in sorted(self.attr_subset):
                eps = self._eps_for(attr)
                pol = _relation(float(t[attr] - r[attr]), eps)
                col = scores[:, attr]
                if pol is Polarity.MORE:
                    count = int(np.sum(col > r[attr]))
                elif pol is Polarity.LESS:
                    count = int(np.sum(col < r[attr]))
                else:
                    count = int(np.sum(np.abs(col - r[attr]) <= eps))
                key = (count, ref_pos, attr, pol)
                if best is None or key[:3] < best[:3]:
                    best = key
        assert best is not None
        count, ref_pos, attr, pol = best
        return attr, displayed_refs[ref_pos], pol

    def answer_question(self, attr: int, pivot_id: int) -> Polarity:
        """Noisy comparison of target vs pivot on one attribute."""
        if not 0 <= attr < self.catalog.m:
            raise ValueError(f"attribute index {attr} out of range")
        if not 0 <= pivot_id < self.catalog.n:
            raise ValueError(f"unknown pivot id {pivot_id}")
        s_t = float(self.catalog.attrs[self.target_id, attr])
        s_p = float(self.catalog.attrs[pivot_id, attr])
        if self.sigma_user > 0:
            n1, n2 = self._rng.normal(0.0, self.sigma_user, size=2)
            s_t, s_p = s_t + n1, s_p + n2
        return _relation(s_t - s_p, self._eps_for(attr))

    def produce_sketch(self) -> np.ndarray:
        """Target features plus isotropic Gaussian noise of std sigma_sketch."""
        f = self.catalog.features[self.target_id].copy()
        if self.sigma_sketch > 0:
            f = f + self._rng.normal(0.0, self.sigma_sketch, size=self.catalog.d)
        return f


@dataclass(frozen=True)
class UserNoise:
    """Catalog-relative noise levels, resolved to absolute scales per catalog.

    eps_eq becomes a per-attribute array (scale times each attribute's score
    std); sigma_user and sigma_sketch are scalars tied to the mean attribute
    std and the mean per-dimension feature std respectively.
    """

    sigma_user_scale: float = 0.3
    eps_eq_scale: float = 0.1
    sigma_sketch_scale: float = 3.0

    def resolve(self, catalog: Catalog) -> tuple[float, np.ndarray, float]:
        attr_stds = np.maximum(catalog.attrs.std(axis=0), 1e-9)
        feat_std = float(np.mean(catalog.features.std(axis=0)))
        sigma_user = self.sigma_user_scale * float(attr_stds.mean())
        eps_eq = self.eps_eq_scale * attr_stds
        sigma_sketch = self.sigma_sketch_scale * max(feat_std, 1e-9)
        return sigma_user, eps_eq, sigma_sketch

    def make_user(self, catalog: Catalog, target_id: int, seed: int,
                  attr_subset: frozenset[int] | None = None) -> SimulatedUser:
        sigma_user, eps_eq, sigma_sketch = self.resolve(catalog)
        return SimulatedUser(
            target_id=target_id,
            catalog=catalog,
            rng_seed=seed,
            sigma_user=sigma_user,
            eps_eq=eps_eq,
            sigma_sketch=sigma_sketch,
            attr_subset=attr_subset,
        )
