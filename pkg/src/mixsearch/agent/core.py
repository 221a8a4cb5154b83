"""RL plumbing: observations, proxies, rewards, replay and action selection."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..catalog import Catalog, knn
from ..relevance import top_k

__all__ = [
    "Action",
    "SearchState",
    "ReplayMemory",
    "compute_proxies",
    "encode_state",
    "reward",
    "select_action",
    "epsilon_at",
]

PROXY_K = 5


class Action(IntEnum):
    FREEFORM = 0
    QUESTION = 1
    SKETCH = 2


@dataclass(frozen=True)
class SearchState:
    """Fixed-shape observation handed to the Q-network.

    top_hist rows fill chronologically (most recent last among the filled
    rows); unfilled history rows stay zero, as do action_hist rows before
    any action was taken.
    """

    top_hist: np.ndarray  # (H, K, d)
    pos_prox: np.ndarray  # (K, d)
    neg_prox: np.ndarray  # (K, d)
    action_hist: np.ndarray  # (H, n_actions) one-hot or zero rows

    def __post_init__(self):
        h, k, d = self.top_hist.shape
        if self.pos_prox.shape != (k, d) or self.neg_prox.shape != (k, d):
            raise ValueError("proxy tensor shapes do not match top_hist")
        if self.action_hist.shape[0] != h:
            raise ValueError("action_hist rows != history size")
        sums = self.action_hist.sum(axis=1)
        if not np.all((np.abs(sums) < 1e-12) | (np.abs(sums - 1.0) < 1e-12)):
            raise ValueError("action_hist rows must be one-hot or zero")


def compute_proxies(catalog: Catalog, target_id: int,
                    k: int = PROXY_K) -> tuple[list[int], list[int]]:
    """The target's k nearest and k furthest feature-space neighbors."""
    if catalog.n < 2 * k + 1:
        raise ValueError(f"need at least {2 * k + 1} items for proxies, have {catalog.n}")
    return knn(catalog, target_id, k, "nearest"), knn(catalog, target_id, k, "furthest")


def encode_state(session, history: int = 3, k: int = PROXY_K,
                 n_actions: int = 3) -> SearchState:
    """Build the observation from a session's ranking and action histories.

    Sessions without a known target (pure live mode) get zero proxy blocks;
    the proxies exist only when the engine knows what it is searching for.
    """
    cat: Catalog = session.catalog
    d = cat.d
    top_hist = np.zeros((history, k, d))
    rankings = session.rankings[-history:]
    for row, ranking in enumerate(rankings):
        top_hist[row] = cat.features[top_k(ranking, k)]
    action_hist = np.zeros((history, n_actions))
    actions = session.actions_taken[-history:]
    for row, action in enumerate(actions):
        action_hist[row, int(action)] = 1.0
    if session.pos_prox is not None:
        pos = cat.features[list(session.pos_prox)]
        neg = cat.features[list(session.neg_prox)]
    else:
        pos = np.zeros((k, d))
        neg = np.zeros((k, d))
    return SearchState(top_hist=top_hist, pos_prox=pos, neg_prox=neg,
                       action_hist=action_hist)


def _mean_distance(catalog: Catalog, ids_a: list[int], ids_b: list[int]) -> float:
    mean_a = catalog.features[list(ids_a)].mean(axis=0)
    mean_b = catalog.features[list(ids_b)].mean(axis=0)
    return float(np.linalg.norm(mean_a - mean_b))


def reward(prev_top: list[int], new_top: list[int], pos_prox: list[int],
           neg_prox: list[int], catalog: Catalog, sketch_repeat: bool = False) -> int:
    """Signed progress of the top images toward the (proxy) target.

    +1 for moving the top-image centroid closer to the positive proxies,
    +1 for moving it further from the negative proxies (each may also be
    -1 or 0), and -1 on top when this was a repeated sketch request.
    """
    if not prev_top or not new_top:
        raise ValueError("top lists must be non-empty")
    d_prev_pos = _mean_distance(catalog, prev_top, pos_prox)
    d_new_pos = _mean_distance(catalog, new_top, pos_prox)
    d_prev_neg = _mean_distance(catalog, prev_top, neg_prox)
    d_new_neg = _mean_distance(catalog, new_top, neg_prox)
    r = int(np.sign(d_prev_pos - d_new_pos)) + int(np.sign(d_new_neg - d_prev_neg))
    if sketch_repeat:
        r -= 1
    return r


class ReplayMemory:
    """FIFO ring buffer of (state, next_state, action, reward, terminal)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: list[tuple] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._entries)

    def push(self, state: SearchState, next_state: SearchState, action: Action,
             reward_value: float, terminal: bool) -> None:
        entry = (state, next_state, action, reward_value, terminal)
        if len(self._entries) < self.capacity:
            self._entries.append(entry)
        else:
            self._entries[self._next] = entry
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[tuple]:
        """Uniform sample without replacement within the batch."""
        n = len(self._entries)
        if n == 0:
            raise ValueError("replay memory is empty")
        take = min(batch_size, n)
        idx = rng.choice(n, size=take, replace=False)
        return [self._entries[i] for i in idx]


def select_action(q_values: np.ndarray, epsilon: float,
                  rng: np.random.Generator | None = None) -> Action:
    """Epsilon-greedy pick; greedy ties go to the lowest action index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("epsilon > 0 requires an rng")
        if rng.random() < epsilon:
            return Action(int(rng.integers(0, len(q_values))))
    return Action(int(np.argmax(q_values)))


def epsilon_at(step: int, total_steps: int, eps_start: float = 1.0,
               eps_end: float = 0.1) -> float:
    """Linear interpolation from eps_start at step 0 to eps_end at total_steps."""
    if step < 0 or step > total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return eps_end
    frac = step / total_steps
    return eps_start + (eps_end - eps_start) * frac
