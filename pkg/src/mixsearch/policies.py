"""Action policies: the trained arbiter and the three fixed baselines."""

from __future__ import annotations

import numpy as np

from .agent.core import Action, SearchState, select_action
from .agent.network import QNetwork

__all__ = ["Policy", "RLPolicy", "WSPolicy", "PRRPolicy", "SKPRRPolicy", "make_policy"]


class Policy:
    name: str = "?"

    def select(self, session, state: SearchState) -> Action:
        raise NotImplementedError


class WSPolicy(Policy):
    """Free-form comparative feedback every iteration."""

    name = "WS"

    def select(self, session, state: SearchState) -> Action:
        return Action.FREEFORM


class PRRPolicy(Policy):
    """Pivot questions every iteration, round-robin over attributes."""

    name = "PRR"

    def select(self, session, state: SearchState) -> Action:
        return Action.QUESTION


class SKPRRPolicy(Policy):
    """A sketch on the first iteration, pivot questions afterwards."""

    name = "SK_PRR"

    def select(self, session, state: SearchState) -> Action:
        return Action.SKETCH if session.iteration == 0 else Action.QUESTION


class RLPolicy(Policy):
    """Q-network arbiter; epsilon > 0 mixes in uniform exploration."""

    name = "RL"

    def __init__(self, net: QNetwork, epsilon: float = 0.0,
                 rng: np.random.Generator | None = None):
        self.net = net
        self.epsilon = epsilon
        self.rng = rng

    def q_values(self, state: SearchState) -> np.ndarray:
        d = self.net.config.d
        q = self.net.forward(
            state.top_hist.reshape(1, -1, d),
            state.pos_prox[None, :, :],
            state.neg_prox[None, :, :],
            state.action_hist.reshape(1, -1),
        )
        return q[0]

    def select(self, session, state: SearchState) -> Action:
        return select_action(self.q_values(state), self.epsilon, self.rng)


def make_policy(kind: str, net: QNetwork | None = None) -> Policy:
    kind = kind.upper()
    if kind == "RL":
        if net is None:
            raise ValueError("RL policy needs a trained network")
        return RLPolicy(net)
    table = {"WS": WSPolicy, "PRR": PRRPolicy, "SK_PRR": SKPRRPolicy}
    if kind not in table:
        raise ValueError(f"unknown policy {kind!r} (expected RL|WS|PRR|SK_PRR)")
    return table[kind]()
