"""The per-search engine: one target hunt, at most a handful of iterations.

A session owns the relevance state, the pivot-tree cursors and the ranking /
action histories. Both the offline episode runner and the HTTP service drive
searches exclusively through this class, which is what makes offline and
online transcripts bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agent.core import Action, compute_proxies, reward as compute_reward
from .catalog import Catalog
from .interactions import (
    InteractionKind,
    InteractionRequest,
    RoundRobinState,
    build_pivot_trees,
    descend,
    next_question,
    question_to_constraint,
)
from .relevance import (
    AttributeCompare,
    LikelihoodParams,
    Polarity,
    RelevanceState,
    Sketch,
    percentile_rank,
    rank,
    top_k,
    update_relevance,
)

__all__ = ["IterationRecord", "SearchSession"]

PAGE_SIZE = 8


@dataclass(frozen=True)
class IterationRecord:
    """What one feedback iteration did to the session."""

    iteration: int
    action: Action
    request: InteractionRequest
    constraint: AttributeCompare | Sketch
    top_page: tuple[int, ...]
    reward: int | None
    pr: float | None
    success: bool


class SearchSession:
    """State machine for one search.

    The flow each iteration is: the caller picks an Action, asks for the
    matching InteractionRequest via begin(), gathers the feedback (from a
    simulated or live user) and commits it via one of the apply_* methods.
    Histories advance only on commit.
    """

    def __init__(self, catalog: Catalog, params: LikelihoodParams,
                 target_id: int | None = None, page_size: int = PAGE_SIZE,
                 max_iterations: int = 10, trees=None):
        self.catalog = catalog
        self.params = params
        self.page_size = min(page_size, catalog.n)
        self.max_iterations = max_iterations
        self.trees = trees if trees is not None else build_pivot_trees(catalog)
        self.rr = RoundRobinState(self.trees)
        self.relevance = RelevanceState.fresh(catalog.n)
        self.rankings: list[list[int]] = [rank(self.relevance)]
        self.actions_taken: list[Action] = []
        self.records: list[IterationRecord] = []
        self.sketch_count = 0
        self.target_id = target_id
        if target_id is not None:
            self.pos_prox, self.neg_prox = compute_proxies(catalog, target_id)
        else:
            self.pos_prox, self.neg_prox = None, None
        self._pending: tuple[Action, InteractionRequest] | None = None

    # ----- observable state -----

    @property
    def iteration(self) -> int:
        """Number of committed feedback iterations so far."""
        return len(self.actions_taken)

    @property
    def ranking(self) -> list[int]:
        return self.rankings[-1]

    def displayed_page(self) -> list[int]:
        return top_k(self.ranking, self.page_size)

    @property
    def finished(self) -> bool:
        return self.succeeded or self.iteration >= self.max_iterations

    @property
    def succeeded(self) -> bool:
        return bool(self.records) and self.records[-1].success

    def current_pr(self) -> float | None:
        if self.target_id is None:
            return None
        return percentile_rank(self.ranking, self.target_id)

    # ----- the ask/answer cycle -----

    def begin(self, action: Action) -> InteractionRequest:
        """Turn the chosen action into a concrete request for the user.

        A Question with every pivot tree exhausted falls back to a free-form
        request: the engine hands the initiative back to the user when it has
        nothing left to ask. The pending request is sticky until committed.
        """
        if self.finished:
            raise RuntimeError("session is finished")
        if self._pending is not None:
            return self._pending[1]
        if action is Action.QUESTION:
            q = next_question(self.rr)
            if q is None:
                request = InteractionRequest(kind=InteractionKind.FREEFORM)
                action = Action.FREEFORM
            else:
                request = InteractionRequest(kind=InteractionKind.QUESTION,
                                             attr=q[0], pivot_id=q[1])
        elif action is Action.FREEFORM:
            request = InteractionRequest(kind=InteractionKind.FREEFORM)
        elif action is Action.SKETCH:
            request = InteractionRequest(kind=InteractionKind.SKETCH)
        else:
            raise ValueError(f"unknown action {action!r}")
        self._pending = (action, request)
        return request

    @property
    def pending(self) -> tuple[Action, InteractionRequest] | None:
        return self._pending

    def apply_freeform(self, attr: int, ref_id: int, polarity: Polarity) -> IterationRecord:
        action, request = self._expect(InteractionKind.FREEFORM)
        constraint = AttributeCompare(attr=attr, ref_id=ref_id, polarity=polarity)
        return self._commit(action, request, constraint, sketch_repeat=False)

    def apply_answer(self, response: Polarity) -> IterationRecord:
        action, request = self._expect(InteractionKind.QUESTION)
        assert request.attr is not None and request.pivot_id is not None
        descend(self.rr, request.attr, response)
        constraint = question_to_constraint(request.attr, request.pivot_id, response)
        return self._commit(action, request, constraint, sketch_repeat=False)

    def apply_sketch(self, embedding: np.ndarray) -> IterationRecord:
        action, request = self._expect(InteractionKind.SKETCH)
        repeat = self.sketch_count >= 1
        self.sketch_count += 1
        return self._commit(action, request, Sketch(embedding), sketch_repeat=repeat)

    def _expect(self, kind: InteractionKind) -> tuple[Action, InteractionRequest]:
        if self._pending is None:
            raise RuntimeError("no pending request; call begin() first")
        action, request = self._pending
        if request.kind is not kind:
            raise ValueError(f"pending request is {request.kind.value}, got {kind.value} feedback")
        return action, request

    def _commit(self, action: Action, request: InteractionRequest,
                constraint: AttributeCompare | Sketch, sketch_repeat: bool) -> IterationRecord:
        prev_top = self.displayed_page()
        self.relevance = update_relevance(self.relevance, constraint, self.catalog, self.params)
        new_ranking = rank(self.relevance)
        self.rankings.append(new_ranking)
        self.actions_taken.append(action)
        self._pending = None
        new_top = self.displayed_page()
        if self.target_id is not None:
            r = compute_reward(prev_top, new_top, self.pos_prox, self.neg_prox,
                               self.catalog, sketch_repeat)
            pr = percentile_rank(new_ranking, self.target_id)
            success = self.target_id in new_top
        else:
            r, pr, success = None, None, False
        record = IterationRecord(
            iteration=self.iteration,
            action=action,
            request=request,
            constraint=constraint,
            top_page=tuple(new_top),
            reward=r,
            pr=pr,
            success=success,
        )
        self.records.append(record)
        return record
