"""Episode rollouts and Q-network training with replay and epsilon-greedy control."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..catalog import Catalog, SplitAssignment
from ..interactions import build_pivot_trees
from ..relevance import LikelihoodParams, default_params
from ..simuser import SimulatedUser
from .core import (
    ReplayMemory,
    SearchState,
    encode_state,
    epsilon_at,
)
from .network import QNetConfig, QNetwork, RMSProp

if TYPE_CHECKING:  # import cycle: session drives episodes through this module
    from ..session import SearchSession

__all__ = [
    "TrainConfig",
    "TrainingError",
    "TrainLog",
    "derive_seed",
    "stack_states",
    "train_step",
    "run_episode",
    "pad_prs",
    "train",
]


class TrainingError(RuntimeError):
    """Raised when optimization produces non-finite values."""


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts (order matters)."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; numeric defaults documented in the README."""

    lr: float = 1e-5
    epochs: int = 30
    gamma: float = 0.9
    eps_start: float = 1.0
    eps_end: float = 0.1
    batch_size: int = 32
    replay_capacity: int = 10_000
    max_iterations: int = 10
    seed: int = 0
    episodes_per_epoch: int = 64
    train_steps_per_iteration: int = 1
    history: int = 3
    top_k: int = 5
    page_size: int = 8
    filters: int = 8
    fc1: int = 256
    fc2: int = 64
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("bad training config")
        if not (0 <= self.eps_end <= self.eps_start <= 1.0):
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")

    def qnet_config(self, d: int) -> QNetConfig:
        return QNetConfig(d=d, history=self.history, top_k=self.top_k,
                          filters=self.filters, fc1=self.fc1, fc2=self.fc2)


def stack_states(states: list[SearchState]) -> tuple[np.ndarray, ...]:
    """Batch SearchStates into the four arrays the network consumes."""
    d = states[0].top_hist.shape[-1]
    top = np.stack([s.top_hist.reshape(-1, d) for s in states])
    pos = np.stack([s.pos_prox for s in states])
    neg = np.stack([s.neg_prox for s in states])
    act = np.stack([s.action_hist.reshape(-1) for s in states])
    return top, pos, neg, act


def train_step(net: QNetwork, optimizer: RMSProp, batch: list[tuple],
               gamma: float) -> float:
    """One Q-learning update on a replay batch; returns the squared-error loss."""
    if not batch:
        raise ValueError("batch must be non-empty")
    states, next_states, actions, rewards, terminals = zip(*batch)
    a = np.array([int(x) for x in actions])
    r = np.array(rewards, dtype=np.float64)
    term = np.array(terminals, dtype=bool)

    q_next = net.forward(*stack_states(list(next_states)))
    targets = r + gamma * q_next.max(axis=1) * (~term)
    q, cache = net.forward(*stack_states(list(states)), want_cache=True)
    idx = np.arange(len(batch))
    err = q[idx, a] - targets
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise TrainingError(
            f"non-finite loss {loss}; q range [{q.min()}, {q.max()}], "
            f"targets range [{targets.min()}, {targets.max()}]"
        )
    d_q = np.zeros_like(q)
    d_q[idx, a] = 2.0 * err / len(batch)
    grads = net.backward(cache, d_q)
    optimizer.step(net.params, grads)
    return loss


def run_episode(policy, session: SearchSession, user: SimulatedUser,
                max_iterations: int = 10, history: int = 3, top_k: int = 5,
                on_transition=None) -> tuple[list[tuple], bool]:
    """Roll one search to success or the iteration cap.

    Returns (trajectory, success) where the trajectory holds one
    (state, action, reward, percentile_rank) tuple per committed iteration.
    ``on_transition(state, next_state, action, reward, terminal)`` fires after
    every iteration; training uses it to feed the replay memory.
    """
    trajectory: list[tuple] = []
    session.max_iterations = max_iterations
    while not session.finished:
        state = encode_state(session, history, top_k)
        action = policy.select(session, state)
        request = session.begin(action)
        if request.kind.value == "freeform":
            attr, ref, pol = user.choose_freeform(session.displayed_page())
            record = session.apply_freeform(attr, ref, pol)
        elif request.kind.value == "question":
            response = user.answer_question(request.attr, request.pivot_id)
            record = session.apply_answer(response)
        else:
            record = session.apply_sketch(user.produce_sketch())
        next_state = encode_state(session, history, top_k)
        terminal = session.finished
        trajectory.append((state, record.action, record.reward, record.pr))
        if on_transition is not None:
            on_transition(state, next_state, record.action, record.reward, terminal)
    return trajectory, session.succeeded


def pad_prs(trajectory: list[tuple], max_iterations: int) -> list[float]:
    """Per-iteration percentile ranks, carrying the final rank past success."""
    prs = [float(step[3]) for step in trajectory]
    if not prs:
        raise ValueError("empty trajectory")
    return prs + [prs[-1]] * (max_iterations - len(prs))


@dataclass
class TrainLog:
    """Per-epoch training record plus which epoch's weights were kept."""

    epochs: list[dict] = field(default_factory=list)
    selected_epoch: int = -1

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["epoch", "mean_loss", "val_successes", "val_auc"])
        for row in self.epochs:
            writer.writerow([row["epoch"], repr(row["mean_loss"]),
                             row["val_successes"], repr(row["val_auc"])])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def _validate(net: QNetwork, catalog: Catalog, val_ids, params: LikelihoodParams,
              user_factory, cfg: TrainConfig, trees=None) -> tuple[int, float]:
    from ..policies import RLPolicy
    from ..session import SearchSession

    policy = RLPolicy(net, epsilon=0.0)
    successes = 0
    aucs = []
    for target in val_ids:
        session = SearchSession(catalog, params, target_id=target,
                                page_size=cfg.page_size, max_iterations=cfg.max_iterations,
                                trees=trees)
        trajectory, success = run_episode(policy, session, user_factory(target),
                                          cfg.max_iterations, cfg.history, cfg.top_k)
        successes += int(success)
        aucs.append(float(np.mean(pad_prs(trajectory, cfg.max_iterations))))
    return successes, float(np.mean(aucs))


def train(catalog: Catalog, split_assignment: SplitAssignment, cfg: TrainConfig,
          params: LikelihoodParams | None = None, user_factory=None,
          progress=None) -> tuple[QNetwork, TrainLog]:
    """Full training run: epsilon-greedy episodes, replay updates, validation selection.

    ``user_factory(target_id, role_seed)`` builds the simulated user for an
    episode; by default UserNoise() users at the documented noise scales. The
    checkpoint kept is the epoch with the most validation successes, ties
    broken by higher validation percentile-rank AUC, then by earlier epoch.
    Deterministic for a fixed config.
    """
    from ..policies import RLPolicy
    from ..session import SearchSession
    from ..simuser import UserNoise

    if params is None:
        params = default_params(catalog)
    if user_factory is None:
        noise = UserNoise()

        def user_factory(target_id: int, role_seed: int) -> SimulatedUser:
            return noise.make_user(catalog, target_id, role_seed)

    train_ids = list(split_assignment.train)
    val_ids = list(split_assignment.val)
    if not train_ids or not val_ids:
        raise ValueError("train and val splits must be non-empty")

    rng = np.random.default_rng([cfg.seed, 0x7EA1])
    train_user_seed = derive_seed(cfg.seed, 101)
    val_user_seed = derive_seed(cfg.seed, 102)
    trees = build_pivot_trees(catalog)  # immutable, shared by every session

    net = QNetwork(cfg.qnet_config(catalog.d), seed=cfg.seed)
    optimizer = RMSProp(cfg.lr, cfg.rmsprop_decay, cfg.rmsprop_eps)
    replay = ReplayMemory(cfg.replay_capacity)
    losses_this_epoch: list[float] = []

    def on_transition(state, next_state, action, reward_value, terminal):
        replay.push(state, next_state, action, reward_value, terminal)
        if len(replay) >= cfg.batch_size:
            for _ in range(cfg.train_steps_per_iteration):
                batch = replay.sample(cfg.batch_size, rng)
                losses_this_epoch.append(train_step(net, optimizer, batch, cfg.gamma))

    total_episodes = cfg.epochs * cfg.episodes_per_epoch
    log = TrainLog()
    best: tuple[tuple[int, float, int], dict] | None = None
    episode_index = 0
    for epoch in range(1, cfg.epochs + 1):
        losses_this_epoch.clear()
        picks = rng.choice(len(train_ids), size=cfg.episodes_per_epoch,
                           replace=cfg.episodes_per_epoch > len(train_ids))
        for pick in picks:
            target = train_ids[int(pick)]
            eps = epsilon_at(episode_index, max(total_episodes - 1, 1),
                             cfg.eps_start, cfg.eps_end)
            session = SearchSession(catalog, params, target_id=target,
                                    page_size=cfg.page_size,
                                    max_iterations=cfg.max_iterations, trees=trees)
            policy = RLPolicy(net, epsilon=eps, rng=rng)
            run_episode(policy, session, user_factory(target, train_user_seed),
                        cfg.max_iterations, cfg.history, cfg.top_k,
                        on_transition=on_transition)
            episode_index += 1

        val_successes, val_auc = _validate(
            net, catalog, val_ids, params,
            lambda t: user_factory(t, val_user_seed), cfg, trees=trees)
        mean_loss = float(np.mean(losses_this_epoch)) if losses_this_epoch else float("nan")
        log.epochs.append({"epoch": epoch, "mean_loss": mean_loss,
                           "val_successes": val_successes, "val_auc": val_auc})
        # bigger is better; -epoch breaks exact ties toward the earlier epoch
        score = (val_successes, val_auc, -epoch)
        if best is None or score > best[0]:
            best = (score, net.copy_params())
            log.selected_epoch = epoch
        if progress is not None:
            progress(epoch, mean_loss, val_successes, val_auc)

    assert best is not None
    net.load_params(best[1])
    return net, log


def save_checkpoint(net: QNetwork, path: str | Path, cfg: TrainConfig,
                    log: TrainLog) -> None:
    net.save(path, extra={"train_config": asdict(cfg),
                          "selected_epoch": log.selected_epoch})
