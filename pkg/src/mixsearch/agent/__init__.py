"""The reinforcement-learning arbiter: states, rewards, network, training."""

from .core import (
    Action,
    ReplayMemory,
    SearchState,
    compute_proxies,
    encode_state,
    epsilon_at,
    reward,
    select_action,
)
from .network import QNetConfig, QNetwork, RMSProp, gradient_check
from .training import (
    TrainConfig,
    TrainingError,
    TrainLog,
    derive_seed,
    pad_prs,
    run_episode,
    save_checkpoint,
    stack_states,
    train,
    train_step,
)

__all__ = [
    "Action",
    "ReplayMemory",
    "SearchState",
    "compute_proxies",
    "encode_state",
    "epsilon_at",
    "reward",
    "select_action",
    "QNetConfig",
    "QNetwork",
    "RMSProp",
    "gradient_check",
    "TrainConfig",
    "TrainingError",
    "TrainLog",
    "derive_seed",
    "pad_prs",
    "run_episode",
    "save_checkpoint",
    "stack_states",
    "train",
    "train_step",
]
