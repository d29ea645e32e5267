"""Independent stateless Q-learners, one per feature, with actions 0 (off) and 1 (on)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

INITIAL_Q = -1.0


@dataclass(frozen=True)
class LearningSchedule:
    alpha: float = 0.2
    epsilon: float = 0.15
    alpha_decay: float = 0.9995
    epsilon_decay: float = 0.9995

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        for name in ("alpha_decay", "epsilon_decay"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")


def decay(schedule: LearningSchedule) -> LearningSchedule:
    return replace(schedule, alpha=schedule.alpha * schedule.alpha_decay,
                   epsilon=schedule.epsilon * schedule.epsilon_decay)


class AgentTable:
    """Q(0), Q(1) for each of ``num_agents`` agents, all starting at -1."""

    def __init__(self, num_agents: int):
        if num_agents < 1:
            raise ValueError("need at least one agent")
        self.q = np.full((num_agents, 2), INITIAL_Q)

    @property
    def num_agents(self) -> int:
        return self.q.shape[0]

    def greedy_actions(self) -> np.ndarray:
        # ties go to action 0
        return (self.q[:, 1] > self.q[:, 0]).astype(np.int64)

    def epsilon_greedy_actions(self, epsilon: float, rng: np.random.Generator) -> np.ndarray:
        """One action per agent; the random branch draws uniformly from {0, 1}."""
        explore = rng.random(self.num_agents) < epsilon
        random_actions = rng.integers(0, 2, self.num_agents)
        return np.where(explore, random_actions, self.greedy_actions())

    def update_many(self, actions: np.ndarray, rewards, alpha: float) -> None:
        idx = np.arange(self.num_agents)
        cur = self.q[idx, actions]
        self.q[idx, actions] = cur + alpha * (np.asarray(rewards, dtype=np.float64) - cur)


def greedy_action(table: AgentTable, i: int) -> int:
    q0, q1 = table.q[i]
    return 1 if q1 > q0 else 0


def epsilon_greedy_action(table: AgentTable, i: int, schedule: LearningSchedule,
                          rng: np.random.Generator) -> int:
    if rng.random() < schedule.epsilon:
        return int(rng.integers(0, 2))
    return greedy_action(table, i)


def q_update(table: AgentTable, i: int, action: int, reward_value: float,
             schedule: LearningSchedule) -> AgentTable:
    """Q(a) <- Q(a) + alpha * (r - Q(a)) for agent ``i`` only."""
    if not np.isfinite(reward_value):
        raise ValueError("reward must be finite")
    q = table.q[i, action]
    table.q[i, action] = q + schedule.alpha * (reward_value - q)
    return table
