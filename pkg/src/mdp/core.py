import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from src.mdp.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12


def _frozen_array(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Mdp:
    """Finite discounted MDP with a dense transition tensor.

    ``transition[s, a, s2]`` is P(s2 | s, a) and ``reward[s, a]`` is r(s, a).
    Instances are immutable: both arrays are read-only copies.
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float

    def __post_init__(self):
        transition = _frozen_array(self.transition, "transition")
        reward = _frozen_array(self.reward, "reward")
        if reward.ndim != 2 or reward.shape[0] < 1 or reward.shape[1] < 1:
            raise InvalidArgumentError(
                f"reward must be a non-empty (states, actions) table, got shape {reward.shape}"
            )
        n_states, n_actions = reward.shape
        if transition.shape != (n_states, n_actions, n_states):
            raise InvalidArgumentError(
                f"transition shape {transition.shape} does not match reward shape {reward.shape}"
            )
        if np.any(transition < 0):
            raise InvalidArgumentError("transition has negative probabilities")
        row_error = np.abs(transition.sum(axis=2) - 1.0).max()
        if row_error > ROW_SUM_TOL:
            raise InvalidArgumentError(
                f"transition rows must sum to 1 (worst deviation {row_error:.3e})"
            )
        if np.any(reward < 0) or np.any(reward > 1):
            raise InvalidArgumentError("rewards must lie in [0, 1]")
        gamma = float(self.gamma)
        if not 0.0 < gamma < 1.0:
            raise InvalidArgumentError(f"gamma must lie in (0, 1), got {gamma}")

        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def build(cls, transition, reward, gamma: float, renormalize: bool = False) -> "Mdp":
        """Construct an MDP, optionally dividing each transition row by its sum.

        Renormalization is only for code paths that mix or perturb rows and
        accumulate rounding; ordinary construction validates rows as given.
        """
        transition = np.asarray(transition, dtype=np.float64)
        if renormalize:
            sums = transition.sum(axis=-1, keepdims=True)
            if np.any(sums <= 0):
                raise InvalidArgumentError("cannot renormalize an all-zero transition row")
            transition = transition / sums
        return cls(transition=transition, reward=reward, gamma=gamma)

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_actions(self) -> int:
        return self.reward.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.reward.shape

    @cached_property
    def cumulative_transition(self) -> np.ndarray:
        """Row-wise CDF of the transition tensor, used for inverse-CDF sampling."""
        cdf = np.cumsum(self.transition, axis=2)
        cdf.flags.writeable = False
        return cdf

    @cached_property
    def offset_cdf(self) -> np.ndarray:
        """Flattened CDF with row k = s * A + a shifted up by k.

        Entries are capped at 1 before shifting so rows never overlap and the
        whole array stays sorted for a single ``searchsorted``.
        """
        n_rows = self.n_states * self.n_actions
        capped = np.minimum(self.cumulative_transition.reshape(n_rows, self.n_states), 1.0)
        offset = (capped + np.arange(n_rows)[:, None]).ravel()
        offset.flags.writeable = False
        return offset


@dataclass(frozen=True, eq=False)
class QTable:
    """State-action value table; every operator returns a new instance."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, "Q-table")
        if values.ndim != 2:
            raise InvalidArgumentError(f"Q-table must be 2-dimensional, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mdp: Mdp) -> "QTable":
        return cls(np.zeros(mdp.shape))

    @classmethod
    def constant(cls, mdp: Mdp, value: float) -> "QTable":
        return cls(np.full(mdp.shape, float(value)))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def check_matches(self, mdp: Mdp) -> None:
        """Raise ``InvalidArgumentError`` unless the table fits ``mdp``."""
        if self.values.shape != mdp.shape:
            raise InvalidArgumentError(
                f"Q-table shape {self.values.shape} does not match MDP shape {mdp.shape}"
            )


def bellman_optimal(q: QTable, mdp: Mdp) -> QTable:
    """Apply the optimal Bellman operator exactly using the model.

    (T*q)(s, a) = r(s, a) + gamma * sum_s2 P(s2 | s, a) * max_a2 q(s2, a2)
    """
    q.check_matches(mdp)
    next_values = q.values.max(axis=1)
    return QTable(mdp.reward + mdp.gamma * (mdp.transition @ next_values))


def _check_pair(mdp: Mdp, s: int, a: int) -> None:
    if not 0 <= s < mdp.n_states:
        raise InvalidArgumentError(f"state {s} out of range [0, {mdp.n_states})")
    if not 0 <= a < mdp.n_actions:
        raise InvalidArgumentError(f"action {a} out of range [0, {mdp.n_actions})")


def sample_next_state(mdp: Mdp, s: int, a: int, rng: np.random.Generator) -> int:
    """Draw s2 ~ P(. | s, a) by inverse CDF from one uniform of ``rng``."""
    _check_pair(mdp, s, a)
    u = rng.random()
    index = int(np.searchsorted(mdp.cumulative_transition[s, a], u, side="right"))
    return min(index, mdp.n_states - 1)


def sample_next_states(mdp: Mdp, rng: np.random.Generator) -> np.ndarray:
    """Draw one next state for every (s, a) pair.

    Consumes exactly ``n_states * n_actions`` uniforms from ``rng`` in
    row-major (s, a) order; pair (s, a) uses the same inverse-CDF rule as
    ``sample_next_state``.
    """
    u = rng.random(mdp.shape)
    rows = np.arange(u.size).reshape(mdp.shape)
    # u < 1, so row k of the shifted CDF only competes with u + k
    index = np.searchsorted(mdp.offset_cdf, u + rows, side="right") - rows * mdp.n_states
    return np.minimum(index, mdp.n_states - 1)


def greedy_max(q: QTable, s: int) -> Tuple[int, float]:
    """Return (argmax action, max value) at state ``s``; ties go to the lowest action."""
    if not 0 <= s < q.shape[0]:
        raise InvalidArgumentError(f"state {s} out of range [0, {q.shape[0]})")
    row = q.values[s]
    action = int(np.argmax(row))
    return action, float(row[action])
