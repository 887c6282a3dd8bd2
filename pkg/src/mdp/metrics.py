"""Max-norm error (MNE) and max-norm Bellman error (MNBE).

The Bellman operator here is the standard one, r + gamma * E[max Q]. One
printed derivation of the MNE <= MNBE / (1 - gamma) relation writes it with
a minus sign; that is a typo and every other use has the plus.
"""
import logging
from dataclasses import dataclass

import numpy as np

from src.mdp.core import Mdp, QTable, bellman_optimal
from src.mdp.errors import InvalidArgumentError
from src.mdp.rng import substreams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ErrorPair:
    mne: float
    mnbe: float
    proxy_bound: float


def mne(q: QTable, q_star: QTable) -> float:
    if q.shape != q_star.shape:
        raise InvalidArgumentError(f"Q-table shapes differ: {q.shape} vs {q_star.shape}")
    return float(np.abs(q.values - q_star.values).max())


def mnbe_exact(q: QTable, mdp: Mdp) -> float:
    """max |q - T*q| with the expectation taken exactly from the model."""
    return float(np.abs(q.values - bellman_optimal(q, mdp).values).max())


def sampled_bellman_backup(
    q: QTable, mdp: Mdp, draws_per_pair: int, rng: np.random.Generator
) -> np.ndarray:
    """Empirical backup r + gamma * mean(max q(s2, .)) with s2 drawn per pair.

    Each (s, a) pair draws from its own substream of ``rng`` (row-major pair
    order), so the table does not depend on evaluation order.
    """
    q.check_matches(mdp)
    if draws_per_pair < 1:
        raise InvalidArgumentError(f"draws_per_pair must be >= 1, got {draws_per_pair}")
    next_values = q.values.max(axis=1)
    cdf = mdp.cumulative_transition
    n_states, n_actions = mdp.shape
    streams = substreams(rng, n_states * n_actions)
    means = np.empty(mdp.shape)
    for pair, stream in enumerate(streams):
        s, a = divmod(pair, n_actions)
        u = stream.random(draws_per_pair)
        nxt = np.minimum(np.searchsorted(cdf[s, a], u, side="right"), n_states - 1)
        means[s, a] = next_values[nxt].mean()
    return mdp.reward + mdp.gamma * means


def mnbe_sampled(
    q: QTable, mdp: Mdp, draws_per_pair: int, rng: np.random.Generator
) -> float:
    backup = sampled_bellman_backup(q, mdp, draws_per_pair, rng)
    return float(np.abs(q.values - backup).max())


def error_pair(q: QTable, q_star: QTable, mdp: Mdp) -> ErrorPair:
    bellman_error = mnbe_exact(q, mdp)
    return ErrorPair(
        mne=mne(q, q_star),
        mnbe=bellman_error,
        proxy_bound=bellman_error / (1.0 - mdp.gamma),
    )
