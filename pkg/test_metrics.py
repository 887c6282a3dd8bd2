import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from src.mdp.core import Mdp, QTable, bellman_optimal
from src.mdp.errors import InvalidArgumentError
from src.mdp.generators import random_mdp
from src.mdp.metrics import error_pair, mnbe_exact, mnbe_sampled, mne, sampled_bellman_backup
from src.mdp.oracle import solve_q_star
from src.mdp.rng import make_rng

TOL = 1e-10


@pytest.fixture
def mdp():
    return random_mdp(5, 2, 0.9, make_rng(4, "metrics"))


def deterministic_mdp(n_states, n_actions, gamma, rng):
    transition = np.zeros((n_states, n_actions, n_states))
    targets = rng.integers(0, n_states, size=(n_states, n_actions))
    for s in range(n_states):
        for a in range(n_actions):
            transition[s, a, targets[s, a]] = 1.0
    return Mdp(transition=transition, reward=rng.random((n_states, n_actions)), gamma=gamma)


def test_mne_identity(mdp):
    q_star = solve_q_star(mdp, TOL).q_star
    assert mne(q_star, q_star) == 0


def test_mne_constant_offset(mdp):
    q_star = solve_q_star(mdp, TOL).q_star
    assert mne(QTable(q_star.values + 0.3), q_star) == pytest.approx(0.3)


def test_mne_matches_scan():
    rng = make_rng(0, "mne-scan")
    q1, q2 = rng.normal(size=(4, 6)), rng.normal(size=(4, 6))
    expected = 0.0
    for s in range(4):
        for a in range(6):
            expected = max(expected, abs(q1[s, a] - q2[s, a]))
    assert mne(QTable(q1), QTable(q2)) == expected


def test_mne_rejects_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        mne(QTable(np.zeros((2, 2))), QTable(np.zeros((2, 3))))


def test_mnbe_at_q_star(mdp):
    q_star = solve_q_star(mdp, TOL).q_star
    assert mnbe_exact(q_star, mdp) <= (1 + mdp.gamma) * TOL


def test_mnbe_zero_table_unit_rewards(mdp):
    ones = Mdp(transition=mdp.transition, reward=np.ones(mdp.shape), gamma=mdp.gamma)
    assert mnbe_exact(QTable.zeros(ones), ones) == 1.0


def test_mnbe_matches_composed_scan(mdp):
    q = QTable(make_rng(1, "mnbe").uniform(0, 10, size=mdp.shape))
    assert mnbe_exact(q, mdp) == mne(q, bellman_optimal(q, mdp))


def test_mnbe_rejects_shape_mismatch(mdp):
    with pytest.raises(InvalidArgumentError):
        mnbe_exact(QTable(np.zeros((2, 2))), mdp)


def test_sampled_equals_exact_without_noise():
    rng = make_rng(2, "deterministic")
    mdp = deterministic_mdp(6, 3, 0.8, rng)
    q = QTable(rng.uniform(0, 5, size=mdp.shape))
    for draws in (1, 7):
        assert mnbe_sampled(q, mdp, draws, make_rng(draws)) == pytest.approx(
            mnbe_exact(q, mdp), rel=1e-12, abs=1e-12
        )


def test_sampled_concentrates(mdp):
    q = QTable(make_rng(3, "q").uniform(0, 10, size=mdp.shape))
    estimate = mnbe_sampled(q, mdp, 100_000, make_rng(3, "draws"))
    assert abs(estimate - mnbe_exact(q, mdp)) <= 0.01


def test_sampled_backup_is_unbiased(mdp):
    q = QTable(make_rng(5, "q").uniform(0, 1, size=mdp.shape))
    rng = make_rng(5, "repeats")
    repeats = 10_000
    total = np.zeros(mdp.shape)
    for _ in range(repeats):
        total += sampled_bellman_backup(q, mdp, 1, rng)
    np.testing.assert_allclose(total / repeats, bellman_optimal(q, mdp).values, atol=0.01)


def test_sampled_backup_is_reproducible(mdp):
    q = QTable(make_rng(6, "q").uniform(0, 1, size=mdp.shape))
    first = sampled_bellman_backup(q, mdp, 5, make_rng(6, "draws"))
    second = sampled_bellman_backup(q, mdp, 5, make_rng(6, "draws"))
    assert np.array_equal(first, second)


def test_sampled_rejects_zero_draws(mdp):
    with pytest.raises(InvalidArgumentError):
        mnbe_sampled(QTable.zeros(mdp), mdp, 0, make_rng(0))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.floats(0.1, 0.95), st.integers(0, 2**32 - 1))
def test_proxy_relation(n_states, n_actions, gamma, seed):
    mdp = random_mdp(n_states, n_actions, gamma, make_rng(seed, "proxy-mdp"))
    q_star = solve_q_star(mdp, TOL).q_star
    q = QTable(make_rng(seed, "proxy-q").uniform(0, 1 / (1 - gamma), size=mdp.shape))
    pair = error_pair(q, q_star, mdp)
    assert pair.mne <= pair.proxy_bound + 2 * TOL
    # reverse direction from the contraction
    assert pair.mnbe <= (1 + gamma) * pair.mne + 2 * TOL


def test_error_pair_fields(mdp):
    q_star = solve_q_star(mdp, TOL).q_star
    q = QTable.zeros(mdp)
    pair = error_pair(q, q_star, mdp)
    assert pair.mne == mne(q, q_star)
    assert pair.mnbe == mnbe_exact(q, mdp)
    assert pair.proxy_bound == pytest.approx(pair.mnbe / (1 - mdp.gamma))
