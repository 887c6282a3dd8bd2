import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from src.mdp.core import Mdp, QTable, bellman_optimal, greedy_max, sample_next_state, sample_next_states
from src.mdp.errors import InvalidArgumentError
from src.mdp.generators import random_mdp
from src.mdp.oracle import solve_q_star
from src.mdp.rng import make_rng


@pytest.fixture
def single_state():
    return Mdp(transition=[[[1.0]]], reward=[[0.5]], gamma=0.5)


@pytest.fixture
def small_mdp():
    return random_mdp(5, 3, 0.9, make_rng(11, "core"))


def test_bellman_zero_table_single_state(single_state):
    out = bellman_optimal(QTable.zeros(single_state), single_state)
    assert out.values.tolist() == [[0.5]]


def test_bellman_matches_triple_loop(small_mdp):
    rng = make_rng(11, "q")
    q = QTable(rng.uniform(0, 10, size=small_mdp.shape))
    out = bellman_optimal(q, small_mdp)
    n_states, n_actions = small_mdp.shape
    for s in range(n_states):
        for a in range(n_actions):
            expected = small_mdp.reward[s, a]
            for s2 in range(n_states):
                expected += small_mdp.gamma * small_mdp.transition[s, a, s2] * max(q.values[s2])
            assert out.values[s, a] == pytest.approx(expected, rel=1e-12)


def test_bellman_fixed_point(small_mdp):
    tol = 1e-10
    q_star = solve_q_star(small_mdp, tol).q_star
    out = bellman_optimal(q_star, small_mdp)
    assert np.abs(out.values - q_star.values).max() <= (1 + small_mdp.gamma) * tol


def test_bellman_rejects_shape_mismatch(small_mdp):
    with pytest.raises(InvalidArgumentError):
        bellman_optimal(QTable(np.zeros((4, 3))), small_mdp)


CONTRACTION_EXAMPLES = settings(max_examples=100, deadline=None)


@CONTRACTION_EXAMPLES
@given(st.integers(1, 20), st.integers(1, 20), st.floats(0.05, 0.99), st.integers(0, 2**32 - 1))
def test_bellman_contraction(n_states, n_actions, gamma, seed):
    mdp = random_mdp(n_states, n_actions, gamma, make_rng(seed, "contraction-mdp"))
    rng = make_rng(seed, "contraction-q")
    q1 = QTable(rng.uniform(-5, 5, size=mdp.shape))
    q2 = QTable(rng.uniform(-5, 5, size=mdp.shape))
    lhs = np.abs(bellman_optimal(q1, mdp).values - bellman_optimal(q2, mdp).values).max()
    rhs = mdp.gamma * np.abs(q1.values - q2.values).max()
    assert lhs <= rhs + 1e-12


@CONTRACTION_EXAMPLES
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.05, 0.99), st.integers(0, 2**32 - 1))
def test_bellman_monotone(n_states, n_actions, gamma, seed):
    mdp = random_mdp(n_states, n_actions, gamma, make_rng(seed, "monotone-mdp"))
    rng = make_rng(seed, "monotone-q")
    q1 = rng.uniform(0, 5, size=mdp.shape)
    q2 = q1 + rng.uniform(0, 1, size=mdp.shape)
    t1 = bellman_optimal(QTable(q1), mdp).values
    t2 = bellman_optimal(QTable(q2), mdp).values
    assert np.all(t1 <= t2 + 1e-12)


@CONTRACTION_EXAMPLES
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.05, 0.99), st.integers(0, 2**32 - 1))
def test_bellman_keeps_reward_range(n_states, n_actions, gamma, seed):
    mdp = random_mdp(n_states, n_actions, gamma, make_rng(seed, "range-mdp"))
    upper = 1.0 / (1.0 - mdp.gamma)
    out = bellman_optimal(QTable(make_rng(seed, "range-q").uniform(0, upper, size=mdp.shape)), mdp)
    assert out.values.min() >= 0
    assert out.values.max() <= upper * (1 + 1e-12)


@pytest.mark.parametrize(
    "transition, reward, gamma",
    [
        ([[[0.5, 0.6]], [[1.0, 0.0]]], [[0.1], [0.2]], 0.9),
        ([[[1.5, -0.5]], [[1.0, 0.0]]], [[0.1], [0.2]], 0.9),
        ([[[1.0, 0.0]], [[1.0, 0.0]]], [[1.1], [0.2]], 0.9),
        ([[[1.0, 0.0]], [[1.0, 0.0]]], [[0.1], [0.2]], 1.0),
        ([[[1.0, 0.0]], [[1.0, 0.0]]], [[0.1], [0.2]], 0.0),
        ([[[1.0, 0.0]]], [[0.1], [0.2]], 0.9),
        ([[[np.nan, 1.0]], [[1.0, 0.0]]], [[0.1], [0.2]], 0.9),
    ],
)
def test_mdp_rejects_invalid_parameters(transition, reward, gamma):
    with pytest.raises(InvalidArgumentError):
        Mdp(transition=transition, reward=reward, gamma=gamma)


def test_mdp_build_renormalizes_only_when_asked():
    transition = [[[2.0, 2.0]], [[1.0, 3.0]]]
    with pytest.raises(InvalidArgumentError):
        Mdp.build(transition, [[0.1], [0.2]], 0.9)
    mdp = Mdp.build(transition, [[0.1], [0.2]], 0.9, renormalize=True)
    assert mdp.transition[1, 0].tolist() == [0.25, 0.75]


def test_mdp_arrays_are_read_only(small_mdp):
    with pytest.raises(ValueError):
        small_mdp.reward[0, 0] = 0.3
    q = QTable.zeros(small_mdp)
    with pytest.raises(ValueError):
        q.values[0, 0] = 1.0


def test_mdp_keeps_a_private_copy():
    reward = np.array([[0.1], [0.2]])
    mdp = Mdp(transition=[[[1.0, 0.0]], [[0.0, 1.0]]], reward=reward, gamma=0.9)
    reward[0, 0] = 0.9
    assert mdp.reward[0, 0] == 0.1


def test_qtable_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        QTable(np.array([[0.0, np.inf]]))


def test_sample_deterministic_row():
    transition = np.zeros((5, 1, 5))
    transition[:, 0, 3] = 1.0
    mdp = Mdp(transition=transition, reward=np.zeros((5, 1)), gamma=0.9)
    rng = make_rng(0, "deterministic")
    assert {sample_next_state(mdp, 0, 0, rng) for _ in range(200)} == {3}


def test_sample_uniform_row_frequencies():
    transition = np.full((4, 1, 4), 0.25)
    mdp = Mdp(transition=transition, reward=np.zeros((4, 1)), gamma=0.9)
    rng = make_rng(0, "uniform")
    draws = np.array([sample_next_state(mdp, 2, 0, rng) for _ in range(100_000)])
    freqs = np.bincount(draws, minlength=4) / draws.size
    assert np.all(np.abs(freqs - 0.25) <= 0.01)


def test_sample_same_seed_same_sequence(small_mdp):
    rng_a, rng_b = make_rng(5, "seq"), make_rng(5, "seq")
    seq_a = [sample_next_state(small_mdp, 1, 2, rng_a) for _ in range(50)]
    seq_b = [sample_next_state(small_mdp, 1, 2, rng_b) for _ in range(50)]
    assert seq_a == seq_b


@pytest.mark.parametrize("s, a", [(-1, 0), (5, 0), (0, 3), (0, -1)])
def test_sample_rejects_bad_index(small_mdp, s, a):
    with pytest.raises(InvalidArgumentError):
        sample_next_state(small_mdp, s, a, make_rng(0))


def test_batch_sampling_matches_single_draws(small_mdp):
    batch = sample_next_states(small_mdp, make_rng(9, "batch"))
    rng = make_rng(9, "batch")
    n_states, n_actions = small_mdp.shape
    single = [[sample_next_state(small_mdp, s, a, rng) for a in range(n_actions)] for s in range(n_states)]
    assert batch.tolist() == single


def test_batch_sampling_at_experiment_scale():
    mdp = random_mdp(50, 50, 0.9, make_rng(3, "scale"))
    u = make_rng(3, "draws").random(mdp.shape)
    expected = np.minimum((mdp.cumulative_transition <= u[..., None]).sum(axis=2), mdp.n_states - 1)
    assert np.array_equal(sample_next_states(mdp, make_rng(3, "draws")), expected)


def test_batch_sampling_handles_point_masses():
    transition = np.zeros((3, 2, 3))
    transition[:, 0, 0] = 1.0
    transition[:, 1, 2] = 1.0
    mdp = Mdp(transition=transition, reward=np.zeros((3, 2)), gamma=0.5)
    for seed in range(5):
        draws = sample_next_states(mdp, make_rng(seed, "mass"))
        assert draws[:, 0].tolist() == [0, 0, 0]
        assert draws[:, 1].tolist() == [2, 2, 2]


def test_greedy_max_tie_breaks_low():
    q = QTable(np.array([[0.2, 0.9, 0.9], [0.4, 0.4, 0.4]]))
    assert greedy_max(q, 0) == (1, 0.9)
    assert greedy_max(q, 1) == (0, 0.4)


def test_greedy_max_matches_scan():
    rng = make_rng(3, "greedy")
    q = QTable(rng.normal(size=(6, 7)))
    for s in range(6):
        best_a, best_v = 0, q.values[s, 0]
        for a in range(1, 7):
            if q.values[s, a] > best_v:
                best_a, best_v = a, q.values[s, a]
        assert greedy_max(q, s) == (best_a, best_v)


def test_greedy_max_rejects_bad_state():
    with pytest.raises(InvalidArgumentError):
        greedy_max(QTable(np.zeros((2, 2))), 2)
