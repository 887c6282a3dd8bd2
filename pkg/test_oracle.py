import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from src.mdp.core import Mdp, QTable, bellman_optimal
from src.mdp.errors import InvalidArgumentError, NonConvergenceError
from src.mdp.generators import Axis, PerturbSpec, delta_tilde_bound, perturb, random_mdp
from src.mdp.oracle import default_iteration_cap, mdp_distance, solve_q_star
from src.mdp.rng import make_rng


def gauss_seidel_q_star(mdp: Mdp, tol: float = 1e-13) -> np.ndarray:
    """Independent in-place value iteration over explicit loops."""
    n_states, n_actions = mdp.shape
    q = np.zeros((n_states, n_actions))
    while True:
        change = 0.0
        for s in range(n_states):
            for a in range(n_actions):
                expected = 0.0
                for s2 in range(n_states):
                    expected += mdp.transition[s, a, s2] * q[s2].max()
                new = mdp.reward[s, a] + mdp.gamma * expected
                change = max(change, abs(new - q[s, a]))
                q[s, a] = new
        if change < tol:
            return q


def single_state(reward: float, gamma: float) -> Mdp:
    return Mdp(transition=[[[1.0]]], reward=[[reward]], gamma=gamma)


def test_single_state_geometric_series():
    report = solve_q_star(single_state(0.5, 0.5), tol=1e-10)
    assert report.q_star.values[0, 0] == pytest.approx(1.0, abs=1e-10)


def test_zero_rewards_converge_in_one_check():
    mdp = random_mdp(4, 3, 0.9, make_rng(0, "zero"))
    zero = Mdp(transition=mdp.transition, reward=np.zeros(mdp.shape), gamma=0.9)
    report = solve_q_star(zero, tol=1e-8)
    assert report.iterations == 1
    assert np.all(report.q_star.values == 0)
    assert report.residual == 0


def test_matches_gauss_seidel():
    mdp = random_mdp(10, 4, 0.9, make_rng(1, "gs"))
    report = solve_q_star(mdp, tol=1e-10)
    np.testing.assert_allclose(report.q_star.values, gauss_seidel_q_star(mdp), atol=1e-8)


def test_certificate():
    for seed in range(10):
        mdp = random_mdp(8, 3, 0.95, make_rng(seed, "certificate"))
        tol = 1e-8
        report = solve_q_star(mdp, tol)
        gamma = mdp.gamma
        assert report.guaranteed_mne == pytest.approx(report.residual * gamma / (1 - gamma))
        assert report.guaranteed_mne <= tol
        bellman_gap = np.abs(bellman_optimal(report.q_star, mdp).values - report.q_star.values).max()
        assert bellman_gap <= (1 + gamma) * report.residual


def test_iteration_cap_raises():
    mdp = random_mdp(5, 2, 0.9, make_rng(2, "cap"))
    with pytest.raises(NonConvergenceError):
        solve_q_star(mdp, tol=1e-8, max_iterations=3)


def test_default_iteration_cap():
    # ln(5e-4) / ln(0.5) = 10.97
    assert default_iteration_cap(0.5, 1e-3) == 110


@pytest.mark.parametrize("tol", [0.0, -1e-6])
def test_rejects_non_positive_tol(tol):
    with pytest.raises(InvalidArgumentError):
        solve_q_star(single_state(0.5, 0.5), tol)


def test_distance_identical_is_zero():
    mdp = random_mdp(6, 3, 0.9, make_rng(3, "same"))
    assert mdp_distance(mdp, mdp, 1e-8) <= 1e-8


def test_distance_single_state_gammas():
    assert mdp_distance(single_state(1.0, 0.5), single_state(1.0, 0.6), 1e-10) == pytest.approx(
        0.5, abs=1e-9
    )


def test_distance_rejects_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        mdp_distance(random_mdp(3, 2, 0.9, make_rng(0)), random_mdp(4, 2, 0.9, make_rng(0)), 1e-8)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(1, 4),
    st.lists(st.floats(0.1, 0.9), min_size=3, max_size=3),
    st.integers(0, 2**32 - 1),
)
def test_distance_triangle_inequality(n_states, n_actions, gammas, seed):
    tol = 1e-8
    m1, m2, m3 = (random_mdp(n_states, n_actions, g, make_rng(seed, "triangle", k)) for k, g in enumerate(gammas))
    d12, d23, d13 = mdp_distance(m1, m2, tol), mdp_distance(m2, m3, tol), mdp_distance(m1, m3, tol)
    assert d13 <= d12 + d23 + 3 * tol


def test_distance_dominated_by_closed_form_bound():
    tol = 1e-8
    specs = [
        PerturbSpec(axis=axis, magnitude=eps, direction=direction)
        for axis in Axis
        for eps in (0.01, 0.05, 0.2)
        for direction in (("up", "down") if axis is Axis.GAMMA else ("up",))
    ]
    violations = []
    pairs = 0
    for seed in range(9):
        base = random_mdp(6, 3, 0.7, make_rng(seed, "dominance"))
        for spec in specs:
            other = perturb(base, spec, make_rng(seed, "dominance", spec.axis.value, spec.magnitude))
            pairs += 1
            distance = mdp_distance(base, other, tol)
            bound = delta_tilde_bound(base, other).total
            if distance > bound + 2 * tol:
                violations.append((seed, spec, distance, bound))
    assert pairs >= 100
    assert violations == []


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(1, 4),
    st.floats(0.1, 0.9),
    st.floats(0.1, 0.9),
    st.integers(0, 2**32 - 1),
)
def test_distance_dominated_for_unrelated_pairs(n_states, n_actions, gamma1, gamma2, seed):
    tol = 1e-8
    m1 = random_mdp(n_states, n_actions, gamma1, make_rng(seed, "unrelated", 1))
    m2 = random_mdp(n_states, n_actions, gamma2, make_rng(seed, "unrelated", 2))
    assert mdp_distance(m1, m2, tol) <= delta_tilde_bound(m1, m2).total + 2 * tol


def test_bound_follows_larger_gamma_reward():
    # the low-gamma task also has the smaller reward, so the reward of the
    # larger-gamma task has to be carried across the gamma step
    low = single_state(reward=0.0, gamma=0.5)
    high = single_state(reward=1.0, gamma=0.9)
    distance = mdp_distance(low, high, 1e-10)
    assert distance == pytest.approx(10.0, abs=1e-8)
    for m1, m2 in ((low, high), (high, low)):
        bound = delta_tilde_bound(m1, m2).total
        assert bound == pytest.approx(10.0)
        assert distance <= bound + 2e-8
