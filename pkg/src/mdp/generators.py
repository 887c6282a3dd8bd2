"""Random MDPs, single-component perturbations and the closed-form distance bound.

``transition_distance`` is max over (s, a) of the L1 distance between the
two next-state rows, i.e. the operator infinity-norm of P1 - P2 acting on
value vectors. That is the norm under which the single-component
transition bound gamma * ||r|| / (1 - gamma)**2 * ||P1 - P2|| holds.
"""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, model_validator

from src.mdp.core import Mdp
from src.mdp.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

GAMMA_MARGIN = 1e-6


class Axis(str, Enum):
    GAMMA = "gamma"
    REWARD = "reward"
    TRANSITION = "transition"


class PerturbSpec(BaseModel):
    """One-component perturbation of an MDP.

    ``direction`` only matters on the gamma axis: gamma' = gamma + eps for
    ``up`` and gamma - eps for ``down``.
    """

    model_config = ConfigDict(frozen=True)

    axis: Axis
    magnitude: NonNegativeFloat
    direction: Literal["up", "down"] = "up"

    @model_validator(mode="after")
    def _check_magnitude(self) -> "PerturbSpec":
        if self.axis is Axis.TRANSITION and self.magnitude > 1:
            raise ValueError("transition mixture weight must lie in [0, 1]")
        if self.axis is Axis.GAMMA and self.magnitude >= 1:
            raise ValueError("gamma shift must be smaller than 1")
        return self

    def check_feasible(self, gamma: float) -> None:
        """Raise ``InvalidArgumentError`` if the spec cannot be applied at ``gamma``."""
        if self.axis is not Axis.GAMMA:
            return
        shifted = gamma + self.magnitude if self.direction == "up" else gamma - self.magnitude
        if not 0.0 < shifted < 1.0:
            raise InvalidArgumentError(
                f"gamma perturbation {self.direction} by {self.magnitude} moves gamma={gamma} "
                f"to {shifted}, outside (0, 1)"
            )


@dataclass(frozen=True)
class ParameterCombo:
    """Parameters one single-component path plugs into the bound.

    ``gamma_reward`` and ``gamma_transition`` are gamma' and gamma'';
    ``reward_transition`` and ``reward_gamma`` name the MDP ("m1"/"m2") whose
    reward table plays r' and r''.
    """

    gamma_reward: float
    gamma_transition: float
    reward_transition: str
    reward_gamma: str
    order: Tuple[str, ...]
    start: str


@dataclass(frozen=True)
class DeltaTildeBreakdown:
    reward_term: float
    transition_term: float
    gamma_term: float
    total: float
    chosen_combo: ParameterCombo


def _random_stochastic_rows(shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    # 1 - U(0,1) lies in (0, 1], so every row is dense and strictly positive
    raw = 1.0 - rng.random(shape)
    return raw / raw.sum(axis=-1, keepdims=True)


def random_mdp(n_states: int, n_actions: int, gamma: float, rng: np.random.Generator) -> Mdp:
    """Dense random MDP: uniform rewards on [0, 1], normalized uniform transition rows."""
    if n_states < 1 or n_actions < 1:
        raise InvalidArgumentError(f"sizes must be >= 1, got {n_states}x{n_actions}")
    reward = rng.random((n_states, n_actions))
    transition = _random_stochastic_rows((n_states, n_actions, n_states), rng)
    return Mdp.build(transition, reward, gamma, renormalize=True)


def perturb(mdp: Mdp, spec: PerturbSpec, rng: np.random.Generator) -> Mdp:
    """Return a copy of ``mdp`` that differs in exactly one component.

    gamma:      gamma' = gamma +- eps, kept at least 1e-6 inside (0, 1).
    reward:     r' = clip(r + eps * u, 0, 1) with u ~ U[-1, 1] per pair.
    transition: P' = (1 - eps) P + eps U with U a fresh random row per pair.
    """
    spec.check_feasible(mdp.gamma)
    if spec.magnitude == 0:
        return mdp

    if spec.axis is Axis.GAMMA:
        sign = 1.0 if spec.direction == "up" else -1.0
        gamma = mdp.gamma + sign * spec.magnitude
        clamped = min(max(gamma, GAMMA_MARGIN), 1.0 - GAMMA_MARGIN)
        if clamped != gamma:
            logger.warning(f"gamma perturbation clamped from {gamma} to {clamped}")
        return Mdp(transition=mdp.transition, reward=mdp.reward, gamma=clamped)

    if spec.axis is Axis.REWARD:
        noise = rng.uniform(-1.0, 1.0, size=mdp.shape)
        reward = np.clip(mdp.reward + spec.magnitude * noise, 0.0, 1.0)
        return Mdp(transition=mdp.transition, reward=reward, gamma=mdp.gamma)

    mixture = _random_stochastic_rows(mdp.transition.shape, rng)
    transition = (1.0 - spec.magnitude) * mdp.transition + spec.magnitude * mixture
    return Mdp.build(transition, mdp.reward, mdp.gamma, renormalize=True)


def transition_distance(m1: Mdp, m2: Mdp) -> float:
    return float(np.abs(m1.transition - m2.transition).sum(axis=2).max())


def _path_bound(
    order: Tuple[str, ...], start: Mdp, end: Mdp, start_label: str, end_label: str
) -> DeltaTildeBreakdown:
    # Walk from start to end changing one component at a time; each step is
    # bounded by the single-component result at the current intermediate MDP.
    gamma, reward_label = start.gamma, start_label
    rewards: Dict[str, np.ndarray] = {start_label: start.reward, end_label: end.reward}
    reward_diff = float(np.abs(start.reward - end.reward).max())
    p_diff = transition_distance(start, end)
    gamma_diff = abs(start.gamma - end.gamma)
    terms = {}
    gamma_reward = gamma_transition = gamma
    reward_transition = reward_gamma = reward_label
    for component in order:
        r_norm = float(np.abs(rewards[reward_label]).max())
        if component == "reward":
            gamma_reward = gamma
            terms["reward"] = reward_diff / (1.0 - gamma)
            reward_label = end_label
        elif component == "transition":
            gamma_transition, reward_transition = gamma, reward_label
            terms["transition"] = gamma * r_norm / (1.0 - gamma) ** 2 * p_diff
        else:
            reward_gamma = reward_label
            terms["gamma"] = gamma_diff / ((1.0 - start.gamma) * (1.0 - end.gamma)) * r_norm
            gamma = end.gamma
    total = terms["reward"] + terms["transition"] + terms["gamma"]
    combo = ParameterCombo(
        gamma_reward=gamma_reward,
        gamma_transition=gamma_transition,
        reward_transition=reward_transition,
        reward_gamma=reward_gamma,
        order=order,
        start=start_label,
    )
    return DeltaTildeBreakdown(
        reward_term=terms["reward"],
        transition_term=terms["transition"],
        gamma_term=terms["gamma"],
        total=total,
        chosen_combo=combo,
    )


def candidate_bounds(m1: Mdp, m2: Mdp) -> List[DeltaTildeBreakdown]:
    """Bounds for every single-component path between the two MDPs."""
    if m1.shape != m2.shape:
        raise InvalidArgumentError(f"MDP shapes differ: {m1.shape} vs {m2.shape}")
    candidates = []
    for order in itertools.permutations(("reward", "transition", "gamma")):
        candidates.append(_path_bound(order, m1, m2, "m1", "m2"))
        candidates.append(_path_bound(order, m2, m1, "m2", "m1"))
    return candidates


def delta_tilde_bound(m1: Mdp, m2: Mdp, minimize: bool = False) -> DeltaTildeBreakdown:
    """Closed-form upper bound on Delta(M1, M2) from component differences.

    By default the path starts at the MDP with the smaller gamma and changes
    reward, then transition, then gamma. That gives gamma' = gamma'' =
    min(gamma1, gamma2) and r' = r'' = the reward of the larger-gamma MDP.
    This is the smaller-sup-norm reward only when the smaller-gamma MDP has
    the larger reward norm; otherwise it is the larger one, which the gamma
    step needs (a single state with (gamma, r) = (0.5, 0) vs (0.9, 1) has
    Delta = 10, and the smaller-norm choice would give 2). With
    ``minimize=True`` every path is evaluated and the smallest returned.
    """
    if m1.shape != m2.shape:
        raise InvalidArgumentError(f"MDP shapes differ: {m1.shape} vs {m2.shape}")
    if minimize:
        return min(candidate_bounds(m1, m2), key=lambda b: b.total)
    order = ("reward", "transition", "gamma")
    if m1.gamma <= m2.gamma:
        return _path_bound(order, m1, m2, "m1", "m2")
    return _path_bound(order, m2, m1, "m2", "m1")
