import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.mdp.core import Mdp, QTable, bellman_optimal
from src.mdp.errors import InvalidArgumentError, NonConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveReport:
    q_star: QTable
    iterations: int
    residual: float
    guaranteed_mne: float


def default_iteration_cap(gamma: float, tol: float) -> int:
    """Ten times the iterations the contraction rate says are needed."""
    needed = math.ceil(math.log(tol * (1.0 - gamma)) / math.log(gamma))
    return max(10 * needed, 10)


def solve_q_star(mdp: Mdp, tol: float, max_iterations: Optional[int] = None) -> SolveReport:
    """Value iteration from Q = 0 with a sup-norm certificate.

    Stops at the first k with ||Q_{k+1} - Q_k|| * gamma / (1 - gamma) <= tol;
    that quantity bounds ||Q_{k+1} - Q*|| and is reported as
    ``guaranteed_mne``.

    Raises
    ------
    InvalidArgumentError
        If ``tol`` is not positive.
    NonConvergenceError
        If the iteration cap is exhausted.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    gamma = mdp.gamma
    cap = max_iterations if max_iterations is not None else default_iteration_cap(gamma, tol)
    scale = gamma / (1.0 - gamma)

    q = QTable.zeros(mdp)
    for iteration in range(1, cap + 1):
        q_next = bellman_optimal(q, mdp)
        residual = float(np.abs(q_next.values - q.values).max())
        q = q_next
        bound = residual * scale
        if iteration % 100 == 0:
            logger.debug(f"value iteration {iteration}: residual={residual:.3e}")
        if bound <= tol:
            logger.debug(f"value iteration converged after {iteration} iterations")
            return SolveReport(
                q_star=q, iterations=iteration, residual=residual, guaranteed_mne=bound
            )

    raise NonConvergenceError(
        f"value iteration did not reach tol={tol} within {cap} iterations "
        f"(last residual {residual:.3e}); the MDP may be malformed"
    )


def mdp_distance(m1: Mdp, m2: Mdp, tol: float) -> float:
    """Delta(M1, M2) = max |Q*_1 - Q*_2|, correct to within +-tol."""
    if m1.shape != m2.shape:
        raise InvalidArgumentError(f"MDP shapes differ: {m1.shape} vs {m2.shape}")
    q1 = solve_q_star(m1, tol / 2).q_star
    q2 = solve_q_star(m2, tol / 2).q_star
    return float(np.abs(q1.values - q2.values).max())
