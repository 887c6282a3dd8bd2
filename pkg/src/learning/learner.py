"""Synchronous Q-learning and target transfer Q-learning.

The step size is alpha_t = 1 / (t + 1) for t = 1, 2, ... . Some printings
of the algorithm put 1/n inside the update line; the convergence analysis
uses the (t + gamma * beta_t) / (t + 1) recursion, which needs 1 / (t + 1).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from src.mdp.core import Mdp, QTable, sample_next_states
from src.mdp.errors import InvalidArgumentError
from src.mdp.metrics import mne, mnbe_exact

logger = logging.getLogger(__name__)


class SafeCondition(str, Enum):
    ALWAYS_TRANSFER = "always_transfer"
    NEVER_TRANSFER = "never_transfer"
    BELLMAN_GATE = "bellman_gate"
    # Oracle-only gate Delta / E_t <= 1; reads the new task's Q*.
    DISTANCE_GATE = "distance_gate"


class LearnerConfig(BaseModel):
    """Settings for one learning run.

    ``init_q`` is ``"zeros"``, a float constant, or a full table given as a
    nested list matching the MDP shape.
    """

    model_config = ConfigDict(frozen=True)

    horizon: PositiveInt
    safe_condition: SafeCondition = SafeCondition.BELLMAN_GATE
    safe_check_period: PositiveInt = 1
    init_q: Union[float, List[List[float]], str] = Field(default="zeros")

    def initial_table(self, mdp: Mdp) -> QTable:
        if isinstance(self.init_q, str):
            if self.init_q != "zeros":
                raise InvalidArgumentError(f"unknown init_q '{self.init_q}'")
            return QTable.zeros(mdp)
        if isinstance(self.init_q, (int, float)):
            return QTable.constant(mdp, self.init_q)
        table = QTable(np.asarray(self.init_q, dtype=np.float64))
        table.check_matches(mdp)
        return table


@dataclass(frozen=True)
class SafeConditionDecision:
    """Outcome of one gate evaluation.

    Under the oracle distance gate the two error fields hold MNEs instead.
    """

    flag: bool
    source_mnbe: float
    current_mnbe: float


@dataclass
class RunTrace:
    """Per-step diagnostics of a run.

    Row t describes update t: the gate flag, beta_hat, beta and alpha were
    computed from Q_t, while ``mne`` and ``mnbe`` are those of the result
    Q_{t+1}. ``initial_mne`` is E_1 = MNE(Q_1).
    """

    mne: np.ndarray
    mnbe: np.ndarray
    transfer_flag: np.ndarray
    beta_hat: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    gate_source_mnbe: np.ndarray
    gate_current_mnbe: np.ndarray
    initial_mne: float
    initial_mnbe: float
    final_q: QTable

    @property
    def horizon(self) -> int:
        return len(self.mne)

    @property
    def final_mne(self) -> float:
        return float(self.mne[-1])


def step_size(t: int) -> float:
    return 1.0 / (t + 1)


def _decide(source_mnbe: float, current_mnbe: float) -> SafeConditionDecision:
    # ties transfer
    return SafeConditionDecision(
        flag=bool(source_mnbe <= current_mnbe),
        source_mnbe=source_mnbe,
        current_mnbe=current_mnbe,
    )


def safe_condition(q_source: QTable, q_current: QTable, mdp_new: Mdp) -> SafeConditionDecision:
    """Error-ratio safe condition: transfer iff MNBE(source) <= MNBE(current).

    Both Bellman errors are measured under the new task's exact operator.
    """
    q_source.check_matches(mdp_new)
    q_current.check_matches(mdp_new)
    return _decide(mnbe_exact(q_source, mdp_new), mnbe_exact(q_current, mdp_new))


def ttql_step(
    q: QTable, q_target: QTable, mdp: Mdp, t: int, rng: np.random.Generator
) -> QTable:
    """One synchronous update of every (s, a) pair.

    Q_{t+1}(s, a) = (1 - alpha_t) Q_t(s, a)
                    + alpha_t (r(s, a) + gamma * max_a2 q_target(s2, a2))

    with one fresh s2 ~ P(. | s, a) per pair and alpha_t = 1 / (t + 1). All
    pairs read Q_t, never partially updated values.
    """
    if t < 1:
        raise InvalidArgumentError(f"step index must be >= 1, got {t}")
    q.check_matches(mdp)
    q_target.check_matches(mdp)
    alpha = step_size(t)
    next_states = sample_next_states(mdp, rng)
    bootstrap = q_target.values.max(axis=1)[next_states]
    return QTable((1.0 - alpha) * q.values + alpha * (mdp.reward + mdp.gamma * bootstrap))


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 0.0 if numerator == 0 else float("inf")
    return numerator / denominator


def run(
    mdp_new: Mdp,
    q_source: Optional[QTable],
    cfg: LearnerConfig,
    q_star_new: QTable,
    rng: np.random.Generator,
) -> RunTrace:
    """Run ``cfg.horizon`` updates of TTQL and record a full trace.

    The gate is evaluated at steps 1, 1 + period, 1 + 2 * period, ... and its
    decision is held in between. ``q_star_new`` only feeds diagnostics,
    except for the oracle ``distance_gate`` mode. With ``never_transfer``
    this is exactly synchronous Watkins Q-learning.
    """
    mode = cfg.safe_condition
    if q_source is None and mode is not SafeCondition.NEVER_TRANSFER:
        raise InvalidArgumentError(f"safe condition '{mode.value}' needs a source Q-table")
    q_star_new.check_matches(mdp_new)
    if q_source is not None:
        q_source.check_matches(mdp_new)

    horizon = cfg.horizon
    q = cfg.initial_table(mdp_new)
    nan = float("nan")

    trace_mne = np.empty(horizon)
    trace_mnbe = np.empty(horizon)
    trace_flag = np.zeros(horizon, dtype=bool)
    trace_beta_hat = np.full(horizon, nan)
    trace_beta = np.empty(horizon)
    trace_alpha = np.empty(horizon)
    gate_source = np.full(horizon, nan)
    gate_current = np.full(horizon, nan)

    source_mnbe = mnbe_exact(q_source, mdp_new) if q_source is not None else nan
    source_mne = mne(q_source, q_star_new) if q_source is not None else nan
    if source_mnbe == 0:
        logger.warning("source Q-table has zero Bellman error on the new task")

    current_mne = mne(q, q_star_new)
    current_mnbe = mnbe_exact(q, mdp_new)
    initial_mne, initial_mnbe = current_mne, current_mnbe
    decision: Optional[SafeConditionDecision] = None

    for t in range(1, horizon + 1):
        row = t - 1
        if (t - 1) % cfg.safe_check_period == 0:
            if mode is SafeCondition.BELLMAN_GATE:
                decision = _decide(source_mnbe, current_mnbe)
            elif mode is SafeCondition.DISTANCE_GATE:
                decision = _decide(source_mne, current_mne)
            elif mode is SafeCondition.ALWAYS_TRANSFER:
                decision = SafeConditionDecision(True, source_mnbe, current_mnbe)
            else:
                decision = SafeConditionDecision(False, source_mnbe, current_mnbe)

        transfer = decision.flag
        q_target = q_source if transfer else q
        trace_flag[row] = transfer
        gate_source[row] = decision.source_mnbe
        gate_current[row] = decision.current_mnbe
        if q_source is not None:
            trace_beta_hat[row] = _ratio(source_mnbe, current_mnbe)
        trace_beta[row] = _ratio(source_mne, current_mne) if transfer else 1.0
        trace_alpha[row] = step_size(t)

        q = ttql_step(q, q_target, mdp_new, t, rng)
        current_mne = mne(q, q_star_new)
        current_mnbe = mnbe_exact(q, mdp_new)
        trace_mne[row] = current_mne
        trace_mnbe[row] = current_mnbe

    logger.debug(
        f"run finished: mode={mode.value} horizon={horizon} "
        f"final_mne={current_mne:.4e} transfers={int(trace_flag.sum())}"
    )
    return RunTrace(
        mne=trace_mne,
        mnbe=trace_mnbe,
        transfer_flag=trace_flag,
        beta_hat=trace_beta_hat,
        beta=trace_beta,
        alpha=trace_alpha,
        gate_source_mnbe=gate_source,
        gate_current_mnbe=gate_current,
        initial_mne=initial_mne,
        initial_mnbe=initial_mnbe,
        final_q=q,
    )
