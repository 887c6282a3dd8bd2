"""Convergence coefficients of TTQL and the bounds that dominate them.

Index conventions: the weights are w_0 .. w_{n-1} with

    w_k = prod_{i=n-k}^{n-1} (i + gamma * beta_i) / prod_{i=n-k}^{n} i,

so w_0 = 1/n (empty numerator, single denominator term), and the
initialization coefficient is

    alpha_n = prod_{i=1}^{n-1} (i + gamma * beta_i) / prod_{i=2}^{n} i = w_{n-1}.

Sums of squared weights run over k = 0 .. n-1. Products are evaluated as
w_k = exp(sum_{i=n-k}^{n-1} log1p(gamma * beta_i / i)) / n with the running
sum accumulated in extended precision.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, Tuple, Union

import numpy as np

from src.mdp.errors import InvalidArgumentError, OutOfRegimeError

logger = logging.getLogger(__name__)

BetaSeq = Union[float, Sequence[float], np.ndarray]

DEFAULT_DELTAS = (0.1, 0.05, 0.01)


@dataclass(frozen=True)
class BoundProfile:
    n: int
    gamma: float
    beta_seq: np.ndarray
    alpha_n: float
    wk_sq_sum: float
    thm2_bound: float
    thm3_bound: float
    delta: float


def _beta_array(n: int, beta_seq: BetaSeq) -> np.ndarray:
    if np.ndim(beta_seq) == 0:
        beta = np.full(n - 1, float(beta_seq))
    else:
        beta = np.asarray(beta_seq, dtype=np.float64)
        if beta.shape != (n - 1,):
            raise InvalidArgumentError(f"beta_seq must hold n - 1 = {n - 1} values, got {beta.shape}")
    if np.any(~np.isfinite(beta)) or np.any(beta < 0) or np.any(beta > 1):
        raise InvalidArgumentError("every beta_i must lie in [0, 1]")
    return beta


def _log_weights(n: int, gamma: float, beta_seq: BetaSeq) -> np.ndarray:
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgumentError(f"gamma must lie in [0, 1], got {gamma}")
    beta = _beta_array(n, beta_seq)
    i = np.arange(1, n, dtype=np.float64)
    increments = np.log1p(gamma * beta / i).astype(np.longdouble)
    suffix = np.cumsum(increments[::-1], dtype=np.longdouble)
    return np.concatenate(([np.longdouble(0.0)], suffix)) - np.log(np.longdouble(n))


def weights(n: int, gamma: float, beta_seq: BetaSeq) -> Tuple[np.ndarray, float]:
    """Return (w_0 .. w_{n-1}, alpha_n) for the error ratios beta_1 .. beta_{n-1}.

    ``beta_seq`` is either a constant or a sequence of n - 1 values in [0, 1].
    """
    log_w = _log_weights(n, gamma, beta_seq)
    w = np.exp(log_w).astype(np.float64)
    return w, float(w[-1])


def weight_square_sum(n: int, gamma: float, beta_seq: BetaSeq) -> float:
    """Exact sum_{k=0}^{n-1} w_k**2."""
    squares = np.exp(2 * _log_weights(n, gamma, beta_seq)).astype(np.float64)
    return math.fsum(squares)


def _check_regime(gamma_beta_star: float) -> float:
    gb = float(gamma_beta_star)
    if not 0.0 <= gb < 1.0:
        raise OutOfRegimeError(
            f"gamma * beta* must lie in [0, 1) for the squared weights to vanish, got {gb}"
        )
    return gb


def thm2_bound(n: int, gamma_beta_star: float) -> float:
    """Closed-form upper bound on sum_k w_k**2 when every beta_i <= beta*.

    Two branches, both as stated; at gamma * beta* = 0.5 the log branch
    (n - 2)**(2 g) / n**2 * e**(2 g) * (1 + ln n) applies.
    """
    gb = _check_regime(gamma_beta_star)
    if n < 3:
        raise InvalidArgumentError(f"n must be >= 3, got {n}")
    two_gb = 2.0 * gb
    if gb == 0.5:
        return (n - 2) ** two_gb / n**2 * math.exp(two_gb) * (1.0 + math.log(n))
    denom = 1.0 - two_gb
    return (
        math.exp(two_gb)
        / n ** (2.0 - two_gb)
        * (n**denom / denom - 1.0 / denom + 1.0)
    )


def thm3_bound(n: int, gamma_beta_star: float) -> float:
    """C / n**(1 - g) with C = (1 + g) * exp((0.5 - ln 2) * g), g = gamma * beta*."""
    gb = _check_regime(gamma_beta_star)
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    constant = (1.0 + gb) * math.exp((0.5 - math.log(2.0)) * gb)
    return constant / n ** (1.0 - gb)


def error_bound(n: int, e1: float, delta: float, gamma: float, beta_seq: BetaSeq) -> float:
    """High-probability bound on E_n: alpha_n * E_1 + sqrt(ln(1/delta) * sum w_k**2 / 2).

    The first term is the initialization error, the second the sampling error.
    """
    if not 0.0 < delta <= 1.0:
        raise InvalidArgumentError(f"delta must lie in (0, 1], got {delta}")
    _, alpha_n = weights(n, gamma, beta_seq)
    square_sum = weight_square_sum(n, gamma, beta_seq)
    return alpha_n * e1 + math.sqrt(math.log(1.0 / delta) * square_sum / 2.0)


def bound_profile(n: int, gamma: float, beta_seq: BetaSeq, delta: float = 0.05) -> BoundProfile:
    """Exact coefficients plus both closed-form bounds, using beta* = max beta_i."""
    beta = _beta_array(n, beta_seq)
    gamma_beta_star = gamma * float(beta.max()) if beta.size else 0.0
    _, alpha_n = weights(n, gamma, beta)
    return BoundProfile(
        n=n,
        gamma=gamma,
        beta_seq=beta,
        alpha_n=alpha_n,
        wk_sq_sum=weight_square_sum(n, gamma, beta),
        thm2_bound=thm2_bound(n, gamma_beta_star),
        thm3_bound=thm3_bound(n, gamma_beta_star),
        delta=delta,
    )


def envelope_from_trace(trace, gamma: float, delta: float = 0.05) -> float:
    """High-probability bound on the final MNE of a learner ``RunTrace``.

    A run of H updates ends at Q_{H+1}, so n = H + 1 and the trace's
    per-update error ratios are beta_1 .. beta_H (clipped to [0, 1]).
    """
    beta = np.clip(np.asarray(trace.beta, dtype=np.float64), 0.0, 1.0)
    return error_bound(trace.horizon + 1, trace.initial_mne, delta, gamma, beta)


def binomial_std(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


def hoeffding_check(
    weight_seq: Sequence[float],
    n_trials: int,
    rng: np.random.Generator,
    low: float = 0.0,
    high: float = 1.0,
    deltas: Iterable[float] = DEFAULT_DELTAS,
    chunk: int = 10_000,
) -> Dict[float, float]:
    """Monte Carlo violation rates of the weighted Hoeffding inequality.

    Each trial draws x_1 .. x_n i.i.d. uniform on [low, high] and forms
    S = sum w_k x_k; a violation is S - E[S] > sqrt(ln(1/delta) / 2 *
    sum w_k**2 * (high - low)**2). Returns {delta: violation rate}.
    """
    weights_arr = np.asarray(weight_seq, dtype=np.float64)
    if weights_arr.ndim != 1 or not np.all(np.isfinite(weights_arr)):
        raise InvalidArgumentError("weights must be a finite 1-d sequence")
    if n_trials < 10_000:
        raise InvalidArgumentError(f"n_trials must be >= 10000, got {n_trials}")
    if not high > low:
        raise InvalidArgumentError(f"need low < high, got [{low}, {high}]")

    deltas = tuple(deltas)
    spread = math.fsum(weights_arr**2) * (high - low) ** 2
    thresholds = np.array([math.sqrt(0.5 * math.log(1.0 / d) * spread) for d in deltas])
    mean = 0.5 * (low + high) * weights_arr.sum()

    violations = np.zeros(len(deltas), dtype=np.int64)
    done = 0
    while done < n_trials:
        size = min(chunk, n_trials - done)
        draws = rng.uniform(low, high, size=(size, weights_arr.size))
        deviation = draws @ weights_arr - mean
        violations += (deviation[:, None] > thresholds[None, :]).sum(axis=0)
        done += size

    rates = {d: float(v) / n_trials for d, v in zip(deltas, violations)}
    logger.debug(f"hoeffding check over {n_trials} trials: {rates}")
    return rates


def sum_log_inequality_check(a: int, b: int) -> bool:
    """Check sum_{i=a}^{b} 1/i <= 1/a + ln(b) - ln(a) by direct summation."""
    if not (isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer))):
        raise InvalidArgumentError("a and b must be integers")
    if not 1 <= a < b:
        raise InvalidArgumentError(f"need 1 <= a < b, got a={a}, b={b}")
    lhs = math.fsum(1.0 / i for i in range(a, b + 1))
    return lhs <= 1.0 / a + math.log1p((b - a) / a)


def sum_log_inequality_sweep(limit: int) -> int:
    """Count violations of the sum-log inequality over all 1 <= a < b <= limit."""
    if limit < 2:
        raise InvalidArgumentError(f"limit must be >= 2, got {limit}")
    harmonic = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, limit + 1))))
    violations = 0
    for a in range(1, limit):
        b = np.arange(a + 1, limit + 1)
        lhs = harmonic[b] - harmonic[a - 1]
        rhs = 1.0 / a + np.log1p((b - a) / a)
        violations += int(np.count_nonzero(lhs > rhs))
    return violations
