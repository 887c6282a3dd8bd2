import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from src.theory.bounds import thm2_bound, thm3_bound, weight_square_sum, weights

logger = logging.getLogger(__name__)

GRID_NS = (100, 1_000, 10_000)
GRID_GAMMA_BETA = (0.1, 0.3, 0.49, 0.5, 0.51, 0.7, 0.9)
SLOPE_NS = tuple(2**k for k in range(7, 15))


@dataclass(frozen=True)
class BoundCheckRow:
    n: int
    gamma_beta_star: float
    exact_sum: float
    thm2: float
    exact_alpha: float
    thm3: float

    @property
    def thm2_ok(self) -> bool:
        return self.exact_sum <= self.thm2

    @property
    def thm3_ok(self) -> bool:
        return self.exact_alpha <= self.thm3

    @property
    def thm2_ratio(self) -> float:
        return self.thm2 / self.exact_sum

    @property
    def thm3_ratio(self) -> float:
        return self.thm3 / self.exact_alpha


def check_point(n: int, gamma_beta_star: float) -> BoundCheckRow:
    # A constant profile beta_i = gamma_beta_star with gamma = 1 has
    # discounted ratio exactly gamma_beta_star.
    _, alpha_n = weights(n, 1.0, gamma_beta_star)
    return BoundCheckRow(
        n=n,
        gamma_beta_star=gamma_beta_star,
        exact_sum=weight_square_sum(n, 1.0, gamma_beta_star),
        thm2=thm2_bound(n, gamma_beta_star),
        exact_alpha=alpha_n,
        thm3=thm3_bound(n, gamma_beta_star),
    )


def verify_grid(
    ns: Sequence[int] = GRID_NS, gamma_betas: Sequence[float] = GRID_GAMMA_BETA
) -> List[BoundCheckRow]:
    rows = [check_point(n, gb) for n in ns for gb in gamma_betas]
    failures = [r for r in rows if not (r.thm2_ok and r.thm3_ok)]
    if failures:
        logger.warning(f"{len(failures)} grid points violate a coefficient bound")
    else:
        logger.info(f"all {len(rows)} grid points satisfied both coefficient bounds")
    return rows


def fit_rate_slope(gamma_beta_star: float, ns: Sequence[int] = SLOPE_NS) -> float:
    """Least-squares slope of log(sum w_k**2) against log(n)."""
    sums = [weight_square_sum(n, 1.0, gamma_beta_star) for n in ns]
    slope, _ = np.polyfit(np.log(ns), np.log(sums), 1)
    return float(slope)


def expected_rate_slope(gamma_beta_star: float) -> float:
    """Order of the squared-weight sum: -1 below 0.5, -(2 - 2 g) above."""
    if gamma_beta_star < 0.5:
        return -1.0
    return -(2.0 - 2.0 * gamma_beta_star)


def slope_report(gamma_betas: Sequence[float] = GRID_GAMMA_BETA) -> Dict[float, float]:
    return {gb: fit_rate_slope(gb) for gb in gamma_betas}
