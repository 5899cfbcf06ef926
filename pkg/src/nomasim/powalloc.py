"""Water-filling primitives and the generic-MAC iterative water-filling bound.

Rates follow the Shannon formula per subcarrier,
R_k = sum_n log2(1 + p_kn h_kn / (sigma^2 + I_kn)) in bit/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ChannelMatrix
from .state import AllocationState, compute_interference

#: Default convergence controls for iterative water-filling.
IWF_TOL = 1e-6
IWF_MAX_ITERS = 100


def inverse_levels(gains: np.ndarray, npi: np.ndarray) -> np.ndarray:
    """npi/gain per subcarrier, ``inf`` where the gain is zero."""
    gains = np.asarray(gains, dtype=np.float64)
    npi = np.asarray(npi, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(gains > 0.0, npi / np.where(gains > 0.0, gains, 1.0), np.inf)


def suwf(gains, npi, budget: float) -> np.ndarray:
    """Single-user water-filling against fixed noise-plus-interference.

    Returns the unique power vector p_n = max(0, mu - npi_n/gains_n) with
    the water level mu chosen so the powers sum to ``budget`` (all-zero when
    the budget is zero); zero-gain subcarriers receive nothing.
    """
    gains = np.asarray(gains, dtype=np.float64)
    npi = np.asarray(npi, dtype=np.float64)
    if gains.shape != npi.shape or gains.ndim != 1:
        raise ValueError("gains and npi must be 1-D of equal length")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if np.any(npi <= 0):
        raise ValueError("noise-plus-interference must be positive")
    powers, _ = kernels.waterfill_rows(
        inverse_levels(gains, npi)[None, :], np.array([float(budget)])
    )
    return powers[0]


def user_rate(p, gains, npi) -> float:
    """Shannon rate sum_n log2(1 + p_n g_n / npi_n) in bit/s/Hz."""
    p = np.asarray(p, dtype=np.float64)
    gains = np.asarray(gains, dtype=np.float64)
    npi = np.asarray(npi, dtype=np.float64)
    if not (p.shape == gains.shape == npi.shape):
        raise ValueError("mismatched lengths")
    return float(np.sum(np.log2(1.0 + p * gains / npi)))


def rate_matrix(p: np.ndarray, gains: np.ndarray, interference: np.ndarray,
                noise: float) -> np.ndarray:
    """Per-user, per-subcarrier rates under the given interference."""
    return np.log2(1.0 + p * gains / (noise + interference))


@dataclass
class IwfResult:
    """Iterative water-filling outcome; ``converged`` is False when the
    round limit was hit before the sum-rate settled."""

    state: AllocationState
    sum_rate: float
    rounds: int
    converged: bool


def mac_sum_rate(p: np.ndarray, gains: np.ndarray, noise: float) -> float:
    """Multiple-access sum-rate sum_n log2(1 + sum_k p_kn h_kn / sigma^2)."""
    return float(np.sum(np.log2(1.0 + (p * gains).sum(axis=0) / noise)))


def iterative_waterfilling(
    channel: ChannelMatrix | np.ndarray,
    budgets,
    noise: float,
    tol: float = IWF_TOL,
    max_iters: int = IWF_MAX_ITERS,
) -> IwfResult:
    """Gauss-Seidel iterative water-filling for the generic MAC.

    Each round every user (ascending index) water-fills against the noise
    plus the other users' current received powers; stops when the MAC
    sum-rate changes by less than ``tol`` (relative) between rounds.
    The fixed point maximizes the unconstrained-loading sum-rate, so the
    result upper-bounds every loading-limited allocation.
    """
    gains = np.asarray(getattr(channel, "gains", channel), dtype=np.float64)
    budgets = np.asarray(budgets, dtype=np.float64)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if noise <= 0:
        raise ValueError("noise must be positive")
    n_users, n_sub = gains.shape

    p = np.zeros_like(gains)
    received = p * gains
    prev_rate = 0.0
    converged = False
    rounds = 0
    for rounds in range(1, max_iters + 1):
        for k in range(n_users):
            npi = noise + (received.sum(axis=0) - received[k])
            p[k] = suwf(gains[k], npi, budgets[k])
            received[k] = p[k] * gains[k]
        rate = mac_sum_rate(p, gains, noise)
        if abs(rate - prev_rate) <= tol * max(prev_rate, 1e-300):
            converged = True
            break
        prev_rate = rate

    x = p > 0
    interference = compute_interference(x, p, gains)
    rates = rate_matrix(p, gains, interference, noise).sum(axis=1)
    allocated = [np.flatnonzero(x[k]) for k in range(n_users)]
    open_cols = x.sum(axis=0) < n_users
    available = [np.flatnonzero(~x[k] & open_cols) for k in range(n_users)]
    state = AllocationState(
        x=x,
        p=p,
        interference=interference,
        rates=rates,
        allocated_rates=rates.copy(),
        allocated_sets=allocated,
        available_sets=available,
    )
    return IwfResult(state, mac_sum_rate(p, gains, noise), rounds, converged)
