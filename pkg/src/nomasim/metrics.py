"""Spectral-efficiency aggregation and Jain's fairness index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import AllocationState


@dataclass
class MetricRecord:
    """One scheme's outcome on one Monte Carlo drop.

    ``sum_se`` and ``per_user_rates`` are normalized per resource block
    (sum-rate divided by N), so ``sum_se == per_user_rates.sum()``.
    ``jain`` is NaN when every rate is zero (undefined index).
    """

    scheme: str
    drop_id: int
    K: int
    N: int
    L: int
    sum_se: float
    jain: float
    per_user_rates: np.ndarray


def jain_index(rates) -> float:
    """Jain's fairness index (sum R)^2 / (K sum R^2), in [1/K, 1].

    Undefined (raises ValueError) for the all-zero vector.
    """
    r = np.asarray(rates, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("rates must be a nonempty 1-D vector")
    if np.any(r < 0):
        raise ValueError("rates must be nonnegative")
    peak = float(r.max())
    if peak == 0.0:
        raise ValueError("Jain's index is undefined for the all-zero vector")
    scaled = r / peak  # the index is scale-invariant; avoids underflow
    return float(scaled.sum()) ** 2 / (r.size * float((scaled**2).sum()))


def jain_index_or_nan(rates) -> float:
    """Jain's index, with the undefined all-zero case mapped to NaN."""
    try:
        return jain_index(rates)
    except ValueError:
        return float("nan")


def sum_spectral_efficiency(
    state: AllocationState, n_subcarriers: int | None = None
) -> float:
    """Sum of the per-user rates; divided by ``n_subcarriers`` when given
    (per-resource-block bit/s/Hz convention)."""
    total = float(np.sum(state.rates))
    if n_subcarriers:
        total /= n_subcarriers
    return total
