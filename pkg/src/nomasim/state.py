"""Shared allocation state for all subcarrier/power allocation schemes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AllocationState:
    """Outcome of a subcarrier and power allocation run.

    ``x`` is the binary assignment matrix (K users x N subcarriers), ``p``
    the transmit powers in the same unit as the budgets, ``interference``
    the per-user, per-subcarrier co-channel power under the successive
    decoding order, and ``rates`` the resulting per-user rates in bit/s/Hz.
    ``allocated_sets`` / ``available_sets`` hold, per user, the subcarrier
    indices it owns and the ones it could still be granted.
    """

    x: np.ndarray
    p: np.ndarray
    interference: np.ndarray
    rates: np.ndarray
    allocated_rates: np.ndarray
    allocated_sets: list[np.ndarray] = field(repr=False)
    available_sets: list[np.ndarray] = field(repr=False)

    @property
    def n_users(self) -> int:
        return self.x.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.x.shape[1]

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))


def compute_interference(
    x: np.ndarray,
    p: np.ndarray,
    gains: np.ndarray,
    order: np.ndarray | None = None,
) -> np.ndarray:
    """Co-channel interference under successive decoding.

    The user decoded at position i sees the received power of every
    co-channel user decoded after it; the last-decoded user sees none.
    ``order`` is the decoding order as a permutation of user indices
    (``order[0]`` decoded first); defaults to ascending user index.
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    gains = np.asarray(gains, dtype=np.float64)
    if not (x.shape == p.shape == gains.shape):
        raise ValueError("x, p and gains must have identical shapes")
    n_users = x.shape[0]
    if order is None:
        order = np.arange(n_users)
    else:
        order = np.asarray(order, dtype=np.intp)
        if sorted(order.tolist()) != list(range(n_users)):
            raise ValueError("order must be a permutation of user indices")

    received = (x * p * gains)[order, :]
    # Reverse-cumulative sum excluding self: interference from later positions.
    tail = np.cumsum(received[::-1], axis=0)[::-1]
    interference_ordered = np.vstack([tail[1:], np.zeros((1, x.shape[1]))])
    interference = np.empty_like(interference_ordered)
    interference[order, :] = interference_ordered
    return interference


def validate_allocation(
    state: AllocationState,
    budgets: np.ndarray,
    loading_limit: int,
    rel_tol: float = 1e-9,
) -> None:
    """Raise ``ValueError`` if the state violates any structural invariant."""
    x = np.asarray(state.x)
    p = np.asarray(state.p)
    budgets = np.asarray(budgets, dtype=np.float64)

    if not np.isin(x, (0, 1)).all():
        raise ValueError("assignment matrix must be binary")
    col_load = x.sum(axis=0)
    if (col_load > loading_limit).any():
        raise ValueError(f"column loading exceeds limit {loading_limit}")
    if (p < 0).any():
        raise ValueError("negative power entry")
    if (p[x == 0] > 0).any():
        raise ValueError("positive power on an unassigned subcarrier")
    row_power = p.sum(axis=1)
    if (row_power > budgets * (1.0 + rel_tol) + 1e-30).any():
        raise ValueError("per-user power budget exceeded")
    full_cols = np.flatnonzero(col_load >= loading_limit)
    for k in range(state.n_users):
        alloc = set(state.allocated_sets[k].tolist())
        avail = set(state.available_sets[k].tolist())
        if alloc & avail:
            raise ValueError(f"user {k}: allocated and available sets overlap")
        if alloc != set(np.flatnonzero(x[k]).tolist()):
            raise ValueError(f"user {k}: allocated set disagrees with x")
        if avail & set(full_cols.tolist()):
            raise ValueError(f"user {k}: fully loaded subcarrier still available")
