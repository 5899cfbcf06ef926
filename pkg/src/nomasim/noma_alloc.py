"""Iterative joint subcarrier and power allocation with a loading limit.

One subcarrier is granted per iteration: every user water-fills over its
allocated-plus-available set against the current interference, nominates its
best unallocated subcarrier, and a winner is chosen either by the largest
per-subcarrier rate (LRM) or the largest increase of the sum-rate objective
(GOM). A subcarrier that reaches the loading limit L disappears from every
user's available set. Interference follows the fixed ascending decoding
order: the user decoded earlier sees every later co-channel user's power.

While the loop runs, the interference fed back into the per-user
water-filling counts the full current power plan of every later-decoded
user, granted or not. A later (weaker, under strongest-first labeling)
user's planned power thereby reserves its favorite subcarriers against
earlier users, which is what spreads grants beyond the strongest users.
The returned rates are exact: final powers live only on granted
subcarriers and the reported interference counts granted entries alone.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import kernels
from .channel import ChannelMatrix
from .powalloc import inverse_levels, rate_matrix
from .state import AllocationState, compute_interference

#: Rates at or below this are treated as zero when testing termination.
RATE_FLOOR = 1e-12

CRITERIA = ("lrm", "gom")

#: How GOM's marginal gain reads the candidate rate R_k: over the whole
#: allocated-plus-available set (the power-allocation step's own rate) or
#: over allocated-plus-best-candidate only.
GOM_MARGINAL_MODES = ("union", "granted-plus-best")


def select_lrm(candidate_rates: np.ndarray) -> int:
    """Winner by largest candidate-subcarrier rate; ineligible users carry
    -inf. Ties go to the lowest index."""
    candidate_rates = np.asarray(candidate_rates, dtype=np.float64)
    if not np.any(candidate_rates > -np.inf):
        raise ValueError("no candidates: every user's available set is empty")
    return int(np.argmax(candidate_rates))


def select_gom(rates_with_candidate: np.ndarray,
               rates_allocated_only: np.ndarray) -> int:
    """Winner by largest marginal gain R_k - R_k^a; ineligible users carry
    -inf in ``rates_with_candidate``. Ties go to the lowest index."""
    full = np.asarray(rates_with_candidate, dtype=np.float64)
    base = np.asarray(rates_allocated_only, dtype=np.float64)
    if not np.any(full > -np.inf):
        raise ValueError("no candidates: every user's available set is empty")
    gains = np.where(full > -np.inf, full - base, -np.inf)
    return int(np.argmax(gains))


def _masked_waterfill(gains, npi, budgets, mask):
    """Water-fill each user over its masked subcarrier set."""
    inv = np.where(mask, inverse_levels(gains, npi), np.inf)
    powers, _ = kernels.waterfill_rows(inv, budgets)
    return powers


def _planning_interference(p: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """Anticipated co-channel power under the ascending decoding order:
    user k sees every later user's current power plan, granted or not."""
    received = p * gains
    tail = np.cumsum(received[::-1], axis=0)[::-1]
    return np.vstack([tail[1:], np.zeros((1, p.shape[1]))])


def allocate(
    channel: ChannelMatrix | np.ndarray,
    budgets,
    noise: float,
    loading_limit: int,
    criterion: str = "gom",
    gom_marginal: str = "union",
    finalize_rounds: int = 5,
    on_iteration: Callable[[np.ndarray, np.ndarray, np.ndarray], None] | None = None,
) -> AllocationState:
    """Run the iterative allocation until no candidate rate is positive or
    every available set is empty.

    ``on_iteration``, when given, receives copies of (x, allocated mask,
    available mask) after every grant; used to audit intermediate
    feasibility. Zero-budget users never win a subcarrier.
    """
    gains = np.asarray(getattr(channel, "gains", channel), dtype=np.float64)
    budgets = np.asarray(budgets, dtype=np.float64)
    n_users, n_sub = gains.shape
    if loading_limit < 1:
        raise ValueError("loading limit must be at least 1")
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    if gom_marginal not in GOM_MARGINAL_MODES:
        raise ValueError(f"gom_marginal must be one of {GOM_MARGINAL_MODES}")
    if np.any(budgets < 0):
        raise ValueError("budgets must be nonnegative")
    if noise <= 0:
        raise ValueError("noise must be positive")

    x = np.zeros((n_users, n_sub), dtype=bool)
    allocated = np.zeros((n_users, n_sub), dtype=bool)
    available = np.ones((n_users, n_sub), dtype=bool)
    interference = np.zeros((n_users, n_sub))
    p = np.zeros((n_users, n_sub))

    for _ in range(n_users * n_sub):
        npi = noise + interference
        p = _masked_waterfill(gains, npi, budgets, allocated | available)
        rates = rate_matrix(p, gains, interference, noise)

        cand = np.where(available, rates, -np.inf)
        best = np.argmax(cand, axis=1)
        best_rate = cand[np.arange(n_users), best]
        eligible = best_rate > RATE_FLOOR
        if not eligible.any():
            break

        if criterion == "lrm":
            winner = select_lrm(np.where(eligible, best_rate, -np.inf))
        else:
            if gom_marginal == "union":
                full = rates.sum(axis=1)
            else:
                with_best = allocated.copy()
                with_best[np.arange(n_users), best] = True
                p_best = _masked_waterfill(gains, npi, budgets, with_best)
                full = rate_matrix(p_best, gains, interference, noise).sum(axis=1)
            p_alloc = _masked_waterfill(gains, npi, budgets, allocated)
            base = rate_matrix(p_alloc, gains, interference, noise).sum(axis=1)
            winner = select_gom(np.where(eligible, full, -np.inf), base)

        sub = best[winner]
        x[winner, sub] = True
        allocated[winner, sub] = True
        available[winner, sub] = False
        if x[:, sub].sum() >= loading_limit:
            available[:, sub] = False
        interference = _planning_interference(p, gains)
        if on_iteration is not None:
            on_iteration(x.copy(), allocated.copy(), available.copy())

    # Final powers: water-fill each user over its granted set only. The
    # interference is triangular in the decoding order, so a descending pass
    # reaches the fixed point; extra rounds are idempotent.
    for _ in range(max(1, finalize_rounds)):
        for k in range(n_users - 1, -1, -1):
            interference = compute_interference(x, p, gains)
            row = _masked_waterfill(
                gains[k : k + 1],
                noise + interference[k : k + 1],
                budgets[k : k + 1],
                allocated[k : k + 1],
            )
            p[k] = row[0]
    interference = compute_interference(x, p, gains)
    final_rates = rate_matrix(p, gains, interference, noise).sum(axis=1)

    return AllocationState(
        x=x,
        p=p,
        interference=interference,
        rates=final_rates,
        allocated_rates=final_rates.copy(),
        allocated_sets=[np.flatnonzero(allocated[k]) for k in range(n_users)],
        available_sets=[np.flatnonzero(available[k]) for k in range(n_users)],
    )
