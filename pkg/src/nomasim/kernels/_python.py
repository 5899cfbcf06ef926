"""Pure-numpy kernel implementations (fallback when the extension is absent).

All routines mirror ``_native`` exactly; the batched water-filling solves the
active set in closed form per row, so both backends are deterministic and
agree to floating-point accuracy.
"""

from __future__ import annotations

import numpy as np


def waterfill_rows(inv_levels: np.ndarray, budgets: np.ndarray):
    """Water-fill each row against its inverse channel levels.

    ``inv_levels[r, n]`` is the noise-plus-interference over gain ratio for
    row ``r`` on subcarrier ``n``; ``np.inf`` marks subcarriers that must
    receive zero power (zero gain or excluded from the row's feasible set).

    Returns ``(powers, mu)`` where ``powers[r]`` sums to ``budgets[r]`` (all
    zero when the budget is zero or no level is finite) and ``mu[r]`` is the
    water level (``nan`` when nothing is allocated).
    """
    inv = np.atleast_2d(np.asarray(inv_levels, dtype=np.float64))
    budgets = np.atleast_1d(np.asarray(budgets, dtype=np.float64))
    n_rows, n = inv.shape

    srt = np.sort(inv, axis=1)
    finite = np.isfinite(srt)
    prefix = np.cumsum(np.where(finite, srt, 0.0), axis=1)
    counts = np.arange(1, n + 1, dtype=np.float64)
    mu_candidates = (budgets[:, None] + prefix) / counts
    # Valid active-set sizes form a prefix: u_(a) < (P + S_a)/a.
    valid = finite & (srt < mu_candidates) & (budgets[:, None] > 0)
    active = valid.sum(axis=1)

    mu = np.full(n_rows, np.nan)
    rows = np.flatnonzero(active > 0)
    mu[rows] = mu_candidates[rows, active[rows] - 1]

    with np.errstate(invalid="ignore"):
        powers = np.clip(mu[:, None] - inv, 0.0, None)
    powers[np.isnan(powers)] = 0.0
    powers[~np.isfinite(inv)] = 0.0
    powers[active == 0] = 0.0
    return powers, mu


def candidate_rates(
    inv_granted: np.ndarray, budget: float, inv_candidates: np.ndarray
) -> np.ndarray:
    """Water-filling rate over ``granted + {candidate}`` for each candidate.

    Rates are in bits (sum of log2(mu/u) over the active set).
    """
    granted = np.asarray(inv_granted, dtype=np.float64)
    cands = np.asarray(inv_candidates, dtype=np.float64)
    n_c = cands.shape[0]
    if n_c == 0:
        return np.zeros(0)
    rows = np.empty((n_c, granted.shape[0] + 1))
    rows[:, :-1] = granted
    rows[:, -1] = cands
    powers, mu = waterfill_rows(rows, np.full(n_c, float(budget)))
    rates = np.zeros(n_c)
    hit = powers > 0
    any_hit = hit.any(axis=1)
    if any_hit.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(hit, np.log2(mu[:, None] / rows), 0.0)
        rates[any_hit] = terms[any_hit].sum(axis=1)
    return rates


def viterbi_decode_batch(
    coded: np.ndarray,
    pred: np.ndarray,
    branch_out: np.ndarray,
    state_bit: np.ndarray,
    tail: int,
) -> np.ndarray:
    """Hard-decision Viterbi decoding of a batch of zero-tailed codewords.

    ``coded`` is (B, 2T) with one rate-1/2 output pair per trellis step.
    ``pred[s, j]`` is the j-th predecessor of state ``s``; ``branch_out[s, j]``
    holds the two output bits of that transition packed as ``2*b0 + b1``;
    ``state_bit[s]`` is the input bit implied by landing in state ``s``.
    Path-metric ties resolve to branch 0. Returns (B, T - tail) info bits.
    """
    coded = np.asarray(coded, dtype=np.uint8)
    n_blocks, two_t = coded.shape
    steps = two_t // 2
    obs = coded.reshape(n_blocks, steps, 2)

    pred0 = pred[:, 0]
    pred1 = pred[:, 1]
    out0 = np.stack([branch_out[:, 0] >> 1, branch_out[:, 0] & 1]).astype(np.uint8)
    out1 = np.stack([branch_out[:, 1] >> 1, branch_out[:, 1] & 1]).astype(np.uint8)

    big = np.int32(1 << 20)
    metrics = np.full((n_blocks, pred.shape[0]), big, dtype=np.int32)
    metrics[:, 0] = 0
    survivors = np.empty((steps, n_blocks, pred.shape[0]), dtype=np.uint8)
    for t in range(steps):
        o0 = obs[:, t, 0][:, None]
        o1 = obs[:, t, 1][:, None]
        bm0 = (o0 != out0[0][None, :]).astype(np.int32) + (o1 != out0[1][None, :])
        bm1 = (o0 != out1[0][None, :]).astype(np.int32) + (o1 != out1[1][None, :])
        cand0 = metrics[:, pred0] + bm0
        cand1 = metrics[:, pred1] + bm1
        take1 = cand1 < cand0
        metrics = np.where(take1, cand1, cand0)
        survivors[t] = take1

    states = np.zeros(n_blocks, dtype=np.intp)
    block_ix = np.arange(n_blocks)
    bits = np.empty((steps, n_blocks), dtype=np.uint8)
    for t in range(steps - 1, -1, -1):
        bits[t] = state_bit[states]
        branch = survivors[t, block_ix, states]
        states = pred[states, branch]
    return bits[: steps - tail].T.copy()


def viterbi_decode_soft_batch(
    costs: np.ndarray,
    pred: np.ndarray,
    branch_out: np.ndarray,
    state_bit: np.ndarray,
    tail: int,
) -> np.ndarray:
    """Soft-metric Viterbi: minimizes sum(cost_i * coded_bit_i).

    ``costs[b, i]`` is the penalty of deciding coded bit i as 1 (a max-log
    bit metric); negative values favor 1. Same trellis layout and
    tie-breaking as the hard decoder.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n_blocks, two_t = costs.shape
    steps = two_t // 2
    obs = costs.reshape(n_blocks, steps, 2)

    pred0 = pred[:, 0]
    pred1 = pred[:, 1]
    out0 = np.stack([branch_out[:, 0] >> 1, branch_out[:, 0] & 1]).astype(np.float64)
    out1 = np.stack([branch_out[:, 1] >> 1, branch_out[:, 1] & 1]).astype(np.float64)

    metrics = np.full((n_blocks, pred.shape[0]), np.inf)
    metrics[:, 0] = 0.0
    survivors = np.empty((steps, n_blocks, pred.shape[0]), dtype=np.uint8)
    for t in range(steps):
        c0 = obs[:, t, 0][:, None]
        c1 = obs[:, t, 1][:, None]
        bm0 = c0 * out0[0][None, :] + c1 * out0[1][None, :]
        bm1 = c0 * out1[0][None, :] + c1 * out1[1][None, :]
        cand0 = metrics[:, pred0] + bm0
        cand1 = metrics[:, pred1] + bm1
        take1 = cand1 < cand0
        metrics = np.where(take1, cand1, cand0)
        survivors[t] = take1

    states = np.zeros(n_blocks, dtype=np.intp)
    block_ix = np.arange(n_blocks)
    bits = np.empty((steps, n_blocks), dtype=np.uint8)
    for t in range(steps - 1, -1, -1):
        bits[t] = state_bit[states]
        branch = survivors[t, block_ix, states]
        states = pred[states, branch]
    return bits[: steps - tail].T.copy()
