# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: water-filling, candidate-rate scans, hard Viterbi.

Semantics match ``nomasim.kernels._python`` exactly (same tie-breaking,
same closed-form water level); only the inner loops are compiled.
"""

from libc.math cimport INFINITY, NAN, isfinite, log2
from libc.stdlib cimport free, malloc, qsort
from libc.string cimport memmove

import numpy as np


cdef int _cmp_double(const void *a, const void *b) noexcept nogil:
    cdef double x = (<const double *> a)[0]
    cdef double y = (<const double *> b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef double _water_level(double *sorted_levels, Py_ssize_t n, double budget) noexcept nogil:
    """Water level for sorted finite-prefix inverse levels; NAN when idle."""
    cdef Py_ssize_t a
    cdef double prefix = 0.0
    cdef double mu = 0.0
    cdef double best = INFINITY  # sentinel: not found
    cdef Py_ssize_t active = 0
    if budget <= 0.0:
        return <double> NAN
    for a in range(n):
        if not isfinite(sorted_levels[a]):
            break
        prefix += sorted_levels[a]
        mu = (budget + prefix) / (a + 1)
        if sorted_levels[a] < mu:
            active = a + 1
            best = mu
        else:
            break
    if active == 0:
        return <double> NAN
    return best


def waterfill_rows(inv_levels, budgets):
    """See ``nomasim.kernels._python.waterfill_rows``."""
    cdef double[:, ::1] inv = np.ascontiguousarray(
        np.atleast_2d(inv_levels), dtype=np.float64)
    cdef double[::1] buds = np.ascontiguousarray(
        np.atleast_1d(budgets), dtype=np.float64)
    cdef Py_ssize_t n_rows = inv.shape[0]
    cdef Py_ssize_t n = inv.shape[1]
    powers_arr = np.zeros((n_rows, n), dtype=np.float64)
    mu_arr = np.full(n_rows, np.nan, dtype=np.float64)
    cdef double[:, ::1] powers = powers_arr
    cdef double[::1] mu_out = mu_arr
    cdef double *buf = <double *> malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t r, i
    cdef double mu, v
    try:
        with nogil:
            for r in range(n_rows):
                for i in range(n):
                    buf[i] = inv[r, i]
                qsort(buf, n, sizeof(double), _cmp_double)
                mu = _water_level(buf, n, buds[r])
                if mu == mu:  # not NaN
                    mu_out[r] = mu
                    for i in range(n):
                        v = mu - inv[r, i]
                        if v > 0.0 and isfinite(inv[r, i]):
                            powers[r, i] = v
    finally:
        free(buf)
    return powers_arr, mu_arr


def candidate_rates(inv_granted, budget, inv_candidates):
    """See ``nomasim.kernels._python.candidate_rates``."""
    cdef double[::1] granted = np.ascontiguousarray(inv_granted, dtype=np.float64)
    cdef double[::1] cands = np.ascontiguousarray(inv_candidates, dtype=np.float64)
    cdef Py_ssize_t m = granted.shape[0]
    cdef Py_ssize_t n_c = cands.shape[0]
    rates_arr = np.zeros(n_c, dtype=np.float64)
    cdef double[::1] rates = rates_arr
    if n_c == 0:
        return rates_arr
    cdef double p = float(budget)
    cdef double *base = <double *> malloc((m + 1) * sizeof(double))
    cdef double *row = <double *> malloc((m + 1) * sizeof(double))
    if base == NULL or row == NULL:
        free(base)
        free(row)
        raise MemoryError()
    cdef Py_ssize_t c, i, lo, hi, mid, pos
    cdef double u, mu, rate
    try:
        with nogil:
            for i in range(m):
                base[i] = granted[i]
            qsort(base, m, sizeof(double), _cmp_double)
            for c in range(n_c):
                u = cands[c]
                # insertion position keeps the merged row sorted
                lo = 0
                hi = m
                while lo < hi:
                    mid = (lo + hi) // 2
                    if base[mid] < u:
                        lo = mid + 1
                    else:
                        hi = mid
                pos = lo
                if pos > 0:
                    memmove(row, base, pos * sizeof(double))
                row[pos] = u
                if pos < m:
                    memmove(row + pos + 1, base + pos, (m - pos) * sizeof(double))
                mu = _water_level(row, m + 1, p)
                rate = 0.0
                if mu == mu:
                    for i in range(m + 1):
                        if row[i] < mu:
                            rate += log2(mu / row[i])
                        else:
                            break
                rates[c] = rate
    finally:
        free(base)
        free(row)
    return rates_arr


def viterbi_decode_soft_batch(costs, pred, branch_out, state_bit, tail):
    """See ``nomasim.kernels._python.viterbi_decode_soft_batch``."""
    cdef double[:, ::1] obs = np.ascontiguousarray(costs, dtype=np.float64)
    cdef int[:, ::1] pred_v = np.ascontiguousarray(pred, dtype=np.intc)
    cdef unsigned char[:, ::1] bout = np.ascontiguousarray(branch_out, dtype=np.uint8)
    cdef unsigned char[::1] sbit = np.ascontiguousarray(state_bit, dtype=np.uint8)
    cdef Py_ssize_t n_blocks = obs.shape[0]
    cdef Py_ssize_t steps = obs.shape[1] // 2
    cdef Py_ssize_t n_states = pred_v.shape[0]
    cdef Py_ssize_t n_tail = tail
    out_arr = np.empty((n_blocks, steps - n_tail), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr

    cdef double *pm = <double *> malloc(n_states * sizeof(double))
    cdef double *pm_next = <double *> malloc(n_states * sizeof(double))
    cdef unsigned char *surv = <unsigned char *> malloc(steps * n_states)
    if pm == NULL or pm_next == NULL or surv == NULL:
        free(pm)
        free(pm_next)
        free(surv)
        raise MemoryError()

    cdef Py_ssize_t b, t, s
    cdef double o0, o1, c0, c1, bm0, bm1
    cdef int sym0, sym1
    cdef double *dtmp
    cdef Py_ssize_t cur
    try:
        with nogil:
            for b in range(n_blocks):
                for s in range(n_states):
                    pm[s] = INFINITY
                pm[0] = 0.0
                for t in range(steps):
                    o0 = obs[b, 2 * t]
                    o1 = obs[b, 2 * t + 1]
                    for s in range(n_states):
                        sym0 = bout[s, 0]
                        sym1 = bout[s, 1]
                        bm0 = o0 * (sym0 >> 1) + o1 * (sym0 & 1)
                        bm1 = o0 * (sym1 >> 1) + o1 * (sym1 & 1)
                        c0 = pm[pred_v[s, 0]] + bm0
                        c1 = pm[pred_v[s, 1]] + bm1
                        if c1 < c0:
                            pm_next[s] = c1
                            surv[t * n_states + s] = 1
                        else:
                            pm_next[s] = c0
                            surv[t * n_states + s] = 0
                    dtmp = pm
                    pm = pm_next
                    pm_next = dtmp
                cur = 0
                for t in range(steps - 1, -1, -1):
                    if t < steps - n_tail:
                        out[b, t] = sbit[cur]
                    cur = pred_v[cur, surv[t * n_states + cur]]
    finally:
        free(pm)
        free(pm_next)
        free(surv)
    return out_arr


def viterbi_decode_batch(coded, pred, branch_out, state_bit, tail):
    """See ``nomasim.kernels._python.viterbi_decode_batch``."""
    cdef unsigned char[:, ::1] obs = np.ascontiguousarray(coded, dtype=np.uint8)
    cdef int[:, ::1] pred_v = np.ascontiguousarray(pred, dtype=np.intc)
    cdef unsigned char[:, ::1] bout = np.ascontiguousarray(branch_out, dtype=np.uint8)
    cdef unsigned char[::1] sbit = np.ascontiguousarray(state_bit, dtype=np.uint8)
    cdef Py_ssize_t n_blocks = obs.shape[0]
    cdef Py_ssize_t steps = obs.shape[1] // 2
    cdef Py_ssize_t n_states = pred_v.shape[0]
    cdef Py_ssize_t n_tail = tail
    out_arr = np.empty((n_blocks, steps - n_tail), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr

    cdef int *pm = <int *> malloc(n_states * sizeof(int))
    cdef int *pm_next = <int *> malloc(n_states * sizeof(int))
    cdef unsigned char *surv = <unsigned char *> malloc(steps * n_states)
    if pm == NULL or pm_next == NULL or surv == NULL:
        free(pm)
        free(pm_next)
        free(surv)
        raise MemoryError()

    cdef Py_ssize_t b, t, s
    cdef int o0, o1, c0, c1, sym0, sym1, bm0, bm1
    cdef int big = 1 << 20
    cdef int *tmp
    cdef Py_ssize_t cur
    try:
        with nogil:
            for b in range(n_blocks):
                for s in range(n_states):
                    pm[s] = big
                pm[0] = 0
                for t in range(steps):
                    o0 = obs[b, 2 * t]
                    o1 = obs[b, 2 * t + 1]
                    for s in range(n_states):
                        sym0 = bout[s, 0]
                        sym1 = bout[s, 1]
                        bm0 = (o0 != (sym0 >> 1)) + (o1 != (sym0 & 1))
                        bm1 = (o0 != (sym1 >> 1)) + (o1 != (sym1 & 1))
                        c0 = pm[pred_v[s, 0]] + bm0
                        c1 = pm[pred_v[s, 1]] + bm1
                        if c1 < c0:
                            pm_next[s] = c1
                            surv[t * n_states + s] = 1
                        else:
                            pm_next[s] = c0
                            surv[t * n_states + s] = 0
                    tmp = pm
                    pm = pm_next
                    pm_next = tmp
                cur = 0
                for t in range(steps - 1, -1, -1):
                    if t < steps - n_tail:
                        out[b, t] = sbit[cur]
                    cur = pred_v[cur, surv[t * n_states + cur]]
    finally:
        free(pm)
        free(pm_next)
        free(surv)
    return out_arr
