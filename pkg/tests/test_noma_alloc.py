import itertools

import numpy as np
import pytest

from nomasim.noma_alloc import RATE_FLOOR, allocate, select_gom, select_lrm
from nomasim.powalloc import suwf, user_rate
from nomasim.state import compute_interference, validate_allocation


def exhaustive_orthogonal_optimum(gains, budgets, noise):
    """Brute-force oracle: best sum-rate over all one-user-per-subcarrier
    assignments, each evaluated with per-user water-filling."""
    n_users, n_sub = gains.shape
    best = 0.0
    for owners in itertools.product(range(-1, n_users), repeat=n_sub):
        total = 0.0
        for k in range(n_users):
            subs = [n for n, o in enumerate(owners) if o == k]
            if not subs:
                continue
            g = gains[k, subs]
            npi = np.full(len(subs), noise)
            total += user_rate(suwf(g, npi, budgets[k]), g, npi)
        best = max(best, total)
    return best


class TestComputeInterference:
    def test_last_decoded_user_sees_nothing(self, rng):
        x = rng.random((4, 5)) > 0.4
        p = rng.random((4, 5)) * x
        h = rng.random((4, 5))
        interference = compute_interference(x, p, h)
        assert np.all(interference[-1] == 0)

    def test_two_user_shared_subcarrier(self):
        # natural order: user 0 decoded first sees user 1; user 1 is clean
        x = np.ones((2, 1))
        p = np.array([[0.7], [1.3]])
        h = np.array([[2.0], [0.5]])
        interference = compute_interference(x, p, h)
        assert interference[0, 0] == pytest.approx(1.3 * 0.5)
        assert interference[1, 0] == 0.0

    def test_no_later_cochannel_users(self):
        x = np.array([[1, 0], [0, 1]])
        p = np.array([[1.0, 0.0], [0.0, 1.0]])
        h = np.ones((2, 2))
        interference = compute_interference(x, p, h)
        assert interference[0, 0] == 0.0  # user 1 not on subcarrier 0

    def test_custom_order(self):
        x = np.ones((2, 1))
        p = np.array([[0.7], [1.3]])
        h = np.array([[2.0], [0.5]])
        interference = compute_interference(x, p, h, order=np.array([1, 0]))
        # user 1 decoded first now sees user 0
        assert interference[1, 0] == pytest.approx(0.7 * 2.0)
        assert interference[0, 0] == 0.0

    def test_rejects_invalid_order(self):
        with pytest.raises(ValueError):
            compute_interference(np.ones((2, 1)), np.ones((2, 1)),
                                 np.ones((2, 1)), order=np.array([0, 0]))


class TestSelectors:
    def test_lrm_argmax(self):
        assert select_lrm(np.array([0.5, 2.0, 1.0])) == 1

    def test_lrm_tie_breaks_low_index(self):
        assert select_lrm(np.array([1.0, 1.0])) == 0

    def test_lrm_single_eligible(self):
        assert select_lrm(np.array([-np.inf, 0.3, -np.inf])) == 1

    def test_lrm_no_candidates(self):
        with pytest.raises(ValueError, match="no candidates"):
            select_lrm(np.array([-np.inf, -np.inf]))

    def test_gom_first_iteration_reduces_to_argmax(self):
        full = np.array([1.0, 3.0, 2.0])
        assert select_gom(full, np.zeros(3)) == 1

    def test_gom_strict_dominance(self):
        # user 0 gains nothing from its candidate, user 1 gains
        assert select_gom(np.array([2.0, 1.5]), np.array([2.0, 1.0])) == 1

    def test_gom_no_candidates(self):
        with pytest.raises(ValueError, match="no candidates"):
            select_gom(np.array([-np.inf]), np.array([0.0]))

    def test_gom_matches_independent_marginal_oracle(self, rng):
        # recompute both users' marginal gains from scratch with suwf
        gains = rng.uniform(0.2, 2.0, (2, 3))
        budgets = np.array([1.5, 1.5])
        noise = 0.5
        allocated = [np.array([0]), np.array([1])]
        npi = np.full(3, noise)
        full, base = [], []
        for k in range(2):
            p_all = suwf(gains[k], npi, budgets[k])
            full.append(user_rate(p_all, gains[k], npi))
            g_a = gains[k, allocated[k]]
            p_a = suwf(g_a, npi[allocated[k]], budgets[k])
            base.append(user_rate(p_a, g_a, npi[allocated[k]]))
        expected = int(np.argmax(np.array(full) - np.array(base)))
        assert select_gom(np.array(full), np.array(base)) == expected


class TestAllocate:
    def test_single_user_equals_suwf(self, rng):
        gains = rng.uniform(0.05, 3.0, (1, 8))
        noise = 0.4
        state = allocate(gains, [2.5], noise, 1)
        npi = np.full(8, noise)
        expected = user_rate(suwf(gains[0], npi, 2.5), gains[0], npi)
        assert state.sum_rate == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("criterion", ["lrm", "gom"])
    def test_two_users_one_subcarrier_full_power(self, criterion):
        gains = np.array([[1.0], [1.0]])
        state = allocate(gains, [1.0, 1.0], 1.0, 2, criterion=criterion)
        assert np.all(state.x)
        assert np.allclose(state.p, 1.0)
        assert state.sum_rate == pytest.approx(np.log2(3), abs=1e-9)

    def test_sum_rate_order_invariant_on_shared_subcarrier(self):
        gains = np.array([[1.0], [1.0]])
        forward = allocate(gains, [1.0, 1.0], 1.0, 2)
        backward = allocate(gains[::-1], [1.0, 1.0], 1.0, 2)
        assert forward.sum_rate == pytest.approx(backward.sum_rate, abs=1e-9)

    @pytest.mark.parametrize("criterion", ["lrm", "gom"])
    def test_never_beats_exhaustive_orthogonal_optimum(self, rng, criterion):
        gaps = []
        for _ in range(30):
            gains = rng.uniform(0.01, 1.0, (2, 2)) ** 2
            budgets = rng.uniform(0.5, 2.0, 2)
            noise = 0.25
            state = allocate(gains, budgets, noise, 1, criterion=criterion)
            optimum = exhaustive_orthogonal_optimum(gains, budgets, noise)
            assert state.sum_rate <= optimum + 1e-9
            gaps.append(optimum - state.sum_rate)
        assert np.mean(gaps) >= 0.0

    def test_loading_limit_respected(self, rng):
        for loading in (1, 2, 3):
            gains = rng.uniform(0.01, 1.0, (6, 5))
            state = allocate(gains, np.ones(6), 0.1, loading)
            assert state.x.sum(axis=0).max() <= loading
            validate_allocation(state, np.ones(6), loading)

    def test_monotone_construction_and_intermediate_feasibility(self, rng):
        gains = rng.uniform(0.01, 1.0, (4, 6))
        budgets = np.ones(4)
        seen = []

        def audit(x, allocated, available):
            if seen:
                assert x.sum() == seen[-1] + 1  # exactly one new grant
            seen.append(x.sum())
            assert x.sum() <= 4 * 6
            assert not np.any(allocated & available)
            full = x.sum(axis=0) >= 2
            assert not np.any(available[:, full])

        allocate(gains, budgets, 0.2, 2, on_iteration=audit)
        assert seen  # loop granted at least once

    def test_zero_budget_user_never_wins(self, rng):
        gains = rng.uniform(0.5, 1.0, (2, 4))
        state = allocate(gains, [0.0, 1.0], 0.2, 1)
        assert state.x[0].sum() == 0
        assert state.rates[0] == 0.0

    def test_no_grants_when_all_gains_zero(self):
        state = allocate(np.zeros((2, 3)), [1.0, 1.0], 1.0, 2)
        assert state.x.sum() == 0
        assert np.all(state.rates == 0)

    def test_gom_marginal_modes_both_valid(self, rng):
        gains = rng.uniform(0.05, 1.0, (3, 4))
        budgets = np.ones(3)
        for mode in ("union", "granted-plus-best"):
            state = allocate(gains, budgets, 0.3, 2, criterion="gom",
                             gom_marginal=mode)
            validate_allocation(state, budgets, 2)

    def test_parameter_validation(self):
        gains = np.ones((2, 2))
        with pytest.raises(ValueError):
            allocate(gains, [1.0, 1.0], 1.0, 0)
        with pytest.raises(ValueError):
            allocate(gains, [1.0, -1.0], 1.0, 1)
        with pytest.raises(ValueError):
            allocate(gains, [1.0, 1.0], 0.0, 1)
        with pytest.raises(ValueError):
            allocate(gains, [1.0, 1.0], 1.0, 1, criterion="best")
        with pytest.raises(ValueError):
            allocate(gains, [1.0, 1.0], 1.0, 1, gom_marginal="nope")

    def test_positive_power_implies_assignment(self, rng):
        gains = rng.uniform(0.01, 1.0, (4, 7))
        state = allocate(gains, np.ones(4), 0.15, 2)
        assert np.all(state.p[~state.x] == 0)
        assert np.all(state.p.sum(axis=1) <= 1.0 + 1e-9)


class TestDecodingOrderInvariance:
    def test_sum_rate_invariant_under_any_permutation(self, rng):
        # telescoping of the per-user Shannon rates under successive
        # decoding: the sum depends only on the aggregate received power
        for _ in range(25):
            n_users = int(rng.integers(2, 5))
            n_sub = int(rng.integers(1, 5))
            x = rng.random((n_users, n_sub)) > 0.3
            p = rng.uniform(0, 2, (n_users, n_sub)) * x
            h = rng.uniform(0.01, 3, (n_users, n_sub))
            noise = 0.7
            sums = []
            for order in itertools.permutations(range(n_users)):
                interference = compute_interference(x, p, h, np.array(order))
                rates = np.log2(1 + p * h / (noise + interference)).sum()
                sums.append(rates)
            assert np.max(sums) - np.min(sums) < 1e-9


def test_rate_floor_is_small():
    assert RATE_FLOOR <= 1e-12
