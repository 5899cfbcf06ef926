"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line; campaigns are deterministic under
the default master seed, so these results are reproducible bit for bit.
Known red: the coded BER gap criterion (see the coded-gap test's message
and the analysis printed alongside; the hard-decision chain is pinned by
design and cannot reach a sub-1-dB gap).
"""

import itertools

import numpy as np
import pytest

from nomasim.harness import ScenarioConfig, run_drops, summarize
from nomasim.linklevel import ebn0_at_ber, rayleigh_bpsk_ber, simulate_ber
from nomasim.metrics import jain_index
from nomasim.noma_alloc import allocate
from nomasim.ofdma_alloc import pf_allocate
from nomasim.powalloc import iterative_waterfilling, suwf
from nomasim.state import compute_interference
from test_noma_alloc import exhaustive_orthogonal_optimum

DROPS = 200


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _campaign(**kwargs):
    cfg = ScenarioConfig(drops=DROPS, **kwargs)
    records = run_drops(cfg)
    return records, {row["scheme"]: row for row in summarize(records, cfg)}


@pytest.fixture(scope="module")
def camp_k50():
    return _campaign(K=50)


@pytest.fixture(scope="module")
def camp_k10_pf():
    return _campaign(K=10, schemes=("OFDMA_PF", "MAC_IWF"))


@pytest.fixture(scope="module", params=[30, 40])
def camp_fairness(request):
    records, summary = _campaign(
        K=request.param, schemes=("NOMA_LRM", "NOMA_GOM", "OFDMA_PF"))
    return request.param, summary


@pytest.fixture(scope="module")
def camp_loading():
    out = {}
    for loading in (3, 4):
        _, summary = _campaign(K=50, L=loading, schemes=("NOMA_GOM",))
        out[loading] = summary["NOMA_GOM"]
    return out


@pytest.fixture(scope="module")
def link_uncoded():
    return simulate_ber(
        ebn0_grid_db=list(range(0, 22, 2)), rng=np.random.default_rng(20140824),
        loading=2, coded=False, target_errors=2500, max_frames=100_000)


@pytest.fixture(scope="module")
def link_coded_hard():
    return simulate_ber(
        ebn0_grid_db=[11.0, 12.0, 13.0, 14.0, 15.0],
        rng=np.random.default_rng(20140824), loading=2, coded=True,
        decision="hard", target_errors=1200, max_frames=100_000)


def by_scheme(points, scheme):
    return [p for p in points if p.scheme == scheme]


class TestUpperBoundRatio:
    def test_noma_gom_ratio(self, camp_k50):
        _, summary = camp_k50
        ratio = summary["NOMA_GOM"]["ratio_to_iwf"]
        _report("upper-bound ratio (NOMA-GOM/IWF in [0.91, 0.99])",
                0.91 <= ratio <= 0.99, f"ratio={ratio:.4f}")

    def test_ofdma_pf_ratio(self, camp_k50):
        _, summary = camp_k50
        ratio = summary["OFDMA_PF"]["ratio_to_iwf"]
        _report("upper-bound ratio (OFDMA-PF/IWF in [0.76, 0.86])",
                0.76 <= ratio <= 0.86, f"ratio={ratio:.4f}")


class TestGapGrowth:
    def test_ofdma_ratio_shrinks_with_k(self, camp_k50, camp_k10_pf):
        _, s50 = camp_k50
        _, s10 = camp_k10_pf
        r50 = s50["OFDMA_PF"]["ratio_to_iwf"]
        r10 = s10["OFDMA_PF"]["ratio_to_iwf"]
        _report("gap growth (OFDMA ratio at K=50 below K=10 by >= 0.03)",
                r10 - r50 >= 0.03, f"K10={r10:.4f} K50={r50:.4f} drop={r10-r50:.4f}")


class TestLrmGomEquivalence:
    def test_spectral_efficiency_within_two_percent(self, camp_k50):
        _, summary = camp_k50
        lrm = summary["NOMA_LRM"]["mean_sum_se"]
        gom = summary["NOMA_GOM"]["mean_sum_se"]
        rel = abs(lrm - gom) / gom
        _report("LRM vs GOM spectral efficiency (<= 2%)",
                rel <= 0.02, f"LRM={lrm:.4f} GOM={gom:.4f} diff={100*rel:.2f}%")


class TestFairnessOrdering:
    def test_k50(self, camp_k50):
        _, summary = camp_k50
        self._check(50, summary)

    def test_k30_k40(self, camp_fairness):
        k, summary = camp_fairness
        self._check(k, summary)

    @staticmethod
    def _check(k, summary):
        gom, lrm, pf = (summary["NOMA_GOM"], summary["NOMA_LRM"],
                        summary["OFDMA_PF"])
        ordered = gom["mean_jain"] > lrm["mean_jain"] > pf["mean_jain"]
        separated = (gom["mean_jain"] - gom["ci95_jain"]
                     > pf["mean_jain"] + pf["ci95_jain"])
        _report(
            f"fairness ordering at K={k} (GOM > LRM > PF, CIs split GOM/PF)",
            ordered and separated,
            f"GOM={gom['mean_jain']:.4f}±{gom['ci95_jain']:.4f} "
            f"LRM={lrm['mean_jain']:.4f} "
            f"PF={pf['mean_jain']:.4f}±{pf['ci95_jain']:.4f}",
        )


class TestFairnessVsLoading:
    def test_monotone_in_loading(self, camp_k50, camp_loading):
        _, s50 = camp_k50
        l2 = s50["NOMA_GOM"]
        l3, l4 = camp_loading[3], camp_loading[4]
        ok_43 = (l4["mean_jain"]
                 >= l3["mean_jain"] - (l3["ci95_jain"] + l4["ci95_jain"]))
        ok_32 = (l3["mean_jain"]
                 >= l2["mean_jain"] - (l2["ci95_jain"] + l3["ci95_jain"]))
        _report(
            "fairness vs loading at K=50 (Jain L4 >= L3 >= L2 within CI step)",
            ok_43 and ok_32,
            f"L2={l2['mean_jain']:.4f} L3={l3['mean_jain']:.4f} "
            f"L4={l4['mean_jain']:.4f}",
        )


class TestBerCriteria:
    def test_uncoded_gap(self, link_uncoded):
        noma = ebn0_at_ber(by_scheme(link_uncoded, "NOMA"), 1e-2)
        ofdma = ebn0_at_ber(by_scheme(link_uncoded, "OFDMA"), 1e-2)
        gap = noma - ofdma
        _report("uncoded BER gap at 1e-2 (in (0, 3] dB)",
                0.0 < gap <= 3.0, f"NOMA={noma:.2f} dB OFDMA={ofdma:.2f} dB "
                f"gap={gap:.2f} dB")

    def test_coded_gap(self, link_coded_hard):
        noma = ebn0_at_ber(by_scheme(link_coded_hard, "NOMA"), 1e-3)
        ofdma = ebn0_at_ber(by_scheme(link_coded_hard, "OFDMA"), 1e-3)
        gap = noma - ofdma
        soft = simulate_ber(
            ebn0_grid_db=[6.0, 7.0, 8.0, 9.0], rng=np.random.default_rng(7),
            loading=2, coded=True, decision="soft", target_errors=500,
            max_frames=100_000)
        soft_gap = (ebn0_at_ber(by_scheme(soft, "NOMA"), 1e-3)
                    - ebn0_at_ber(by_scheme(soft, "OFDMA"), 1e-3))
        print(f"[INFO] coded gap with max-log soft metrics: {soft_gap:.2f} dB "
              "(the hard-decision chain is the committed design; equal-power "
              "joint detection costs ~1.3-1.5 dB here under either chain, so "
              "this criterion is expected red - see README modeling notes)")
        _report("coded BER gap at 1e-3 (NOMA - OFDMA <= 1.0 dB)",
                gap <= 1.0, f"NOMA={noma:.2f} dB OFDMA={ofdma:.2f} dB "
                f"gap={gap:.2f} dB")


class TestAnalyticBerOracle:
    def test_single_user_rayleigh_closed_form(self):
        points = simulate_ber(
            ebn0_grid_db=[5.0, 10.0, 15.0], rng=np.random.default_rng(314),
            loading=1, coded=False, target_errors=40_000, max_frames=2_000_000)
        worst = 0.0
        for p in by_scheme(points, "OFDMA"):
            expected = rayleigh_bpsk_ber(10 ** (p.ebn0_db / 10))
            worst = max(worst, abs(p.ber - expected) / expected)
        _report("analytic BER oracle (within 5% of 0.5(1-sqrt(g/(1+g))))",
                worst <= 0.05, f"worst relative error {100*worst:.2f}%")


class TestPropertySuite:
    def test_per_drop_sandwich_and_loading(self, camp_k50):
        records, _ = camp_k50
        by_drop = {}
        for r in records:
            by_drop.setdefault(r.drop_id, {})[r.scheme] = r.sum_se
        ok = all(
            d["NOMA_GOM"] <= d["MAC_IWF"] + 1e-9
            and d["NOMA_LRM"] <= d["MAC_IWF"] + 1e-9
            and d["OFDMA_PF"] <= d["MAC_IWF"] + 1e-9
            for d in by_drop.values()
        )
        # loading/budget/nonnegativity are validated on every emitted state
        # inside run_system_drop; reaching here means no drop violated them
        _report("property: per-drop sum-rate sandwich (IWF upper-bounds all)",
                ok, f"{len(by_drop)} drops checked; structural invariants "
                "enforced on every emitted allocation")

    def test_decoding_order_invariance(self):
        rng = np.random.default_rng(2718)
        worst = 0.0
        for _ in range(40):
            n_users = int(rng.integers(2, 5))
            n_sub = int(rng.integers(1, 5))
            x = rng.random((n_users, n_sub)) > 0.3
            p = rng.uniform(0, 2, (n_users, n_sub)) * x
            h = rng.uniform(0.01, 3, (n_users, n_sub))
            sums = []
            for order in itertools.permutations(range(n_users)):
                interference = compute_interference(x, p, h, np.array(order))
                sums.append(np.log2(1 + p * h / (0.5 + interference)).sum())
            worst = max(worst, np.max(sums) - np.min(sums))
        _report("property: decoding-order sum-rate invariance (K<=4)",
                worst < 1e-9, f"max spread {worst:.2e} bits")

    def test_suwf_kkt(self):
        rng = np.random.default_rng(999)
        ok = True
        for _ in range(200):
            n = int(rng.integers(1, 10))
            gains = rng.uniform(0.01, 10, n)
            npi = rng.uniform(0.01, 5, n)
            p = suwf(gains, npi, float(rng.uniform(0.01, 20)))
            levels = npi / gains
            active = p > 0
            if not active.any():
                continue
            mu = (p + levels)[active]
            scale = max(1.0, mu[0])
            ok &= bool(np.all(np.abs(mu - mu[0]) < 1e-7 * scale))
            ok &= bool(np.all(levels[~active] >= mu[0] - 1e-7 * scale))
        _report("property: SUWF KKT structure", ok, "200 random instances")

    def test_jain_bounds_and_scale_invariance(self):
        rng = np.random.default_rng(11)
        ok = True
        for _ in range(300):
            k = int(rng.integers(1, 30))
            rates = rng.uniform(0, 10, k)
            rates[int(rng.integers(0, k))] = rng.uniform(0.1, 10)
            j = jain_index(rates)
            ok &= 1.0 / k - 1e-12 <= j <= 1.0 + 1e-12
            ok &= abs(jain_index(rates * 7.3) - j) <= 1e-12
        _report("property: Jain bounds and scale invariance", ok,
                "300 random vectors")

    def test_bitwise_reproducibility(self, tmp_path):
        from nomasim.harness import run_campaign
        cfg_kwargs = dict(K=6, N=8, L=2, drops=3, master_seed=20140824)
        cfg = ScenarioConfig(**cfg_kwargs)
        run_campaign(cfg, str(tmp_path / "a"))
        run_campaign(ScenarioConfig(**cfg_kwargs), str(tmp_path / "b"))
        same = all(
            (tmp_path / "a" / name).read_bytes()
            == (tmp_path / "b" / name).read_bytes()
            for name in ("system_drops.csv", "system_summary.csv")
        )
        _report("property: bitwise reproducibility under fixed master_seed",
                same, "3-drop campaign CSVs identical byte for byte")


class TestBruteForceOracle:
    def test_greedy_never_beats_exhaustive(self):
        rng = np.random.default_rng(424242)
        gaps = []
        ok = True
        for _ in range(100):
            gains = rng.uniform(0.01, 1.0, (2, 2)) ** 2
            budgets = rng.uniform(0.5, 2.0, 2)
            noise = 0.25
            optimum = exhaustive_orthogonal_optimum(gains, budgets, noise)
            for criterion in ("lrm", "gom"):
                achieved = allocate(gains, budgets, noise, 1,
                                    criterion=criterion).sum_rate
                ok &= achieved <= optimum + 1e-9
                gaps.append(optimum - achieved)
        _report(
            "brute-force oracle (K=2, N=2, L=1 greedy <= exhaustive optimum)",
            ok,
            f"mean gap {np.mean(gaps):.4f} bits (max {np.max(gaps):.4f}); "
            "suboptimality documented, no threshold",
        )
