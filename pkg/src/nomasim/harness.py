"""Scenario configuration, seeded Monte Carlo campaigns and CSV emission.

Every drop draws one geometry/shadowing/fading realization; all requested
schemes then run on that identical channel matrix. Per-drop seeds come from
a stable 64-bit mix of the master seed and the drop index, so a campaign's
output is a pure function of (config, master_seed).
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import linklevel, metrics
from .channel import MIN_USER_DISTANCE_M, PED_B, compose_channel_matrix, place_users
from .noma_alloc import allocate
from .ofdma_alloc import pf_allocate
from .powalloc import iterative_waterfilling
from .state import validate_allocation

log = logging.getLogger(__name__)

SCHEMES = ("NOMA_LRM", "NOMA_GOM", "OFDMA_PF", "MAC_IWF")

RB_BANDWIDTH_HZ = 180e3  # 12 subcarriers x 15 kHz

DROP_CSV_HEADER = ["drop_id", "scheme", "K", "N", "L", "sum_se_bps_hz", "jain"]
SUMMARY_CSV_HEADER = [
    "scheme", "K", "L", "drops", "mean_sum_se", "ci95_sum_se",
    "mean_jain", "ci95_jain", "ratio_to_iwf",
]
LINK_CSV_HEADER = ["scheme", "coded", "ebn0_db", "bits", "bit_errors", "ber", "flagged"]


class ConfigError(ValueError):
    """Invalid scenario/link configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class ScenarioConfig:
    """System-level scenario; defaults follow the evaluated single cell:
    0.5 km radius, 23 dBm per user, 50 resource blocks in 10 MHz,
    -173 dBm/Hz noise density, 8 dB shadowing."""

    K: int = 50
    N: int = 50
    L: int = 2
    cell_radius_m: float = 500.0
    max_power_dbm: float = 23.0
    bandwidth_hz: float = 10e6
    noise_psd_dbm_hz: float = -173.0
    shadow_sigma_db: float = 8.0
    drops: int = 200
    master_seed: int = 20140824
    schemes: tuple[str, ...] = SCHEMES

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        if self.drops < 1:
            raise ConfigError("drops must be at least 1")
        if not 1 <= self.L <= self.K:
            raise ConfigError("need 1 <= L <= K")
        if self.N < 1:
            raise ConfigError("N must be at least 1")
        if self.N * RB_BANDWIDTH_HZ > self.bandwidth_hz:
            raise ConfigError("N resource blocks exceed the bandwidth")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown schemes: {bad}")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")


@dataclass(frozen=True)
class LinkLevelConfig:
    """Link-level BER experiment: 64 subcarriers at 15 kHz, L=2 users."""

    n_subcarriers: int = 64
    spacing_hz: float = 15000.0
    L: int = 2
    modulation: str = "BPSK"
    coded: bool = False
    ebn0_grid_db: tuple[float, ...] = tuple(float(v) for v in range(0, 22, 2))
    target_errors: int = 500
    max_frames: int = 100_000
    master_seed: int = 20140824

    def __post_init__(self):
        if not self.ebn0_grid_db:
            raise ConfigError("ebn0_grid_db must be nonempty")
        if list(self.ebn0_grid_db) != sorted(self.ebn0_grid_db):
            raise ConfigError("ebn0_grid_db must be sorted ascending")
        if self.L < 1:
            raise ConfigError("L must be at least 1")
        if self.modulation != "BPSK":
            raise ConfigError("only BPSK modulation is supported")
        if self.target_errors < 1 or self.max_frames < 1:
            raise ConfigError("stop rule parameters must be positive")


_M64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_drop_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit per-drop seed; injective in the index for a fixed
    master seed (composition of bijective mixes)."""
    return _splitmix64((master_seed & _M64) ^ _splitmix64(index & _M64))


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def noise_per_rb_mw(noise_psd_dbm_hz: float) -> float:
    """Noise power per resource block in mW (PSD integrated over 180 kHz)."""
    return 10.0 ** ((noise_psd_dbm_hz + 10.0 * math.log10(RB_BANDWIDTH_HZ)) / 10.0)


def run_system_drop(
    config: ScenarioConfig, drop_seed: int, drop_id: int = 0
) -> list[metrics.MetricRecord]:
    """One geometry+channel realization, all requested schemes on it.

    Users are indexed by decreasing aggregate received power, so the
    ascending-index successive decoding order decodes stronger users first
    (standard uplink SIC; later-decoded weak users see a clean channel).
    """
    rng = np.random.default_rng(drop_seed)
    geometry = place_users(config.K, config.cell_radius_m, MIN_USER_DISTANCE_M, rng)
    channel = compose_channel_matrix(
        geometry,
        PED_B,
        rng,
        n_subcarriers=config.N,
        subcarrier_spacing_hz=RB_BANDWIDTH_HZ,
        shadow_sigma_db=config.shadow_sigma_db,
        freq_offset_hz=RB_BANDWIDTH_HZ / 2.0,
    )
    strongest_first = np.argsort(-channel.gains.sum(axis=1), kind="stable")
    channel.gains = channel.gains[strongest_first]
    budgets = np.full(config.K, dbm_to_mw(config.max_power_dbm))
    noise = noise_per_rb_mw(config.noise_psd_dbm_hz)

    records = []
    for scheme in config.schemes:
        if scheme == "MAC_IWF":
            result = iterative_waterfilling(channel, budgets, noise)
            if not result.converged:
                log.warning("drop %d: IWF hit the round limit", drop_id)
            state = result.state
            loading_limit = config.K
        elif scheme == "NOMA_LRM":
            state = allocate(channel, budgets, noise, config.L, criterion="lrm")
            loading_limit = config.L
        elif scheme == "NOMA_GOM":
            state = allocate(channel, budgets, noise, config.L, criterion="gom")
            loading_limit = config.L
        elif scheme == "OFDMA_PF":
            state = pf_allocate(channel, budgets, noise)
            loading_limit = 1
        else:  # pragma: no cover - rejected by the config validator
            raise ConfigError(f"unknown scheme {scheme}")
        try:
            validate_allocation(state, budgets, loading_limit)
        except ValueError as exc:
            raise RuntimeError(f"drop {drop_id}, scheme {scheme}: {exc}") from exc
        per_user = state.rates / config.N
        records.append(
            metrics.MetricRecord(
                scheme=scheme,
                drop_id=drop_id,
                K=config.K,
                N=config.N,
                L=config.L,
                sum_se=float(per_user.sum()),
                jain=metrics.jain_index_or_nan(per_user),
                per_user_rates=per_user,
            )
        )
    return records


def _drop_task(args) -> list[metrics.MetricRecord]:
    config, seed, drop_id = args
    return run_system_drop(config, seed, drop_id)


def run_drops(config: ScenarioConfig, jobs: int = 1) -> list[metrics.MetricRecord]:
    """All drops of a campaign, in ascending drop order regardless of
    scheduling."""
    tasks = [
        (config, derive_drop_seed(config.master_seed, i), i)
        for i in range(config.drops)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_drop = list(pool.map(_drop_task, tasks, chunksize=4))
    else:
        per_drop = [_drop_task(t) for t in tasks]
    return [record for drop in per_drop for record in drop]


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width (0 for n < 2)."""
    if values.size == 0:
        return float("nan"), 0.0
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean, half


def summarize(
    records: list[metrics.MetricRecord], config: ScenarioConfig
) -> list[dict]:
    """Per-scheme aggregate rows in the configured scheme order."""
    rows = []
    by_scheme = {
        scheme: [r for r in records if r.scheme == scheme]
        for scheme in config.schemes
    }
    iwf_mean = float("nan")
    if "MAC_IWF" in by_scheme and by_scheme["MAC_IWF"]:
        iwf_mean = float(np.mean([r.sum_se for r in by_scheme["MAC_IWF"]]))
    for scheme in config.schemes:
        recs = by_scheme[scheme]
        se = np.array([r.sum_se for r in recs])
        jain_all = np.array([r.jain for r in recs])
        jain = jain_all[~np.isnan(jain_all)]
        undefined = int(np.isnan(jain_all).sum())
        if undefined:
            log.warning(
                "%s: %d drop(s) with undefined Jain index excluded", scheme, undefined
            )
        mean_se, ci_se = _mean_ci(se)
        mean_jain, ci_jain = _mean_ci(jain)
        rows.append(
            {
                "scheme": scheme,
                "K": config.K,
                "L": config.L,
                "drops": config.drops,
                "mean_sum_se": mean_se,
                "ci95_sum_se": ci_se,
                "mean_jain": mean_jain,
                "ci95_jain": ci_jain,
                "ratio_to_iwf": mean_se / iwf_mean if iwf_mean == iwf_mean else float("nan"),
            }
        )
    return rows


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def run_campaign(
    config: ScenarioConfig, out_dir: str, jobs: int = 1
) -> list[dict]:
    """Execute all drops, write per-drop and summary CSVs, return the
    summary rows."""
    records = run_drops(config, jobs=jobs)
    summary = summarize(records, config)
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(
        os.path.join(out_dir, "system_drops.csv"),
        DROP_CSV_HEADER,
        (
            [r.drop_id, r.scheme, r.K, r.N, r.L, r.sum_se, r.jain]
            for r in records
        ),
    )
    _write_csv(
        os.path.join(out_dir, "system_summary.csv"),
        SUMMARY_CSV_HEADER,
        ([row[col] for col in SUMMARY_CSV_HEADER] for row in summary),
    )
    return summary


def run_link_points(config: LinkLevelConfig) -> list[linklevel.BerPoint]:
    rng = np.random.default_rng(derive_drop_seed(config.master_seed, 0))
    return linklevel.simulate_ber(
        ebn0_grid_db=config.ebn0_grid_db,
        rng=rng,
        loading=config.L,
        coded=config.coded,
        n_subcarriers=config.n_subcarriers,
        spacing_hz=config.spacing_hz,
        target_errors=config.target_errors,
        max_frames=config.max_frames,
    )


def run_link_campaign(config: LinkLevelConfig, out_dir: str) -> list[linklevel.BerPoint]:
    """Run the BER grid and write the link CSV (one row per scheme/point)."""
    points = run_link_points(config)
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(
        os.path.join(out_dir, "link_ber.csv"),
        LINK_CSV_HEADER,
        (
            [p.scheme, p.coded, p.ebn0_db, p.bits, p.bit_errors, p.ber, p.flagged]
            for p in points
        ),
    )
    return points


_SCENARIO_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_LINK_FIELDS = {f.name: f for f in fields(LinkLevelConfig)}


def _coerce(name: str, ftype: str, raw: str):
    raw = raw.strip()
    try:
        if ftype.startswith("int"):
            return int(raw)
        if ftype.startswith("float"):
            return float(raw)
        if ftype.startswith("bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if ftype.startswith("tuple[str"):
            return tuple(part.strip() for part in raw.split(",") if part.strip())
        if ftype.startswith("tuple[float"):
            return tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from exc
    return raw


def parse_config_text(text: str, kind: str):
    """Parse flat key=value config text into a ScenarioConfig or
    LinkLevelConfig; unknown keys are a hard error."""
    known = _SCENARIO_FIELDS if kind == "scenario" else _LINK_FIELDS
    cls = ScenarioConfig if kind == "scenario" else LinkLevelConfig
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, str(known[key].type), value)
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str, kind: str):
    with open(path) as fh:
        return parse_config_text(fh.read(), kind)


def with_overrides(config, **overrides):
    """Dataclass ``replace`` that drops ``None`` values."""
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
