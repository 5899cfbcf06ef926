"""Uplink NOMA simulator.

Subcarrier/power allocation with a per-subcarrier loading limit (LRM and
GOM grant criteria), OFDMA proportional-fair and generic-MAC iterative
water-filling benchmarks, and a BPSK link-level chain with exhaustive
maximum-likelihood multi-user detection.
"""

from .channel import (
    PED_B,
    ChannelMatrix,
    TapDelayProfile,
    UserGeometry,
    compose_channel_matrix,
    fading_frequency_response,
    pathloss_db,
    place_users,
    shadowing_db,
)
from .harness import (
    LinkLevelConfig,
    ScenarioConfig,
    run_campaign,
    run_link_campaign,
    run_system_drop,
)
from .linklevel import (
    HALF_RATE_K7,
    CodeSpec,
    bpsk_demap,
    bpsk_map,
    conv_encode,
    ml_mud,
    simulate_ber,
    superimpose,
    viterbi_decode,
)
from .metrics import MetricRecord, jain_index, sum_spectral_efficiency
from .noma_alloc import allocate, select_gom, select_lrm
from .ofdma_alloc import pf_allocate
from .powalloc import iterative_waterfilling, suwf, user_rate
from .state import AllocationState, compute_interference, validate_allocation

__all__ = [
    "AllocationState",
    "ChannelMatrix",
    "CodeSpec",
    "HALF_RATE_K7",
    "LinkLevelConfig",
    "MetricRecord",
    "PED_B",
    "ScenarioConfig",
    "TapDelayProfile",
    "UserGeometry",
    "allocate",
    "bpsk_demap",
    "bpsk_map",
    "compose_channel_matrix",
    "compute_interference",
    "conv_encode",
    "fading_frequency_response",
    "iterative_waterfilling",
    "jain_index",
    "ml_mud",
    "pathloss_db",
    "pf_allocate",
    "place_users",
    "run_campaign",
    "run_link_campaign",
    "run_system_drop",
    "select_gom",
    "select_lrm",
    "shadowing_db",
    "simulate_ber",
    "sum_spectral_efficiency",
    "superimpose",
    "suwf",
    "user_rate",
    "validate_allocation",
    "viterbi_decode",
]
