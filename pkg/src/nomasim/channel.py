"""User geometry and propagation: pathloss, shadowing, tapped-delay fading.

The large-scale model is COST231-Hata (urban microcell parameterization)
with lognormal shadowing; small-scale fading comes from an ITU Pedestrian B
tapped delay line evaluated in the frequency domain. One fading realization
is drawn per user per drop (block-static snapshot).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: ITU-R Pedestrian B tap delays and average powers.
PED_B_DELAYS_NS = (0.0, 200.0, 800.0, 1200.0, 2300.0, 3700.0)
PED_B_POWERS_DB = (0.0, -0.9, -4.9, -8.0, -7.8, -23.9)

#: Exclusion radius around the base station, meters.
MIN_USER_DISTANCE_M = 35.0


@dataclass(frozen=True)
class TapDelayProfile:
    """Tapped delay line: tap delays in ns and average tap powers in dB."""

    delays_ns: tuple[float, ...]
    powers_db: tuple[float, ...]

    def __post_init__(self):
        if len(self.delays_ns) != len(self.powers_db):
            raise ValueError("delays and powers must have the same length")
        if len(self.delays_ns) == 0:
            raise ValueError("profile needs at least one tap")
        if self.delays_ns[0] != 0.0:
            raise ValueError("first tap delay must be 0")
        if any(b <= a for a, b in zip(self.delays_ns, self.delays_ns[1:])):
            raise ValueError("tap delays must be strictly increasing")

    def normalized_powers(self) -> np.ndarray:
        """Linear tap powers scaled to unit total."""
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()


PED_B = TapDelayProfile(PED_B_DELAYS_NS, PED_B_POWERS_DB)


def load_tap_profile(path) -> TapDelayProfile:
    """Read a two-column (delay_ns, power_db) plain-text tap table.

    Blank lines and ``#`` comments are ignored.
    """
    delays, powers = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            delays.append(float(parts[0]))
            powers.append(float(parts[1]))
    return TapDelayProfile(tuple(delays), tuple(powers))


@dataclass(frozen=True)
class UserGeometry:
    """User positions in meters, base station at the origin."""

    positions: np.ndarray
    cell_radius_m: float
    min_distance_m: float

    def distances(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @property
    def n_users(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class PathlossParams:
    """COST231-Hata parameters (urban microcell defaults)."""

    carrier_mhz: float = 2000.0
    bs_height_m: float = 12.5
    ue_height_m: float = 1.5
    metro_correction_db: float = 3.0


COST231_MICROCELL = PathlossParams()


@dataclass
class ChannelMatrix:
    """Per-user, per-subcarrier linear power gains (and optional complex
    amplitude coefficients with ``|coeffs|**2 == gains`` for link level)."""

    gains: np.ndarray
    coeffs: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.gains.shape[1]


def place_users(
    count: int,
    cell_radius_m: float,
    min_distance_m: float,
    rng: np.random.Generator,
) -> UserGeometry:
    """Drop ``count`` users uniformly over the annulus around the BS.

    Uniform over area: distance squared is uniform on
    [min_distance^2, cell_radius^2].
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if not 0 < min_distance_m < cell_radius_m:
        raise ValueError("need 0 < min_distance_m < cell_radius_m")
    d2 = rng.uniform(min_distance_m**2, cell_radius_m**2, size=count)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
    d = np.sqrt(d2)
    positions = np.column_stack([d * np.cos(theta), d * np.sin(theta)])
    return UserGeometry(positions, float(cell_radius_m), float(min_distance_m))


def mobile_correction_db(params: PathlossParams) -> float:
    """a(h_m) correction term of the Hata family."""
    logf = np.log10(params.carrier_mhz)
    return (1.1 * logf - 0.7) * params.ue_height_m - (1.56 * logf - 0.8)


def pathloss_db(
    distance_m,
    params: PathlossParams = COST231_MICROCELL,
    min_distance_m: float = MIN_USER_DISTANCE_M,
):
    """COST231-Hata pathloss in dB, strictly increasing in distance.

    PL = 46.3 + 33.9 log10(f) - 13.82 log10(h_b) - a(h_m)
         + (44.9 - 6.55 log10(h_b)) log10(d_km) + C
    """
    d = np.asarray(distance_m, dtype=np.float64)
    if np.any(d < min_distance_m):
        raise ValueError(f"distance below the {min_distance_m} m minimum")
    logf = np.log10(params.carrier_mhz)
    logh = np.log10(params.bs_height_m)
    pl = (
        46.3
        + 33.9 * logf
        - 13.82 * logh
        - mobile_correction_db(params)
        + (44.9 - 6.55 * logh) * np.log10(d / 1000.0)
        + params.metro_correction_db
    )
    return float(pl) if np.isscalar(distance_m) else pl


def shadowing_db(rng: np.random.Generator, sigma_db: float, size=None):
    """Lognormal shadowing sample(s): Gaussian in the dB domain."""
    if sigma_db < 0:
        raise ValueError("sigma must be nonnegative")
    return rng.normal(0.0, sigma_db, size=size)


def draw_tap_coefficients(
    profile: TapDelayProfile, rng: np.random.Generator, size=()
) -> np.ndarray:
    """Complex circular-Gaussian tap coefficients, variance = tap power."""
    scale = np.sqrt(profile.normalized_powers() / 2.0)
    shape = tuple(size) + (len(profile.delays_ns),)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def frequency_response_from_taps(
    coeffs: np.ndarray, delays_ns, freqs_hz
) -> np.ndarray:
    """H(f) = sum_t c_t exp(-j 2 pi f tau_t), broadcast over leading axes."""
    delays_s = np.asarray(delays_ns, dtype=np.float64) * 1e-9
    freqs = np.asarray(freqs_hz, dtype=np.float64)
    phase = np.exp(-2j * np.pi * np.outer(delays_s, freqs))
    return np.asarray(coeffs) @ phase


def fading_frequency_response(
    profile: TapDelayProfile,
    n_subcarriers: int,
    subcarrier_spacing_hz: float,
    rng: np.random.Generator,
    size=(),
) -> np.ndarray:
    """One random frequency-selective realization on a regular subcarrier
    grid (f_n = n * spacing); E[|H[n]|^2] = 1 per subcarrier."""
    if subcarrier_spacing_hz <= 0:
        raise ValueError("spacing must be positive")
    freqs = np.arange(n_subcarriers) * subcarrier_spacing_hz
    coeffs = draw_tap_coefficients(profile, rng, size=size)
    return frequency_response_from_taps(coeffs, profile.delays_ns, freqs)


def compose_channel_matrix(
    geometry: UserGeometry,
    profile: TapDelayProfile,
    rng: np.random.Generator,
    n_subcarriers: int,
    subcarrier_spacing_hz: float,
    shadow_sigma_db: float,
    freq_offset_hz: float = 0.0,
    with_coeffs: bool = False,
    pathloss_params: PathlossParams = COST231_MICROCELL,
) -> ChannelMatrix:
    """Combine pathloss, one shadowing draw per user and one independent
    fading realization per user into the K x N gain matrix.

    gains[k, n] = 10^(-(PL(d_k) + X_k)/10) * |H_k(f_n)|^2 with
    f_n = freq_offset + n * spacing (resource-block centers at system level).
    """
    k = geometry.n_users
    freqs = freq_offset_hz + np.arange(n_subcarriers) * subcarrier_spacing_hz
    pl = pathloss_db(geometry.distances(), pathloss_params,
                     geometry.min_distance_m) if k else np.zeros(0)
    shadow = shadowing_db(rng, shadow_sigma_db, size=k)
    taps = draw_tap_coefficients(profile, rng, size=(k,))
    h = frequency_response_from_taps(taps, profile.delays_ns, freqs)
    amplitude = 10.0 ** (-(pl + shadow) / 20.0)
    coeffs = amplitude[:, None] * h
    gains = np.abs(coeffs) ** 2
    return ChannelMatrix(gains, coeffs if with_coeffs else None)
