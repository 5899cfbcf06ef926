"""Link-level BER chain: BPSK over OFDM subcarriers with up to L users
superimposed per subcarrier, exhaustive maximum-likelihood multi-user
detection, and an optional half-rate convolutional code with hard-decision
Viterbi decoding.

The chain operates on post-DFT frequency-domain samples: one frame is one
OFDM symbol across the subcarrier grid, fading is redrawn independently per
user per frame, and coded bits are interleaved so that trellis-adjacent bits
land in different frames.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import kernels
from .channel import PED_B, TapDelayProfile, draw_tap_coefficients, \
    frequency_response_from_taps

BPSK = (1.0, -1.0)  # bit 0 -> +1, bit 1 -> -1


@dataclass(frozen=True)
class CodeSpec:
    """Feedforward convolutional code described by octal tap polynomials."""

    rate: Fraction
    constraint_length: int
    generators: tuple[int, ...]

    def __post_init__(self):
        if len(self.generators) != 2 or self.rate != Fraction(1, 2):
            raise ValueError("only rate-1/2 codes are supported")
        if any(g >= (1 << self.constraint_length) for g in self.generators):
            raise ValueError("generator taps exceed the constraint length")


#: The canonical half-rate constraint-length-7 code (free distance 10).
HALF_RATE_K7 = CodeSpec(Fraction(1, 2), 7, (0o133, 0o171))


@dataclass(frozen=True)
class Trellis:
    pred: np.ndarray        # (S, 2) predecessor states
    branch_out: np.ndarray  # (S, 2) output pair of each incoming branch, 2*b0+b1
    state_bit: np.ndarray   # (S,) input bit implied by landing in the state
    n_states: int
    tail: int


@lru_cache(maxsize=None)
def trellis_tables(code: CodeSpec) -> Trellis:
    m = code.constraint_length - 1
    n_states = 1 << m
    g0, g1 = code.generators

    def outputs(register: int) -> int:
        o0 = bin(register & g0).count("1") & 1
        o1 = bin(register & g1).count("1") & 1
        return (o0 << 1) | o1

    pred = np.empty((n_states, 2), dtype=np.int32)
    branch_out = np.empty((n_states, 2), dtype=np.uint8)
    state_bit = np.empty(n_states, dtype=np.uint8)
    half = n_states >> 1
    for nxt in range(n_states):
        bit = nxt >> (m - 1)
        state_bit[nxt] = bit
        for j in range(2):
            prev = ((nxt & (half - 1)) << 1) | j
            pred[nxt, j] = prev
            branch_out[nxt, j] = outputs((bit << m) | prev)
    return Trellis(pred, branch_out, state_bit, n_states, m)


def conv_encode(bits, code: CodeSpec = HALF_RATE_K7) -> np.ndarray:
    """Zero-tail convolutional encoding; output has
    2*(len(bits) + constraint_length - 1) bits."""
    return conv_encode_batch(np.asarray(bits, dtype=np.uint8)[None, :], code)[0]


def conv_encode_batch(bits: np.ndarray, code: CodeSpec = HALF_RATE_K7) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    m = code.constraint_length - 1
    n_blocks, n_bits = bits.shape
    padded = np.zeros((n_blocks, n_bits + 2 * m), dtype=np.uint8)
    padded[:, m : m + n_bits] = bits
    out = np.zeros((n_blocks, 2 * (n_bits + m)), dtype=np.uint8)
    for gi, g in enumerate(code.generators):
        acc = np.zeros((n_blocks, n_bits + m), dtype=np.uint8)
        for tap in range(code.constraint_length):
            if (g >> (code.constraint_length - 1 - tap)) & 1:
                acc ^= padded[:, m - tap : m - tap + n_bits + m]
        out[:, gi::2] = acc
    return out


def viterbi_decode(coded, code: CodeSpec = HALF_RATE_K7) -> np.ndarray:
    """Hard-decision ML sequence estimate over the zero-tailed trellis."""
    return viterbi_decode_batch(np.asarray(coded, dtype=np.uint8)[None, :], code)[0]


def viterbi_decode_batch(coded: np.ndarray, code: CodeSpec = HALF_RATE_K7) -> np.ndarray:
    coded = np.asarray(coded, dtype=np.uint8)
    m = code.constraint_length - 1
    if coded.ndim != 2 or coded.shape[1] % 2 or coded.shape[1] < 2 * m + 2:
        raise ValueError("coded block length inconsistent with termination")
    t = trellis_tables(code)
    return kernels.viterbi_decode_batch(coded, t.pred, t.branch_out, t.state_bit, t.tail)


def viterbi_decode_soft_batch(
    bit_costs: np.ndarray, code: CodeSpec = HALF_RATE_K7
) -> np.ndarray:
    """Soft-metric sequence estimate; ``bit_costs[b, i]`` is the penalty of
    deciding coded bit i as 1 (negative favors 1)."""
    bit_costs = np.asarray(bit_costs, dtype=np.float64)
    m = code.constraint_length - 1
    if bit_costs.ndim != 2 or bit_costs.shape[1] % 2 or bit_costs.shape[1] < 2 * m + 2:
        raise ValueError("metric block length inconsistent with termination")
    t = trellis_tables(code)
    return kernels.viterbi_decode_soft_batch(
        bit_costs, t.pred, t.branch_out, t.state_bit, t.tail
    )


def bpsk_map(bits) -> np.ndarray:
    """0 -> +1, 1 -> -1 (unit symbol energy)."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def bpsk_demap(symbols) -> np.ndarray:
    """Inverse of ``bpsk_map`` (sign decision for noisy inputs)."""
    return (np.real(np.asarray(symbols)) < 0).astype(np.uint8)


def superimpose(symbols, coeffs, noise_variance: float, rng: np.random.Generator):
    """Received samples y_n = sum_k a_kn g_kn + z_n.

    ``symbols`` and ``coeffs`` are (users, n); the noise is complex circular
    Gaussian with total variance ``noise_variance`` per sample.
    """
    symbols = np.asarray(symbols)
    coeffs = np.asarray(coeffs)
    if symbols.shape != coeffs.shape:
        raise ValueError("symbols and coeffs must share a shape")
    clean = np.sum(symbols * coeffs, axis=0)
    if noise_variance == 0:
        return clean.astype(complex)
    scale = np.sqrt(noise_variance / 2.0)
    noise = scale * (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return clean + noise


def ml_mud(y: complex, coeffs, constellation=BPSK) -> np.ndarray:
    """Exhaustive ML detection of the superimposed symbols on one sample.

    Enumerates every |X|^L candidate vector and returns the first minimizer
    of |y - sum_l a_l g_l|^2 (lexicographic tie-break in constellation order).
    """
    coeffs = np.asarray(coeffs)
    best = None
    best_dist = np.inf
    for cand in itertools.product(constellation, repeat=coeffs.shape[0]):
        dist = abs(y - np.dot(cand, coeffs)) ** 2
        if dist < best_dist:
            best_dist = dist
            best = cand
    return np.asarray(best)


def _bpsk_candidates(n_users: int) -> np.ndarray:
    """(2^L, L) sign table in lexicographic constellation order."""
    return np.array(list(itertools.product(BPSK, repeat=n_users)))


def mud_detect_bpsk(y: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Vectorized exhaustive BPSK MUD.

    ``y`` has shape (...,) and ``coeffs`` (users, ...); returns detected
    signs of shape (users, ...). Matches ``ml_mud`` including tie-breaks
    (argmin keeps the first minimal candidate).
    """
    cands = _bpsk_candidates(coeffs.shape[0])
    mixed = np.tensordot(cands, coeffs, axes=(1, 0))  # (2^L, ...)
    dist = np.abs(y[None, ...] - mixed) ** 2
    idx = np.argmin(dist, axis=0)
    return np.moveaxis(cands[idx], -1, 0)


def mud_bit_costs_bpsk(y: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Max-log bit metrics from the same exhaustive candidate enumeration.

    Returns, per user, min distance over candidates with that user's bit 1
    minus min distance over bit 0: the cost of deciding 1 (sign decision =
    hard detection; magnitude = reliability)."""
    cands = _bpsk_candidates(coeffs.shape[0])
    mixed = np.tensordot(cands, coeffs, axes=(1, 0))
    dist = np.abs(y[None, ...] - mixed) ** 2
    costs = np.empty((coeffs.shape[0],) + y.shape)
    for u in range(coeffs.shape[0]):
        d_zero = np.min(dist[cands[:, u] > 0], axis=0)
        d_one = np.min(dist[cands[:, u] < 0], axis=0)
        costs[u] = d_one - d_zero
    return costs


@dataclass
class BerPoint:
    """One (scheme, Eb/N0) measurement; ``flagged`` marks points that hit
    the frame cap before reaching the target error count."""

    scheme: str
    coded: bool
    ebn0_db: float
    bits: int
    bit_errors: int
    ber: float
    flagged: bool


def rayleigh_bpsk_ber(snr_linear) -> np.ndarray | float:
    """Closed-form BPSK bit error rate over Rayleigh fading:
    0.5 (1 - sqrt(g/(1+g)))."""
    g = np.asarray(snr_linear, dtype=np.float64)
    out = 0.5 * (1.0 - np.sqrt(g / (1.0 + g)))
    return float(out) if out.ndim == 0 else out


def _draw_channels(profile, freqs, rng, shape) -> np.ndarray:
    taps = draw_tap_coefficients(profile, rng, size=shape)
    return frequency_response_from_taps(taps, profile.delays_ns, freqs)


def simulate_ber(
    *,
    ebn0_grid_db,
    rng: np.random.Generator,
    loading: int = 2,
    coded: bool = False,
    code: CodeSpec = HALF_RATE_K7,
    n_subcarriers: int = 64,
    spacing_hz: float = 15e3,
    profile: TapDelayProfile = PED_B,
    target_errors: int = 500,
    max_frames: int = 100_000,
    frames_per_codeword: int = 10,
    modulation: str = "BPSK",
    decision: str = "hard",
) -> list[BerPoint]:
    """Monte Carlo BER for NOMA (L users superimposed, ML-MUD) and OFDMA
    (single user), paired on common random numbers.

    Per grid point, frames are generated until both schemes accumulate
    ``target_errors`` bit errors or ``max_frames`` frames are spent. OFDMA
    reuses user 0's symbols, fading and noise with the interferers removed.
    Symbol SNR is Eb/N0 scaled by the code rate (bits/symbol = 1 for BPSK).

    ``decision`` selects what the detector hands the channel decoder in the
    coded chain: "hard" passes symbol decisions (Hamming-metric Viterbi),
    "soft" passes the max-log bit metrics of the same ML enumeration
    (one-way, no detector-decoder iteration).
    """
    if modulation != "BPSK":
        raise ValueError("only BPSK is implemented")
    if decision not in ("hard", "soft"):
        raise ValueError("decision must be 'hard' or 'soft'")
    grid = [float(v) for v in ebn0_grid_db]
    if not grid:
        raise ValueError("Eb/N0 grid must be nonempty")
    if loading < 1:
        raise ValueError("loading must be at least 1")
    freqs = np.arange(n_subcarriers) * spacing_hz
    rate = float(code.rate) if coded else 1.0
    points: list[BerPoint] = []
    for ebn0_db in grid:
        snr = 10.0 ** (ebn0_db / 10.0) * rate
        sigma2 = 1.0 / snr
        counters = _run_point(
            loading, coded, code, n_subcarriers, freqs, profile, sigma2,
            target_errors, max_frames, frames_per_codeword, rng, decision,
        )
        for scheme, (errors, bits) in counters.items():
            points.append(
                BerPoint(
                    scheme=scheme,
                    coded=coded,
                    ebn0_db=ebn0_db,
                    bits=bits,
                    bit_errors=errors,
                    ber=errors / bits if bits else float("nan"),
                    flagged=errors < target_errors,
                )
            )
    return points


def _run_point(
    loading, coded, code, n_subcarriers, freqs, profile, sigma2,
    target_errors, max_frames, frames_per_codeword, rng, decision="hard",
):
    noma_err = noma_bits = ofdma_err = ofdma_bits = 0
    frames = 0
    while frames < max_frames and (
        noma_err < target_errors or ofdma_err < target_errors
    ):
        if coded:
            batch = 256
            e_n, b_n, e_o, b_o, used = _coded_batch(
                batch, loading, code, n_subcarriers, freqs, profile, sigma2,
                frames_per_codeword, rng, decision,
            )
        else:
            batch = 1024
            e_n, b_n, e_o, b_o, used = _uncoded_batch(
                batch, loading, n_subcarriers, freqs, profile, sigma2, rng
            )
        noma_err += e_n
        noma_bits += b_n
        ofdma_err += e_o
        ofdma_bits += b_o
        frames += used
    return {"NOMA": (noma_err, noma_bits), "OFDMA": (ofdma_err, ofdma_bits)}


def _uncoded_batch(n_frames, loading, n_subcarriers, freqs, profile, sigma2, rng):
    bits = rng.integers(0, 2, size=(loading, n_frames, n_subcarriers), dtype=np.uint8)
    signs = bpsk_map(bits)
    h = _draw_channels(profile, freqs, rng, (loading, n_frames))
    scale = np.sqrt(sigma2 / 2.0)
    z = scale * (
        rng.standard_normal((n_frames, n_subcarriers))
        + 1j * rng.standard_normal((n_frames, n_subcarriers))
    )
    y = np.sum(signs * h, axis=0) + z
    detected = mud_detect_bpsk(y, h)
    noma_errors = int(np.sum(detected != signs))
    y_single = signs[0] * h[0] + z
    det_single = mud_detect_bpsk(y_single, h[:1])
    ofdma_errors = int(np.sum(det_single[0] != signs[0]))
    total = n_frames * n_subcarriers
    return noma_errors, loading * total, ofdma_errors, total, n_frames


def _interleave(coded: np.ndarray, frames: int, n_subcarriers: int) -> np.ndarray:
    """Coded bit j -> (frame j % F, subcarrier j // F): trellis-adjacent
    bits see independent fades. Input (..., F*S), output (..., F, S)."""
    lead = coded.shape[:-1]
    return coded.reshape(*lead, n_subcarriers, frames).swapaxes(-1, -2)


def _deinterleave(grid: np.ndarray) -> np.ndarray:
    lead = grid.shape[:-2]
    frames, n_subcarriers = grid.shape[-2:]
    return grid.swapaxes(-1, -2).reshape(*lead, frames * n_subcarriers)


def _coded_batch(
    n_codewords, loading, code, n_subcarriers, freqs, profile, sigma2,
    frames_per_codeword, rng, decision="hard",
):
    m = code.constraint_length - 1
    n_coded = frames_per_codeword * n_subcarriers
    n_info = n_coded // 2 - m
    info = rng.integers(0, 2, size=(loading, n_codewords, n_info), dtype=np.uint8)
    coded = conv_encode_batch(info.reshape(loading * n_codewords, n_info), code)
    coded = coded.reshape(loading, n_codewords, n_coded)
    signs = bpsk_map(_interleave(coded, frames_per_codeword, n_subcarriers))
    h = _draw_channels(profile, freqs, rng, (loading, n_codewords, frames_per_codeword))
    shape = (n_codewords, frames_per_codeword, n_subcarriers)
    scale = np.sqrt(sigma2 / 2.0)
    z = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def decode_hard(detected_signs, users):
        hard = _deinterleave(bpsk_demap(detected_signs))
        flat = hard.reshape(users * n_codewords, n_coded)
        out = viterbi_decode_batch(flat, code)
        return out.reshape(users, n_codewords, n_info)

    def decode_soft(bit_costs, users):
        flat = _deinterleave(bit_costs).reshape(users * n_codewords, n_coded)
        out = viterbi_decode_soft_batch(flat, code)
        return out.reshape(users, n_codewords, n_info)

    y = np.sum(signs * h, axis=0) + z
    y_single = signs[0] * h[0] + z
    if decision == "hard":
        decoded = decode_hard(mud_detect_bpsk(y, h), loading)
        decoded_single = decode_hard(mud_detect_bpsk(y_single, h[:1]), 1)
    else:
        decoded = decode_soft(mud_bit_costs_bpsk(y, h), loading)
        decoded_single = decode_soft(mud_bit_costs_bpsk(y_single, h[:1]), 1)
    noma_errors = int(np.sum(decoded != info))
    ofdma_errors = int(np.sum(decoded_single != info[:1]))

    total = n_codewords * n_info
    frames_used = n_codewords * frames_per_codeword
    return noma_errors, loading * total, ofdma_errors, total, frames_used


def ebn0_at_ber(points: list[BerPoint], target_ber: float) -> float:
    """Eb/N0 (dB) where the curve crosses ``target_ber``, by linear
    interpolation of log10(BER) over the grid; NaN when not bracketed."""
    usable = sorted(
        (p for p in points if p.ber > 0), key=lambda p: p.ebn0_db
    )
    logt = np.log10(target_ber)
    for lo, hi in zip(usable, usable[1:]):
        la, lb = np.log10(lo.ber), np.log10(hi.ber)
        if (la - logt) * (lb - logt) <= 0 and la != lb:
            frac = (logt - la) / (lb - la)
            return float(lo.ebn0_db + frac * (hi.ebn0_db - lo.ebn0_db))
    return float("nan")
