"""Tapped-delay-line channel models and circulant channel algebra.

A channel profile (delays in ns, mean tap powers in dB) is sampled into a
discrete impulse response on the OFDM sampling grid. The resulting circulant
channel matrix is represented by its generator (first column) throughout, and
the two half-size descendants of one split are computed directly on
generators:

* positive branch: fold the generator in half (a no-op when the taps already
  fit in the half size);
* negative branch: fold with a sign flip, then modulate each tap by one
  discrete frequency of the parent size.

Dense materializations and the literal triangular-block constructions exist
for oracle checks and for the non-uniform splitting analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import circulant as _dense_circulant
from scipy.linalg import toeplitz as _toeplitz

from .spectral import freq_response, is_pow2

__all__ = [
    "ChannelProfile",
    "ChannelImpulseResponse",
    "CirculantChannel",
    "ETU_PROFILE",
    "EPA_PROFILE",
    "BUILTIN_PROFILES",
    "load_profile",
    "profile_tap_count",
    "sample_cir",
    "build_circulant",
    "extract_blocks",
    "positive_child",
    "negative_child",
    "lower_triangular_toeplitz",
    "circular_complement",
    "split_coupling",
]


@dataclass(frozen=True)
class ChannelProfile:
    """Tapped-delay-line power/delay profile."""

    name: str
    tap_delays_ns: tuple[float, ...]
    tap_powers_db: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tap_delays_ns", tuple(float(d) for d in self.tap_delays_ns))
        object.__setattr__(self, "tap_powers_db", tuple(float(p) for p in self.tap_powers_db))
        if len(self.tap_delays_ns) != len(self.tap_powers_db):
            raise ValueError("tap delay and power lists must have equal length")
        if not self.tap_delays_ns or self.tap_delays_ns[0] != 0.0:
            raise ValueError("tap delays must start at 0 ns")
        if any(b <= a for a, b in zip(self.tap_delays_ns, self.tap_delays_ns[1:])):
            raise ValueError("tap delays must be strictly increasing")


# 3GPP reference tapped-delay-line models (Extended Typical Urban and
# Extended Pedestrian A).
ETU_PROFILE = ChannelProfile(
    "ETU",
    (0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0),
    (-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0),
)
EPA_PROFILE = ChannelProfile(
    "EPA",
    (0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0),
    (0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8),
)

BUILTIN_PROFILES = {"etu": ETU_PROFILE, "epa": EPA_PROFILE}


def load_profile(path) -> ChannelProfile:
    """Read a profile from a plain-text key-value file.

    Expected keys: ``delays_ns`` and ``powers_db`` (comma or whitespace
    separated lists) and an optional ``name``. Lines starting with ``#``
    are ignored.
    """
    path = Path(path)
    fields: dict[str, str] = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed profile line (expected key = value): {line!r}")
        key, value = line.split("=", 1)
        fields[key.strip().lower()] = value.strip()
    try:
        delays = [float(v) for v in fields["delays_ns"].replace(",", " ").split()]
        powers = [float(v) for v in fields["powers_db"].replace(",", " ").split()]
    except KeyError as missing:
        raise ValueError(f"profile file is missing key {missing}") from None
    return ChannelProfile(fields.get("name", path.stem), tuple(delays), tuple(powers))


@dataclass(frozen=True)
class ChannelImpulseResponse:
    """Discrete channel taps h_0 .. h_{L-1} on a sampling grid."""

    taps: np.ndarray
    sample_period_ns: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("taps must be a non-empty one-dimensional sequence")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps contain non-finite entries")
        if self.sample_period_ns <= 0:
            raise ValueError("sample period must be positive")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return int(self.taps.size)


def profile_tap_count(profile: ChannelProfile, sample_period_ns: float) -> int:
    """Number of discrete taps a profile occupies at the given sampling period."""
    if sample_period_ns <= 0:
        raise ValueError("sample period must be positive")
    return int(np.rint(profile.tap_delays_ns[-1] / sample_period_ns)) + 1


def sample_cir(profile: ChannelProfile, sample_period_ns: float, rng) -> ChannelImpulseResponse:
    """Draw one channel realization from a profile.

    Each profile tap is a zero-mean circularly symmetric complex Gaussian
    (Rayleigh envelope) with variance from its mean power, placed at index
    round(delay / Ts); taps mapping to the same index add up. Powers are
    normalized so the expected total channel power is 1.
    """
    if sample_period_ns <= 0:
        raise ValueError("sample period must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    delays = np.asarray(profile.tap_delays_ns, dtype=np.float64)
    powers = 10.0 ** (np.asarray(profile.tap_powers_db, dtype=np.float64) / 10.0)
    powers /= powers.sum()
    idx = np.rint(delays / sample_period_ns).astype(int)
    draws = np.sqrt(powers / 2.0) * (
        rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    )
    taps = np.zeros(int(idx.max()) + 1, dtype=np.complex128)
    np.add.at(taps, idx, draws)
    return ChannelImpulseResponse(taps, float(sample_period_ns))


@dataclass(frozen=True)
class CirculantChannel:
    """Power-of-two circulant channel described by its generator (first column)."""

    generator: np.ndarray

    def __post_init__(self):
        gen = np.asarray(self.generator, dtype=np.complex128)
        if gen.ndim != 1:
            raise ValueError("generator must be one-dimensional")
        if not is_pow2(gen.size):
            raise ValueError(f"circulant size must be a power of two, got {gen.size}")
        if not np.all(np.isfinite(gen)):
            raise ValueError("generator contains non-finite entries")
        object.__setattr__(self, "generator", gen)

    @property
    def size(self) -> int:
        return int(self.generator.size)

    def dense(self) -> np.ndarray:
        """Dense materialization (oracle scale)."""
        return _dense_circulant(self.generator)

    def response(self) -> np.ndarray:
        """Unnormalized frequency bins, i.e. the eigenvalues of the matrix."""
        return freq_response(self.generator, self.size)


def build_circulant(cir: ChannelImpulseResponse, size: int) -> CirculantChannel:
    """Size ``size`` circulant channel of a tap sequence (generator zero-padded)."""
    if cir.length > size:
        raise ValueError(f"{cir.length} taps do not fit in a size-{size} circulant")
    gen = np.zeros(size, dtype=np.complex128)
    gen[: cir.length] = cir.taps
    return CirculantChannel(gen)


def extract_blocks(channel: CirculantChannel) -> tuple[np.ndarray, np.ndarray]:
    """Top-left and top-right half blocks (A, B) with dense(C) == [[A, B], [B, A]]."""
    if channel.size % 2:
        raise ValueError("block extraction needs an even size")
    half = channel.size // 2
    dense = channel.dense()
    return dense[:half, :half].copy(), dense[:half, half:].copy()


def positive_child(channel: CirculantChannel) -> CirculantChannel:
    """Half-size circulant of the positive branch: the generator folded in half.

    When the taps fit in the half size the fold is a no-op, so the child is
    the original channel at half size.
    """
    if channel.size < 2:
        raise ValueError("cannot split a size-1 channel")
    half = channel.size // 2
    g = channel.generator
    return CirculantChannel(g[:half] + g[half:])


def negative_child(channel: CirculantChannel) -> CirculantChannel:
    """Half-size circulant of the mixed negative branch.

    Generator: (g_n - g_{n + M/2}) * exp(-j*2*pi*n/M). For taps that fit in
    the half size this is exactly the original impulse response modulated at
    one discrete frequency of the parent size.
    """
    if channel.size < 2:
        raise ValueError("cannot split a size-1 channel")
    half = channel.size // 2
    g = channel.generator
    modulation = np.exp(-2j * np.pi * np.arange(half) / channel.size)
    return CirculantChannel((g[:half] - g[half:]) * modulation)


def lower_triangular_toeplitz(taps, size: int) -> np.ndarray:
    """Lower-triangular Toeplitz matrix whose first column is the tap sequence.

    Taps beyond ``size`` are dropped; shorter sequences are zero-padded. This
    is the literal in-block part of the channel at a given slice size.
    """
    taps = np.asarray(taps, dtype=np.complex128)
    col = np.zeros(size, dtype=np.complex128)
    n = min(taps.size, size)
    col[:n] = taps[:n]
    row = np.zeros(size, dtype=np.complex128)
    row[0] = col[0]
    return _toeplitz(col, row)


def circular_complement(taps, size: int) -> np.ndarray:
    """Strictly upper-triangular wraparound companion of the triangular block.

    Entry (i, j) = taps[size + i - j] for i < j, zero elsewhere: the part of
    the cyclic-prefix wraparound that lands above the diagonal. Together with
    :func:`lower_triangular_toeplitz` it sums to the size-``size`` circulant
    whenever the taps fit (L <= size).
    """
    taps = np.asarray(taps, dtype=np.complex128)
    row = np.zeros(size, dtype=np.complex128)
    j = np.arange(1, size)
    t = size - j
    hit = t < taps.size
    row[j[hit]] = taps[t[hit]]
    return _toeplitz(np.zeros(size, dtype=np.complex128), row)


def split_coupling(cir: ChannelImpulseResponse, frame_size: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Quarter-scale triangular sub-blocks behind the uniform-splitting bound.

    Decomposes the size N/4 in-block channel into its N/8 lower-triangular
    Toeplitz block ``low`` and the N/8 cross-boundary block ``wrap`` and
    returns ``(low, wrap, coupling)`` where ``coupling`` is the spectral norm
    of ``wrap @ low^H``. That product is the only term that differs between
    the two branches' Gram matrices, so a small coupling means both branches
    carry nearly equal mutual information.
    """
    if not is_pow2(frame_size) or frame_size < 8:
        raise ValueError(f"frame size must be a power of two >= 8, got {frame_size}")
    quarter = frame_size // 4
    eighth = frame_size // 8
    if cir.length > quarter:
        raise ValueError(f"channel length {cir.length} exceeds a quarter frame ({quarter})")
    block = lower_triangular_toeplitz(cir.taps, quarter)
    low = block[:eighth, :eighth].copy()
    wrap = block[eighth:, :eighth].copy()
    coupling = float(np.linalg.norm(wrap @ low.conj().T, 2))
    return low, wrap, coupling
