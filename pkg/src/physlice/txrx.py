"""End-to-end baseband link over the split transform.

transmit:  per-slice unitary IDFT, recursive transform, cyclic prefix.
propagate: linear convolution with the channel taps; keeping the N samples
           after the CP makes the channel act as a circular convolution of
           the frame body, plus optional complex AWGN.
receive:   adjoint transform, per-slice unitary DFT, one-tap zero-forcing
           equalization against the true channel response (genie-aided; no
           pilot estimation).

Also here: the direct fixed-point decoder for the unmixed negative branch and
the order-recursive inverse of a lower-triangular Toeplitz matrix it builds on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .channel import (
    ChannelImpulseResponse,
    circular_complement,
    lower_triangular_toeplitz,
)
from .sliceplan import SlicePlan, bins_for_slice
from .spectral import dft, freq_response, idft
from .transform import forward_transform, inverse_transform

__all__ = [
    "SlicePayload",
    "OfdmFrame",
    "modulate",
    "demodulate",
    "transmit",
    "propagate",
    "receive",
    "iterative_decode",
    "triangular_toeplitz_inverse",
    "EQUALIZER_ERASURE_THRESHOLD",
]

# Bins with |gain| below this are flagged as erasures instead of divided by.
EQUALIZER_ERASURE_THRESHOLD = 1e-12

# Gray-mapped QPSK, unit average power; symbol index is (real_bit << 1) | imag_bit
# with bit 1 selecting the negative half-plane.
_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=np.complex128) / np.sqrt(2.0)

_SCHEMES = {"qpsk": (_QPSK, 2)}


@dataclass
class SlicePayload:
    """Per-slice frequency-domain symbol vectors, in frame order.

    ``erasures`` marks bins the equalizer refused to divide (channel gain
    below threshold); None on the transmit side.
    """

    symbols: tuple[np.ndarray, ...]
    erasures: tuple[np.ndarray, ...] | None = None

    def concat(self) -> np.ndarray:
        return np.concatenate(self.symbols)

    @property
    def total_symbols(self) -> int:
        return sum(int(x.size) for x in self.symbols)


@dataclass
class OfdmFrame:
    """Time-domain frame: transformed body plus cyclic prefix (copy of the tail)."""

    body: np.ndarray
    cyclic_prefix: np.ndarray
    plan: SlicePlan

    def __post_init__(self):
        if self.body.size != self.plan.frame_size:
            raise ValueError(
                f"body has {self.body.size} samples, plan expects {self.plan.frame_size}"
            )
        n = self.cyclic_prefix.size
        if n != self.plan.cp_length or (
            n and not np.array_equal(self.cyclic_prefix, self.body[-n:])
        ):
            raise ValueError("cyclic prefix must be a copy of the last cp_length body samples")


def _check_payload(payload: SlicePayload, plan: SlicePlan) -> None:
    if len(payload.symbols) != len(plan.slices):
        raise ValueError(
            f"payload has {len(payload.symbols)} slices, plan has {len(plan.slices)}"
        )
    for vec, desc in zip(payload.symbols, plan.slices):
        if vec.size != desc.size:
            raise ValueError(
                f"slice {desc.path!r} expects {desc.size} symbols, got {vec.size}"
            )


def modulate(bits, plan: SlicePlan, scheme: str = "qpsk") -> SlicePayload:
    """Map a bit stream onto per-slice constellation symbols (frame order)."""
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    points, bits_per_symbol = _SCHEMES[scheme]
    bits = np.asarray(bits, dtype=np.int64).ravel()
    expected = bits_per_symbol * plan.frame_size
    if bits.size != expected:
        raise ValueError(f"expected {expected} bits for this plan, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0/1")
    idx = bits.reshape(-1, bits_per_symbol) @ (1 << np.arange(bits_per_symbol - 1, -1, -1))
    symbols = points[idx]
    out = []
    offset = 0
    for desc in plan.slices:
        out.append(symbols[offset : offset + desc.size].copy())
        offset += desc.size
    return SlicePayload(symbols=tuple(out))


def demodulate(payload: SlicePayload, scheme: str = "qpsk") -> np.ndarray:
    """Hard-decision bits from per-slice symbol estimates."""
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    _, bits_per_symbol = _SCHEMES[scheme]
    symbols = payload.concat()
    bits = np.empty((symbols.size, bits_per_symbol), dtype=np.int64)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.ravel()


def nearest_symbols(estimates: np.ndarray, scheme: str = "qpsk") -> np.ndarray:
    """Snap estimates to the closest constellation point."""
    points, _ = _SCHEMES[scheme]
    dist = np.abs(estimates[:, None] - points[None, :])
    return points[np.argmin(dist, axis=1)]


def transmit(payload: SlicePayload, plan: SlicePlan) -> OfdmFrame:
    """Per-slice unitary IDFT, recursive transform, cyclic prefix."""
    _check_payload(payload, plan)
    time_domain = np.concatenate([idft(x) for x in payload.symbols])
    body = forward_transform(time_domain, plan.depth)
    cp = body[plan.frame_size - plan.cp_length :].copy() if plan.cp_length else np.zeros(0, dtype=np.complex128)
    return OfdmFrame(body=body, cyclic_prefix=cp, plan=plan)


def propagate(
    frame: OfdmFrame,
    cir: ChannelImpulseResponse,
    snr=None,
    rng=None,
) -> np.ndarray:
    """Send one frame through the channel and return the N post-CP samples.

    Linear convolution of (CP || body) with the taps, keeping the N samples
    following the CP, equals a circular convolution of the body whenever the
    CP covers the channel. ``snr`` is the linear rho (or an object with a
    ``rho`` attribute); None or infinity bypasses noise addition exactly.
    """
    if frame.plan.cp_length < cir.length:
        raise ValueError(
            f"cyclic prefix ({frame.plan.cp_length}) shorter than the channel ({cir.length})"
        )
    n = frame.plan.frame_size
    full = np.concatenate([frame.cyclic_prefix, frame.body])
    convolved = np.convolve(full, cir.taps)
    received = convolved[frame.plan.cp_length : frame.plan.cp_length + n]
    rho = None
    if snr is not None:
        rho = float(getattr(snr, "rho", snr))
        if np.isinf(rho):
            rho = None
    if rho is None:
        return received
    if rho <= 0:
        raise ValueError(f"snr must be positive, got {rho}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    # Unit average signal power is guaranteed by the unitary chain and
    # unit-power constellations, so the noise variance is 1/rho.
    scale = np.sqrt(1.0 / (2.0 * rho))
    noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return received + noise


def receive(
    y,
    plan: SlicePlan,
    cir: ChannelImpulseResponse,
    snr=None,
) -> SlicePayload:
    """Adjoint transform, per-slice unitary DFT, one-tap zero-forcing equalizer.

    The equalizer divides slice bin b by the true channel response at the
    original bin the slice carries there (genie-aided). ``snr`` is accepted
    for interface symmetry; zero-forcing does not use it. Bins whose gain
    magnitude falls below ``EQUALIZER_ERASURE_THRESHOLD`` are flagged as
    erasures and returned as zeros.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.size != plan.frame_size:
        raise ValueError(f"expected {plan.frame_size} samples, got {y.size}")
    z = inverse_transform(y, plan.depth)
    gains = freq_response(cir.taps, plan.frame_size)
    estimates = []
    erasures = []
    for desc in plan.slices:
        segment = z[desc.frame_offset : desc.frame_offset + desc.size]
        spectrum = dft(segment)
        slice_gains = gains[np.fromiter(bins_for_slice(desc, plan.frame_size), dtype=np.int64)]
        erased = np.abs(slice_gains) < EQUALIZER_ERASURE_THRESHOLD
        safe = np.where(erased, 1.0, slice_gains)
        estimates.append(np.where(erased, 0.0, spectrum / safe))
        erasures.append(erased)
    return SlicePayload(symbols=tuple(estimates), erasures=tuple(erasures))


def iterative_decode(
    z3,
    z4,
    cir: ChannelImpulseResponse,
    max_iters: int = 100,
    tol: float = 1e-10,
):
    """Fixed-point decoder for the unmixed (W = I) negative branch.

    Solves [[H, -Hc], [Hc, H]] [s3; s4] = [z3; z4] by iterating
    s3 <- inv(H) z3 + C s4 and s4 <- inv(H) z4 - C s3 with C = inv(H) Hc,
    where H is the quarter-size lower-triangular Toeplitz channel block and
    Hc its wraparound complement. Converges when the spectral radius of C is
    below one; a growing update is flagged and never reported as converged.

    Returns (s3, s4, iterations, converged).
    """
    z3 = np.asarray(z3, dtype=np.complex128)
    z4 = np.asarray(z4, dtype=np.complex128)
    if z3.shape != z4.shape or z3.ndim != 1:
        raise ValueError("z3 and z4 must be one-dimensional vectors of equal length")
    q = z3.size
    if cir.length > q:
        raise ValueError(f"channel length {cir.length} exceeds the block size {q}")
    if cir.taps[0] == 0:
        raise ValueError("h_0 = 0 makes the triangular system singular")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")

    h = lower_triangular_toeplitz(cir.taps, q)
    hc = circular_complement(cir.taps, q)
    u3 = solve_triangular(h, z3, lower=True)
    u4 = solve_triangular(h, z4, lower=True)
    c = solve_triangular(h, hc, lower=True)

    s3, s4 = u3.copy(), u4.copy()
    converged = False
    iterations = 0
    first_delta = None
    for iterations in range(1, max_iters + 1):
        n3 = u3 + c @ s4
        n4 = u4 - c @ s3
        delta = max(
            float(np.max(np.abs(n3 - s3))) if q else 0.0,
            float(np.max(np.abs(n4 - s4))) if q else 0.0,
        )
        s3, s4 = n3, n4
        if delta < tol:
            converged = True
            break
        if not np.isfinite(delta):
            break
        if first_delta is None:
            first_delta = delta
        elif delta > 100.0 * first_delta:
            # Unambiguous growth: the update is diverging geometrically.
            # (A contracting iteration may wobble, so only clear growth
            # stops early; hitting max_iters above tol is also not converged.)
            break
    return s3, s4, iterations, converged


def triangular_toeplitz_inverse(matrix) -> np.ndarray:
    """Inverse of a lower-triangular Toeplitz matrix by order-recursive bordering.

    Growing the order by one appends the last row
    [-(1/h0) * h^T @ inv_prev, 1/h0], where h^T is the new bottom row of the
    matrix without its diagonal entry. Exact up to round-off; validated so
    that result @ matrix == I.
    """
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    col = a[:, 0]
    if col[0] == 0:
        raise ValueError("zero diagonal entry; matrix is singular")
    if not np.allclose(a, lower_triangular_toeplitz(col, n), atol=1e-12 * max(1.0, float(np.max(np.abs(a))))):
        raise ValueError("matrix is not lower-triangular Toeplitz")
    inv_h0 = 1.0 / col[0]
    inv = np.array([[inv_h0]], dtype=np.complex128)
    for k in range(2, n + 1):
        head = col[k - 1 : 0 : -1]
        last = -(head @ inv) * inv_h0
        grown = np.zeros((k, k), dtype=np.complex128)
        grown[: k - 1, : k - 1] = inv
        grown[k - 1, : k - 1] = last
        grown[k - 1, k - 1] = inv_h0
        inv = grown
    return inv
