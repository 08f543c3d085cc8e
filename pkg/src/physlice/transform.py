"""The orthonormal split transform, dense and butterfly-structured.

One split of ``M`` samples is the orthonormal matrix
``(1/sqrt(2)) [[I, W], [I, -W]]`` with a unit-modulus diagonal mixer ``W`` of
size M/2. Applied recursively to the top (positive) branch it carves one OFDM
symbol into slices; the mixer is what keeps the negative-branch channel
circulant and therefore FFT-decodable.
"""

from __future__ import annotations

import numpy as np

from .spectral import is_pow2

__all__ = [
    "butterfly_mixer",
    "split_matrix",
    "recursive_matrix",
    "forward_transform",
    "inverse_transform",
]

_SQRT2 = np.sqrt(2.0)

# Dense materializations are oracle-scale only.
_DENSE_CAP = 512


def butterfly_mixer(size: int) -> np.ndarray:
    """Diagonal of the half-size mixer used when splitting ``size`` samples.

    Entries are exp(j*2*pi*m/size) for m = 0 .. size/2 - 1, the twiddle
    factors of the first stage of a time-decimated inverse FFT. All entries
    have unit modulus, so the split stays orthonormal. For size 2 the mixer
    is the scalar 1.
    """
    if not is_pow2(size) or size < 2:
        raise ValueError(f"split size must be a power of two >= 2, got {size}")
    return np.exp(2j * np.pi * np.arange(size // 2) / size)


def split_matrix(size: int, mixer: np.ndarray | None = None) -> np.ndarray:
    """Dense one-step split of ``size`` samples: (1/sqrt(2)) [[I, W], [I, -W]].

    ``mixer`` may be a length size/2 diagonal (default: :func:`butterfly_mixer`)
    or a dense orthonormal size/2 matrix; pass ``np.ones(size // 2)`` for the
    plain W = I variant used by the direct decoder analysis.
    """
    if not is_pow2(size) or size < 2:
        raise ValueError(f"split size must be a power of two >= 2, got {size}")
    half = size // 2
    w = butterfly_mixer(size) if mixer is None else np.asarray(mixer, dtype=np.complex128)
    if w.ndim == 1:
        if w.size != half:
            raise ValueError(f"mixer diagonal has {w.size} entries, expected {half}")
        w = np.diag(w)
    elif w.shape != (half, half):
        raise ValueError(f"mixer matrix has shape {w.shape}, expected ({half}, {half})")
    eye = np.eye(half, dtype=np.complex128)
    return np.block([[eye, w], [eye, -w]]) / _SQRT2


def _check_plan(frame_size: int, depth: int) -> None:
    if not is_pow2(frame_size):
        raise ValueError(f"frame size must be a power of two, got {frame_size}")
    if depth < 0 or (1 << depth) > frame_size:
        raise ValueError(f"depth {depth} is invalid for frame size {frame_size}")


def recursive_matrix(frame_size: int, depth: int) -> np.ndarray:
    """Dense recursive transform: ``depth`` nested splits, identity at depth 0.

    Each level replaces the identity column of the one-step split with the
    next-level transform and contributes a 1/sqrt(2) factor, so the result is
    orthonormal at every depth. Oracle use only (frame_size <= 512).
    """
    _check_plan(frame_size, depth)
    if frame_size > _DENSE_CAP:
        raise ValueError(f"dense recursive transform is capped at size {_DENSE_CAP}")
    return _recursive_dense(frame_size, depth)


def _recursive_dense(n: int, depth: int) -> np.ndarray:
    if depth == 0:
        return np.eye(n, dtype=np.complex128)
    inner = _recursive_dense(n // 2, depth - 1)
    w = np.diag(butterfly_mixer(n))
    return np.block([[inner, w], [inner, -w]]) / _SQRT2


def forward_transform(signal, depth: int) -> np.ndarray:
    """Apply the recursive transform with a butterfly recursion.

    Equals ``recursive_matrix(len(signal), depth) @ signal`` to round-off,
    at O(N) complex operations per level.
    """
    s = np.asarray(signal, dtype=np.complex128)
    if s.ndim != 1:
        raise ValueError(f"signal must be one-dimensional, got shape {s.shape}")
    _check_plan(s.size, depth)
    return _forward(s, depth)


def _forward(s: np.ndarray, depth: int) -> np.ndarray:
    if depth == 0:
        return s.copy()
    half = s.size // 2
    top = _forward(s[:half], depth - 1)
    mixed = butterfly_mixer(s.size) * s[half:]
    return np.concatenate([top + mixed, top - mixed]) / _SQRT2


def inverse_transform(signal, depth: int) -> np.ndarray:
    """Apply the adjoint of :func:`forward_transform`.

    The transform is orthonormal, so this is also its exact inverse:
    ``inverse_transform(forward_transform(s, d), d) == s`` to round-off.
    """
    y = np.asarray(signal, dtype=np.complex128)
    if y.ndim != 1:
        raise ValueError(f"signal must be one-dimensional, got shape {y.shape}")
    _check_plan(y.size, depth)
    return _inverse(y, depth)


def _inverse(y: np.ndarray, depth: int) -> np.ndarray:
    if depth == 0:
        return y.copy()
    half = y.size // 2
    top = _inverse((y[:half] + y[half:]) / _SQRT2, depth - 1)
    bottom = np.conj(butterfly_mixer(y.size)) * (y[:half] - y[half:]) / _SQRT2
    return np.concatenate([top, bottom])
