"""Slice tree construction: sizes, polarity paths, frame layout, bins, latency.

A canonical chain plan always re-splits the positive branch, so ``depth``
splits of an N-sample frame produce depth+1 slices laid out smallest first:
the final all-positive slice of size N/2^depth, then the negative slices of
sizes N/2^depth, N/2^(depth-1), ..., N/2. Each slice owns a disjoint set of
original frequency bins (a residue class mod 2^|path|) and a decode cost in
FFT-operation units that determines its latency rank.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .spectral import is_pow2

__all__ = [
    "SliceDescriptor",
    "SlicePlan",
    "build_plan",
    "bins_for_slice",
    "decode_cost",
    "total_cost",
    "plan_to_csv",
]


@dataclass(frozen=True)
class SliceDescriptor:
    """One slice of the frame.

    ``path`` is the '+'/'-' polarity string from the first split down to the
    slice's own branch; the final all-positive slice of a depth-K plan has
    path '+' * K ('' for the degenerate depth-0 plan). The slice carries the
    original bins {bin_residue + k * bin_stride}.
    """

    path: str
    size: int
    frame_offset: int
    bin_residue: int
    bin_stride: int
    decode_ops: int


@dataclass(frozen=True)
class SlicePlan:
    """Slice layout of one frame; immutable and shareable across workers."""

    frame_size: int
    depth: int
    cp_length: int
    slices: tuple[SliceDescriptor, ...]
    non_uniform: bool = False
    # Smallest slice size still produced by a uniform split (channel shorter
    # than the child size); None when no channel length hint was given.
    uniform_floor: int | None = None


def decode_cost(path: str, size: int) -> int:
    """Decode cost of one slice in FFT-operation units.

    A positive slice of size M is decoded with a plain M-point FFT,
    M*log2(M) operations; a negative slice pays 2M additional real
    operations for the mixer rotation ahead of its FFT. Size-1 leaves cost
    2 (negative) and 1 (positive) by convention.
    """
    if size < 1 or not is_pow2(size):
        raise ValueError(f"slice size must be a positive power of two, got {size}")
    negative = path.endswith("-")
    if size == 1:
        return 2 if negative else 1
    ops = size * (size.bit_length() - 1)
    if negative:
        ops += 2 * size
    return ops


def _bin_residue(path: str) -> int:
    return sum(1 << i for i, branch in enumerate(path) if branch == "-")


def build_plan(
    frame_size: int,
    depth: int,
    cp_length: int,
    channel_length: int | None = None,
) -> SlicePlan:
    """Build the canonical chain plan for a frame.

    ``channel_length`` is an optional hint: the cyclic prefix must cover it,
    and the plan is flagged non-uniform when the channel outgrows the
    smallest slice (the regime where the two branches of a split stop
    sharing the rate evenly).
    """
    if not is_pow2(frame_size):
        raise ValueError(f"frame size must be a power of two, got {frame_size}")
    if depth < 0 or (1 << depth) > frame_size:
        raise ValueError(f"depth {depth} is invalid for frame size {frame_size}")
    if cp_length < 0:
        raise ValueError("cyclic prefix length must be non-negative")
    if channel_length is not None and cp_length < channel_length:
        raise ValueError(
            f"cyclic prefix ({cp_length}) shorter than the channel ({channel_length})"
        )

    paths = ["+" * depth] + ["+" * (k - 1) + "-" for k in range(depth, 0, -1)]
    slices = []
    offset = 0
    for path in paths:
        size = frame_size >> len(path)
        slices.append(
            SliceDescriptor(
                path=path,
                size=size,
                frame_offset=offset,
                bin_residue=_bin_residue(path),
                bin_stride=1 << len(path),
                decode_ops=decode_cost(path, size),
            )
        )
        offset += size

    non_uniform = False
    uniform_floor = None
    if channel_length is not None and channel_length >= 1:
        non_uniform = channel_length > frame_size >> depth
        uniform_floor = 1 << (channel_length - 1).bit_length()
    return SlicePlan(
        frame_size=frame_size,
        depth=depth,
        cp_length=cp_length,
        slices=tuple(slices),
        non_uniform=non_uniform,
        uniform_floor=uniform_floor,
    )


def bins_for_slice(descriptor: SliceDescriptor, frame_size: int):
    """Original frequency bins carried by a slice, in slice-local bin order.

    Bin b of the slice's own FFT maps to original bin
    ``bin_residue + b * bin_stride``; over all slices of a plan these
    residue classes partition 0 .. N-1.
    """
    return range(descriptor.bin_residue, frame_size, descriptor.bin_stride)


def total_cost(plan: SlicePlan) -> int:
    """Total decode operations over all slices of the plan."""
    return sum(s.decode_ops for s in plan.slices)


def plan_to_csv(plan: SlicePlan, destination) -> None:
    """Write the plan summary as CSV (one row per slice, frame order)."""

    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow(["path", "size", "frame_offset", "bin_residue", "bin_stride", "decode_ops"])
        for s in plan.slices:
            writer.writerow([s.path, s.size, s.frame_offset, s.bin_residue, s.bin_stride, s.decode_ops])

    if hasattr(destination, "write"):
        _write(destination)
    else:
        with Path(destination).open("w", newline="") as fh:
            _write(fh)
