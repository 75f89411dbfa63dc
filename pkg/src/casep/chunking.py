"""Segmenting a frame sequence into half-overlapping chunks, and its inverse.

A (frames, channels) sequence is right-padded with zeros and cut into
chunks of an even size with hop = size/2, giving (n_chunks, size, channels).
``overlap_add`` averages the per-frame contributions (each frame lands in
one or two chunks) and trims the padding, so it inverts ``segment``
exactly, not just approximately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ConfigError, ContractError, ShapeError, Tensor, _accum, _from_op


@dataclass
class ChunkTensor:
    """Chunked features plus the bookkeeping needed to invert the chunking."""

    data: Tensor          # (n_chunks, size, channels)
    hop: int
    original_length: int | None = None  # frame count before padding

    @property
    def size(self) -> int:
        return self.data.shape[1]

    @property
    def n_chunks(self) -> int:
        return self.data.shape[0]

    def with_data(self, data: Tensor) -> "ChunkTensor":
        """Same chunk geometry, new payload (channel extent may differ)."""
        if data.shape[:2] != self.data.shape[:2]:
            raise ShapeError(
                f"chunk geometry {data.shape[:2]} != {self.data.shape[:2]}"
            )
        return ChunkTensor(data, self.hop, self.original_length)


def padded_length(n_frames: int, size: int) -> int:
    """Smallest length >= max(n_frames, size) cut cleanly by hop-sized steps."""
    hop = size // 2
    base = max(n_frames, size)
    rem = (base - size) % hop
    return base if rem == 0 else base + (hop - rem)


def segment(x: Tensor, size: int) -> ChunkTensor:
    """Cut (frames, channels) into half-overlapping chunks of ``size``."""
    if size < 2 or size % 2 != 0:
        raise ConfigError(f"chunk size must be even and >= 2, got {size}")
    if x.data.ndim != 2:
        raise ShapeError(f"segment expects (frames, channels), got {x.shape}")
    hop = size // 2
    n_frames, channels = x.shape
    t_pad = padded_length(n_frames, size)
    n_chunks = (t_pad - size) // hop + 1

    xp = np.zeros((t_pad, channels), dtype=x.data.dtype)
    xp[:n_frames] = x.data
    out_data = np.stack(
        [xp[c * hop : c * hop + size] for c in range(n_chunks)]
    )

    def bwd(g):
        gxp = np.zeros((t_pad, channels), dtype=g.dtype)
        for c in range(n_chunks):
            gxp[c * hop : c * hop + size] += g[c]
        _accum(x, gxp[:n_frames])

    return ChunkTensor(_from_op(out_data, (x,), bwd), hop, n_frames)


def _coverage(n_chunks: int, size: int, hop: int) -> np.ndarray:
    t_pad = (n_chunks - 1) * hop + size
    counts = np.zeros(t_pad)
    for c in range(n_chunks):
        counts[c * hop : c * hop + size] += 1.0
    return counts


def overlap_add(chunks: ChunkTensor) -> Tensor:
    """Average overlapping chunk contributions and trim to the pre-pad length."""
    if chunks.original_length is None:
        raise ContractError("overlap_add needs the original frame count")
    x = chunks.data
    if x.data.ndim != 3:
        raise ShapeError(f"overlap_add expects (chunks, size, channels), got {x.shape}")
    n_chunks, size, channels = x.shape
    hop = chunks.hop
    n_frames = chunks.original_length
    t_pad = (n_chunks - 1) * hop + size
    if n_frames > t_pad:
        raise ContractError(
            f"original length {n_frames} exceeds chunk span {t_pad}"
        )
    counts = _coverage(n_chunks, size, hop).astype(x.data.dtype)

    acc = np.zeros((t_pad, channels), dtype=x.data.dtype)
    for c in range(n_chunks):
        acc[c * hop : c * hop + size] += x.data[c]
    out_data = (acc / counts[:, None])[:n_frames]

    def bwd(g):
        gp = np.zeros((t_pad, channels), dtype=g.dtype)
        gp[:n_frames] = g
        gp /= counts[:, None]
        _accum(
            x,
            np.stack([gp[c * hop : c * hop + size] for c in range(n_chunks)]),
        )

    return _from_op(out_data, (x,), bwd)
