"""The "TSEP" checkpoint container.

Layout (all integers little-endian uint32):

    b"TSEP" | version | config_len | config utf-8 text
    | tensor_count | { name_len | name utf-8 | rank | extents... | payload }*

Payloads are row-major 32-bit floats. The embedded config is the flat
``section.key = value`` text of the model (plus any extra run metadata the
writer chooses to record), enough to rebuild the architecture without the
original config file. Optimizer state rides along under reserved
``optim.`` name prefixes; loaders that only want weights skip those.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .config import ModelConfig, model_config_from_flat, model_config_to_flat, \
    parse_flat, serialize_flat
from .nn import Module
from .tensor import ConfigError

MAGIC = b"TSEP"
VERSION = 1


def save_checkpoint(path, cfg: ModelConfig, tensors: dict[str, np.ndarray],
                    extra_entries: dict[str, str] | None = None) -> None:
    entries = model_config_to_flat(cfg)
    if extra_entries:
        entries.update(extra_entries)
    config_blob = serialize_flat(entries).encode()
    parts = [MAGIC, struct.pack("<I", VERSION),
             struct.pack("<I", len(config_blob)), config_blob,
             struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        blob = name.encode()
        # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d
        arr = np.asarray(arr, dtype="<f4")
        parts.append(struct.pack("<I", len(blob)))
        parts.append(blob)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ConfigError("truncated checkpoint file")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path):
    """Returns (ModelConfig, raw config entries, {name: float32 array})."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise ConfigError(f"{path}: not a checkpoint (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    entries = parse_flat(r.take(r.u32()).decode())
    cfg = model_config_from_flat(entries)
    tensors: dict[str, np.ndarray] = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode()
        rank = r.u32()
        shape = struct.unpack(f"<{rank}I", r.take(4 * rank)) if rank else ()
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        data = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape)
        tensors[name] = data.copy()
    if r.pos != len(r.blob):
        raise ConfigError(f"{path}: trailing bytes after last tensor")
    return cfg, entries, tensors


def model_state(model: Module) -> dict[str, np.ndarray]:
    """Named weights in graph order, deduplicated (shared appear once)."""
    out: dict[str, np.ndarray] = {}
    seen: set[int] = set()
    for name, p in model.named_parameters():
        if id(p) in seen:
            continue
        seen.add(id(p))
        out[name] = p.data
    return out


def load_model_state(model: Module, tensors: dict[str, np.ndarray]) -> None:
    """Copy checkpoint weights into a built model, name by name."""
    weights = {k: v for k, v in tensors.items() if not k.startswith("optim.")}
    state = model_state(model)
    missing = sorted(set(state) - set(weights))
    if missing:
        raise ConfigError(f"checkpoint lacks weights for: {', '.join(missing[:5])}")
    extra = sorted(set(weights) - set(state))
    if extra:
        raise ConfigError(f"checkpoint has unknown weights: {', '.join(extra[:5])}")
    lookup = dict(model.named_parameters())
    for name, arr in weights.items():
        p = lookup[name]
        if tuple(arr.shape) != p.data.shape:
            raise ConfigError(
                f"shape mismatch for {name}: checkpoint {arr.shape} "
                f"vs model {p.data.shape}"
            )
        p.data = arr.astype(p.data.dtype)
