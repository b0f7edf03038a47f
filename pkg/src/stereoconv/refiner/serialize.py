"""Binary weights file.

Layout (little-endian)::

    b"MHFU"  u32 version
    u32 levels  u32 in_channels  u32 channels[levels]  u32 kernel_size
    u32 parameter_count
    f32 parameters[parameter_count]      # declaration order, kernel then bias

Parameters are stored as float32, so a round trip is exact for weights that
are float32-representable (fresh initialisations are).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..core import InputError
from .network import IN_CHANNELS, RefinerWeights

MAGIC = b"MHFU"
VERSION = 1


class WeightsFormatError(InputError):
    pass


class BadMagicError(WeightsFormatError):
    pass


class VersionMismatchError(WeightsFormatError):
    pass


class TruncatedFileError(WeightsFormatError):
    pass


def weights_to_bytes(w: RefinerWeights) -> bytes:
    ch = w.channels
    header = MAGIC + struct.pack("<I", VERSION)
    header += struct.pack(f"<II{len(ch)}II", w.levels, IN_CHANNELS, *ch, w.kernel_size)
    flat = np.concatenate([p.ravel() for p in w.params()]).astype("<f4")
    return header + struct.pack("<I", flat.size) + flat.tobytes()


def weights_from_bytes(data: bytes) -> RefinerWeights:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("not a refiner weights file (bad magic)")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise TruncatedFileError("weights file is truncated")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    (version,) = take("<I")
    if version != VERSION:
        raise VersionMismatchError(f"weights version {version}, expected {VERSION}")
    levels, in_ch = take("<II")
    if in_ch != IN_CHANNELS or not 2 <= levels <= 64:
        raise WeightsFormatError("unsupported architecture descriptor")
    channels = take(f"<{levels}I")
    (ksize,) = take("<I")
    (count,) = take("<I")
    w = RefinerWeights.init(channels, seed=0, kernel_size=ksize)
    if count != w.num_params:
        raise WeightsFormatError(f"parameter count {count} does not match the descriptor")
    need = count * 4
    if pos + need > len(data):
        raise TruncatedFileError("weights file is truncated")
    if pos + need < len(data):
        raise WeightsFormatError("trailing bytes after the parameters")
    flat = np.frombuffer(data, dtype="<f4", count=count, offset=pos).astype(np.float64)
    start = 0
    for p in w.params():
        p[...] = flat[start : start + p.size].reshape(p.shape)
        start += p.size
    w.validate()
    return w


def save_weights(w: RefinerWeights, path) -> None:
    Path(path).write_bytes(weights_to_bytes(w))


def load_weights(path) -> RefinerWeights:
    return weights_from_bytes(Path(path).read_bytes())
