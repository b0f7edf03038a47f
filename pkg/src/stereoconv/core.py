"""Domain types shared by every stage of the converter.

All rasters are row-major numpy arrays wrapped in small frozen dataclasses.
The wrapped arrays are made read-only on construction, so instances are
value-like and safe to share between workers; ``.copy()`` on the array gives
a private mutable buffer.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


class StereoError(Exception):
    """Base class for all errors raised by this package."""


class InputError(StereoError, ValueError):
    """Bad input data (shapes, values, files)."""


class DimensionMismatchError(InputError):
    pass


class InvalidValueError(InputError):
    """Non-finite, negative or otherwise out-of-range values."""


class ConfigError(StereoError, ValueError):
    pass


class NumericError(StereoError, ArithmeticError):
    """A computation produced non-finite numbers."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    # callers pass a private copy
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _to_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def _from_bytes(data: bytes) -> np.ndarray:
    return np.load(io.BytesIO(data), allow_pickle=False)


@dataclass(frozen=True, eq=False)
class Frame:
    """An H x W RGB image with channel values in [0, 1], stored as float32."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionMismatchError(f"frame must be HxWx3, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionMismatchError("frame must be at least 1x1")
        px = px.astype(np.float32, copy=True)
        if not np.all(np.isfinite(px)):
            raise InvalidValueError("frame contains non-finite values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise InvalidValueError("frame values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    @classmethod
    def from_uint8(cls, data: np.ndarray) -> Frame:
        return cls(np.asarray(data, dtype=np.float32) / 255.0)

    def to_uint8(self) -> np.ndarray:
        return np.round(self.pixels.astype(np.float64) * 255.0).astype(np.uint8)

    @classmethod
    def filled(cls, height: int, width: int, color=(0.0, 0.0, 0.0)) -> Frame:
        px = np.empty((height, width, 3), dtype=np.float32)
        px[:] = np.asarray(color, dtype=np.float32)
        return cls(px)

    def to_bytes(self) -> bytes:
        return _to_bytes(self.pixels)

    @classmethod
    def from_bytes(cls, data: bytes) -> Frame:
        return cls(_from_bytes(data))

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Horizontal offsets in pixels; the right-view column is ``x - d``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionMismatchError(f"disparity must be a non-empty HxW array, got {v.shape}")
        v = v.astype(np.float32, copy=True)
        if not np.all(np.isfinite(v)):
            raise InvalidValueError("disparity contains non-finite values")
        if v.min() < 0.0:
            raise InvalidValueError("disparity must be non-negative")
        if v.max() > v.shape[1]:
            raise InvalidValueError("disparity exceeds the frame width")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def zeros(cls, height: int, width: int) -> DisparityMap:
        return cls(np.zeros((height, width), dtype=np.float32))

    def to_bytes(self) -> bytes:
        return _to_bytes(self.values)

    @classmethod
    def from_bytes(cls, data: bytes) -> DisparityMap:
        return cls(_from_bytes(data))

    def __eq__(self, other):
        if not isinstance(other, DisparityMap):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class _BitField:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionMismatchError(f"expected a non-empty HxW field, got {b.shape}")
        object.__setattr__(self, "bits", _freeze(b.astype(bool, copy=True)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def count(self) -> int:
        return int(self.bits.sum())

    def to_bytes(self) -> bytes:
        return _to_bytes(self.bits)

    @classmethod
    def from_bytes(cls, data: bytes):
        return cls(_from_bytes(data))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None


class OcclusionMask(_BitField):
    """True marks a hole left by warping."""


class EdgeMap(_BitField):
    """True marks an edge pixel."""


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """A C x H x W float64 tensor."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[0] < 1:
            raise DimensionMismatchError(f"feature map must be CxHxW with C >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidValueError("feature map contains non-finite values")
        object.__setattr__(self, "values", _freeze(v.copy()))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def validate_pair(frame: Frame, disparity: DisparityMap) -> None:
    """Check that a frame and its disparity map belong together.

    Raw arrays are accepted too and go through the same invariant checks as
    the type constructors.

    Raises:
        DimensionMismatchError: shapes differ.
        InvalidValueError: disparity is non-finite, negative or wider than
            the frame.
    """
    if not isinstance(frame, Frame):
        frame = Frame(frame)
    if not isinstance(disparity, DisparityMap):
        disparity = DisparityMap(disparity)
    if frame.shape != disparity.shape:
        raise DimensionMismatchError(
            f"frame is {frame.height}x{frame.width}, disparity is "
            f"{disparity.height}x{disparity.width}"
        )


def check_same_shape(*items) -> tuple[int, int]:
    shapes = {tuple(it.shape[:2]) for it in items}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(shapes)}")
    return shapes.pop()


def seeded_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; streams are identical across runs and platforms."""
    return np.random.Generator(np.random.PCG64(seed))
