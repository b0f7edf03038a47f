"""File formats: RGB frames (PNG, binary PPM), disparity (PFM, 16-bit PNG) and manifests."""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .core import DisparityMap, Frame, InputError, InvalidValueError, seeded_rng


class FormatError(InputError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class CorruptFileError(FormatError):
    pass


class BadMagicError(FormatError):
    pass


class InsufficientDataError(InputError):
    pass


FRAME_EXTENSIONS = (".png", ".ppm")
_INDEX_RE = re.compile(r"^(\d{6})\.(png|ppm|pfm)$")


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


def _read_ppm(data: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise CorruptFileError("truncated PPM header")
        tokens.append(data[start:pos])
    if pos >= n or not data[pos : pos + 1].isspace():
        raise CorruptFileError("truncated PPM header")
    pos += 1  # single whitespace before the raster
    magic, *dims = tokens
    if magic != b"P6":
        raise UnsupportedFormatError(f"not a binary PPM (magic {magic!r})")
    try:
        w, h, maxval = (int(t) for t in dims)
    except ValueError:
        raise CorruptFileError("non-numeric PPM header field") from None
    if maxval != 255:
        raise UnsupportedFormatError(f"PPM maxval {maxval} unsupported (only 255)")
    if w < 1 or h < 1:
        raise CorruptFileError("PPM has empty dimensions")
    need = w * h * 3
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise CorruptFileError(f"PPM raster truncated ({len(raster)} of {need} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3)


def read_frame(path) -> Frame:
    """Read an 8-bit RGB frame from ``.png`` or binary ``.ppm``."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        return Frame.from_uint8(_read_ppm(path.read_bytes()))
    if suffix == ".png":
        try:
            with Image.open(path) as img:
                if img.mode in ("I", "I;16", "I;16B", "F"):
                    raise UnsupportedFormatError(f"{path}: {img.mode} PNG is not 8-bit RGB")
                arr = np.asarray(img.convert("RGB"))
        except UnsupportedFormatError:
            raise
        except (OSError, SyntaxError, ValueError) as exc:
            raise CorruptFileError(f"{path}: {exc}") from None
        return Frame.from_uint8(arr)
    raise UnsupportedFormatError(f"unsupported frame format {path.suffix!r}")


def write_frame(frame: Frame, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = frame.to_uint8()
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        h, w, _ = data.shape
        path.write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + data.tobytes())
    elif suffix == ".png":
        Image.fromarray(data, "RGB").save(path)
    else:
        raise UnsupportedFormatError(f"unsupported frame format {path.suffix!r}")


# ---------------------------------------------------------------------------
# disparity
# ---------------------------------------------------------------------------


def read_pfm(path) -> np.ndarray:
    """Read a grayscale ``Pf`` file into a top-down float32 array."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4:
        if parts and parts[0].strip() != b"Pf":
            raise BadMagicError(f"{path}: not a grayscale PFM")
        raise CorruptFileError(f"{path}: truncated PFM header")
    magic, dims, scale_line, raster = parts
    if magic.strip() != b"Pf":
        raise BadMagicError(f"{path}: not a grayscale PFM (magic {magic.strip()!r})")
    try:
        w, h = (int(v) for v in dims.split())
        scale = float(scale_line.strip())
    except ValueError:
        raise CorruptFileError(f"{path}: malformed PFM header") from None
    dtype = "<f4" if scale < 0 else ">f4"
    need = w * h * 4
    if len(raster) < need:
        raise CorruptFileError(f"{path}: PFM raster truncated")
    arr = np.frombuffer(raster[:need], dtype=dtype).reshape(h, w)
    # PFM rows run bottom to top
    arr = np.flipud(arr).astype(np.float32)
    if np.isnan(arr).any():
        raise InvalidValueError(f"{path}: PFM contains NaN")
    return arr


def write_pfm(values, path, little_endian: bool = True) -> None:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise InvalidValueError("PFM writer expects an HxW array")
    if np.isnan(arr).any():
        raise InvalidValueError("refusing to write NaN disparity")
    h, w = arr.shape
    scale = -1.0 if little_endian else 1.0
    dtype = "<f4" if little_endian else ">f4"
    header = f"Pf\n{w} {h}\n{scale}\n".encode("ascii")
    Path(path).write_bytes(header + np.flipud(arr).astype(dtype).tobytes())


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".scale")


DEFAULT_PNG_SCALE = 1.0 / 64.0


def read_disparity(path) -> DisparityMap:
    """Read ``.pfm`` or 16-bit ``.png`` (with ``<name>.png.scale`` sidecar)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return DisparityMap(read_pfm(path))
    if suffix == ".png":
        side = _sidecar(path)
        try:
            scale = float(side.read_text().strip())
        except OSError:
            raise FormatError(f"missing scale sidecar {side}") from None
        except ValueError:
            raise CorruptFileError(f"bad scale in {side}") from None
        with Image.open(path) as img:
            raw = np.asarray(img).astype(np.float64)
        if raw.ndim != 2:
            raise UnsupportedFormatError(f"{path}: disparity PNG must be single-channel")
        return DisparityMap(raw * scale)
    raise UnsupportedFormatError(f"unsupported disparity format {path.suffix!r}")


def write_disparity(disparity: DisparityMap, path, scale: float = DEFAULT_PNG_SCALE) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = disparity.values if isinstance(disparity, DisparityMap) else np.asarray(disparity)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        write_pfm(values, path)
    elif suffix == ".png":
        raw = np.clip(np.round(values.astype(np.float64) / scale), 0, 65535).astype(np.uint16)
        Image.fromarray(raw).save(path)
        _sidecar(path).write_text(f"{scale!r}\n")
    else:
        raise UnsupportedFormatError(f"unsupported disparity format {path.suffix!r}")


# ---------------------------------------------------------------------------
# directories and manifests
# ---------------------------------------------------------------------------


def list_indexed(directory, extensions=None) -> dict[int, Path]:
    """Map six-digit frame index -> file for ``NNNNNN.ext`` files in a directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"not a directory: {directory}")
    found = {}
    for entry in sorted(directory.iterdir()):
        m = _INDEX_RE.match(entry.name)
        if not m:
            continue
        if extensions and entry.suffix.lower() not in extensions:
            continue
        found.setdefault(int(m.group(1)), entry)
    return found


def frame_name(index: int, ext: str = ".png") -> str:
    return f"{index:06d}{ext}"


def make_manifest(
    video_dirs,
    train_count: int,
    test_count: int,
    seed: int,
    path=None,
    root=None,
) -> list[tuple[str, str]]:
    """Seeded shuffle of ``video_dirs`` split into train/test entries.

    The input order does not matter: directories are sorted before the
    shuffle.  When ``path`` is given the manifest is written there as
    ``split<TAB>relative/path`` lines.
    """
    dirs = sorted(str(d) for d in video_dirs)
    if train_count < 0 or test_count < 0:
        raise InputError("split sizes must be non-negative")
    if train_count + test_count > len(dirs):
        raise InsufficientDataError(
            f"requested {train_count}+{test_count} videos but only {len(dirs)} available"
        )
    if root is None:
        root = os.path.commonpath([os.path.abspath(d) for d in dirs]) if dirs else "."
        if len(dirs) == 1:
            root = os.path.dirname(root)
    order = seeded_rng(seed).permutation(len(dirs))
    chosen = [dirs[i] for i in order[: train_count + test_count]]
    entries = [
        ("train" if n < train_count else "test", os.path.relpath(os.path.abspath(d), root))
        for n, d in enumerate(chosen)
    ]
    if path is not None:
        text = "".join(f"{split}\t{rel}\n" for split, rel in entries)
        Path(path).write_text(text)
    return entries


def read_manifest(path) -> list[tuple[str, str]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            split, rel = line.split("\t", 1)
            rows.append((split, rel))
    return rows
