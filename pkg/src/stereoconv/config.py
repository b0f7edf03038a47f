"""Pipeline configuration and its ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .core import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # depth -> disparity
    disparity_gain: float = 1.0
    disparity_shift: float = 0.0

    # disparity expansion
    expand_radius: int = 3
    expand_threshold: float = 3.0
    expand_mirrored: bool = False

    # Canny; thresholds are fractions of the max gradient unless canny_relative is off
    canny_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.3
    canny_relative: bool = True

    # inpainting branches
    use_poly: bool = True
    use_de: bool = True
    use_external: bool = False
    use_fallback: bool = True
    external_dir: Optional[str] = None
    fill_tolerance: float = 1e-4
    fill_max_iter: int = 20000

    # refiner and training
    weights_path: Optional[str] = None
    channels: tuple = (16, 32, 64)
    kernel_size: int = 3
    alpha: float = 10.0
    lambda1: float = 10.0
    lambda2: float = 2.0
    lambda3: float = 0.1
    adversarial: bool = True
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    train_steps: int = 2000
    batch_size: int = 4

    # evaluation and driver
    eval_stride: int = 20
    seed: int = 0
    jobs: int = 1
    write_sbs: bool = False
    write_anaglyph: bool = False
    debug_poison: bool = False

    def __post_init__(self):
        if self.expand_radius < 1:
            raise ConfigError("expand_radius (k) must be >= 1")
        if not self.expand_threshold > 0:
            raise ConfigError("expand_threshold (lambda) must be > 0")
        if not self.canny_sigma > 0:
            raise ConfigError("canny_sigma must be > 0")
        if not 0 < self.canny_low < self.canny_high:
            raise ConfigError("Canny thresholds need 0 < low < high")
        if self.alpha < 0 or min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.eval_stride < 1:
            raise ConfigError("eval_stride must be >= 1")
        if len(self.channels) < 2 or any(int(c) < 1 for c in self.channels):
            raise ConfigError("channels needs at least two positive entries")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be odd")
        if self.jobs < 1 or self.batch_size < 1 or self.train_steps < 0:
            raise ConfigError("jobs and batch_size must be >= 1, train_steps >= 0")
        if not self.fill_tolerance > 0 or self.fill_max_iter < 1:
            raise ConfigError("fill_tolerance must be > 0 and fill_max_iter >= 1")

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif value is None:
                value = ""
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.default for f in fields(PipelineConfig)}


def _coerce(key: str, raw: str):
    default = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(int(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    # Optional[str]
    return raw or None


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return (base or PipelineConfig()).replace(**values)


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file (or defaults when ``path`` is None) and apply overrides.

    ``None`` values in ``overrides`` are ignored so argparse namespaces can
    be passed straight through.
    """
    cfg = PipelineConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = parse_config(text, cfg)
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(clean) - set(_FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cfg.replace(**clean)
    return cfg
