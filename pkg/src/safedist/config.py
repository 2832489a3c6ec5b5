"""Runtime settings and the key-value config file format.

Config files are plain ``key = value`` lines; blank lines and ``#``
comments are ignored.  Recognized keys: c_min, radius_m, threshold_m,
torso_m, leg_m, arm_m, bbox_m, grid_step, heatmap_cell_px,
heatmap_sigma_cells.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .evaluation import DEFAULT_THRESHOLD_M, GRID_STEP
from .pose import DEFAULT_CONFIDENCE_MIN
from .proxemics import DEFAULT_PART_LENGTHS_M, DEFAULT_RADIUS_M, MetricReference


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Settings:
    c_min: float = DEFAULT_CONFIDENCE_MIN
    radius_m: float = DEFAULT_RADIUS_M
    threshold_m: float = DEFAULT_THRESHOLD_M
    torso_m: float = DEFAULT_PART_LENGTHS_M["torso"]
    leg_m: float = DEFAULT_PART_LENGTHS_M["leg"]
    arm_m: float = DEFAULT_PART_LENGTHS_M["arm"]
    bbox_m: float = DEFAULT_PART_LENGTHS_M["bbox"]
    grid_step: float = GRID_STEP
    heatmap_cell_px: int = 8
    heatmap_sigma_cells: float = 2.0

    def reference(self, part: str) -> MetricReference:
        lookup = {
            "torso": self.torso_m,
            "leg": self.leg_m,
            "arm": self.arm_m,
            "bbox": self.bbox_m,
        }
        if part not in lookup:
            raise ConfigError(f"unknown reference part {part!r}")
        return MetricReference(part=part, length_m=lookup[part])


_FLOAT_KEYS = (
    "c_min",
    "radius_m",
    "threshold_m",
    "torso_m",
    "leg_m",
    "arm_m",
    "bbox_m",
    "grid_step",
    "heatmap_sigma_cells",
)
_INT_KEYS = ("heatmap_cell_px",)


def load_settings(path) -> Settings:
    path = Path(path)
    overrides = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in text.split("=", 1))
            if key in _FLOAT_KEYS:
                try:
                    overrides[key] = float(value)
                except ValueError:
                    raise ConfigError(f"{path}:{line_no}: {key} must be a number") from None
            elif key in _INT_KEYS:
                try:
                    overrides[key] = int(value)
                except ValueError:
                    raise ConfigError(f"{path}:{line_no}: {key} must be an integer") from None
            else:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
    return replace(Settings(), **overrides)
