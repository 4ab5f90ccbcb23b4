"""Run configuration: one YAML file, every default surfaced, flag overrides."""
from __future__ import annotations

import dataclasses
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import sampling, solar, view_out
from .compliance import DISTANCE_RULES

OBSTRUCTION_MODES = ("hemisphere", "normal")
DEFAULT_THRESHOLDS = (0.0, 0.01, 0.05, 0.1, 0.5)


class ConfigError(ValueError):
    """Malformed or out-of-range run configuration."""


@dataclass(frozen=True)
class RunConfig:
    scene: Path
    layer_map: Path
    latitude: float
    longitude: float
    floor_polygon: tuple[tuple[float, float], ...]
    utc_offset: float = 0.0
    north_azimuth_deg: float = 0.0
    floor_height_m: float | None = None
    spacing_m: float = sampling.DEFAULT_SPACING
    heights_m: tuple[float, ...] = sampling.EYE_HEIGHTS
    window: int = 0
    icosphere_level: int = sampling.DEFAULT_LEVEL
    ring_size: int = sampling.DEFAULT_RING
    thresholds_sr: tuple[float, ...] = DEFAULT_THRESHOLDS
    layer_threshold_sr: float = 0.0
    distance_rule: str = "median"
    far_cap_m: float | None = None
    obstruction_sampling: str = "hemisphere"
    window_samples: int = view_out.WINDOW_SAMPLES
    window_inset_m: float = view_out.WINDOW_INSET
    timestep_min: int = solar.DEFAULT_TIMESTEP
    year: int = solar.DEFAULT_YEAR
    period: tuple[dt.date, dt.date] | None = None
    evaluation_day: dt.date | None = None
    output_dir: Path = field(default=Path("out"))
    threads: int | None = None

    @property
    def resolved_period(self) -> tuple[dt.date, dt.date]:
        return self.period or solar.default_period(self.year)

    @property
    def sweep(self) -> tuple[float, ...]:
        """Threshold columns, always including the governing threshold."""
        return tuple(sorted(set(self.thresholds_sr) | {self.layer_threshold_sr}))

    def validate(self) -> "RunConfig":
        def need(ok, msg):
            if not ok:
                raise ConfigError(msg)

        need(-90 <= self.latitude <= 90, "location.latitude must lie in [-90, 90]")
        need(-180 <= self.longitude <= 180, "location.longitude must lie in [-180, 180]")
        need(-14 <= self.utc_offset <= 14, "location.utc_offset must lie in [-14, 14]")
        need(math.isfinite(self.north_azimuth_deg), "location.north_azimuth_deg must be finite")
        need(len(self.floor_polygon) >= 3, "room.floor_polygon needs at least 3 points")
        need(self.spacing_m > 0, "grid.spacing_m must be positive")
        need(len(self.heights_m) > 0 and all(h > 0 for h in self.heights_m),
             "grid.heights_m must be a non-empty list of positive heights")
        need(len(set(self.heights_m)) == len(self.heights_m), "grid.heights_m has duplicates")
        need(self.window >= 0, "view.window must be a non-negative index")
        need(0 <= self.icosphere_level <= sampling.MAX_LEVEL,
             f"view.icosphere_level must lie in 0..{sampling.MAX_LEVEL}")
        need(self.ring_size >= sampling.MIN_RING,
             f"view.ring_size must be at least {sampling.MIN_RING}")
        need(len(self.thresholds_sr) > 0 and all(t >= 0 for t in self.thresholds_sr),
             "view.thresholds_sr must be non-negative")
        need(self.layer_threshold_sr >= 0, "view.layer_threshold_sr must be non-negative")
        need(self.distance_rule in DISTANCE_RULES,
             f"view.distance_rule must be one of {', '.join(DISTANCE_RULES)}")
        need(self.far_cap_m is None or self.far_cap_m > 0, "view.far_cap_m must be positive")
        need(self.obstruction_sampling in OBSTRUCTION_MODES,
             f"view.obstruction_sampling must be one of {', '.join(OBSTRUCTION_MODES)}")
        need(self.window_samples >= 1, "view.window_samples must be at least 1")
        need(self.window_inset_m >= 0, "view.window_inset_m must be non-negative")
        need(1 <= self.timestep_min <= 60 and 60 % self.timestep_min == 0,
             f"invalid timestep {self.timestep_min}: must divide 60")
        need(1 <= self.year <= 9999, "sunlight.year out of range")
        start, end = self.resolved_period
        need(start <= end, "sunlight.period start is after its end")
        need(self.evaluation_day is None or start <= self.evaluation_day <= end,
             f"evaluation day {self.evaluation_day} is outside the assessment period")
        need(self.threads is None or self.threads >= 1, "--threads must be at least 1")
        return self

    def echo(self) -> dict:
        """The config as a loadable document with absolute paths.

        Output location and thread count are left out: they do not change results.
        """
        return {
            "scene": str(self.scene.resolve()),
            "layer_map": str(self.layer_map.resolve()),
            "location": {"latitude": self.latitude, "longitude": self.longitude,
                         "utc_offset": self.utc_offset,
                         "north_azimuth_deg": self.north_azimuth_deg},
            "room": {"floor_polygon": [list(p) for p in self.floor_polygon],
                     "floor_height_m": self.floor_height_m},
            "grid": {"spacing_m": self.spacing_m, "heights_m": list(self.heights_m)},
            "view": {"window": self.window, "icosphere_level": self.icosphere_level,
                     "ring_size": self.ring_size, "thresholds_sr": list(self.thresholds_sr),
                     "layer_threshold_sr": self.layer_threshold_sr,
                     "distance_rule": self.distance_rule, "far_cap_m": self.far_cap_m,
                     "obstruction_sampling": self.obstruction_sampling,
                     "window_samples": self.window_samples,
                     "window_inset_m": self.window_inset_m},
            "sunlight": {"timestep_min": self.timestep_min, "year": self.year,
                         "period": [d.isoformat() for d in self.resolved_period],
                         "evaluation_day": (self.evaluation_day.isoformat()
                                            if self.evaluation_day else None)},
        }


# YAML section -> {key: RunConfig field}
_LAYOUT: dict[str | None, dict[str, str]] = {
    None: {"scene": "scene", "layer_map": "layer_map", "output_dir": "output_dir"},
    "location": {"latitude": "latitude", "longitude": "longitude", "utc_offset": "utc_offset",
                 "north_azimuth_deg": "north_azimuth_deg"},
    "room": {"floor_polygon": "floor_polygon", "floor_height_m": "floor_height_m"},
    "grid": {"spacing_m": "spacing_m", "heights_m": "heights_m"},
    "view": {k: k for k in ("window", "icosphere_level", "ring_size", "thresholds_sr",
                            "layer_threshold_sr", "distance_rule", "far_cap_m",
                            "obstruction_sampling", "window_samples", "window_inset_m")},
    "sunlight": {k: k for k in ("timestep_min", "year", "period", "evaluation_day")},
}
_REQUIRED = ("scene", "layer_map", "latitude", "longitude", "floor_polygon")


def _number(name, v, kind=float, optional=False):
    if v is None and optional:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if kind is int:
        if float(v) != int(v):
            raise ConfigError(f"{name} must be an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return float(v)


def _date(name, v, optional=True):
    if v is None and optional:
        return None
    if isinstance(v, dt.datetime):
        return v.date()
    if isinstance(v, dt.date):
        return v
    try:
        return dt.date.fromisoformat(str(v))
    except ValueError:
        raise ConfigError(f"{name}: invalid date {v!r}") from None


def _coerce(key: str, v: Any, base: Path):
    if key in ("scene", "layer_map", "output_dir"):
        if not isinstance(v, (str, Path)) or not str(v):
            raise ConfigError(f"{key} must be a path")
        p = Path(v).expanduser()
        return p if p.is_absolute() else base / p
    if key in ("window", "icosphere_level", "ring_size", "window_samples", "timestep_min", "year"):
        return _number(key, v, int)
    if key in ("far_cap_m", "floor_height_m"):
        return _number(key, v, optional=True)
    if key in ("heights_m", "thresholds_sr"):
        if not isinstance(v, (list, tuple)):
            v = [v]
        return tuple(_number(key, x) for x in v)
    if key == "floor_polygon":
        try:
            pts = tuple(tuple(_number(key, c) for c in p) for p in v)
        except TypeError:
            raise ConfigError("room.floor_polygon must be a list of [x, y] points") from None
        if any(len(p) not in (2, 3) for p in pts):
            raise ConfigError("room.floor_polygon points need 2 or 3 coordinates")
        return pts
    if key == "period":
        if v is None:
            return None
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            raise ConfigError("sunlight.period must be [start, end]")
        return _date("sunlight.period", v[0], False), _date("sunlight.period", v[1], False)
    if key == "evaluation_day":
        return _date("sunlight.evaluation_day", v)
    if key in ("distance_rule", "obstruction_sampling"):
        return str(v)
    return _number(key, v)


def config_from_dict(raw: Mapping, base: Path = Path("."),
                     overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Build a validated RunConfig; relative paths resolve against ``base``."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping")
    values: dict[str, Any] = {}
    for section, keys in _LAYOUT.items():
        src = raw if section is None else raw.get(section) or {}
        if not isinstance(src, Mapping):
            raise ConfigError(f"section {section!r} must be a mapping")
        allowed = set(keys) | (set(_LAYOUT) - {None} if section is None else set())
        unknown = sorted(set(map(str, src)) - allowed)
        if unknown:
            where = "top level" if section is None else f"section {section!r}"
            raise ConfigError(f"unknown key(s) at {where}: {', '.join(unknown)}")
        for key, fname in keys.items():
            if key in src:
                values[fname] = _coerce(fname, src[key], base)
    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = _coerce(key, v, Path.cwd()) if key != "threads" else int(v)
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required config value(s): {', '.join(missing)}")
    return RunConfig(**values).validate()


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return config_from_dict(raw or {}, path.parent.resolve(), overrides)


def field_names() -> list[str]:
    return [f.name for f in dataclasses.fields(RunConfig)]
