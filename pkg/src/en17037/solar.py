"""Sun positions, assessment timelines and daily direct-sunlight hours."""
from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scene import LayerTag, SceneError, SemanticScene, WindowAperture, far_cap

DEFAULT_TIMESTEP = 5
DEFAULT_YEAR = 2023
PERIOD_START = (2, 1)
PERIOD_END = (3, 21)
SITTING_EYE = 1.2
ABOVE_SILL = 0.3


class AssessmentWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GeoLocation:
    latitude: float
    longitude: float
    utc_offset: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError("latitude must lie in [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError("longitude must lie in [-180, 180]")
        if not -14.0 <= self.utc_offset <= 14.0:
            raise ValueError("utc_offset must lie in [-14, 14] hours")


@dataclass(frozen=True)
class SunSample:
    timestamp: dt.datetime
    azimuth: float
    elevation: float
    direction: np.ndarray = field(repr=False)

    @property
    def above_horizon(self) -> bool:
        return self.elevation > 0.0


@dataclass(frozen=True)
class SunTimeline:
    times: np.ndarray  # datetime64[m], local standard time
    azimuth: np.ndarray
    elevation: np.ndarray
    directions: np.ndarray  # (N, 3) scene coordinates
    timestep: int  # minutes
    period: tuple[dt.date, dt.date]

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def above_horizon(self) -> np.ndarray:
        return self.elevation > 0.0

    @property
    def samples(self) -> list[SunSample]:
        return [SunSample(t.astype(dt.datetime), float(a), float(e), d)
                for t, a, e, d in zip(self.times, self.azimuth, self.elevation, self.directions)]

    @property
    def dates(self) -> np.ndarray:
        return self.times.astype("datetime64[D]")


@dataclass(frozen=True)
class DailyExposure:
    date: dt.date
    sunlit_hours: float
    sunlit_intervals: list[tuple[dt.datetime, dt.datetime]]
    sunlit: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0, bool))


@dataclass(frozen=True)
class ExposureSummary:
    hours: float
    rule: str  # "minimum" or "day"
    evaluation_day: dt.date | None
    daily: list[DailyExposure]


def _as_datetime64(timestamps) -> np.ndarray:
    arr = np.asarray(timestamps)
    if arr.dtype.kind == "M":
        return arr.astype("datetime64[s]")
    if arr.dtype == object or arr.dtype.kind in "U":
        try:
            return np.array([np.datetime64(t, "s") if not isinstance(t, dt.datetime)
                             else np.datetime64(t.replace(tzinfo=None), "s")
                             for t in arr.ravel()]).reshape(arr.shape)
        except ValueError as exc:
            raise ValueError(f"invalid date: {exc}") from None
    raise ValueError("timestamps must be datetimes")


def solar_angles(loc: GeoLocation, timestamps):
    """Declination (rad), equation of time (min) and hour angle (rad).

    ``timestamps`` are local standard times at ``loc.utc_offset``.  Uses the
    fractional-year Fourier series for declination and equation of time.
    """
    local = _as_datetime64(timestamps)
    utc = local - np.timedelta64(int(round(loc.utc_offset * 3600)), "s")
    year = utc.astype("datetime64[Y]")
    days_in_year = ((year + 1).astype("datetime64[D]") - year.astype("datetime64[D]")).astype(float)
    seconds = (utc - year.astype("datetime64[s]")).astype(np.float64)
    day_index = np.floor(seconds / 86400.0)  # day of year minus one
    hour = (seconds - day_index * 86400.0) / 3600.0
    gamma = 2.0 * math.pi / days_in_year * (day_index + (hour - 12.0) / 24.0)
    eqtime = 229.18 * (0.000075 + 0.001868 * np.cos(gamma) - 0.032077 * np.sin(gamma)
                       - 0.014615 * np.cos(2 * gamma) - 0.040849 * np.sin(2 * gamma))
    decl = (0.006918 - 0.399912 * np.cos(gamma) + 0.070257 * np.sin(gamma)
            - 0.006758 * np.cos(2 * gamma) + 0.000907 * np.sin(2 * gamma)
            - 0.002697 * np.cos(3 * gamma) + 0.00148 * np.sin(3 * gamma))
    true_solar = hour * 60.0 + eqtime + 4.0 * loc.longitude
    hour_angle = np.radians(true_solar / 4.0 - 180.0)
    return decl, eqtime, hour_angle


def sun_positions(loc: GeoLocation, timestamps) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised azimuth (clockwise from north) and elevation, in degrees."""
    decl, _, ha = solar_angles(loc, timestamps)
    lat = math.radians(loc.latitude)
    east = -np.cos(decl) * np.sin(ha)
    north = math.cos(lat) * np.sin(decl) - math.sin(lat) * np.cos(decl) * np.cos(ha)
    up = math.sin(lat) * np.sin(decl) + math.cos(lat) * np.cos(decl) * np.cos(ha)
    elevation = np.degrees(np.arcsin(np.clip(up, -1.0, 1.0)))
    azimuth = np.degrees(np.arctan2(east, north)) % 360.0
    return azimuth, elevation


def sun_position(loc: GeoLocation, timestamp) -> tuple[float, float]:
    az, el = sun_positions(loc, [timestamp])
    return float(az[0]), float(el[0])


def sun_direction(azimuth, elevation, north_azimuth_in_scene: float = 0.0) -> np.ndarray:
    """Unit vector(s) towards the sun in scene coordinates.

    ``north_azimuth_in_scene`` is the compass bearing that scene +Y points
    to, so 0 means +Y is north and +X is east.
    """
    rel = np.radians(np.asarray(azimuth, dtype=np.float64) - north_azimuth_in_scene)
    el = np.radians(np.asarray(elevation, dtype=np.float64))
    return np.stack([np.sin(rel) * np.cos(el), np.cos(rel) * np.cos(el), np.sin(el)], axis=-1)


def default_period(year: int = DEFAULT_YEAR) -> tuple[dt.date, dt.date]:
    return dt.date(year, *PERIOD_START), dt.date(year, *PERIOD_END)


def build_timeline(loc: GeoLocation, period: tuple[dt.date, dt.date] | None = None,
                   timestep: int = DEFAULT_TIMESTEP, north_azimuth_in_scene: float = 0.0,
                   ) -> SunTimeline:
    """One sun sample every ``timestep`` minutes of every day in ``period``."""
    if isinstance(timestep, bool) or int(timestep) != timestep or not 1 <= timestep <= 60 \
            or 60 % int(timestep):
        raise ValueError(f"invalid timestep {timestep!r}: must divide 60")
    timestep = int(timestep)
    start, end = period if period is not None else default_period()
    if start > end:
        raise ValueError("period start is after its end")
    days = np.arange(np.datetime64(start, "D"), np.datetime64(end, "D") + 1)
    offsets = np.arange(0, 1440, timestep).astype("timedelta64[m]")
    times = (days.astype("datetime64[m]")[:, None] + offsets[None, :]).ravel()
    az, el = sun_positions(loc, times)
    dirs = sun_direction(az, el, north_azimuth_in_scene)
    return SunTimeline(times, az, el, dirs, timestep, (start, end))


def sunlight_vantage_point(window: WindowAperture) -> np.ndarray:
    """Horizontal centre of the window at max(floor + 1.2 m, sill + 0.3 m)."""
    floor = window.floor_height_m
    target = max(floor + SITTING_EYE, floor + window.sill_height_m + ABOVE_SILL)
    top = window.top_z
    if top < floor + SITTING_EYE or top <= window.bottom_z:
        raise SceneError("window too low for assessment point")
    if target > top:
        warnings.warn(f"assessment point clamped from z={target:.3f} to the window head "
                      f"z={top:.3f}", AssessmentWarning, stacklevel=2)
        target = top
    h, v = window.axes
    uv = window.to_plane(window.boundary)
    u_mid = 0.5 * (uv[:, 0].min() + uv[:, 0].max())
    base = window.from_plane(np.array([u_mid, 0.0]))
    if abs(v[2]) < 1e-9:
        raise SceneError("window plane is horizontal; no height axis")
    return base + v * ((target - base[2]) / v[2])


def sunlit_mask(point, scene: SemanticScene, timeline: SunTimeline, window_normal,
                far: float | None = None) -> np.ndarray:
    """Per-sample flag: sun above horizon, in front of the facade and unoccluded."""
    far = far_cap(scene) if far is None else far
    n = np.asarray(window_normal, dtype=np.float64)
    candidate = (timeline.elevation > 0.0) & (timeline.directions @ n > 0.0)
    idx = np.flatnonzero(candidate)
    lit = np.zeros(len(timeline), dtype=bool)
    if idx.size:
        tri, _ = scene.accel.first_hits(np.asarray(point, dtype=np.float64),
                                        timeline.directions[idx], far,
                                        skip_layers=scene.layers_with(LayerTag.WINDOW))
        lit[idx] = tri < 0
    return lit


def _intervals(date: dt.date, lit: np.ndarray, timestep: int):
    base = dt.datetime.combine(date, dt.time())
    out = []
    i = 0
    while i < lit.size:
        if lit[i]:
            j = i
            while j < lit.size and lit[j]:
                j += 1
            out.append((base + dt.timedelta(minutes=i * timestep),
                        base + dt.timedelta(minutes=j * timestep)))
            i = j
        else:
            i += 1
    return out


def daily_exposure(point, scene: SemanticScene, timeline: SunTimeline, window_normal,
                   far: float | None = None) -> list[DailyExposure]:
    """Direct-sunlight hours for each day of the timeline."""
    lit = sunlit_mask(point, scene, timeline, window_normal, far)
    per_day = 1440 // timeline.timestep
    days = timeline.dates[::per_day]
    out = []
    for k, day in enumerate(days):
        row = lit[k * per_day:(k + 1) * per_day]
        date = day.astype(dt.date)
        out.append(DailyExposure(date, int(row.sum()) * timeline.timestep / 60.0,
                                 _intervals(date, row, timeline.timestep), row))
    return out


def exposure_summary(daily: Sequence[DailyExposure],
                     evaluation_day: dt.date | None = None) -> ExposureSummary:
    """Hours that govern compliance: the chosen day, else the period minimum."""
    if not daily:
        raise ValueError("no daily exposure values")
    if evaluation_day is not None:
        for d in daily:
            if d.date == evaluation_day:
                return ExposureSummary(d.sunlit_hours, "day", evaluation_day, list(daily))
        raise ValueError(f"evaluation day {evaluation_day} is outside the assessment period")
    return ExposureSummary(min(d.sunlit_hours for d in daily), "minimum", None, list(daily))
