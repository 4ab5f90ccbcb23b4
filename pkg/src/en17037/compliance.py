"""Performance levels for the view-out and sunlight indicators."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .solar import ExposureSummary
from .view_out import ObstructionStats, ViewPointResult


class PerformanceLevel(enum.IntEnum):
    NONE = 0
    MINIMUM = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()


# Inclusive lower bounds for (Minimum, Medium, High).
SIGHT_ANGLE_DEG = (14.0, 28.0, 54.0)
DISTANCE_M = (6.0, 20.0, 50.0)
LAYERS = (1, 2, 3)
SUNLIGHT_H = (1.5, 3.0, 4.0)
DISTANCE_RULES = ("min", "median")


def _level(value: float, bounds: Sequence[float]) -> PerformanceLevel:
    if value != value:
        raise ValueError("indicator value is NaN")
    level = PerformanceLevel.NONE
    for lvl, bound in zip((PerformanceLevel.MINIMUM, PerformanceLevel.MEDIUM,
                           PerformanceLevel.HIGH), bounds):
        if value >= bound:
            level = lvl
    return level


def classify_sight_angle(beta: float) -> PerformanceLevel:
    return _level(beta, SIGHT_ANGLE_DEG)


def classify_distance(d: float) -> PerformanceLevel:
    return _level(d, DISTANCE_M)


def classify_layers(n: int) -> PerformanceLevel:
    if not 0 <= n <= 3:
        raise ValueError("layer count must be 0..3")
    return _level(n, LAYERS)


def classify_sunlight(hours: float) -> PerformanceLevel:
    return _level(hours, SUNLIGHT_H)


@dataclass(frozen=True)
class PointLevels:
    sight_angle: PerformanceLevel
    layers: PerformanceLevel
    view: PerformanceLevel  # also bounded by the room-level distance level


@dataclass(frozen=True)
class ViewLevels:
    sight_angle_level: PerformanceLevel
    distance_level: PerformanceLevel
    layers_level: PerformanceLevel
    overall_view_level: PerformanceLevel
    governing_stats: dict


@dataclass(frozen=True)
class SunlightLevels:
    hours: float
    level: PerformanceLevel
    evaluation_day_rule: str


@dataclass(frozen=True)
class ComplianceReport:
    view: ViewLevels
    sunlight: SunlightLevels
    inputs: dict
    point_levels: dict

    @property
    def levels(self) -> dict[str, PerformanceLevel]:
        return {
            "sight_angle": self.view.sight_angle_level,
            "distance": self.view.distance_level,
            "layers": self.view.layers_level,
            "view": self.view.overall_view_level,
            "sunlight": self.sunlight.level,
        }


def point_levels(result: ViewPointResult,
                 distance_level: PerformanceLevel = PerformanceLevel.HIGH) -> PointLevels:
    angle = classify_sight_angle(result.sight_angle_deg)
    layers = classify_layers(result.visible_layers)
    return PointLevels(angle, layers, min(angle, layers, distance_level))


def view_levels(points: Iterable[ViewPointResult], stats: ObstructionStats | None,
                distance_rule: str = "median", far_cap: float | None = None) -> ViewLevels:
    """Room-level view levels: worst grid point for angle and layers.

    With no obstructed rays at all, the distance falls back to ``far_cap``.
    """
    if distance_rule not in DISTANCE_RULES:
        raise ValueError(f"distance_rule must be one of {DISTANCE_RULES}")
    points = list(points)
    if not points:
        raise ValueError("no view results")
    worst_angle = min(p.sight_angle_deg for p in points)
    worst_layers = min(p.visible_layers for p in points)
    if stats is not None:
        distance = stats.min if distance_rule == "min" else stats.median
    elif far_cap is not None:
        distance = far_cap
    else:
        raise ValueError("no obstruction statistics and no far cap")
    angle_l = classify_sight_angle(worst_angle)
    dist_l = classify_distance(distance)
    layer_l = classify_layers(worst_layers)
    governing = {
        "sight_angle_deg": worst_angle,
        "visible_layers": worst_layers,
        "distance_m": distance,
        "distance_rule": distance_rule,
        "distance_source": "obstructions" if stats is not None else "far_cap",
    }
    return ViewLevels(angle_l, dist_l, layer_l, min(angle_l, dist_l, layer_l), governing)


def assemble_report(view_results: Mapping[float, Sequence[ViewPointResult]] | None,
                    stats: ObstructionStats | None, distance_rule: str,
                    exposure: ExposureSummary | None, inputs: Mapping | None = None,
                    far_cap: float | None = None) -> ComplianceReport:
    if view_results is None or exposure is None:
        raise ValueError("compliance needs both view results and a sunlight summary")
    if stats is None and far_cap is None:
        raise ValueError("compliance needs obstruction statistics")
    all_points = [p for pts in view_results.values() for p in pts]
    view = view_levels(all_points, stats, distance_rule, far_cap)
    sun = SunlightLevels(exposure.hours, classify_sunlight(exposure.hours),
                         exposure.rule if exposure.evaluation_day is None
                         else f"day:{exposure.evaluation_day.isoformat()}")
    per_point = {h: [point_levels(p, view.distance_level) for p in pts] for h, pts in view_results.items()}
    return ComplianceReport(view, sun, dict(inputs or {}), per_point)
