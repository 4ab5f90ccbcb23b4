"""``en17037`` command line: view, sunlight, report and validate."""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__, _backend
from .compliance import (PerformanceLevel, assemble_report, classify_sunlight, view_levels)
from .config import ConfigError, RunConfig, load_config
from .sampling import horizontal_ring, icosphere, vantage_grid
from .scene import SceneError, SemanticScene, WindowAperture, far_cap, load_scene
from .solar import (DailyExposure, ExposureSummary, GeoLocation, build_timeline, daily_exposure,
                    exposure_summary, sunlight_vantage_point)
from .view_out import OUTCOMES, ViewAssessment, assess_view, count_visible

REPORT_VERSION = "1.0"
EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2
log = logging.getLogger("en17037")


# -- formatting ---------------------------------------------------------------

def num(x) -> str:
    return format(float(x), ".9g")


def _clean(obj):
    """JSON-ready copy with floats cut to 9 significant digits."""
    if isinstance(obj, PerformanceLevel):
        return obj.label
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(num(x)) if math.isfinite(x) else None
    if isinstance(obj, (dt.date, Path)):
        return obj.isoformat() if isinstance(obj, dt.date) else str(obj)
    return obj


def write_json(path: Path, doc) -> None:
    text = json.dumps(_clean(doc), indent=2, ensure_ascii=False) + "\n"
    path.write_text(text, encoding="utf-8", newline="\n")


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def report_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report.schema.json")
                      .read_text(encoding="utf-8"))


def generated_at() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch
            else dt.datetime.now(dt.timezone.utc).replace(microsecond=0))
    return when.isoformat().replace("+00:00", "Z")


# -- recipes -----------------------------------------------------------------

@dataclass
class Prepared:
    config: RunConfig
    scene: SemanticScene
    window: WindowAperture
    far: float
    grids: dict[float, np.ndarray]


def prepare(cfg: RunConfig) -> Prepared:
    scene = load_scene(cfg.scene, cfg.layer_map)
    if not scene.windows:
        raise SceneError(f"{cfg.layer_map}: no window apertures defined")
    if cfg.window >= len(scene.windows):
        raise SceneError(f"view.window = {cfg.window} but the layer map defines "
                         f"{len(scene.windows)} window(s)")
    window = scene.windows[cfg.window]
    floor = cfg.floor_height_m if cfg.floor_height_m is not None else window.floor_height_m
    poly = np.asarray(cfg.floor_polygon, dtype=np.float64)[:, :2]
    grids = {h: vantage_grid(poly, cfg.spacing_m, h, floor) for h in cfg.heights_m}
    return Prepared(cfg, scene, window, far_cap(scene, cfg.far_cap_m), grids)


def grid_filename(height: float) -> str:
    return f"view_grid_{height:.2f}m.csv"


def compute_view(p: Prepared) -> ViewAssessment:
    cfg = p.config
    return assess_view(p.scene, p.window, p.grids, icosphere(cfg.icosphere_level),
                       horizontal_ring(cfg.ring_size), cfg.layer_threshold_sr, p.far,
                       cfg.window_samples, cfg.window_inset_m, cfg.obstruction_sampling)


def write_view(p: Prepared, a: ViewAssessment, out: Path) -> dict:
    cfg = p.config
    sweep = cfg.sweep
    grids = []
    for h, results in a.grids.items():
        header = ["x", "y", "z", "sight_angle_deg", "sr_ground", "sr_landscape", "sr_sky"]
        header += [f"visible_layers@{t:g}" for t in sweep]
        rows = []
        counts = {t: [0, 0, 0, 0] for t in sweep}
        for r in results:
            sa = r.layer_solid_angles
            vis = [count_visible(sa, t) for t in sweep]
            for t, v in zip(sweep, vis):
                counts[t][v] += 1
            rows.append([num(c) for c in r.point] + [num(r.sight_angle_deg)]
                        + [num(sa[k]) for k in ("ground", "landscape", "sky")]
                        + [str(v) for v in vis])
        write_csv(out / grid_filename(h), header, rows)
        angles = np.array([r.sight_angle_deg for r in results])
        grids.append({
            "height_m": h, "file": grid_filename(h), "points": len(results),
            "sight_angle_deg": {"min": angles.min(), "median": float(np.median(angles)),
                                "max": angles.max()},
            "visible_layers": [{"threshold_sr": t, "min": min(i for i, c in enumerate(counts[t]) if c),
                                "point_counts": counts[t]} for t in sweep],
        })

    rays = a.window_rays
    rows = ([str(int(s))] + [num(c) for c in d] + [num(d0), num(d1), num(dist), OUTCOMES[o]]
            for s, d, d0, d1, dist, o in zip(rays.sample, rays.direction, rays.delta0,
                                             rays.delta1, rays.distance, rays.outcome))
    write_csv(out / "obstruction_distances.csv",
              ["sample", "dx", "dy", "dz", "delta0_m", "delta1_m", "distance_m", "outcome"], rows)

    levels = view_levels([r for rs in a.grids.values() for r in rs], a.stats,
                         cfg.distance_rule, a.far_cap)
    st = a.stats
    frag = {
        "far_cap_m": a.far_cap,
        "layer_threshold_sr": cfg.layer_threshold_sr,
        "thresholds_sr": list(sweep),
        "window": {"index": cfg.window, "normal": p.window.normal,
                   "sill_height_m": p.window.sill_height_m,
                   "floor_height_m": p.window.floor_height_m},
        "grids": grids,
        "obstruction": {
            "file": "obstruction_distances.csv",
            "sampling": cfg.obstruction_sampling,
            "window_sample_grid": cfg.window_samples,
            "stats": None if st is None else {"min": st.min, "median": st.median, "max": st.max,
                                              "sample_count": st.sample_count},
        },
        "governing": levels.governing_stats,
        "levels": {"sight_angle": levels.sight_angle_level, "distance": levels.distance_level,
                   "layers": levels.layers_level, "view": levels.overall_view_level},
    }
    write_json(out / "view.json", frag)
    return frag


@dataclass
class SunlightResult:
    point: np.ndarray
    daily: list[DailyExposure]
    summary: ExposureSummary
    times: list[str]


def compute_sunlight(p: Prepared) -> SunlightResult:
    cfg = p.config
    loc = GeoLocation(cfg.latitude, cfg.longitude, cfg.utc_offset)
    timeline = build_timeline(loc, cfg.resolved_period, cfg.timestep_min, cfg.north_azimuth_deg)
    point = sunlight_vantage_point(p.window)
    daily = daily_exposure(point, p.scene, timeline, p.window.normal, p.far)
    times = [f"{m // 60:02d}:{m % 60:02d}" for m in range(0, 1440, cfg.timestep_min)]
    return SunlightResult(point, daily, exposure_summary(daily, cfg.evaluation_day), times)


def write_sunlight(p: Prepared, s: SunlightResult, out: Path) -> dict:
    cfg = p.config

    def span(a, b):
        end = "24:00" if b.date() > a.date() else b.strftime("%H:%M")
        return f"{a:%H:%M}-{end}"

    write_csv(out / "sunlight_daily.csv", ["date", "sunlit_hours", "intervals"],
              ([d.date.isoformat(), num(d.sunlit_hours),
                ";".join(span(a, b) for a, b in d.sunlit_intervals)] for d in s.daily))
    write_csv(out / "sunlight_matrix.csv", ["date"] + s.times,
              ([d.date.isoformat()] + ["1" if x else "0" for x in d.sunlit] for d in s.daily))
    frag = {
        "vantage_point": s.point,
        "timestep_min": cfg.timestep_min,
        "period": list(cfg.resolved_period),
        "evaluation_day_rule": (s.summary.rule if s.summary.evaluation_day is None
                                else f"day:{s.summary.evaluation_day.isoformat()}"),
        "hours": s.summary.hours,
        "level": classify_sunlight(s.summary.hours),
        "daily": [{"date": d.date, "hours": d.sunlit_hours} for d in s.daily],
        "files": ["sunlight_daily.csv", "sunlight_matrix.csv"],
    }
    write_json(out / "sunlight.json", frag)
    return frag


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_view(cfg: RunConfig) -> dict:
    p = prepare(cfg)
    return write_view(p, compute_view(p), _out_dir(cfg))


def run_sunlight(cfg: RunConfig) -> dict:
    p = prepare(cfg)
    return write_sunlight(p, compute_sunlight(p), _out_dir(cfg))


def run_report(cfg: RunConfig) -> dict:
    p = prepare(cfg)
    out = _out_dir(cfg)
    a = compute_view(p)
    s = compute_sunlight(p)
    view = write_view(p, a, out)
    sun = write_sunlight(p, s, out)
    rep = assemble_report(a.grids, a.stats, cfg.distance_rule, s.summary, cfg.echo(), a.far_cap)
    doc = {
        "version": REPORT_VERSION,
        "generator": f"en17037 {__version__}",
        "generated_at": generated_at(),
        "config_echo": rep.inputs,
        "view": view,
        "sunlight": sun,
        "levels": rep.levels,
    }
    write_json(out / "report.json", doc)
    return _clean(doc)


def run_validate(cfg: RunConfig) -> dict:
    p = prepare(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        point = sunlight_vantage_point(p.window)
    return {
        "triangles": len(p.scene),
        "dropped_faces": p.scene.dropped_faces,
        "layers": {i.name: i.tag.value for i in p.scene.layer_table},
        "windows": len(p.scene.windows),
        "far_cap_m": p.far,
        "grid_points": {f"{h:.2f}": len(g) for h, g in p.grids.items()},
        "sunlight_point": point,
        "warnings": [str(w.message) for w in caught],
    }


# -- argument parsing ------------------------------------------------------------

def _date(s: str) -> dt.date:
    try:
        return dt.date.fromisoformat(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid date {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration (YAML)")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads for ray casting")
    common.add_argument("-v", "--verbose", action="store_true")
    o = common.add_argument_group("overrides")
    o.add_argument("--scene")
    o.add_argument("--layer-map", dest="layer_map")
    o.add_argument("--latitude", type=float)
    o.add_argument("--longitude", type=float)
    o.add_argument("--utc-offset", dest="utc_offset", type=float)
    o.add_argument("--north-azimuth", dest="north_azimuth_deg", type=float,
                   help="compass bearing of scene +Y, degrees")
    o.add_argument("--floor-height", dest="floor_height_m", type=float)
    o.add_argument("--spacing", dest="spacing_m", type=float)
    o.add_argument("--heights", dest="heights_m", type=float, nargs="+")
    o.add_argument("--window", type=int, help="index of the assessed window")
    o.add_argument("--icosphere-level", dest="icosphere_level", type=int)
    o.add_argument("--ring-size", dest="ring_size", type=int)
    o.add_argument("--thresholds", dest="thresholds_sr", type=float, nargs="+")
    o.add_argument("--layer-threshold", dest="layer_threshold_sr", type=float)
    o.add_argument("--distance-rule", dest="distance_rule", choices=["min", "median"])
    o.add_argument("--far-cap", dest="far_cap_m", type=float)
    o.add_argument("--obstruction-sampling", dest="obstruction_sampling",
                   choices=["hemisphere", "normal"])
    o.add_argument("--window-samples", dest="window_samples", type=int)
    o.add_argument("--window-inset", dest="window_inset_m", type=float)
    o.add_argument("--timestep", dest="timestep_min", type=int, help="minutes, must divide 60")
    o.add_argument("--year", type=int)
    o.add_argument("--period", nargs=2, type=_date, metavar=("START", "END"))
    o.add_argument("--evaluation-day", dest="evaluation_day", type=_date)

    parser = argparse.ArgumentParser(prog="en17037",
                                     description="View-out and sunlight-exposure assessment.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("view", parents=[common], help="sight angle, distance and view layers")
    sub.add_parser("sunlight", parents=[common], help="daily direct-sunlight hours")
    sub.add_parser("report", parents=[common], help="both recipes plus the compliance report")
    sub.add_parser("validate", parents=[common], help="check the config and the scene only")
    return parser


_OVERRIDES = ("output_dir", "threads", "scene", "layer_map", "latitude", "longitude",
              "utc_offset", "north_azimuth_deg", "floor_height_m", "spacing_m", "heights_m",
              "window", "icosphere_level", "ring_size", "thresholds_sr", "layer_threshold_sr",
              "distance_rule", "far_cap_m", "obstruction_sampling", "window_samples",
              "window_inset_m", "timestep_min", "year", "period", "evaluation_day")
_COMMANDS = {"view": run_view, "sunlight": run_sunlight, "report": run_report,
             "validate": run_validate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    try:
        cfg = load_config(args.config, overrides)
        if cfg.threads:
            _backend.set_num_threads(cfg.threads)
        result = _COMMANDS[args.command](cfg)
    except (ConfigError, SceneError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a computation error
        log.debug("computation failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if args.command == "validate":
        print(json.dumps(_clean(result), indent=2))
    elif args.command == "report":
        print(json.dumps(result["levels"], indent=2))
    else:
        print(f"wrote {args.command} results to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
