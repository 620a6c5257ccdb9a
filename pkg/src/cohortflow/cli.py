"""``cohortflow`` command line: simulate, track, evaluate, render, presets.

Exit codes: 0 success, 1 usage or config error, 2 input data error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .alert import AlertDeduplicator, check_alerts, cohort_report
from .config import ConfigError
from .detect import DetectionFormatError, DoGDetector, load_detections, read_pgm, write_detections
from .evaluate import EvaluationError, evaluate
from .formats import (
    cohorts_csv, commit_outputs, iterations_log, links_csv, locations_csv, read_cohorts, read_links,
    read_locations,
)
from .linker.tracker import track_sequence
from .render import cohort_colors, render_frame_svg
from .sim import PRESETS, ScenarioConfig, preset_scenario, read_ground_truth, simulate, write_ground_truth

logger = logging.getLogger("cohortflow")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_frames(text):
    """``A..B`` (inclusive) to (A, B); either side may be omitted."""
    if text is None:
        return None
    a, sep, b = text.partition("..")
    try:
        if not sep:
            lo = hi = int(a)
        else:
            lo = int(a) if a else 0
            hi = int(b) if b else None
    except ValueError:
        raise UsageError(f"--frames expects A..B, got {text!r}") from None
    if lo < 0 or (hi is not None and hi < lo):
        raise UsageError(f"--frames range {text!r} is empty or negative")
    return lo, hi


def _in_range(t, rng):
    return rng is None or (t >= rng[0] and (rng[1] is None or t <= rng[1]))


# ---------------------------------------------------------------------------
# pipeline


def track_outputs(frames, cfg, locations=(), first_frame=0):
    """Run tracking, reporting and alerting; return {file name: text}.

    ``frames`` are per-frame detections, ``first_frame`` the absolute index
    of ``frames[0]`` used in every written frame column.
    """
    calib = cfgmod.section(cfg, "calibration")
    acfg = cfgmod.section(cfg, "alert")
    link_rows, reports, alerts, records = [], [], [], []
    if any(len(f) for f in frames):
        if len(frames) < 3:
            raise InputError(f"tracking needs at least 3 frames, got {len(frames)}")
        result = track_sequence(
            frames, calib, cfgmod.section(cfg, "linker"), cfgmod.section(cfg, "cohort"), seed=cfg["run.seed"]
        )
        dedup = AlertDeduplicator(acfg.dedup_eta_frac, acfg.dedup_frames)
        for fr in result.frames:
            t = fr.frame + first_frame
            sol, v = fr.solution, fr.vectors
            to = result.positions[fr.frame + 1][sol.dst] if len(sol.dst) else np.zeros((0, 2))
            for (x0, y0), (x1, y1), k, c in zip(v.origins, to, v.labels, fr.costs[sol.selected]):
                link_rows.append((t, x0, y0, x1, y1, k, c))
            frame_reports = [dataclasses.replace(r, frame=t) for r in
                             cohort_report(fr.cohort, v, calib, acfg.min_members, acfg.r_min)]
            reports.extend(frame_reports)
            for r in frame_reports:
                alerts.extend(dedup(check_alerts(r, locations, calib, acfg.angle_tol_deg)))
            records.extend(dataclasses.replace(rec, frame=t) for rec in fr.iterations)
    return {
        "links.csv": links_csv(link_rows),
        "cohorts.csv": cohorts_csv(reports),
        "alerts.jsonl": "".join(e.to_json() + "\n" for e in alerts),
        "iterations.log": iterations_log(records),
        "effective.cfg": cfgmod.dump_config(cfg),
    }


def _load_frames(path, cfg):
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.pgm"))
        if not files:
            raise InputError(f"{path}: no .pgm frames found")
        det = DoGDetector(**dataclasses.asdict(cfgmod.section(cfg, "detector")))
        try:
            return det.fit().transform([read_pgm(f) for f in files])
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if not p.exists():
        raise InputError(f"{path}: no such file")
    return load_detections(p)


def _scenario_for(cfg, preset_name):
    try:
        scen = preset_scenario(preset_name, seed=cfg["run.seed"])
        return scen.validate(cfgmod.section(cfg, "calibration"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands


def _base_config(args, **extra):
    overrides = dict(extra)
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    return cfgmod.load_config(args.config, overrides)


def cmd_simulate(args):
    cfg = _base_config(args, **({"simulator.preset": args.preset} if args.preset else {}))
    name = cfg["simulator.preset"]
    if not name:
        raise UsageError("simulate needs --preset (or simulator.preset in the config)")
    scen = _scenario_for(cfg, name)
    sim = simulate(scen, cfgmod.section(cfg, "calibration"))
    commit_outputs(args.out, {
        "ground_truth.csv": lambda p: write_ground_truth(p, sim),
        "detections.csv": lambda p: write_detections(p, sim.frames),
        "scenario.json": scen.to_json() + "\n",
        "locations.csv": locations_csv(scen.locations),
        "effective.cfg": cfgmod.dump_config(cfg),
    })
    return EXIT_OK


def cmd_track(args):
    extra = {}
    if args.input:
        extra["run.input"] = args.input
    if args.preset:
        extra["simulator.preset"] = args.preset
    if args.locations:
        extra["run.locations"] = args.locations
    cfg = _base_config(args, **extra)
    if cfg["run.input"] and cfg["simulator.preset"]:
        raise UsageError("give either an input or a preset, not both")
    locations = ()
    if cfg["run.input"]:
        frames = _load_frames(cfg["run.input"], cfg)
    elif cfg["simulator.preset"]:
        scen = _scenario_for(cfg, cfg["simulator.preset"])
        sim = simulate(scen, cfgmod.section(cfg, "calibration"))
        frames = sim.frames
        locations = scen.locations
    else:
        raise UsageError("track needs --input or --preset")
    if cfg["run.locations"]:
        locations = read_locations(cfg["run.locations"])
    rng = parse_frames(args.frames)
    first = 0
    if rng is not None:
        first = rng[0]
        frames = frames[rng[0]:None if rng[1] is None else rng[1] + 1]
    commit_outputs(args.out, track_outputs(frames, cfg, locations, first))
    return EXIT_OK


def cmd_evaluate(args):
    cfg = _base_config(args)
    calib = cfgmod.section(cfg, "calibration")
    rows = read_links(args.links)
    reports = read_cohorts(args.cohorts, calib) if args.cohorts else []
    frames_gt, oids, cids = read_ground_truth(args.truth)
    gt_pos = [np.array([(d.x, d.y) for d in f], dtype=float).reshape(-1, 2) for f in frames_gt]
    scenario = None
    if args.scenario:
        try:
            scenario = ScenarioConfig.from_json(Path(args.scenario).read_text(encoding="utf-8"))
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{args.scenario}: cannot read scenario ({exc})") from None
    rng = parse_frames(args.frames)
    links = {}
    for f, x0, y0, x1, y1, _, _ in rows:
        if _in_range(f, rng):
            links.setdefault(f, []).append((x0, y0, x1, y1))
    links = {t: np.asarray(v, dtype=float) for t, v in links.items()}
    final = None
    if rng is not None and rng[1] is not None:
        final = rng[1]
    rep = evaluate(links, [r for r in reports if _in_range(r.frame, rng)], gt_pos, oids, scenario, cids, final)
    text = json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        commit_outputs(args.out, {"eval.json": text})
    return EXIT_OK


def _parse_arena(text):
    try:
        w, h = (float(s) for s in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--arena expects WxH, got {text!r}") from None
    if not (w > 0 and h > 0 and math.isfinite(w) and math.isfinite(h)):
        raise UsageError("--arena dimensions must be > 0")
    return w, h


def cmd_render(args):
    rows = read_links(args.links)
    locations = read_locations(args.locations) if args.locations else ()
    if args.arena:
        arena = _parse_arena(args.arena)
    elif args.scenario:
        try:
            arena = tuple(json.loads(Path(args.scenario).read_text(encoding="utf-8"))["arena"])
        except (OSError, KeyError, ValueError) as exc:
            raise InputError(f"{args.scenario}: cannot read arena ({exc})") from None
    else:
        xs = [v for r in rows for v in (r[1], r[3])] + [loc.x + loc.radius for loc in locations]
        ys = [v for r in rows for v in (r[2], r[4])] + [loc.y + loc.radius for loc in locations]
        arena = (float(math.ceil(max(xs, default=1.0))), float(math.ceil(max(ys, default=1.0))))
    rng = parse_frames(args.frames)
    colors = cohort_colors(r[5] for r in rows)
    by_frame = {}
    for r in rows:
        by_frame.setdefault(r[0], []).append((r[1], r[2], r[3], r[4], r[5]))
    if rng is not None and rng[1] is not None:
        frame_ids = range(rng[0], rng[1] + 1)
    else:
        frame_ids = sorted(t for t in by_frame if _in_range(t, rng))
    files = {
        f"frame_{t:04d}.svg": render_frame_svg(by_frame.get(t, []), arena, locations, colors, frame=t)
        for t in frame_ids
    }
    commit_outputs(args.out, files)
    return EXIT_OK


def cmd_presets(args):
    if args.name:
        try:
            sys.stdout.write(preset_scenario(args.name).to_json() + "\n")
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return EXIT_OK
    for name in sorted(PRESETS):
        s = PRESETS[name]()
        cohorts = ", ".join(f"{c.count}@{math.degrees(c.direction):.0f}deg" for c in s.cohorts)
        sys.stdout.write(
            f"{name}: {s.walkers.count} walkers, cohorts [{cohorts}], {s.n_frames} frames, "
            f"arena {s.arena[0]:g}x{s.arena[1]:g}, p_miss {s.p_miss:g}\n"
        )
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat section.key = value config file")
    common.add_argument("--seed", type=int, help="overrides run.seed")
    common.add_argument("--frames", metavar="A..B", help="inclusive frame range")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="cohortflow", description="Flow tracking and cohort discovery for crowded scenes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic scene")
    s.add_argument("--preset", metavar="NAME")
    s.add_argument("--out", metavar="DIR", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("track", parents=[common], help="link detections and report cohorts")
    s.add_argument("--input", metavar="PATH", help="detections CSV or a directory of PGM frames")
    s.add_argument("--preset", metavar="NAME", help="simulate the preset in memory and track it")
    s.add_argument("--locations", metavar="CSV", help="sensitive locations (id,x,y,radius)")
    s.add_argument("--out", metavar="DIR", required=True)
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("evaluate", parents=[common], help="score links and cohorts against ground truth")
    s.add_argument("--links", metavar="CSV", required=True)
    s.add_argument("--cohorts", metavar="CSV")
    s.add_argument("--truth", metavar="CSV", required=True, help="ground_truth.csv from simulate")
    s.add_argument("--scenario", metavar="JSON", help="scenario.json (cohort directions and onsets)")
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("render", parents=[common], help="write one SVG per frame")
    s.add_argument("--links", metavar="CSV", required=True)
    s.add_argument("--locations", metavar="CSV")
    s.add_argument("--arena", metavar="WxH")
    s.add_argument("--scenario", metavar="JSON", help="take the arena size from scenario.json")
    s.add_argument("--out", metavar="DIR", required=True)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("presets", help="list simulator presets or print one as JSON")
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_presets, verbose=False)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"cohortflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, DetectionFormatError, EvaluationError, FileNotFoundError) as exc:
        print(f"cohortflow: input error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
