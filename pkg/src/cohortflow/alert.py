"""Cohort reports, approach alerts toward sensitive locations, density maps."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import CalibrationConfig, FrameVectors, mean_resultant


@dataclass(frozen=True)
class SensitiveLocation:
    id: str
    x: float
    y: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"location {self.id!r}: radius must be > 0")

    @property
    def position(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class CohortReport:
    frame: int
    cohort_id: int
    count: int
    centroid_x: float
    centroid_y: float
    mean_direction: float
    mean_speed: float  # px / frame
    mean_speed_mps: float
    rbar: float
    kappa: float = 0.0
    weight: float = 0.0

    @property
    def centroid(self):
        return (self.centroid_x, self.centroid_y)


@dataclass(frozen=True)
class AlertEvent:
    frame_issued: int
    cohort_id: int
    location_id: str
    eta_seconds: float
    count: int
    approach_angle_deg: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))


@dataclass(frozen=True)
class AlertConfig:
    min_members: int = 5
    r_min: float = 0.7
    angle_tol_deg: float = 20.0
    dedup_eta_frac: float = 0.2
    dedup_frames: int = 20


def cohort_report(model, vectors: FrameVectors, calib: CalibrationConfig | None = None,
                  min_members=5, r_min=0.7) -> list[CohortReport]:
    """One report per cohort with enough coherent members.

    ``model`` supplies component ids (and kappa/weight for the CSV); member
    statistics come only from ``vectors`` whose label equals the id.
    """
    calib = calib or CalibrationConfig()
    labels = np.asarray(vectors.labels)
    if len(labels) != len(vectors):
        raise ValueError("labels must align with vectors")
    reports = []
    comps = {i: c for i, c in zip(model.ids, model.components)} if model is not None else {}
    ids = sorted(set(labels[labels >= 0].tolist()))
    for cid in ids:
        m = labels == cid
        count = int(m.sum())
        if count < min_members:
            continue
        mr = mean_resultant(vectors.angles[m])
        if mr.rbar < r_min:
            continue
        c = vectors.origins[m].mean(axis=0)
        speed = float(vectors.speeds[m].mean())
        comp = comps.get(cid)
        reports.append(
            CohortReport(
                int(vectors.frame), int(cid), count, float(c[0]), float(c[1]), float(mr.mu), speed,
                float(calib.px_per_frame_to_mps(speed)), float(mr.rbar),
                float(comp.kappa) if comp is not None else 0.0,
                float(comp.weight) if comp is not None else 0.0,
            )
        )
    return reports


def check_alerts(report: CohortReport, locations, calib: CalibrationConfig | None = None,
                 angle_tol_deg=20.0) -> list[AlertEvent]:
    """Alert for every location the cohort is heading toward within ``angle_tol_deg``.

    ETA is straight-line, constant-velocity: (distance - radius) / speed,
    floored at 0. Zero-speed reports never alert.
    """
    calib = calib or CalibrationConfig()
    if not report.mean_speed > 0:
        return []
    speed_mps = calib.px_per_frame_to_mps(report.mean_speed)
    hx, hy = math.cos(report.mean_direction), math.sin(report.mean_direction)
    cos_tol = math.cos(math.radians(angle_tol_deg))
    events = []
    for loc in locations:
        vx, vy = loc.x - report.centroid_x, loc.y - report.centroid_y
        dist = math.hypot(vx, vy)
        if dist == 0:
            cosang = 1.0
        else:
            cosang = (hx * vx + hy * vy) / dist
        # tolerance on the boundary keeps an exact-angle approach inclusive
        if cosang < cos_tol - 1e-12:
            continue
        eta = max(0.0, (dist - loc.radius) * calib.meters_per_pixel / speed_mps)
        angle = math.degrees(math.acos(max(-1.0, min(1.0, cosang))))
        events.append(AlertEvent(report.frame, report.cohort_id, loc.id, eta, report.count, angle))
    return events


class AlertDeduplicator:
    """Suppress repeats of a (cohort, location) alert.

    A pair re-alerts only if its ETA moved by more than ``eta_frac`` relative
    to the last emitted one, or ``frames`` frames have passed.
    """

    def __init__(self, eta_frac=0.2, frames=20):
        self.eta_frac = eta_frac
        self.frames = frames
        self._last: dict = {}

    def __call__(self, events):
        out = []
        for e in events:
            key = (e.cohort_id, e.location_id)
            prev = self._last.get(key)
            if prev is not None:
                frame, eta = prev
                changed = abs(e.eta_seconds - eta) > self.eta_frac * max(eta, 1e-9)
                if not changed and e.frame_issued - frame < self.frames:
                    continue
            self._last[key] = (e.frame_issued, e.eta_seconds)
            out.append(e)
        return out


def density_map(points, cell_px, arena=None) -> np.ndarray:
    """Counts per cell over a uniform grid with half-open [lo, hi) cells.

    The grid covers ``arena`` = (width, height) when given (points outside
    are ignored), otherwise the smallest grid from the origin that holds
    every point. Returned shape is (rows, cols), row = y.
    """
    if not cell_px > 0:
        raise ValueError("cell_px must be > 0")
    p = np.asarray([(d.x, d.y) for d in points] if points and hasattr(points[0], "x") else points,
                   dtype=float).reshape(-1, 2)
    if arena is None:
        w = float(p[:, 0].max()) + 1e-9 if len(p) else cell_px
        h = float(p[:, 1].max()) + 1e-9 if len(p) else cell_px
    else:
        w, h = arena
    nx, ny = max(1, math.ceil(w / cell_px)), max(1, math.ceil(h / cell_px))
    grid = np.zeros((ny, nx), dtype=int)
    if len(p) == 0:
        return grid
    inside = (p[:, 0] >= 0) & (p[:, 1] >= 0) & (p[:, 0] < w) & (p[:, 1] < h)
    ix = np.floor(p[inside, 0] / cell_px).astype(int)
    iy = np.floor(p[inside, 1] / cell_px).astype(int)
    keep = (ix < nx) & (iy < ny)
    np.add.at(grid, (iy[keep], ix[keep]), 1)
    return grid


def write_alerts(path, events):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in events:
            fh.write(e.to_json() + "\n")


def read_alerts(path) -> list[AlertEvent]:
    with open(path, encoding="utf-8") as fh:
        return [AlertEvent(**json.loads(line)) for line in fh if line.strip()]
