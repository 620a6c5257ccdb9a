"""Synthetic crowd scenes with exact ground truth.

Walkers take isotropic Gaussian steps. Cohort members jitter like walkers
until their onset frame, then move at a fixed speed with per-frame headings
drawn from a von Mises distribution around the cohort direction. Positions
reflect at the arena walls; detections drop out independently and uniform
clutter is added per frame.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import CalibrationConfig, Detection
from .detect import DetectionFormatError, write_detections


@dataclass(frozen=True)
class WalkerSpec:
    count: int = 0
    step_sigma: float = 1.5


@dataclass(frozen=True)
class CohortSpec:
    count: int
    direction: float
    speed: float
    heading_kappa: float
    spawn_region: tuple  # (x0, y0, x1, y1)
    onset_frame: int = 0


@dataclass(frozen=True)
class LocationSpec:
    id: str
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class ScenarioConfig:
    arena: tuple = (500.0, 500.0)
    n_frames: int = 10
    seed: int = 0
    walkers: WalkerSpec = WalkerSpec()
    cohorts: tuple = ()
    p_miss: float = 0.0
    clutter_rate: float = 0.0
    locations: tuple = ()

    def validate(self, calib: CalibrationConfig | None = None):
        calib = calib or CalibrationConfig()
        w, h = self.arena
        if not (w > 0 and h > 0):
            raise ValueError("arena dimensions must be > 0")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if not 0 <= self.p_miss < 1:
            raise ValueError("p_miss must be in [0, 1)")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be >= 0")
        if self.walkers.count < 0 or self.walkers.step_sigma < 0:
            raise ValueError("walker count and step_sigma must be >= 0")
        for c in self.cohorts:
            if c.count < 0:
                raise ValueError("cohort count must be >= 0")
            if not 0 <= c.speed <= calib.max_disp_px:
                raise ValueError(
                    f"cohort speed {c.speed} px/frame exceeds the {calib.max_disp_px:.3f} px/frame bound"
                )
            if not 0 <= c.onset_frame < self.n_frames:
                raise ValueError("onset_frame must lie in [0, n_frames)")
            if c.heading_kappa < 0:
                raise ValueError("heading_kappa must be >= 0")
            x0, y0, x1, y1 = c.spawn_region
            if not (0 <= x0 <= x1 <= w and 0 <= y0 <= y1 <= h):
                raise ValueError("spawn_region must lie inside the arena")
        return self

    def replace(self, **kw) -> "ScenarioConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return ScenarioConfig(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        d = json.loads(text)
        return cls(
            arena=tuple(d["arena"]),
            n_frames=int(d["n_frames"]),
            seed=int(d["seed"]),
            walkers=WalkerSpec(**d["walkers"]),
            cohorts=tuple(
                CohortSpec(**{**c, "spawn_region": tuple(c["spawn_region"])}) for c in d["cohorts"]
            ),
            p_miss=float(d["p_miss"]),
            clutter_rate=float(d["clutter_rate"]),
            locations=tuple(LocationSpec(**loc) for loc in d.get("locations", [])),
        )


@dataclass
class GroundTruth:
    """Per-frame labels aligned with the emitted detections, plus full trajectories."""

    object_ids: list  # per frame: int array, -1 for clutter
    cohort_ids: list  # per frame: int array, -1 for walkers and clutter
    positions: list  # per frame: (n, 2) true positions of emitted detections
    trajectories: np.ndarray  # (n_frames, n_objects, 2), dropouts included
    object_cohort: np.ndarray  # (n_objects,)

    def true_links(self, t):
        """(i, j) detection index pairs of objects observed in both t and t+1."""
        a, b = self.object_ids[t], self.object_ids[t + 1]
        idx_b = {int(o): j for j, o in enumerate(b) if o >= 0}
        return [(i, idx_b[int(o)]) for i, o in enumerate(a) if o >= 0 and int(o) in idx_b]


@dataclass
class SimResult:
    config: ScenarioConfig
    frames: list  # per-frame lists of Detection
    truth: GroundTruth = field(repr=False)

    def positions(self):
        return [np.array([(d.x, d.y) for d in f], dtype=float).reshape(-1, 2) for f in self.frames]


def _reflect(v, hi):
    # fold onto [0, hi]; handles any overshoot
    period = 2.0 * hi
    m = np.mod(v, period)
    return np.where(m > hi, period - m, m)


def simulate(cfg: ScenarioConfig, calib: CalibrationConfig | None = None) -> SimResult:
    """Generate detections and ground truth; fully determined by ``cfg.seed``."""
    cfg.validate(calib)
    rng = np.random.default_rng(cfg.seed)
    w, h = cfg.arena
    sigma = cfg.walkers.step_sigma
    nw = cfg.walkers.count
    starts = [rng.uniform((0, 0), (w, h), size=(nw, 2))]
    cohort_of = [np.full(nw, -1)]
    for k, c in enumerate(cfg.cohorts):
        x0, y0, x1, y1 = c.spawn_region
        starts.append(rng.uniform((x0, y0), (x1, y1), size=(c.count, 2)))
        cohort_of.append(np.full(c.count, k))
    pos = np.concatenate(starts) if starts else np.zeros((0, 2))
    object_cohort = np.concatenate(cohort_of).astype(int)
    n_obj = len(pos)

    traj = np.zeros((cfg.n_frames, n_obj, 2))
    traj[0] = pos
    for f in range(1, cfg.n_frames):
        step = rng.normal(0.0, sigma, size=(n_obj, 2)) if sigma > 0 else np.zeros((n_obj, 2))
        for k, c in enumerate(cfg.cohorts):
            members = object_cohort == k
            if f - 1 >= c.onset_frame and members.any():
                if c.heading_kappa > 0:
                    heading = rng.vonmises(c.direction, c.heading_kappa, size=int(members.sum()))
                else:
                    heading = rng.uniform(-math.pi, math.pi, size=int(members.sum()))
                step[members] = c.speed * np.column_stack([np.cos(heading), np.sin(heading)])
        pos = pos + step
        pos[:, 0] = _reflect(pos[:, 0], w)
        pos[:, 1] = _reflect(pos[:, 1], h)
        traj[f] = pos

    frames, oids, cids, tpos = [], [], [], []
    for f in range(cfg.n_frames):
        keep = rng.random(n_obj) >= cfg.p_miss
        ids = np.flatnonzero(keep)
        n_clutter = rng.poisson(cfg.clutter_rate) if cfg.clutter_rate > 0 else 0
        clutter = rng.uniform((0, 0), (w, h), size=(n_clutter, 2))
        p = np.concatenate([traj[f, ids], clutter])
        o = np.concatenate([ids, np.full(n_clutter, -1)]).astype(int)
        co = np.concatenate([object_cohort[ids], np.full(n_clutter, -1)]).astype(int)
        perm = rng.permutation(len(p))
        p, o, co = p[perm], o[perm], co[perm]
        frames.append([Detection(f, float(x), float(y), 1.0) for x, y in p])
        oids.append(o)
        cids.append(co)
        tpos.append(p)
    truth = GroundTruth(oids, cids, tpos, traj, object_cohort)
    return SimResult(cfg, frames, truth)


def write_ground_truth(path, sim: SimResult):
    extra = [list(zip(o.tolist(), c.tolist())) for o, c in zip(sim.truth.object_ids, sim.truth.cohort_ids)]
    write_detections(path, sim.frames, extra=extra)


def read_ground_truth(path):
    """Read a ground-truth CSV into (frames, object_ids, cohort_ids) per frame."""
    rows: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return [], [], []
        if [h.strip() for h in header] != ["frame", "x", "y", "score", "object_id", "cohort_id"]:
            raise DetectionFormatError(f"{path}:1: not a ground-truth CSV header")
        for lineno, r in enumerate(reader, start=2):
            if not r:
                continue
            try:
                t = int(r[0])
                rows.setdefault(t, []).append(
                    (Detection(t, float(r[1]), float(r[2]), float(r[3])), int(r[4]), int(r[5]))
                )
            except (ValueError, IndexError) as exc:
                raise DetectionFormatError(f"{path}:{lineno}: malformed row ({exc})") from None
    n = max(rows) + 1 if rows else 0
    frames = [[d for d, _, _ in rows.get(t, [])] for t in range(n)]
    oids = [np.array([o for _, o, _ in rows.get(t, [])], dtype=int) for t in range(n)]
    cids = [np.array([c for _, _, c in rows.get(t, [])], dtype=int) for t in range(n)]
    return frames, oids, cids


# ---------------------------------------------------------------------------
# presets


def _square(cx, cy, half):
    return (cx - half, cy - half, cx + half, cy + half)


def _multi_gate():
    center = np.array([400.0, 400.0])
    dirs = (-math.pi / 2, math.pi / 6, 5 * math.pi / 6)
    cohorts, gates = [], []
    for k, d in enumerate(dirs):
        u = np.array([math.cos(d), math.sin(d)])
        spawn = center - 40.0 * u
        cohorts.append(CohortSpec(60, d, 4.0, 10.0, _square(spawn[0], spawn[1], 70.0), 0))
        g = center + 340.0 * u
        gates.append(LocationSpec(f"gate-{k + 1}", round(float(g[0]), 3), round(float(g[1]), 3), 25.0))
    return ScenarioConfig(
        arena=(800.0, 800.0), n_frames=15, walkers=WalkerSpec(50, 1.5),
        cohorts=tuple(cohorts), p_miss=0.05, locations=tuple(gates),
    )


PRESETS = {
    # two anti-parallel cohorts sharing one spawn region
    "interdigitated": lambda: ScenarioConfig(
        arena=(600.0, 400.0),
        n_frames=12,
        walkers=WalkerSpec(0, 1.5),
        cohorts=(
            CohortSpec(100, 0.0, 4.0, 8.0, (150.0, 100.0, 450.0, 300.0), 0),
            CohortSpec(100, math.pi, 4.0, 8.0, (150.0, 100.0, 450.0, 300.0), 0),
        ),
        p_miss=0.05,
        locations=(LocationSpec("east-exit", 590.0, 200.0, 20.0), LocationSpec("west-exit", 10.0, 200.0, 20.0)),
    ),
    # a cohort of 20 starts running at frame 10 amid 500 random walkers
    "onset": lambda: ScenarioConfig(
        arena=(800.0, 800.0),
        n_frames=20,
        walkers=WalkerSpec(500, 1.5),
        cohorts=(CohortSpec(20, 0.0, 5.0, 20.0, (200.0, 300.0, 400.0, 500.0), 10),),
        p_miss=0.02,
        locations=(LocationSpec("gate-east", 760.0, 400.0, 20.0),),
    ),
    "multi-gate": _multi_gate,
    # few objects: two cohorts of 23 plus 5 walkers in a large arena
    "sparse": lambda: ScenarioConfig(
        arena=(1000.0, 1000.0),
        n_frames=15,
        walkers=WalkerSpec(5, 2.0),
        cohorts=(
            CohortSpec(23, 0.0, 5.0, 4.0, (100.0, 200.0, 450.0, 800.0), 0),
            CohortSpec(23, math.pi / 2, 5.0, 4.0, (550.0, 200.0, 900.0, 800.0), 0),
        ),
        p_miss=0.0,
    ),
}


def preset_scenario(name: str, seed: int | None = None) -> ScenarioConfig:
    try:
        cfg = PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}") from None
    return cfg if seed is None else cfg.replace(seed=seed)
