"""CSV / log formats for tracker outputs, and atomic file writes."""
from __future__ import annotations

import csv
import io
import os
import tempfile

from .alert import CohortReport, SensitiveLocation
from .detect import DetectionFormatError, format_float as ff

LINK_FIELDS = ("frame", "from_x", "from_y", "to_x", "to_y", "cohort_id", "cost")
COHORT_FIELDS = (
    "frame", "cohort_id", "count", "centroid_x", "centroid_y", "mean_dir_rad", "mean_speed_px", "kappa", "weight",
)
ITERATION_FIELDS = ("frame", "iter", "links", "total_cost", "frac_changed")
LOCATION_FIELDS = ("id", "x", "y", "radius")


def atomic_write_text(path, text):
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def commit_outputs(outdir, files):
    """Write every name -> content atomically; nothing is renamed until all temp files exist.

    A content value is either text or a callable that writes to a given path.
    """
    os.makedirs(outdir, exist_ok=True)
    staged = []
    try:
        for name, content in files.items():
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=outdir)
            staged.append((tmp, os.path.join(outdir, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                if not callable(content):
                    fh.write(content)
            if callable(content):
                content(tmp)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def links_csv(rows) -> str:
    """rows: (frame, from_x, from_y, to_x, to_y, cohort_id, cost)."""
    return _table(LINK_FIELDS, [(int(f), ff(a), ff(b), ff(c), ff(d), int(k), ff(cost))
                                for f, a, b, c, d, k, cost in rows])


def cohorts_csv(reports) -> str:
    return _table(COHORT_FIELDS, [
        (r.frame, r.cohort_id, r.count, ff(r.centroid_x), ff(r.centroid_y), ff(r.mean_direction),
         ff(r.mean_speed), ff(r.kappa), ff(r.weight))
        for r in reports
    ])


def iterations_log(records) -> str:
    return _table(ITERATION_FIELDS, [
        (r.frame, r.iter, r.links, ff(r.total_cost), ff(r.frac_changed)) for r in records
    ])


def locations_csv(locations) -> str:
    return _table(LOCATION_FIELDS, [(loc.id, ff(loc.x), ff(loc.y), ff(loc.radius)) for loc in locations])


def _read_rows(path, header):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DetectionFormatError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return
        if tuple(h.strip() for h in first) != header:
            raise DetectionFormatError(f"{path}:1: expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DetectionFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, row


def read_links(path):
    """Rows of (frame, from_x, from_y, to_x, to_y, cohort_id, cost)."""
    out = []
    for lineno, r in _read_rows(path, LINK_FIELDS):
        try:
            out.append((int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]), int(r[5]), float(r[6])))
        except ValueError as exc:
            raise DetectionFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def read_cohorts(path, calib=None):
    """CohortReport rows; m/s speed is derived with ``calib`` (rbar is not stored and reads as nan)."""
    out = []
    for lineno, r in _read_rows(path, COHORT_FIELDS):
        try:
            speed = float(r[6])
            mps = calib.px_per_frame_to_mps(speed) if calib is not None else float("nan")
            out.append(CohortReport(int(r[0]), int(r[1]), int(r[2]), float(r[3]), float(r[4]), float(r[5]),
                                    speed, mps, float("nan"), float(r[7]), float(r[8])))
        except ValueError as exc:
            raise DetectionFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def read_iterations(path):
    out = []
    for lineno, r in _read_rows(path, ITERATION_FIELDS):
        try:
            out.append((int(r[0]), int(r[1]), int(r[2]), float(r[3]), float(r[4])))
        except ValueError as exc:
            raise DetectionFormatError(f"{path}:{lineno}: {exc}") from None
    return out


def read_locations(path):
    out = []
    for lineno, r in _read_rows(path, LOCATION_FIELDS):
        try:
            out.append(SensitiveLocation(r[0], float(r[1]), float(r[2]), float(r[3])))
        except ValueError as exc:
            raise DetectionFormatError(f"{path}:{lineno}: {exc}") from None
    return out
