"""Difference-of-Gaussians blob detection and detection file I/O."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_image
from .core import Detection

#: Gaussian kernels are truncated at this many standard deviations.
TRUNCATE = 4.0


@dataclass(frozen=True)
class DetectorConfig:
    sigma1: float = 2.0
    ratio: float = 1.1
    k_thresh: float = 3.0

    def __post_init__(self):
        if not self.ratio > 1:
            raise ValueError(f"ratio must be > 1, got {self.ratio}")
        if not self.sigma1 >= 0.5:
            raise ValueError(f"sigma1 must be >= 0.5 px, got {self.sigma1}")

    @property
    def sigma2(self) -> float:
        return self.sigma1 * self.ratio


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Sampled Gaussian truncated at ``TRUNCATE`` sigma, renormalized to unit sum."""
    radius = int(TRUNCATE * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _blur(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(img, k, axis=0, mode="mirror")
    return ndimage.correlate1d(out, k, axis=1, mode="mirror")


def dog_filter(img, cfg: DetectorConfig | None = None) -> np.ndarray:
    """Bandpass an image: blur(sigma1) - blur(sigma1 * ratio), mirror borders."""
    cfg = cfg or DetectorConfig()
    img = check_image(img)
    return _blur(img, cfg.sigma1) - _blur(img, cfg.sigma2)


# Least-squares fit of a + b x + c y + d x^2 + e xy + f y^2 on the 3x3 stencil.
_yy, _xx = np.mgrid[-1:2, -1:2]
_DESIGN = np.column_stack(
    [np.ones(9), _xx.ravel(), _yy.ravel(), _xx.ravel() ** 2, (_xx * _yy).ravel(), _yy.ravel() ** 2]
)
_FIT = np.linalg.pinv(_DESIGN)


def _subpixel_offsets(patches: np.ndarray) -> np.ndarray:
    """(n, 3, 3) patches -> (n, 2) (dx, dy) offsets of the fitted extremum."""
    coef = patches.reshape(len(patches), 9) @ _FIT.T
    _, b, c, d, e, f = coef.T
    det = 4 * d * f - e * e
    with np.errstate(divide="ignore", invalid="ignore"):
        ox = (e * c - 2 * f * b) / det
        oy = (e * b - 2 * d * c) / det
    # fall back to separable parabolas when the 2D fit is not a clean maximum
    bad = ~((d < 0) & (det > 0) & (np.abs(ox) <= 1) & (np.abs(oy) <= 1))
    if np.any(bad):
        p = patches[bad]
        denx = p[:, 1, 0] - 2 * p[:, 1, 1] + p[:, 1, 2]
        deny = p[:, 0, 1] - 2 * p[:, 1, 1] + p[:, 2, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            fx = np.where(denx < 0, 0.5 * (p[:, 1, 0] - p[:, 1, 2]) / denx, 0.0)
            fy = np.where(deny < 0, 0.5 * (p[:, 0, 1] - p[:, 2, 1]) / deny, 0.0)
        ox[bad], oy[bad] = fx, fy
    return np.clip(np.column_stack([ox, oy]), -0.5, 0.5)


def detect_features(filtered, cfg: DetectorConfig | None = None, frame: int = 0) -> list[Detection]:
    """Strict 8-neighbour maxima above mean + k_thresh * std, refined to sub-pixel."""
    cfg = cfg or DetectorConfig()
    f = check_image(filtered)
    h, w = f.shape
    if h < 3 or w < 3:
        return []
    thresh = f.mean() + cfg.k_thresh * f.std()
    core = f[1:-1, 1:-1]
    is_max = core > thresh
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            is_max &= core > f[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
    rows, cols = np.nonzero(is_max)
    if rows.size == 0:
        return []
    rows += 1
    cols += 1
    idx = np.arange(-1, 2)
    patches = f[(rows[:, None, None] + idx[None, :, None]), (cols[:, None, None] + idx[None, None, :])]
    off = _subpixel_offsets(patches)
    return [
        Detection(frame, float(c + ox), float(r + oy), float(f[r, c]))
        for r, c, (ox, oy) in zip(rows, cols, off)
    ]


class DoGDetector(TransformerMixin, BaseEstimator):
    """Frame-wise blob detector; ``transform`` maps a stack of images to detections.

    The estimator is stateless, ``fit`` only validates parameters.
    """

    def __init__(self, sigma1=2.0, ratio=1.1, k_thresh=3.0):
        self.sigma1 = sigma1
        self.ratio = ratio
        self.k_thresh = k_thresh

    def _config(self):
        return DetectorConfig(self.sigma1, self.ratio, self.k_thresh)

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        return self

    def transform(self, X):
        cfg = self._config()
        frames = [X] if np.ndim(X) == 2 else list(X)
        return [detect_features(dog_filter(img, cfg), cfg, frame=t) for t, img in enumerate(frames)]


# --------------------------------------------------------------------------
# file formats

DETECTION_FIELDS = ("frame", "x", "y", "score")


class DetectionFormatError(ValueError):
    pass


def load_detections(path) -> list[list[Detection]]:
    """Read a detections CSV into per-frame lists (frames 0..max, gaps empty).

    Extra trailing columns (ground-truth ``object_id,cohort_id``) are ignored.
    """
    frames: dict[int, list[Detection]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(h.strip() for h in header[:4]) != DETECTION_FIELDS:
            raise DetectionFormatError(f"{path}:1: expected header starting with frame,x,y,score")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                frame = int(row[0])
                det = Detection(frame, float(row[1]), float(row[2]), float(row[3]))
            except (ValueError, IndexError) as exc:
                raise DetectionFormatError(f"{path}:{lineno}: malformed row {row!r} ({exc})") from None
            frames.setdefault(frame, []).append(det)
    if not frames:
        return []
    n = max(frames) + 1
    return [frames.get(t, []) for t in range(n)]


def format_float(v: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(v))


def write_detections(path, frames, extra=None):
    """Write per-frame detections; ``extra`` maps (frame, i) -> (object_id, cohort_id)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        header = list(DETECTION_FIELDS) + (["object_id", "cohort_id"] if extra is not None else [])
        fh.write(",".join(header) + "\n")
        for t, dets in enumerate(frames):
            for i, d in enumerate(dets):
                row = [str(d.frame), format_float(d.x), format_float(d.y), format_float(d.score)]
                if extra is not None:
                    row += [str(v) for v in extra[t][i]]
                fh.write(",".join(row) + "\n")


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM with maxval 255 or 65535."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: only binary P5 PGM is supported")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval not in (255, 65535):
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    n = width * height
    arr = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    return arr.reshape(height, width).astype(float)


def write_pgm(path, img, maxval=255):
    img = np.asarray(img)
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    arr = np.clip(np.rint(img), 0, maxval).astype(dtype)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(arr.tobytes())


def detections_to_array(dets) -> np.ndarray:
    if not dets:
        return np.zeros((0, 2))
    return np.array([(d.x, d.y) for d in dets], dtype=float)
