"""Point-cloud datasets: validation, min-max normalization, splitting, CSV I/O.

Inputs are mapped to ``[0, 1]`` per axis and values to ``[-1, 1]``. An axis
whose coordinates are all equal maps to 0.5 so the kernel stays centered.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np


class DatasetError(ValueError):
    """Malformed or degenerate input data."""


@dataclass(frozen=True)
class RawDataset:
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise DatasetError("points must be an (N, D) array with D >= 1")
        if pts.shape[0] != vals.shape[0]:
            raise DatasetError(f"{pts.shape[0]} points but {vals.shape[0]} values")
        bad = np.flatnonzero(~np.isfinite(pts).all(axis=1))
        if bad.size:
            raise DatasetError(f"non-finite coordinate at index {bad[0]}")
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise DatasetError(f"non-finite value at index {bad[0]}")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def subset(self, idx):
        return RawDataset(self.points[idx], self.values[idx])


@dataclass(frozen=True)
class NormalizationTransform:
    in_min: np.ndarray
    in_max: np.ndarray
    out_min: float
    out_max: float

    @classmethod
    def identity(cls, dim):
        # in_max - in_min == 1 and out range [-1, 1] leave data untouched
        return cls(np.zeros(dim), np.ones(dim), -1.0, 1.0)

    @classmethod
    def fit(cls, data):
        return cls(
            data.points.min(axis=0),
            data.points.max(axis=0),
            float(data.values.min()),
            float(data.values.max()),
        )

    @property
    def dim(self):
        return len(self.in_min)

    def _span(self):
        span = self.in_max - self.in_min
        return span, span == 0

    def points(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        span, flat = self._span()
        out = (pts - self.in_min) / np.where(flat, 1.0, span)
        out[..., flat] = 0.5
        return out

    def inverse_points(self, pts):
        span, flat = self._span()
        out = np.asarray(pts, dtype=np.float64) * span + self.in_min
        out[..., flat] = self.in_min[flat]
        return out

    def values(self, vals):
        vals = np.asarray(vals, dtype=np.float64)
        span = self.out_max - self.out_min
        if span == 0:
            return vals - self.out_min
        return 2.0 * (vals - self.out_min) / span - 1.0

    def inverse_values(self, vals):
        vals = np.asarray(vals, dtype=np.float64)
        span = self.out_max - self.out_min
        if span == 0:
            return vals + self.out_min
        return (vals + 1.0) * 0.5 * span + self.out_min

    def apply(self, data):
        return RawDataset(self.points(data.points), self.values(data.values))

    def to_dict(self):
        return {
            "in_min": [float(v) for v in self.in_min],
            "in_max": [float(v) for v in self.in_max],
            "out_min": self.out_min,
            "out_max": self.out_max,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["in_min"], float), np.asarray(d["in_max"], float),
                   float(d["out_min"]), float(d["out_max"]))


@dataclass(frozen=True)
class SplitDataset:
    train: RawDataset
    validation: RawDataset
    transform: NormalizationTransform
    seed: int
    train_idx: np.ndarray = field(repr=False)
    val_idx: np.ndarray = field(repr=False)


def normalize(raw):
    """Min-max normalize ``raw``; returns ``(normalized, transform)``.

    Degenerate value ranges (all values equal) are only shifted, which makes
    the all-zero case an identity.
    """
    tf = NormalizationTransform.fit(raw)
    return tf.apply(raw), tf


def split(data, ratio=0.8, seed=0, transform=None):
    """Random train/validation partition; ``floor(N * ratio)`` rows go to train.

    The permutation comes from ``numpy.random.default_rng(seed)`` (PCG64).
    """
    if not 0.0 < ratio < 1.0:
        raise DatasetError(f"ratio must lie in (0, 1), got {ratio}")
    n_train = int(math.floor(data.n * ratio))
    if n_train < 1 or n_train >= data.n:
        raise DatasetError(f"N={data.n} with ratio {ratio} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(data.n)
    tr, va = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    return SplitDataset(
        train=data.subset(tr),
        validation=data.subset(va),
        transform=transform if transform is not None else NormalizationTransform.identity(data.dim),
        seed=int(seed),
        train_idx=tr,
        val_idx=va,
    )


def prepare(raw, ratio=0.8, seed=0):
    """Normalize jointly, then split."""
    data, tf = normalize(raw)
    return split(data, ratio, seed, transform=tf)


# ---------------------------------------------------------------------------
# CSV


def _header(dim, with_values=True):
    cols = [f"x{i}" for i in range(dim)]
    return cols + ["phi"] if with_values else cols


def _parse_header(row, path):
    cols = [c.strip() for c in row]
    has_phi = bool(cols) and cols[-1] == "phi"
    xs = cols[:-1] if has_phi else cols
    if not xs or xs != [f"x{i}" for i in range(len(xs))]:
        raise DatasetError(f"{path}: line 1: expected header 'x0,...,x{{D-1}},phi', got {','.join(cols)!r}")
    return len(xs), has_phi


def read_csv(path, require_values=True, min_rows=2):
    """Read ``(points, values_or_None)`` from a dataset CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: missing header") from None
        dim, has_phi = _parse_header(head, path)
        if require_values and not has_phi:
            raise DatasetError(f"{path}: line 1: missing 'phi' column")
        width = dim + int(has_phi)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DatasetError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DatasetError(f"{path}: line {lineno}: non-numeric cell") from None
    if len(rows) < min_rows:
        raise DatasetError(f"{path}: need at least {min_rows} data rows, got {len(rows)}")
    arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), width)
    bad = np.flatnonzero(~np.isfinite(arr).all(axis=1))
    if bad.size:
        raise DatasetError(f"{path}: line {bad[0] + 2}: non-finite entry")
    return arr[:, :dim], (arr[:, dim] if has_phi else None)


def load_csv(path):
    pts, vals = read_csv(path)
    return RawDataset(pts, vals)


def write_csv(path, points, values=None):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(points.shape[1], values is not None))
        for i, p in enumerate(points):
            row = [repr(float(v)) for v in p]
            if values is not None:
                row.append(repr(float(values[i])))
            w.writerow(row)


def save_csv(data, path):
    write_csv(path, data.points, data.values)
