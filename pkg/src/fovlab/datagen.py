"""Synthetic parallelepiped datasets for the crop-ambiguity experiment.

Every sample is a fully visible parallelepiped (all 8 corners project inside
the image) with its projected, centered, and 3D corner coordinates stored
side by side. A configurable fraction of samples are injected ambiguous
partners: exact counterparts of another sample whose centered projections
coincide to float noise while the 3D corners differ, so collisions in the
centered input provably exist.

Sampling is deterministic: sample i draws only from the substream
(seed, "sample", i) and pair j from (seed, "pair", j), so any partition of
the index space reproduces the same dataset. Storage is columnar (one array
per field) to keep 50k-sample datasets cheap to hold and slice.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .ambiguity import Parallelepiped, Placement, construct_ambiguous, corners_3d, project_corners
from .geometry import PinholeCamera
from .rng import substream


class DatasetParseError(ValueError):
    """Malformed dataset file; the message names the offending line."""


@dataclass(frozen=True)
class SampleRanges:
    """Uniform sampling ranges. Lateral placement (tx, ty) is proposed from
    `txy` and rejection-sampled until the whole solid is visible."""

    ex: tuple[float, float] = (-0.3, 0.3)
    ey: tuple[float, float] = (-0.3, 0.3)
    ez: tuple[float, float] = (0.1, 0.5)
    tz: tuple[float, float] = (0.4, 0.8)
    txy: tuple[float, float] = (-0.4, 0.4)
    max_attempts: int = 1000


@dataclass
class Sample:
    """Row view into a Dataset's columns."""

    idx: int
    kp2d: np.ndarray  # (8, 2) original-frame pixels
    kp2d_centered: np.ndarray  # (8, 2) pixels, zero mean
    kp3d: np.ndarray  # (8, 3) meters
    extrusion: np.ndarray  # (3,)
    t: np.ndarray  # (3,)
    pair_id: int  # -1 if unpaired


@dataclass
class Dataset:
    """Columnar sample store; row i across all arrays is one sample."""

    kp2d: np.ndarray  # (n, 8, 2)
    kp2d_centered: np.ndarray  # (n, 8, 2)
    kp3d: np.ndarray  # (n, 8, 3)
    extrusion: np.ndarray  # (n, 3)
    t: np.ndarray  # (n, 3)
    idx: np.ndarray  # (n,) original sample indices
    pair_id: np.ndarray  # (n,) -1 if unpaired
    camera: PinholeCamera | None = None

    def __len__(self) -> int:
        return self.kp2d.shape[0]

    def sample(self, i: int) -> Sample:
        return Sample(
            idx=int(self.idx[i]),
            kp2d=self.kp2d[i],
            kp2d_centered=self.kp2d_centered[i],
            kp3d=self.kp3d[i],
            extrusion=self.extrusion[i],
            t=self.t[i],
            pair_id=int(self.pair_id[i]),
        )

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            kp2d=self.kp2d[rows],
            kp2d_centered=self.kp2d_centered[rows],
            kp3d=self.kp3d[rows],
            extrusion=self.extrusion[rows],
            t=self.t[rows],
            idx=self.idx[rows],
            pair_id=self.pair_id[rows],
            camera=self.camera,
        )


def _empty_dataset(n: int, camera: PinholeCamera | None) -> Dataset:
    return Dataset(
        kp2d=np.empty((n, 8, 2)),
        kp2d_centered=np.empty((n, 8, 2)),
        kp3d=np.empty((n, 8, 3)),
        extrusion=np.empty((n, 3)),
        t=np.empty((n, 3)),
        idx=np.arange(n, dtype=np.int64),
        pair_id=np.full(n, -1, dtype=np.int64),
        camera=camera,
    )


def _is_visible(cam: PinholeCamera, kp2d: np.ndarray) -> bool:
    u, v = kp2d[:, 0], kp2d[:, 1]
    return bool(np.all((u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)))


_FACE_WIDTH = 0.2
_DRAW_CHUNK = 32


def _draw_candidates(ranges: SampleRanges, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform candidate draws; columns ex, ey, ez, tx, ty, tz."""
    lo = np.array([ranges.ex[0], ranges.ey[0], ranges.ez[0], ranges.txy[0], ranges.txy[0], ranges.tz[0]])
    hi = np.array([ranges.ex[1], ranges.ey[1], ranges.ez[1], ranges.txy[1], ranges.txy[1], ranges.tz[1]])
    return rng.uniform(lo, hi, size=(count, 6))


def _batch_visible(cam: PinholeCamera, e: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Visibility mask for candidate batches: all 8 corners inside the image."""
    h = _FACE_WIDTH / 2.0
    face = np.array([[-h, -h, 0.0], [h, -h, 0.0], [-h, h, 0.0], [h, h, 0.0]])
    front = face[None, :, :] + t[:, None, :]
    k3 = np.concatenate([front, front + e[:, None, :]], axis=1)
    u = cam.fx * k3[:, :, 0] / k3[:, :, 2] + cam.px
    v = cam.fy * k3[:, :, 1] / k3[:, :, 2] + cam.py
    ok = (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    return ok.all(axis=1)


def _fill_row(ds: Dataset, cam: PinholeCamera, row: int, pp: Parallelepiped, pl: Placement, pair_id: int):
    k3 = corners_3d(pp, pl)
    k2 = project_corners(cam, k3)
    ds.kp2d[row] = k2
    ds.kp2d_centered[row] = k2 - k2.mean(axis=0)
    ds.kp3d[row] = k3
    ds.extrusion[row] = pp.extrusion
    ds.t[row] = pl.t
    ds.pair_id[row] = pair_id


def sample_dataset(
    cam: PinholeCamera,
    ranges: SampleRanges,
    n: int,
    seed: int,
    pair_fraction: float = 0.1,
    offset_range: tuple[float, float] = (0.05, 0.3),
) -> Dataset:
    """Draw n fully visible samples, pair_fraction of which are injected
    ambiguous partners of another sample in the set.

    Pairs are generated jointly (base plus counterpart) and rejected until
    both are visible; they sit at the end of the index range with matching
    pair ids.

    Raises:
        ValueError: n too small for the pair budget, or the ranges make
            visibility (effectively) infeasible within the attempt bound.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n_pairs = round(pair_fraction * n)
    n_single = n - 2 * n_pairs
    if n_single < 0:
        raise ValueError(f"pair fraction {pair_fraction} needs more than {n} samples")

    ds = _empty_dataset(n, cam)
    for i in range(n_single):
        rng = substream(seed, "sample", i)
        placed = False
        for _ in range(0, ranges.max_attempts, _DRAW_CHUNK):
            cand = _draw_candidates(ranges, rng, _DRAW_CHUNK)
            ok = _batch_visible(cam, cand[:, :3], cand[:, 3:])
            if ok.any():
                c = cand[int(np.argmax(ok))]
                pp = Parallelepiped(_FACE_WIDTH, (c[0], c[1], c[2]))
                pl = Placement(t=(c[3], c[4], c[5]))
                _fill_row(ds, cam, i, pp, pl, pair_id=-1)
                placed = True
                break
        if not placed:
            raise ValueError(
                f"no visible sample within {ranges.max_attempts} attempts; ranges infeasible"
            )

    lo, hi = offset_range
    for j in range(n_pairs):
        rng = substream(seed, "pair", j)
        placed = False
        for _ in range(0, ranges.max_attempts, _DRAW_CHUNK):
            cand = _draw_candidates(ranges, rng, _DRAW_CHUNK)
            d = rng.uniform(lo, hi, size=(_DRAW_CHUNK, 2)) * rng.choice(
                (-1.0, 1.0), size=(_DRAW_CHUNK, 2)
            )
            e, t = cand[:, :3], cand[:, 3:]
            # Same operation order as construct_ambiguous so the visibility
            # decision matches the stored partner bit for bit.
            shear = d * e[:, 2:3] / t[:, 2:3]
            e_partner = np.concatenate([e[:, :2] + shear, e[:, 2:]], axis=1)
            t_partner = np.concatenate([t[:, :2] + d, t[:, 2:]], axis=1)
            ok = _batch_visible(cam, e, t) & _batch_visible(cam, e_partner, t_partner)
            if ok.any():
                k = int(np.argmax(ok))
                base = (
                    Parallelepiped(_FACE_WIDTH, tuple(cand[k, :3])),
                    Placement(t=tuple(cand[k, 3:])),
                )
                partner = construct_ambiguous(base, (float(d[k, 0]), float(d[k, 1])))
                row = n_single + 2 * j
                _fill_row(ds, cam, row, *base, pair_id=j)
                _fill_row(ds, cam, row + 1, *partner, pair_id=j)
                placed = True
                break
        if not placed:
            raise ValueError(
                f"no visible ambiguous pair within {ranges.max_attempts} attempts; "
                "ranges infeasible"
            )
    return ds


def split(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffle-and-split keeping ambiguous partners together.

    The train side receives whole units (singles, or both members of a pair)
    until it holds at least round(fraction * n) samples, so sizes can be off
    by one pair relative to the exact fraction.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    units: list[np.ndarray] = []
    seen_pairs: dict[int, int] = {}
    for row in range(len(ds)):
        pid = int(ds.pair_id[row])
        if pid < 0:
            units.append(np.array([row]))
        elif pid in seen_pairs:
            units[seen_pairs[pid]] = np.append(units[seen_pairs[pid]], row)
        else:
            seen_pairs[pid] = len(units)
            units.append(np.array([row]))
    order = substream(seed, "split").permutation(len(units))
    target = round(fraction * len(ds))
    train_rows: list[np.ndarray] = []
    val_rows: list[np.ndarray] = []
    count = 0
    for ui in order:
        if count < target:
            train_rows.append(units[ui])
            count += len(units[ui])
        else:
            val_rows.append(units[ui])
    train_idx = np.concatenate(train_rows) if train_rows else np.empty(0, dtype=int)
    val_idx = np.concatenate(val_rows) if val_rows else np.empty(0, dtype=int)
    return ds.take(train_idx), ds.take(val_idx)


_N_COLS = 64


def _header() -> list[str]:
    cols = ["idx"]
    for prefix in ("u", "v", "cu", "cv", "X", "Y", "Z"):
        cols += [f"{prefix}{i}" for i in range(1, 9)]
    cols += ["ex", "ey", "ez", "tx", "ty", "tz", "pair_id"]
    return cols


def save(ds: Dataset, path) -> None:
    """Write the dataset as CSV with 17-significant-digit floats (lossless
    for doubles)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(_header())
        for i in range(len(ds)):
            vals = np.concatenate(
                [
                    ds.kp2d[i, :, 0], ds.kp2d[i, :, 1],
                    ds.kp2d_centered[i, :, 0], ds.kp2d_centered[i, :, 1],
                    ds.kp3d[i, :, 0], ds.kp3d[i, :, 1], ds.kp3d[i, :, 2],
                    ds.extrusion[i], ds.t[i],
                ]
            )
            w.writerow([int(ds.idx[i])] + [f"{x:.17g}" for x in vals] + [int(ds.pair_id[i])])


def load(path) -> Dataset:
    """Read a dataset CSV written by save(). The camera is not serialized,
    so the loaded dataset carries none."""
    rows: list[np.ndarray] = []
    idxs: list[int] = []
    pids: list[int] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError(f"{path}: line 1: empty file") from None
        if header != _header():
            raise DatasetParseError(f"{path}: line 1: unexpected header")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != _N_COLS:
                raise DatasetParseError(
                    f"{path}: line {line_no}: expected {_N_COLS} fields, got {len(row)}"
                )
            try:
                idxs.append(int(row[0]))
                rows.append(np.array([float(x) for x in row[1:-1]]))
                pids.append(int(row[-1]))
            except ValueError as e:
                raise DatasetParseError(f"{path}: line {line_no}: {e}") from None
            if not np.all(np.isfinite(rows[-1])):
                raise DatasetParseError(f"{path}: line {line_no}: non-finite value")
    n = len(rows)
    ds = _empty_dataset(n, camera=None)
    if n:
        vals = np.stack(rows)
        f8 = vals[:, :56].reshape(n, 7, 8)
        ds.kp2d = np.stack([f8[:, 0], f8[:, 1]], axis=2)
        ds.kp2d_centered = np.stack([f8[:, 2], f8[:, 3]], axis=2)
        ds.kp3d = np.stack([f8[:, 4], f8[:, 5], f8[:, 6]], axis=2)
        ds.extrusion = vals[:, 56:59].copy()
        ds.t = vals[:, 59:62].copy()
        ds.idx = np.array(idxs, dtype=np.int64)
        ds.pair_id = np.array(pids, dtype=np.int64)
    return ds


def build_io(
    ds: Dataset, variant: str, target: str, image_width: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Assemble network inputs and targets from a dataset.

    Inputs (n, 16): the 8 corner pixels, either centered (mean removed,
    scaled by the keypoints' bounding-box span) or absolute (scaled by the
    image width). Targets (n, 24): 3D corners in meters, mean-removed for
    the root-relative target. Also returns the (n,) pair-id vector.

    Raises:
        ValueError: unknown variant/target, missing image width for the
            absolute variant, or centered inputs that are not zero-mean.
    """
    n = len(ds)
    if variant == "centered":
        kc = ds.kp2d_centered
        if n and np.max(np.abs(kc.mean(axis=1))) > 1e-6:
            raise ValueError("centered keypoints are not zero-mean")
        span = np.maximum(np.ptp(kc[:, :, 0], axis=1), np.ptp(kc[:, :, 1], axis=1))
        x = (kc / span[:, None, None]).reshape(n, 16)
    elif variant == "absolute":
        if image_width is None:
            if ds.camera is None:
                raise ValueError("absolute variant needs image_width (dataset has no camera)")
            image_width = float(ds.camera.width)
        x = (ds.kp2d / image_width).reshape(n, 16)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if target == "root_relative":
        y = (ds.kp3d - ds.kp3d.mean(axis=1, keepdims=True)).reshape(n, 24)
    elif target == "absolute":
        y = ds.kp3d.reshape(n, 24)
    else:
        raise ValueError(f"unknown target {target!r}")
    return x, y, ds.pair_id.copy()
