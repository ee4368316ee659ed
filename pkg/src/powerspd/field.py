"""Tensor fields: file I/O, per-subject normalisation, neighbourhoods and alpha maps.

File format: CSV with header ``subject,x,y,z,dxx,dxy,dxz,dyy,dyz,dzz``
(positions in mm, tensor in row-major upper-triangle order), or JSON lines
carrying the same keys.
"""
import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import (
    AllPointsFailedError,
    DegenerateError,
    DomainError,
    ParseError,
    PowerSPDError,
    SchemaError,
)
from .likelihood import AlphaFit, AlphaGrid, fit_alpha
from .metrics import frobenius_norm
from .spd import psd_tolerance, spectral_decompose, unvech, vech

FIELDS = ("subject", "x", "y", "z", "dxx", "dxy", "dxz", "dyy", "dyz", "dzz")
TENSOR_FIELDS = FIELDS[4:]


class VoxelRecord(NamedTuple):
    subject_id: str
    position: np.ndarray
    tensor: np.ndarray


@dataclass(frozen=True)
class TensorField:
    """Voxel tensors from one or more registered subjects.

    Attributes
    ----------
    subject_ids : ndarray of str, shape (N,)
    positions : ndarray, shape (N, 3)
        Millimetres.
    tensors : ndarray, shape (N, 3, 3)
    """

    subject_ids: np.ndarray
    positions: np.ndarray
    tensors: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.subject_ids, dtype=str)
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        ten = np.asarray(self.tensors, dtype=float)
        if len(ids) == 0:
            raise ValueError("a tensor field needs at least one record")
        if not (len(ids) == len(pos) == len(ten)):
            raise ValueError("subject_ids, positions and tensors differ in length")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "subject_ids", ids)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tensors", ten)

    def __len__(self):
        return len(self.subject_ids)

    @property
    def subjects(self):
        return sorted(set(self.subject_ids.tolist()))

    def records(self):
        for sid, pos, ten in zip(self.subject_ids, self.positions, self.tensors):
            yield VoxelRecord(str(sid), pos, ten)

    def subset(self, mask):
        mask = np.asarray(mask)
        return TensorField(self.subject_ids[mask], self.positions[mask], self.tensors[mask])

    def scaled(self, factor):
        return TensorField(self.subject_ids, self.positions, self.tensors * factor)


def _check_psd(tensors, lines):
    lam = spectral_decompose(tensors).eigenvalues
    bad = np.flatnonzero(lam[:, -1] < -psd_tolerance(lam))
    if len(bad):
        rows = ", ".join(str(lines[k]) for k in bad[:10])
        raise DomainError(f"tensors not positive semi-definite on line(s) {rows}")


def _parse_row(values, line):
    if len(values) != len(FIELDS):
        raise SchemaError(f"expected {len(FIELDS)} columns, got {len(values)}", line)
    try:
        nums = [float(v) for v in values[1:]]
    except ValueError as exc:
        raise ParseError(f"non-numeric value ({exc})", line) from None
    if not np.all(np.isfinite(nums)):
        raise ParseError("non-finite value", line)
    return values[0].strip(), nums[:3], nums[3:]


def _read_csv(text):
    rows = []
    for lineno, values in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not values or (len(values) == 1 and not values[0].strip()):
            continue
        if values[0].strip().startswith("#"):
            continue
        if values[0].strip().lower() == "subject":
            if [v.strip().lower() for v in values] != list(FIELDS):
                raise SchemaError(f"unexpected header {values}", lineno)
            continue
        rows.append((lineno,) + _parse_row(values, lineno))
    return rows


def _read_jsonl(text):
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at column {exc.colno}: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise SchemaError("each line must be a JSON object", lineno)
        missing = [k for k in FIELDS if k not in obj]
        if missing:
            raise SchemaError(f"missing keys {missing}", lineno)
        rows.append((lineno,) + _parse_row([str(obj[k]) for k in FIELDS], lineno))
    return rows


def load_field(path, format=None):
    """Read a tensor field from CSV or JSON lines.

    ``format`` is ``"csv"`` or ``"jsonl"``; inferred from the suffix when
    omitted (``.jsonl``/``.json`` for JSON lines, CSV otherwise).
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not UTF-8 at byte offset {exc.start}") from None
    rows = _read_jsonl(text) if format == "jsonl" else _read_csv(text)
    if not rows:
        raise ParseError(f"{path} contains no voxel records")
    lines = [r[0] for r in rows]
    tensors = unvech(np.array([r[3] for r in rows]), 3)
    _check_psd(tensors, lines)
    return TensorField(
        subject_ids=np.array([r[1] for r in rows]),
        positions=np.array([r[2] for r in rows]),
        tensors=tensors,
    )


def write_field(field, path):
    """Write ``field`` as CSV with the standard header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELDS)
        for sid, pos, ten in zip(field.subject_ids, field.positions, field.tensors):
            writer.writerow([sid, *map(repr, pos.tolist()), *map(repr, vech(ten).tolist())])


def normalize_subjects(field):
    """Divide each subject's tensors by the Frobenius norm of its arithmetic mean tensor."""
    tensors = field.tensors.copy()
    for sid in field.subjects:
        rows = field.subject_ids == sid
        norm = frobenius_norm(field.tensors[rows].mean(axis=0))
        if norm == 0:
            raise DegenerateError(f"subject {sid!r} has a zero mean tensor")
        tensors[rows] /= norm
    return TensorField(field.subject_ids, field.positions, tensors)


@dataclass(frozen=True)
class Neighborhood:
    """Ball of voxels around a grid point.

    ``members`` maps each subject to row indices into the source field, sorted
    by position so that the pooled sample does not depend on file order.
    """

    center: np.ndarray
    members: dict
    radius: float

    @property
    def counts(self):
        return {sid: len(idx) for sid, idx in self.members.items()}

    @property
    def n_v(self):
        return min(self.counts.values())

    @property
    def n(self):
        return sum(self.counts.values())

    def indices(self):
        return np.concatenate([self.members[sid] for sid in sorted(self.members)])


def grid_centers(positions, spacing, offset=0.0):
    """Grid points at ``offset + k * spacing`` covering the bounding box of ``positions``."""
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (3,))
    lo = np.ceil((positions.min(axis=0) - offset) / spacing - 1e-9)
    hi = np.floor((positions.max(axis=0) - offset) / spacing + 1e-9)
    axes = [offset[d] + spacing * np.arange(lo[d], hi[d] + 1) for d in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def _position_order(field, idx):
    keys = np.column_stack([field.positions[idx], vech(field.tensors[idx])])
    return idx[np.lexsort(keys.T[::-1])]


def extract_neighborhoods(field, grid_spacing=2.0, radius=0.7, n_v_min=15, offset=0.0):
    """Balls of radius ``radius`` around grid points where every subject has ``n_v_min`` voxels.

    Membership is closed (distance <= radius).
    """
    if not grid_spacing > 0 or not radius > 0:
        raise ValueError("grid_spacing and radius must be positive")
    centers = grid_centers(field.positions, grid_spacing, offset)
    subjects = field.subjects
    trees = {}
    rows_of = {}
    for sid in subjects:
        rows = np.flatnonzero(field.subject_ids == sid)
        rows_of[sid] = rows
        trees[sid] = cKDTree(field.positions[rows])

    out = []
    for c in centers:
        members = {}
        for sid in subjects:
            local = trees[sid].query_ball_point(c, radius)
            if len(local) < n_v_min:
                break
            members[sid] = _position_order(field, rows_of[sid][np.asarray(local, dtype=int)])
        else:
            out.append(Neighborhood(center=c, members=members, radius=radius))
    return out


@dataclass(frozen=True)
class AlphaMapEntry:
    center: np.ndarray
    n: int
    fit: Optional[AlphaFit]
    status: str = "ok"

    @property
    def alpha_hat(self):
        return self.fit.alpha_hat if self.fit is not None else float("nan")

    @property
    def ci_lo(self):
        return self.fit.ci_lo if self.fit is not None else float("nan")

    @property
    def ci_hi(self):
        return self.fit.ci_hi if self.fit is not None else float("nan")


def sweep_order(centers):
    """Left-to-right ordering: lexicographic in the principal-axis coordinates of the centers.

    Each axis is signed so that its largest-magnitude component is positive.
    """
    centers = np.asarray(centers, dtype=float)
    if len(centers) < 2:
        return np.arange(len(centers))
    X = centers - centers.mean(axis=0)
    _, _, Vt = np.linalg.svd(X, full_matrices=True)
    lead = np.argmax(np.abs(Vt), axis=1)
    Vt = Vt * np.sign(Vt[np.arange(3), lead])[:, None]
    proj = np.round(X @ Vt.T, 9)
    return np.lexsort(proj.T[::-1])


def _fit_neighborhood(field, hood, grid, ci_drop):
    idx = hood.indices()
    try:
        fit = fit_alpha(field.tensors[idx], grid, ci_drop=ci_drop)
    except AllPointsFailedError:
        return AlphaMapEntry(hood.center, len(idx), None, "singular")
    except (PowerSPDError, ValueError) as exc:
        return AlphaMapEntry(hood.center, len(idx), None, type(exc).__name__)
    return AlphaMapEntry(hood.center, len(idx), fit)


def estimate_alpha_map(field, grid=None, spacing=2.0, radius=0.7, n_v_min=15, ci_drop=2.0,
                       offset=0.0, n_jobs=None):
    """Fit the power parameter in every neighbourhood, pooling all subjects.

    Entries come back in :func:`sweep_order`. A neighbourhood whose fit fails
    is kept with ``fit=None`` and a status naming the failure.
    """
    if grid is None:
        grid = AlphaGrid()
    hoods = extract_neighborhoods(field, spacing, radius, n_v_min, offset)
    if not hoods:
        return []
    order = sweep_order(np.array([h.center for h in hoods]))
    hoods = [hoods[k] for k in order]

    def work(h):
        return _fit_neighborhood(field, h, grid, ci_drop)

    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(work, hoods))
    return [work(h) for h in hoods]


def smooth_alpha_profile(entries, bandwidth=3):
    """Running-mean smoothing of the estimate and interval limits along the sweep.

    The window is ``2 * bandwidth + 1`` and shrinks symmetrically near the
    ends. Failed entries (NaN) are skipped inside each window.

    Returns
    -------
    ndarray, shape (len(entries), 3)
        Columns: smoothed ``alpha_hat``, ``ci_lo``, ``ci_hi``.
    """
    if bandwidth < 0:
        raise ValueError("bandwidth must be non-negative")
    raw = np.array([[e.alpha_hat, e.ci_lo, e.ci_hi] for e in entries], dtype=float).reshape(-1, 3)
    return running_mean(raw, bandwidth)


def running_mean(values, bandwidth):
    values = np.asarray(values, dtype=float)
    n = len(values)
    out = np.empty_like(values)
    for i in range(n):
        h = min(bandwidth, i, n - 1 - i)
        window = values[i - h:i + h + 1]
        with np.errstate(invalid="ignore"):
            valid = ~np.isnan(window)
            counts = valid.sum(axis=0)
            out[i] = np.where(counts > 0, np.where(valid, window, 0.0).sum(axis=0) / np.maximum(counts, 1), np.nan)
    return out


ALPHA_MAP_FIELDS = ("cx", "cy", "cz", "n", "alpha_hat", "ci_lo", "ci_hi", "status")
PROFILE_FIELDS = ("index", "alpha_smooth", "ci_lo_smooth", "ci_hi_smooth")


def alpha_map_csv(entries):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ALPHA_MAP_FIELDS)
    for e in entries:
        writer.writerow([*(f"{c:.12g}" for c in e.center), e.n,
                         f"{e.alpha_hat:.12g}", f"{e.ci_lo:.12g}", f"{e.ci_hi:.12g}", e.status])
    return buf.getvalue()


def profile_csv(smoothed):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_FIELDS)
    for i, row in enumerate(smoothed):
        writer.writerow([i, *(f"{v:.12g}" for v in row)])
    return buf.getvalue()
