"""BEV rasterization, Hough segment detection and corner extraction.

Wall points are projected to a binary bird's-eye raster. Segments come
from a vote-threshold Hough transform with greedy pixel claiming, gap
splitting and total-least-squares refits. Corners are intersections of
extended non-parallel segments, deduplicated by non-maximum suppression
on combined support length.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyGrid
from .geometry import LineSegment2

__all__ = [
    "BevRaster",
    "Corner",
    "rasterize_points",
    "rasterize_segments",
    "detect_segments",
    "merge_refit",
    "extract_corners",
    "model_corners",
    "save_raster_pgm",
]


@dataclass
class BevRaster:
    """Binary occupancy raster; cell (ix, iy) covers origin + [ix, ix+1) / scale."""

    grid: np.ndarray  # (nx, ny) bool
    origin: np.ndarray  # (2,) meters, lower corner of cell (0, 0)
    scale: float  # px per meter

    def px_of(self, points_m: np.ndarray) -> np.ndarray:
        return (np.asarray(points_m, dtype=np.float64) - self.origin) * self.scale

    def m_of(self, points_px: np.ndarray) -> np.ndarray:
        return np.asarray(points_px, dtype=np.float64) / self.scale + self.origin


@dataclass
class Corner:
    """A wall-intersection landmark with the two incident wall directions."""

    position: np.ndarray  # (2,)
    dirs: np.ndarray  # (2, 2) unit directions of the incident walls
    support: float  # combined incident wall length, meters


def _bounds(points_m: np.ndarray, pad_px: int, scale: float):
    lo = np.floor(points_m.min(axis=0) * scale).astype(np.int64) - pad_px
    hi = np.floor(points_m.max(axis=0) * scale).astype(np.int64) + pad_px + 1
    return lo, hi


def rasterize_points(points_xy: np.ndarray, scale: float, pad_px: int = 2) -> BevRaster:
    pts = np.asarray(points_xy, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise EmptyGrid("no points to rasterize")
    lo, hi = _bounds(pts, pad_px, scale)
    grid = np.zeros((int(hi[0] - lo[0]), int(hi[1] - lo[1])), dtype=bool)
    ij = np.floor(pts * scale).astype(np.int64) - lo
    grid[ij[:, 0], ij[:, 1]] = True
    return BevRaster(grid, lo / scale, scale)


def _traverse_cells(p0: np.ndarray, p1: np.ndarray) -> List[Tuple[int, int]]:
    """All integer cells a segment passes through (grid-walk DDA)."""
    cells = []
    x, y = int(np.floor(p0[0])), int(np.floor(p0[1]))
    xe, ye = int(np.floor(p1[0])), int(np.floor(p1[1]))
    d = p1 - p0
    step_x = 1 if d[0] > 0 else -1
    step_y = 1 if d[1] > 0 else -1
    # t to next vertical / horizontal cell boundary
    tx = np.inf if d[0] == 0 else ((x + (step_x > 0)) - p0[0]) / d[0]
    ty = np.inf if d[1] == 0 else ((y + (step_y > 0)) - p0[1]) / d[1]
    dtx = np.inf if d[0] == 0 else abs(1.0 / d[0])
    dty = np.inf if d[1] == 0 else abs(1.0 / d[1])
    cells.append((x, y))
    guard = 0
    while (x, y) != (xe, ye) and guard < 10_000_000:
        if tx <= ty:
            x += step_x
            tx += dtx
        else:
            y += step_y
            ty += dty
        cells.append((x, y))
        guard += 1
    return cells


def rasterize_segments(
    segments: Sequence[LineSegment2],
    scale: float,
    pad_px: int = 2,
    lo_m: Optional[np.ndarray] = None,
    hi_m: Optional[np.ndarray] = None,
) -> BevRaster:
    """Raster marking every cell touched by any segment."""
    if not segments:
        raise EmptyGrid("no segments to rasterize")
    ends = np.array([[*s.p0, *s.p1] for s in segments])
    pts = np.vstack([ends[:, :2], ends[:, 2:]])
    if lo_m is not None:
        pts = np.vstack([pts, np.asarray(lo_m)[None, :], np.asarray(hi_m)[None, :]])
    lo, hi = _bounds(pts, pad_px, scale)
    grid = np.zeros((int(hi[0] - lo[0]), int(hi[1] - lo[1])), dtype=bool)
    # cells are closed squares: a segment running exactly along a cell
    # boundary touches both sides, so traverse a hairline off each side
    eps = 1e-7
    for s in segments:
        d = s.direction
        n = np.array([-d[1], d[0]]) * eps
        for off in (n, -n):
            for cx, cy in _traverse_cells(s.p0 * scale + off, s.p1 * scale + off):
                grid[cx - lo[0], cy - lo[1]] = True
    return BevRaster(grid, lo / scale, scale)


def detect_segments(
    raster: BevRaster,
    l_min_px: int = 30,
    gap_px: float = 5.0,
    band_px: float = 5.0,
    theta_bins: int = 180,
) -> List[LineSegment2]:
    """Hough peaks -> greedy pixel claiming -> gap-split runs -> TLS refit.

    Returns segments in meters. Peaks need l_min_px votes in a 1 px rho
    bin; runs shorter than l_min_px are dropped.
    """
    if not np.any(raster.grid):
        raise EmptyGrid("empty raster")
    px = np.argwhere(raster.grid).astype(np.float64) + 0.5  # pixel centers

    thetas = np.arange(theta_bins) * np.pi / theta_bins
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    diag = int(np.ceil(np.hypot(*raster.grid.shape))) + 2

    rho_all = px[:, 0][:, None] * cos_t[None, :] + px[:, 1][:, None] * sin_t[None, :]
    acc = np.empty((theta_bins, 2 * diag), dtype=np.int64)
    rho_idx = np.round(rho_all).astype(np.int64) + diag
    for t in range(theta_bins):
        acc[t] = np.bincount(rho_idx[:, t], minlength=2 * diag)

    t_bin, r_bin = np.nonzero(acc >= l_min_px)
    votes = acc[t_bin, r_bin]
    order = np.lexsort((r_bin, t_bin, -votes))

    # claims decrement the accumulator so exhausted peaks drop out in O(1)
    acc_flat = acc.reshape(-1)
    theta_base = np.arange(theta_bins) * (2 * diag)

    claimed = np.zeros(px.shape[0], dtype=bool)
    n_unclaimed = px.shape[0]
    segments: List[LineSegment2] = []
    for k in order:
        if n_unclaimed < l_min_px:
            break
        t, r = t_bin[k], r_bin[k]
        if acc[t, r] < l_min_px:
            continue
        dist = np.abs(rho_all[:, t] - (r - diag))
        band = (dist <= band_px) & ~claimed
        if int(np.sum(band)) < l_min_px:
            continue
        idx = np.nonzero(band)[0]
        # split claimed pixels into runs along the line direction
        along = -px[idx, 0] * sin_t[t] + px[idx, 1] * cos_t[t]
        srt = np.argsort(along)
        idx, along = idx[srt], along[srt]
        run_starts = np.concatenate([[0], np.nonzero(np.diff(along) > gap_px)[0] + 1])
        run_ends = np.concatenate([run_starts[1:], [along.shape[0]]])
        for a, b in zip(run_starts, run_ends):
            run = idx[a:b]
            if along[b - 1] - along[a] < l_min_px:
                continue
            claimed[run] = True
            n_unclaimed -= run.shape[0]
            lin = (theta_base[None, :] + rho_idx[run]).reshape(-1)
            acc_flat -= np.bincount(lin, minlength=acc_flat.shape[0])
            seg = _tls_segment(px[run])
            if seg is not None:
                segments.append(
                    LineSegment2(raster.m_of(seg[0]), raster.m_of(seg[1]))
                )
    return segments


def _tls_segment(points: np.ndarray):
    """Total-least-squares line fit; endpoints from the projection extent."""
    mean = points.mean(axis=0)
    d = points - mean
    cov = d.T @ d
    w, v = np.linalg.eigh(cov)
    direction = v[:, 1]
    t = d @ direction
    t0, t1 = float(t.min()), float(t.max())
    if t1 - t0 < 1e-9:
        return None
    return mean + t0 * direction, mean + t1 * direction


def merge_refit(
    segments: Sequence[LineSegment2],
    endpoint_tol_m: float = 0.3,
    angle_tol_deg: float = 5.0,
) -> List[LineSegment2]:
    """Chain near-collinear segments with close endpoints, refit each chain.

    Singleton chains pass through unchanged.
    """
    n = len(segments)
    if n == 0:
        return []
    cos_tol = np.cos(np.radians(angle_tol_deg))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            a, b = segments[i], segments[j]
            if abs(float(a.direction @ b.direction)) < cos_tol:
                continue
            gaps = [
                np.linalg.norm(pa - pb)
                for pa in (a.p0, a.p1)
                for pb in (b.p0, b.p1)
            ]
            if min(gaps) <= endpoint_tol_m and find(i) != find(j):
                parent[find(j)] = find(i)

    chains = {}
    for i in range(n):
        chains.setdefault(find(i), []).append(i)

    out: List[LineSegment2] = []
    for members in chains.values():
        if len(members) == 1:
            out.append(segments[members[0]])
            continue
        samples = []
        for i in members:
            s = segments[i]
            k = max(2, int(np.ceil(s.length / 0.05)) + 1)
            t = np.linspace(0.0, 1.0, k)
            samples.append(s.p0 + t[:, None] * (s.p1 - s.p0))
        fit = _tls_segment(np.vstack(samples))
        out.append(LineSegment2(fit[0], fit[1]))
    out.sort(key=lambda s: (tuple(np.round(s.p0, 9)), tuple(np.round(s.p1, 9))))
    return out


def extract_corners(
    segments: Sequence[LineSegment2],
    extend_m: float = 1.0,
    nms_radius_m: float = 0.5,
    min_angle_deg: float = 10.0,
) -> List[Corner]:
    """Intersect extended non-parallel segment pairs, then NMS by support."""
    candidates: List[Corner] = []
    sin_min = np.sin(np.radians(min_angle_deg))
    for i in range(len(segments)):
        a = segments[i]
        da = a.direction
        for j in range(i + 1, len(segments)):
            b = segments[j]
            db = b.direction
            cross = da[0] * db[1] - da[1] * db[0]
            if abs(cross) < sin_min:
                continue
            rhs = b.p0 - a.p0
            t = (rhs[0] * db[1] - rhs[1] * db[0]) / cross
            u = (rhs[0] * da[1] - rhs[1] * da[0]) / cross
            if -extend_m <= t <= a.length + extend_m and -extend_m <= u <= b.length + extend_m:
                candidates.append(
                    Corner(a.p0 + t * da, np.array([da, db]), a.length + b.length)
                )
    candidates.sort(
        key=lambda c: (-c.support, tuple(np.round(c.position, 9)))
    )
    kept: List[Corner] = []
    for c in candidates:
        if all(np.linalg.norm(c.position - k.position) > nms_radius_m for k in kept):
            kept.append(c)
    return kept


def model_corners(walls: Sequence[LineSegment2], **kwargs) -> List[Corner]:
    """Corner extraction straight from model wall segments."""
    return extract_corners(walls, **kwargs)


def save_raster_pgm(raster: BevRaster, path) -> None:
    """Debug dump; occupied pixels black, y up."""
    img = np.where(raster.grid.T[::-1], 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        fh.write(img.tobytes())
