"""Octree plane segmentation and gravity-based patch classification.

Points are binned into voxels of size s_v. A voxel whose covariance
eigenvalues (l1 >= l2 >= l3, l3 floored at 1e-12) satisfy l2/l3 >
sigma_lambda is kept as a planar patch; otherwise it splits into eight
children. Cells with fewer than four points are discarded. Adjacent
coplanar patches are merged afterwards with a union-find pass.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

EIGENVALUE_FLOOR = 1e-12
MIN_CELL_POINTS = 4
# guards against non-planar clusters that never thin out (e.g. coincident
# points); s_v/2**6 is far below any useful patch size
MAX_OCTREE_DEPTH = 6

__all__ = [
    "PlanarPatch",
    "SegmentationResult",
    "segment_planes",
    "merge_patches",
    "classify_patches",
]


@dataclass
class PlanarPatch:
    """A planar cluster of points with its fitted plane and cell bounds."""

    points: np.ndarray  # (N, 3)
    centroid: np.ndarray  # (3,)
    normal: np.ndarray  # (3,), unit
    eigenvalues: np.ndarray  # (3,), descending
    cell_lo: np.ndarray  # (3,) octree cell AABB
    cell_hi: np.ndarray
    kind: str = ""


@dataclass
class SegmentationResult:
    patches: List[PlanarPatch]
    n_points: int
    n_unassigned: int


def _canonical_sign(normal: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(normal)))
    return -normal if normal[i] < 0 else normal


def _fit_plane(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(centroid, unit normal, eigenvalues descending) of a point set."""
    centroid = points.mean(axis=0)
    d = points - centroid
    cov = d.T @ d / points.shape[0]
    w, v = np.linalg.eigh(cov)  # ascending
    normal = _canonical_sign(v[:, 0])
    return centroid, normal, w[::-1].copy()


def segment_planes(
    points: np.ndarray, s_v: float = 2.0, sigma_lambda: float = 10.0
) -> SegmentationResult:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n_total = pts.shape[0]
    if n_total == 0:
        return SegmentationResult([], 0, 0)
    if s_v <= 0.0:
        raise ValueError("s_v must be positive")

    origin = pts.min(axis=0)
    patches: List[PlanarPatch] = []
    active = pts
    n_assigned = 0
    size = float(s_v)

    for _ in range(MAX_OCTREE_DEPTH + 1):
        if active.shape[0] == 0:
            break
        keys = np.floor((active - origin) / size).astype(np.int64)
        packed = (keys[:, 0] << 40) | (keys[:, 1] << 20) | keys[:, 2]
        uniq, inv, counts = np.unique(packed, return_inverse=True, return_counts=True)
        n_groups = uniq.shape[0]

        sums = np.empty((n_groups, 3))
        prods = np.empty((n_groups, 3, 3))
        for i in range(3):
            sums[:, i] = np.bincount(inv, weights=active[:, i], minlength=n_groups)
            for j in range(i, 3):
                prods[:, i, j] = np.bincount(
                    inv, weights=active[:, i] * active[:, j], minlength=n_groups
                )
                prods[:, j, i] = prods[:, i, j]
        means = sums / counts[:, None]
        cov = prods / counts[:, None, None] - means[:, :, None] * means[:, None, :]

        big = counts >= MIN_CELL_POINTS
        w = np.zeros((n_groups, 3))
        v = np.zeros((n_groups, 3, 3))
        if np.any(big):
            w[big], v[big] = np.linalg.eigh(cov[big])
        l3 = np.maximum(w[:, 0], EIGENVALUE_FLOOR)
        planar = big & (w[:, 1] / l3 > sigma_lambda)

        first = np.unique(inv, return_index=True)[1]
        cell_keys = keys[first]
        order = np.argsort(inv, kind="stable")
        bounds = np.concatenate([[0], np.cumsum(counts)])

        for g in np.nonzero(planar)[0]:
            grp = active[order[bounds[g] : bounds[g + 1]]]
            normal = _canonical_sign(v[g][:, 0])
            lo = origin + cell_keys[g] * size
            patches.append(
                PlanarPatch(
                    points=grp,
                    centroid=means[g],
                    normal=normal,
                    eigenvalues=w[g][::-1].copy(),
                    cell_lo=lo,
                    cell_hi=lo + size,
                )
            )
            n_assigned += grp.shape[0]

        keep = big[inv] & ~planar[inv]
        active = active[keep]
        size *= 0.5

    return SegmentationResult(patches, n_total, n_total - n_assigned)


def _compatible(a: PlanarPatch, b: PlanarPatch, cos_tol: float, dist_tol: float) -> bool:
    if abs(float(a.normal @ b.normal)) < cos_tol:
        return False
    gap = b.centroid - a.centroid
    return abs(float(a.normal @ gap)) <= dist_tol and abs(float(b.normal @ gap)) <= dist_tol


def merge_patches(
    patches: List[PlanarPatch],
    normal_tol_deg: float = 10.0,
    dist_tol_m: float = 0.1,
) -> List[PlanarPatch]:
    """Union-find over cell-adjacent coplanar patches, refitting each group."""
    n = len(patches)
    if n == 0:
        return []
    cos_tol = float(np.cos(np.radians(normal_tol_deg)))
    lo = np.array([p.cell_lo for p in patches])
    hi = np.array([p.cell_hi for p in patches])

    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    eps = 1e-9
    for i in range(n):
        touch = np.all((lo[i + 1 :] <= hi[i] + eps) & (lo[i] <= hi[i + 1 :] + eps), axis=1)
        for j in np.nonzero(touch)[0] + i + 1:
            if find(i) != find(j) and _compatible(patches[i], patches[j], cos_tol, dist_tol_m):
                parent[find(j)] = find(i)

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    merged: List[PlanarPatch] = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(patches[members[0]])
            continue
        pooled = np.vstack([patches[i].points for i in members])
        centroid, normal, eig = _fit_plane(pooled)
        merged.append(
            PlanarPatch(
                points=pooled,
                centroid=centroid,
                normal=normal,
                eigenvalues=eig,
                cell_lo=np.min([patches[i].cell_lo for i in members], axis=0),
                cell_hi=np.max([patches[i].cell_hi for i in members], axis=0),
                kind="",
            )
        )
    merged.sort(key=lambda p: tuple(np.round(p.centroid, 9)))
    return merged


def classify_patches(
    patches: List[PlanarPatch], gravity: np.ndarray, angle_tol_deg: float = 15.0
) -> Tuple[List[PlanarPatch], List[PlanarPatch], List[PlanarPatch]]:
    """Split patches into (walls, ground, other) by angle to gravity.

    Ground normals are parallel to gravity within the tolerance, wall
    normals perpendicular to it. Sets each patch's `kind` in place.
    """
    g = np.asarray(gravity, dtype=np.float64)
    g = g / np.linalg.norm(g)
    cos_par = float(np.cos(np.radians(angle_tol_deg)))
    sin_perp = float(np.sin(np.radians(angle_tol_deg)))
    walls, ground, other = [], [], []
    for p in patches:
        c = abs(float(p.normal @ g))
        if c >= cos_par:
            p.kind = "ground"
            ground.append(p)
        elif c <= sin_perp:
            p.kind = "wall"
            walls.append(p)
        else:
            p.kind = "other"
            other.append(p)
    return walls, ground, other
