"""Triangle descriptors over corner triplets and the hash-table database.

A triplet of corners is canonicalized so its side lengths satisfy
|AB| <= |BC| <= |AC|, described by the three sides plus the acute angles
between each side and the wall directions at its vertices, and quantized
into an integer key. Congruent triangles collide in the table; the pose
voting stage sorts out which correspondences are real.
"""

import struct
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateTriplet, ParseError, ResolutionMismatch, VersionMismatch
from .lines import Corner

DB_MAGIC = b"L2BD"
DB_VERSION = 1

DescriptorKey = Tuple[int, int, int, int, int, int]

__all__ = [
    "DescriptorKey",
    "TriangleDescriptor",
    "CornerTriplet",
    "TripletCorrespondence",
    "DescriptorDB",
    "make_descriptor",
    "build_triplets",
    "build_db",
    "query_correspondences",
    "serialize_db",
    "deserialize_db",
]


@dataclass(frozen=True)
class TriangleDescriptor:
    sides_m: Tuple[float, float, float]  # |AB|, |BC|, |AC|
    angles_deg: Tuple[float, float, float]  # AB at A, BC at B, AC at C
    key: DescriptorKey
    r_s: float
    r_a: float


@dataclass
class CornerTriplet:
    """Canonically ordered corner triplet with its descriptor."""

    vertices: np.ndarray  # (3, 2) A, B, C
    wall_dirs: np.ndarray  # (3, 2, 2) two unit wall directions per vertex
    descriptor: TriangleDescriptor


@dataclass
class TripletCorrespondence:
    src_vertices: np.ndarray  # (3, 2) query frame
    dst_vertices: np.ndarray  # (3, 2) model frame


@dataclass
class DescriptorDB:
    buckets: Dict[DescriptorKey, List[CornerTriplet]]
    r_s: float
    r_a: float

    @property
    def n_triplets(self) -> int:
        return sum(len(v) for v in self.buckets.values())


def _acute_angle_deg(side_dir: np.ndarray, wall_dirs: np.ndarray) -> float:
    """Smallest acute angle between a side and either wall direction."""
    dots = np.abs(wall_dirs @ side_dir)
    return float(np.degrees(np.arccos(np.clip(dots.max(), 0.0, 1.0))))


def _interior_angles_deg(p: np.ndarray) -> np.ndarray:
    out = np.empty(3)
    for i in range(3):
        u = p[(i + 1) % 3] - p[i]
        v = p[(i + 2) % 3] - p[i]
        c = float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
        out[i] = np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))
    return out


def _describe_order(p: np.ndarray, dirs: np.ndarray, r_s: float, r_a: float):
    """Descriptor of vertices already in (A, B, C) order."""
    ab = float(np.linalg.norm(p[1] - p[0]))
    bc = float(np.linalg.norm(p[2] - p[1]))
    ac = float(np.linalg.norm(p[2] - p[0]))
    alpha = _acute_angle_deg((p[1] - p[0]) / ab, dirs[0])
    beta = _acute_angle_deg((p[2] - p[1]) / bc, dirs[1])
    gamma = _acute_angle_deg((p[2] - p[0]) / ac, dirs[2])
    key = (
        int(np.floor(ab / r_s)),
        int(np.floor(bc / r_s)),
        int(np.floor(ac / r_s)),
        int(np.floor(alpha / r_a)),
        int(np.floor(beta / r_a)),
        int(np.floor(gamma / r_a)),
    )
    return TriangleDescriptor((ab, bc, ac), (alpha, beta, gamma), key, r_s, r_a)


def _describe_block(
    verts: np.ndarray, dirs: np.ndarray, r_s: float, r_a: float
) -> List[TriangleDescriptor]:
    """Batched _describe_order over (N, 3, 2) vertices, same results."""
    a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
    sides = np.stack(
        [np.linalg.norm(b - a, axis=1), np.linalg.norm(c - b, axis=1), np.linalg.norm(c - a, axis=1)],
        axis=1,
    )
    side_dirs = np.stack([b - a, c - b, c - a], axis=1) / sides[:, :, None]
    dots = np.abs(np.einsum("nvwj,nvj->nvw", dirs, side_dirs))
    angles = np.degrees(np.arccos(np.clip(dots.max(axis=2), 0.0, 1.0)))
    side_bins = np.floor(sides / r_s).astype(np.int64)
    ang_bins = np.floor(angles / r_a).astype(np.int64)
    return [
        TriangleDescriptor(
            tuple(sides[i]),
            tuple(angles[i]),
            tuple(int(x) for x in np.concatenate([side_bins[i], ang_bins[i]])),
            r_s,
            r_a,
        )
        for i in range(verts.shape[0])
    ]


def _check_triplet(p: np.ndarray, min_angle_deg: float) -> None:
    d01 = np.linalg.norm(p[1] - p[0])
    d12 = np.linalg.norm(p[2] - p[1])
    d02 = np.linalg.norm(p[2] - p[0])
    if min(d01, d12, d02) < 1e-9:
        raise DegenerateTriplet("coincident corners")
    if _interior_angles_deg(p).min() < min_angle_deg:
        raise DegenerateTriplet("triangle below minimum interior angle")


def _canonical_order(p: np.ndarray) -> List[int]:
    """Vertex order (A, B, C) with |AB| <= |BC| <= |AC|; ties broken by index."""
    best = None
    for perm in permutations(range(3)):
        q = p[list(perm)]
        ab = np.linalg.norm(q[1] - q[0])
        bc = np.linalg.norm(q[2] - q[1])
        ac = np.linalg.norm(q[2] - q[0])
        if ab <= bc + 1e-12 and bc <= ac + 1e-12:
            cand = (round(ab, 12), round(bc, 12), perm)
            if best is None or cand < best:
                best = cand
    return list(best[2])


def make_descriptor(
    positions: np.ndarray,
    wall_dirs: np.ndarray,
    r_s: float = 0.5,
    r_a: float = 3.0,
    min_angle_deg: float = 10.0,
) -> CornerTriplet:
    """Canonical descriptor for one corner triplet.

    Raises DegenerateTriplet for coincident corners or a minimum interior
    angle under min_angle_deg.
    """
    p = np.asarray(positions, dtype=np.float64).reshape(3, 2)
    d = np.asarray(wall_dirs, dtype=np.float64).reshape(3, 2, 2)
    _check_triplet(p, min_angle_deg)
    order = _canonical_order(p)
    p, d = p[order], d[order]
    return CornerTriplet(p, d, _describe_order(p, d, r_s, r_a))


def _consistent_orders(p: np.ndarray, r_s: float) -> List[Tuple[int, int, int]]:
    """All vertex orders whose quantized side bins are non-decreasing."""
    orders = []
    for perm in permutations(range(3)):
        q = p[list(perm)]
        b = (
            int(np.floor(np.linalg.norm(q[1] - q[0]) / r_s)),
            int(np.floor(np.linalg.norm(q[2] - q[1]) / r_s)),
            int(np.floor(np.linalg.norm(q[2] - q[0]) / r_s)),
        )
        if b[0] <= b[1] <= b[2]:
            orders.append(perm)
    return orders


def build_triplets(
    corners: Sequence[Corner],
    l_max: float = 30.0,
    r_s: float = 0.5,
    r_a: float = 3.0,
    min_angle_deg: float = 10.0,
) -> List[CornerTriplet]:
    """Canonical triplets over 3-cliques of the l_max neighborhood graph."""
    n = len(corners)
    if n < 3:
        return []
    pos = np.array([c.position for c in corners])
    dmat = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    near = dmat <= l_max
    out: List[CornerTriplet] = []
    for i, j, k in combinations(range(n), 3):
        if not (near[i, j] and near[j, k] and near[i, k]):
            continue
        try:
            out.append(
                make_descriptor(
                    pos[[i, j, k]],
                    np.array([corners[i].dirs, corners[j].dirs, corners[k].dirs]),
                    r_s,
                    r_a,
                    min_angle_deg,
                )
            )
        except DegenerateTriplet:
            continue
    return out


def build_db(
    corners: Sequence[Corner],
    l_max: float = 30.0,
    r_s: float = 0.5,
    r_a: float = 3.0,
    min_angle_deg: float = 10.0,
) -> DescriptorDB:
    """Hash table of model triplets.

    Triplets whose side bins tie are stored once per consistent vertex
    order, so a query canonicalized either way still finds a
    geometrically aligned entry.
    """
    n = len(corners)
    buckets: Dict[DescriptorKey, List[CornerTriplet]] = {}
    if n >= 3:
        pos = np.array([c.position for c in corners])
        dmat = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        near = dmat <= l_max
        for i, j, k in combinations(range(n), 3):
            if not (near[i, j] and near[j, k] and near[i, k]):
                continue
            p = pos[[i, j, k]]
            try:
                _check_triplet(p, min_angle_deg)
            except DegenerateTriplet:
                continue
            d = np.array([corners[i].dirs, corners[j].dirs, corners[k].dirs])
            for perm in _consistent_orders(p, r_s):
                q, qd = p[list(perm)], d[list(perm)]
                desc = _describe_order(q, qd, r_s, r_a)
                buckets.setdefault(desc.key, []).append(CornerTriplet(q, qd, desc))
    return DescriptorDB(buckets, r_s, r_a)


def query_correspondences(
    db: DescriptorDB, triplets: Sequence[CornerTriplet]
) -> List[TripletCorrespondence]:
    """Hash lookups of query triplets; cross product within each bucket."""
    out: List[TripletCorrespondence] = []
    for t in triplets:
        if t.descriptor.r_s != db.r_s or t.descriptor.r_a != db.r_a:
            raise ResolutionMismatch(
                "query triplet quantization does not match the database"
            )
        for entry in db.buckets.get(t.descriptor.key, ()):
            out.append(TripletCorrespondence(t.vertices, entry.vertices))
    return out


# --- serialization ---


def serialize_db(db: DescriptorDB, path) -> None:
    parts = [DB_MAGIC, struct.pack("<I", DB_VERSION), struct.pack("<dd", db.r_s, db.r_a)]
    parts.append(struct.pack("<I", len(db.buckets)))
    for key in sorted(db.buckets):
        entries = db.buckets[key]
        parts.append(struct.pack("<6i", *key))
        parts.append(struct.pack("<I", len(entries)))
        block = np.empty((len(entries), 18), dtype="<f8")
        for r, t in enumerate(entries):
            block[r, :6] = t.vertices.ravel()
            block[r, 6:] = t.wall_dirs.ravel()
        parts.append(block.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def deserialize_db(path) -> DescriptorDB:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != DB_MAGIC:
        raise VersionMismatch("not a descriptor database file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != DB_VERSION:
        raise VersionMismatch("unsupported database version %d" % version)
    try:
        r_s, r_a = struct.unpack_from("<dd", raw, 8)
        (n_keys,) = struct.unpack_from("<I", raw, 24)
        off = 28
        buckets: Dict[DescriptorKey, List[CornerTriplet]] = {}
        for _ in range(n_keys):
            key = struct.unpack_from("<6i", raw, off)
            (count,) = struct.unpack_from("<I", raw, off + 24)
            off += 28
            block = np.frombuffer(raw, dtype="<f8", count=count * 18, offset=off)
            off += count * 18 * 8
            block = block.reshape(count, 18).astype(np.float64)
            verts = block[:, :6].reshape(count, 3, 2)
            dirs = block[:, 6:].reshape(count, 3, 2, 2)
            descs = _describe_block(verts, dirs, r_s, r_a)
            buckets[key] = [
                CornerTriplet(verts[r], dirs[r], descs[r]) for r in range(count)
            ]
    except (struct.error, ValueError) as exc:
        raise ParseError("truncated descriptor database: %s" % exc) from exc
    if off != len(raw):
        raise ParseError("descriptor database has trailing or missing bytes")
    return DescriptorDB(buckets, r_s, r_a)
