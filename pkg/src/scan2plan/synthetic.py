"""Seeded synthetic floorplans and posed LiDAR-like submaps.

The generator builds axis-aligned floorplans (rooms 3-10 m on a side,
optional central corridor, 1 m door gaps) and samples wall/ground/clutter
points so that the ground-truth pose maps the submap exactly onto the
model. Deviations mirror real as-built mismatch: dropped walls
(unconstructed), clutter planes (extra construction) and Gaussian noise.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import EmptyScene
from .geometry import LineSegment2, Se2Pose
from .ingest import Submap, WallModel

WALL_HEIGHT_M = 2.5
SURFACE_DENSITY_PT_M2 = 100.0
DOOR_WIDTH_M = 1.0
# ground is never sampled this close to a wall: wall-base returns are
# dominated by the wall itself, and it keeps ground clear of dilated
# wall bands during verification even diagonally across corners, where
# the Chebyshev dilation reach exceeds the Euclidean one by sqrt(2)
GROUND_CLEARANCE_M = 1.75

__all__ = [
    "FloorLayout",
    "SyntheticScene",
    "generate_layout",
    "generate_floorplan",
    "synthesize_submap",
    "random_interior_pose",
]


@dataclass
class FloorLayout:
    """A generated floorplan plus the room/corridor rectangles behind it."""

    wall_model: WallModel
    rooms: List[Tuple[float, float, float, float]]  # (x0, y0, x1, y1)
    corridor: Optional[Tuple[float, float, float, float]]


@dataclass
class SyntheticScene:
    """A submap, the wall model it came from, and the pose linking them."""

    wall_model: WallModel
    gt_pose: Se2Pose
    submap: Submap
    deviation_log: Dict = field(default_factory=dict)


def _room_widths(rng, n: int, total: float) -> np.ndarray:
    """n widths in [3, 10] summing to `total` (total must allow it)."""
    widths = 3.0 + rng.dirichlet(np.ones(n)) * (total - 3.0 * n)
    for _ in range(16):
        over = widths > 10.0
        if not np.any(over):
            break
        excess = np.sum(widths[over] - 10.0)
        widths[over] = 10.0
        under = ~over
        widths[under] += excess * rng.dirichlet(np.ones(int(np.sum(under))))
    return widths


def _split_at_junctions(walls: List[Tuple[np.ndarray, np.ndarray]]) -> List[LineSegment2]:
    """Split every wall at other walls' endpoints lying on its interior."""
    endpoints = np.array([p for w in walls for p in w])
    out = []
    for p0, p1 in walls:
        d = p1 - p0
        length = float(np.linalg.norm(d))
        u = d / length
        rel = endpoints - p0
        t = rel @ u
        off = np.abs(rel @ np.array([-u[1], u[0]]))
        cuts = t[(off < 1e-9) & (t > 1e-9) & (t < length - 1e-9)]
        ts = np.concatenate([[0.0], np.unique(np.round(cuts, 9)), [length]])
        for a, b in zip(ts[:-1], ts[1:]):
            if b - a > 1e-9:
                out.append(LineSegment2(p0 + a * u, p0 + b * u))
    return out


def _wall_with_doors(x0: float, x1: float, y: float, doors: List[float], vertical=False):
    """Axis-aligned wall from x0..x1 at offset y, with 1 m gaps at `doors`."""
    pieces = []
    cursor = x0
    for c in sorted(doors):
        lo, hi = c - DOOR_WIDTH_M / 2, c + DOOR_WIDTH_M / 2
        if lo - cursor > 1e-9:
            pieces.append((cursor, lo))
        cursor = hi
    if x1 - cursor > 1e-9:
        pieces.append((cursor, x1))
    segs = []
    for a, b in pieces:
        if vertical:
            segs.append((np.array([y, a]), np.array([y, b])))
        else:
            segs.append((np.array([a, y]), np.array([b, y])))
    return segs


def generate_layout(seed: int, n_rooms: int, corridor: bool, extent_m: float) -> FloorLayout:
    """Deterministic floorplan; same seed and arguments give the same model."""
    if n_rooms < 1:
        raise ValueError("n_rooms must be >= 1")
    rng = np.random.default_rng(seed)
    raw: List[Tuple[np.ndarray, np.ndarray]] = []
    rooms: List[Tuple[float, float, float, float]] = []
    corridor_rect = None

    if corridor and n_rooms >= 2:
        n_top = (n_rooms + 1) // 2
        n_bot = n_rooms - n_top
        depth_bot = rng.uniform(4.0, 8.0)
        depth_top = rng.uniform(4.0, 8.0)
        hall = rng.uniform(2.2, 3.0)
        width = rng.uniform(4.5, 7.5) * n_top
        width = min(width, 9.8 * n_bot if n_bot else width, max(extent_m, 3.2 * n_top))
        width = max(width, 3.2 * n_top)

        y_c0 = depth_bot
        y_c1 = depth_bot + hall
        height = y_c1 + depth_top
        corridor_rect = (0.0, y_c0, width, y_c1)

        # outer shell
        raw += [
            (np.array([0.0, 0.0]), np.array([width, 0.0])),
            (np.array([width, 0.0]), np.array([width, height])),
            (np.array([width, height]), np.array([0.0, height])),
            (np.array([0.0, height]), np.array([0.0, 0.0])),
        ]

        for strip, (count, y0, y1, door_y) in enumerate(
            [(n_bot, 0.0, y_c0, y_c0), (n_top, y_c1, height, y_c1)]
        ):
            if count == 0:
                raw += [(np.array([0.0, door_y]), np.array([width, door_y]))]
                continue
            widths = _room_widths(rng, count, width)
            cuts = np.concatenate([[0.0], np.cumsum(widths)])
            doors = []
            for i in range(count):
                x0, x1 = cuts[i], cuts[i + 1]
                rooms.append((x0, y0, x1, y1))
                doors.append(rng.uniform(x0 + 0.8, x1 - 0.8))
                if 0 < i:
                    raw.append((np.array([x0, y0]), np.array([x0, y1])))
            for seg in _wall_with_doors(0.0, width, door_y, doors):
                raw.append(seg)
    else:
        depth = rng.uniform(4.0, 8.0)
        width = rng.uniform(4.5, 7.5) * n_rooms
        width = min(width, max(extent_m, 3.2 * n_rooms))
        width = max(width, 3.2 * n_rooms)
        widths = _room_widths(rng, n_rooms, width)
        cuts = np.concatenate([[0.0], np.cumsum(widths)])
        raw += [
            (np.array([0.0, 0.0]), np.array([width, 0.0])),
            (np.array([width, 0.0]), np.array([width, depth])),
            (np.array([width, depth]), np.array([0.0, depth])),
            (np.array([0.0, depth]), np.array([0.0, 0.0])),
        ]
        for i in range(n_rooms):
            rooms.append((cuts[i], 0.0, cuts[i + 1], depth))
            if i > 0:
                door = rng.uniform(1.0, depth - 1.0)
                for seg in _wall_with_doors(0.0, depth, cuts[i], [door], vertical=True):
                    raw.append(seg)

    walls = _split_at_junctions(raw)
    model = WallModel(str(seed), walls)
    return FloorLayout(model, rooms, corridor_rect)


def generate_floorplan(seed: int, n_rooms: int, corridor: bool, extent_m: float) -> WallModel:
    return generate_layout(seed, n_rooms, corridor, extent_m).wall_model


def _clip_to_disc(seg: LineSegment2, center: np.ndarray, radius: float):
    """Sub-interval [t0, t1] of the segment inside the disc, or None."""
    d = seg.p1 - seg.p0
    f = seg.p0 - center
    a = float(d @ d)
    b = 2.0 * float(f @ d)
    c = float(f @ f) - radius * radius
    disc = b * b - 4 * a * c
    if disc <= 0:
        return None
    sq = np.sqrt(disc)
    t0 = max(0.0, (-b - sq) / (2 * a))
    t1 = min(1.0, (-b + sq) / (2 * a))
    if t1 - t0 <= 1e-9:
        return None
    return t0, t1


def _sample_wall(rng, seg: LineSegment2, t0: float, t1: float) -> np.ndarray:
    length = seg.length * (t1 - t0)
    n = max(1, int(round(length * WALL_HEIGHT_M * SURFACE_DENSITY_PT_M2)))
    t = rng.uniform(t0, t1, size=n)
    z = rng.uniform(0.0, WALL_HEIGHT_M, size=n)
    xy = seg.p0 + t[:, None] * (seg.p1 - seg.p0)
    return np.column_stack([xy, z])


def _segment_distances(points_xy: np.ndarray, walls: List[LineSegment2]) -> np.ndarray:
    """Min distance from each 2D point to any wall segment."""
    best = np.full(points_xy.shape[0], np.inf)
    for w in walls:
        d = w.p1 - w.p0
        ll = float(d @ d)
        t = np.clip((points_xy - w.p0) @ d / ll, 0.0, 1.0)
        proj = w.p0 + t[:, None] * d
        best = np.minimum(best, np.linalg.norm(points_xy - proj, axis=1))
    return best


def synthesize_submap(
    model: WallModel,
    pose: Se2Pose,
    radius_m: float,
    noise_sigma_m: float = 0.0,
    drop_wall_frac: float = 0.0,
    clutter_frac: float = 0.0,
    seed: int = 0,
) -> SyntheticScene:
    """Sample a posed synthetic submap from a wall model.

    The sensor sits at the submap-frame origin; `pose` maps submap
    coordinates onto the model, so the sensor's model-frame position is
    pose(0, 0). Visibility is radius-only. Raises EmptyScene when no wall
    lies within the radius.
    """
    if radius_m <= 0.0:
        raise ValueError("radius_m must be positive")
    rng = np.random.default_rng(seed)
    sensor = pose.apply(np.zeros(2))

    visible = []
    for i, w in enumerate(model.walls):
        clip = _clip_to_disc(w, sensor, radius_m)
        if clip is not None:
            visible.append((i, w, clip))
    if not visible:
        raise EmptyScene("no wall within radius of the sensor")

    n_drop = int(round(drop_wall_frac * len(visible)))
    drop_idx = set(rng.choice(len(visible), size=n_drop, replace=False).tolist()) if n_drop else set()

    wall_pts = []
    dropped = []
    for j, (i, w, (t0, t1)) in enumerate(visible):
        if j in drop_idx:
            dropped.append(i)
            continue
        wall_pts.append(_sample_wall(rng, w, t0, t1))
    wall_points = np.vstack(wall_pts) if wall_pts else np.zeros((0, 3))

    # clutter: small vertical panels absent from the model
    clutter_segs = []
    clutter_pts = []
    target = int(round(clutter_frac * wall_points.shape[0]))
    while target > 0 and sum(p.shape[0] for p in clutter_pts) < target:
        span = rng.uniform(1.0, 2.5)
        ang = rng.uniform(0.0, np.pi)
        r = rng.uniform(0.0, radius_m - span)
        theta = rng.uniform(0.0, 2 * np.pi)
        mid = sensor + r * np.array([np.cos(theta), np.sin(theta)])
        half = 0.5 * span * np.array([np.cos(ang), np.sin(ang)])
        seg = LineSegment2(mid - half, mid + half)
        clutter_segs.append(seg)
        clutter_pts.append(_sample_wall(rng, seg, 0.0, 1.0))
    if clutter_pts:
        extra = np.vstack(clutter_pts)[:target]
        wall_like = np.vstack([wall_points, extra])
    else:
        wall_like = wall_points

    # ground disc, kept clear of wall bases
    area = np.pi * radius_m**2
    n_ground = int(round(area * SURFACE_DENSITY_PT_M2))
    rr = radius_m * np.sqrt(rng.uniform(0.0, 1.0, size=n_ground))
    th = rng.uniform(0.0, 2 * np.pi, size=n_ground)
    gxy = sensor + np.column_stack([rr * np.cos(th), rr * np.sin(th)])
    keep = _segment_distances(gxy, model.walls) >= GROUND_CLEARANCE_M
    for seg in clutter_segs:
        keep &= _segment_distances(gxy, [seg]) >= GROUND_CLEARANCE_M
    ground = np.column_stack([gxy[keep], np.zeros(int(np.sum(keep)))])

    points_model = np.vstack([wall_like, ground])
    if noise_sigma_m > 0.0:
        points_model = points_model + rng.normal(scale=noise_sigma_m, size=points_model.shape)

    inv = pose.inverse()
    xy = inv.apply(points_model[:, :2])
    points = np.column_stack([xy, points_model[:, 2]])

    log = {
        "radius_m": radius_m,
        "noise_sigma_m": noise_sigma_m,
        "dropped_walls": dropped,
        "clutter_segments": [(s.p0.tolist(), s.p1.tolist()) for s in clutter_segs],
        "n_wall_points": int(wall_like.shape[0]),
        "n_ground_points": int(ground.shape[0]),
        "wall_free": wall_points.shape[0] == 0,
    }
    submap = Submap(points, np.array([0.0, 0.0, -1.0]))
    return SyntheticScene(model, pose, submap, log)


def random_interior_pose(layout: FloorLayout, rng, clearance: float = 0.8) -> Se2Pose:
    """A pose whose sensor position is in free interior space of the layout."""
    rects = list(layout.rooms)
    if layout.corridor is not None:
        rects.append(layout.corridor)
    walls = layout.wall_model.walls
    for _ in range(1000):
        x0, y0, x1, y1 = rects[int(rng.integers(len(rects)))]
        p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        if _segment_distances(p[None, :], walls)[0] >= clearance:
            yaw = rng.uniform(-np.pi, np.pi)
            return Se2Pose(p[0], p[1], yaw)
    raise EmptyScene("could not place a sensor in free space")
