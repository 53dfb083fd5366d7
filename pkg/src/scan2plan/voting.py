"""Sparse pose voting over an (x, y, yaw) grid with hierarchical extraction.

Each surviving triplet correspondence casts one vote: the closed-form
alignment of its three vertex pairs, gated by the fit residual to reject
mirrored and false congruences. Candidates come out of a three-step
reduction: top cells by own count, re-ranking by 3x3x3 neighborhood sums
(yaw wraps), then region growing over the kept cells with vote-weighted
pose averaging. All ties break lexicographically on the cell index.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .descriptors import TripletCorrespondence
from .errors import EmptyGrid
from .geometry import Se2Pose, normalize_angle, solve_se2_batch

_OFF = 1 << 20  # xy cell offset so packed indices stay non-negative

__all__ = [
    "VoteGrid",
    "Candidate",
    "cast_votes",
    "vanilla_vote",
    "hierarchical_vote",
    "dump_grid_csv",
]


@dataclass
class VoteGrid:
    """Occupied vote cells only, sorted by packed (ix, iy, iyaw) index."""

    r_xy: float
    r_yaw_deg: float
    packed: np.ndarray  # (N,) int64, sorted ascending
    counts: np.ndarray  # (N,) int64
    sum_x: np.ndarray  # (N,) running sums of member poses
    sum_y: np.ndarray
    sum_cos: np.ndarray
    sum_sin: np.ndarray
    n_rejected: int = 0

    @property
    def n_yaw_bins(self) -> int:
        return int(np.ceil(360.0 / self.r_yaw_deg - 1e-9))

    @property
    def total_votes(self) -> int:
        return int(self.counts.sum())

    def unpack(self, packed: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        iyaw = packed & 0x1FF
        iy = ((packed >> 9) & 0x1FFFFF) - _OFF
        ix = (packed >> 30) - _OFF
        return ix, iy, iyaw

    def pack(self, ix: np.ndarray, iy: np.ndarray, iyaw: np.ndarray) -> np.ndarray:
        return ((ix + _OFF) << 30) | ((iy + _OFF) << 9) | iyaw


@dataclass
class Candidate:
    """A pose hypothesis from one vote cluster."""

    pose: Se2Pose
    votes: int
    merged_score: int
    n_cells: int


def _cell_indices(grid_r_xy: float, r_yaw_deg: float, x, y, yaw):
    ix = np.floor(x / grid_r_xy).astype(np.int64)
    iy = np.floor(y / grid_r_xy).astype(np.int64)
    n_yaw = int(np.ceil(360.0 / r_yaw_deg - 1e-9))
    r_yaw = np.radians(r_yaw_deg)
    iyaw = np.floor((normalize_angle(yaw) + np.pi) / r_yaw).astype(np.int64)
    iyaw = np.minimum(iyaw, n_yaw - 1)
    return ix, iy, iyaw


def cast_votes(
    correspondences: Sequence[TripletCorrespondence],
    r_xy: float = 0.15,
    r_yaw_deg: float = 1.0,
    residual_max_m: float = 0.3,
) -> VoteGrid:
    """Solve every correspondence and bin the accepted poses."""
    m = len(correspondences)
    if m == 0:
        return VoteGrid(r_xy, r_yaw_deg, *[np.zeros(0, dtype=np.int64)] * 2,
                        *[np.zeros(0)] * 4, n_rejected=0)
    src = np.stack([c.src_vertices for c in correspondences])
    dst = np.stack([c.dst_vertices for c in correspondences])
    x, y, yaw, rms = solve_se2_batch(src, dst)
    ok = rms <= residual_max_m
    n_rejected = int(m - np.sum(ok))
    x, y, yaw = x[ok], y[ok], yaw[ok]

    ix, iy, iyaw = _cell_indices(r_xy, r_yaw_deg, x, y, yaw)
    packed = ((ix + _OFF) << 30) | ((iy + _OFF) << 9) | iyaw
    uniq, inv, counts = np.unique(packed, return_inverse=True, return_counts=True)
    n = uniq.shape[0]
    return VoteGrid(
        r_xy,
        r_yaw_deg,
        uniq,
        counts.astype(np.int64),
        np.bincount(inv, weights=x, minlength=n),
        np.bincount(inv, weights=y, minlength=n),
        np.bincount(inv, weights=np.cos(yaw), minlength=n),
        np.bincount(inv, weights=np.sin(yaw), minlength=n),
        n_rejected=n_rejected,
    )


def _cell_pose(grid: VoteGrid, idx: np.ndarray) -> Se2Pose:
    c = float(np.sum(grid.counts[idx]))
    return Se2Pose(
        float(np.sum(grid.sum_x[idx])) / c,
        float(np.sum(grid.sum_y[idx])) / c,
        float(np.arctan2(np.sum(grid.sum_sin[idx]), np.sum(grid.sum_cos[idx]))),
    )


def vanilla_vote(grid: VoteGrid) -> Tuple[Se2Pose, int]:
    """Single best cell by raw count; ties go to the smallest cell index."""
    if grid.packed.shape[0] == 0:
        raise EmptyGrid("no votes were cast")
    best = int(np.lexsort((grid.packed, -grid.counts))[0])
    return _cell_pose(grid, np.array([best])), int(grid.counts[best])


def _neighbor_table(grid: VoteGrid) -> np.ndarray:
    """(N, 27) indices into the cell arrays, -1 where absent; column 13 is self."""
    ix, iy, iyaw = grid.unpack(grid.packed)
    n_yaw = grid.n_yaw_bins
    n = grid.packed.shape[0]
    table = np.full((n, 27), -1, dtype=np.int64)
    col = 0
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dyaw in (-1, 0, 1):
                nb = grid.pack(ix + dx, iy + dy, (iyaw + dyaw) % n_yaw)
                pos = np.searchsorted(grid.packed, nb)
                pos = np.clip(pos, 0, n - 1)
                hit = grid.packed[pos] == nb
                table[hit, col] = pos[hit]
                col += 1
    return table


def hierarchical_vote(
    grid: VoteGrid,
    l_cells: Optional[int] = 10000,
    k_cells: Optional[int] = 5000,
    j_candidates: Optional[int] = 1500,
) -> List[Candidate]:
    """Three-step candidate extraction; None limits mean keep everything."""
    n = grid.packed.shape[0]
    if n == 0:
        raise EmptyGrid("no votes were cast")

    table = _neighbor_table(grid)

    # step 1: top L cells by own count
    order1 = np.lexsort((grid.packed, -grid.counts))
    sel1 = order1[: l_cells if l_cells is not None else n]

    # step 2: re-rank those by 3x3x3 neighborhood sums over the full grid
    padded = np.concatenate([grid.counts, [0]])
    merged_all = padded[table].sum(axis=1)
    order2 = np.lexsort((grid.packed[sel1], -merged_all[sel1]))
    sel2 = sel1[order2[: k_cells if k_cells is not None else sel1.shape[0]]]
    sel2_sorted = np.sort(sel2)

    # step 3: region growing over kept cells (26-connected, yaw wraps)
    in_k = np.zeros(n + 1, dtype=bool)
    in_k[sel2_sorted] = True
    nb = table[sel2_sorted]
    nb_in = np.where((nb >= 0) & in_k[np.where(nb >= 0, nb, n)], nb, -1)
    local = np.searchsorted(sel2_sorted, np.where(nb_in >= 0, nb_in, 0))
    rows = np.repeat(np.arange(sel2_sorted.shape[0]), 27)
    cols = local.ravel()
    mask = (nb_in.ravel() >= 0)
    graph = coo_matrix(
        (np.ones(int(mask.sum()), dtype=np.int8), (rows[mask], cols[mask])),
        shape=(sel2_sorted.shape[0], sel2_sorted.shape[0]),
    )
    n_comp, labels = connected_components(graph, directed=False)

    cands: List[Candidate] = []
    for comp in range(n_comp):
        member_local = np.nonzero(labels == comp)[0]
        members = sel2_sorted[member_local]
        rank_score = int(merged_all[members].max())
        cands.append(
            Candidate(
                pose=_cell_pose(grid, members),
                votes=int(grid.counts[members].sum()),
                merged_score=rank_score,
                n_cells=int(members.shape[0]),
            )
        )
    anchor = [int(sel2_sorted[labels == comp].min()) for comp in range(n_comp)]
    rank = sorted(
        range(n_comp), key=lambda i: (-cands[i].merged_score, grid.packed[anchor[i]])
    )
    keep = rank[: j_candidates if j_candidates is not None else n_comp]
    return [cands[i] for i in keep]


def dump_grid_csv(grid: VoteGrid, path) -> None:
    """One row per occupied cell: indices, count and the mean member pose."""
    ix, iy, iyaw = grid.unpack(grid.packed)
    with open(path, "w") as fh:
        fh.write("ix,iy,iyaw,count,mean_x,mean_y,mean_yaw_deg\n")
        for i in range(grid.packed.shape[0]):
            c = grid.counts[i]
            yaw = np.degrees(np.arctan2(grid.sum_sin[i], grid.sum_cos[i]))
            fh.write(
                "%d,%d,%d,%d,%.9f,%.9f,%.9f\n"
                % (ix[i], iy[i], iyaw[i], c, grid.sum_x[i] / c, grid.sum_y[i] / c, yaw)
            )
