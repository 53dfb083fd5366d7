"""Pose voting tests."""

import collections
import math

import numpy as np
import pytest

from scan2plan.descriptors import TripletCorrespondence
from scan2plan.errors import EmptyGrid
from scan2plan.geometry import Se2Pose, normalize_angle
from scan2plan.voting import (
    Candidate,
    cast_votes,
    dump_grid_csv,
    hierarchical_vote,
    vanilla_vote,
)

TRIANGLE = np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 3.0]])


def _corr(pose, src=TRIANGLE, jitter=None, rng=None):
    dst = pose.apply(src)
    if jitter is not None:
        dst = dst + rng.uniform(-jitter, jitter, size=dst.shape)
    return TripletCorrespondence(src.copy(), dst)


def _corrs_at(pose, n, jitter=0.0, rng=None):
    return [_corr(pose, jitter=jitter if jitter else None, rng=rng) for _ in range(n)]


# --- casting ---


def test_single_vote_recovers_pose():
    pose = Se2Pose(3.2, -1.1, 0.6)
    grid = cast_votes([_corr(pose)])
    assert grid.total_votes == 1 and grid.n_rejected == 0
    got, votes = vanilla_vote(grid)
    assert votes == 1
    assert abs(got.x - pose.x) < 1e-9
    assert abs(got.y - pose.y) < 1e-9
    assert abs(normalize_angle(got.yaw - pose.yaw)) < 1e-9


def test_mirrored_correspondence_is_rejected():
    mirrored = TRIANGLE * np.array([1.0, -1.0])
    grid = cast_votes([TripletCorrespondence(TRIANGLE, mirrored)])
    assert grid.total_votes == 0 and grid.n_rejected == 1
    with pytest.raises(EmptyGrid):
        vanilla_vote(grid)


def test_vote_conservation():
    rng = np.random.default_rng(0)
    pose = Se2Pose(1.0, 2.0, -0.4)
    good = _corrs_at(pose, 40, jitter=0.01, rng=rng)
    mirrored = TRIANGLE * np.array([-1.0, 1.0])
    bad = [TripletCorrespondence(TRIANGLE, mirrored) for _ in range(7)]
    grid = cast_votes(good + bad)
    assert grid.total_votes == 40
    assert grid.n_rejected == 7
    assert grid.counts.sum() == 40


def test_empty_correspondences():
    grid = cast_votes([])
    assert grid.total_votes == 0
    with pytest.raises(EmptyGrid):
        hierarchical_vote(grid)


# --- extraction ---


def test_inlier_cluster_beats_outliers():
    rng = np.random.default_rng(1)
    truth = Se2Pose(5.0, 7.0, 1.2)
    corrs = _corrs_at(truth, 20, jitter=0.015, rng=rng)  # < r_xy / 4 of pose spread
    for _ in range(80):
        p = Se2Pose(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-np.pi, np.pi))
        corrs.append(_corr(p))
    grid = cast_votes(corrs)
    cands = hierarchical_vote(grid)
    best = cands[0]
    assert best.votes >= 20
    assert np.hypot(best.pose.x - truth.x, best.pose.y - truth.y) < 0.15
    assert abs(normalize_angle(best.pose.yaw - truth.yaw)) < np.radians(1.0)


def test_two_peaks_ordered_by_merged_score():
    rng = np.random.default_rng(2)
    big = Se2Pose(0.0, 0.0, 0.0)
    small = Se2Pose(20.0, 20.0, 2.0)
    corrs = _corrs_at(big, 30, jitter=0.01, rng=rng) + _corrs_at(small, 18, jitter=0.01, rng=rng)
    cands = hierarchical_vote(cast_votes(corrs))
    assert len(cands) == 2
    assert cands[0].votes == 30 and cands[1].votes == 18
    assert np.hypot(cands[0].pose.x - big.x, cands[0].pose.y - big.y) < 0.15
    assert np.hypot(cands[1].pose.x - small.x, cands[1].pose.y - small.y) < 0.15


def test_candidate_pose_is_vote_weighted_mean():
    # two poses one cell apart merge into one cluster; mean is weighted
    a = Se2Pose(0.030, 0.0, 0.0)
    b = Se2Pose(0.180, 0.0, 0.0)  # adjacent 0.15 m cell
    corrs = [_corr(a)] * 3 + [_corr(b)]
    cands = hierarchical_vote(cast_votes(corrs))
    assert len(cands) == 1
    expect_x = (3 * a.x + 1 * b.x) / 4
    assert cands[0].pose.x == pytest.approx(expect_x, abs=1e-9)
    assert cands[0].votes == 4 and cands[0].n_cells == 2


def test_yaw_wraps_across_pi():
    # votes straddling the +/-pi seam must land in one cluster
    a = Se2Pose(0.0, 0.0, np.pi - 0.002)
    b = Se2Pose(0.0, 0.0, -np.pi + 0.002)
    cands = hierarchical_vote(cast_votes([_corr(a), _corr(b)]))
    assert len(cands) == 1
    assert cands[0].votes == 2
    assert abs(abs(normalize_angle(cands[0].pose.yaw)) - np.pi) < 0.01


# --- oracle comparison ---


def _oracle(poses, r_xy=0.15, r_yaw_deg=1.0):
    n_yaw = 360
    r_yaw = math.radians(r_yaw_deg)
    cells = collections.defaultdict(lambda: [0, 0.0, 0.0, 0.0, 0.0])
    for x, y, yaw in poses:
        yaw = normalize_angle(yaw)
        key = (
            math.floor(x / r_xy),
            math.floor(y / r_xy),
            min(math.floor((yaw + math.pi) / r_yaw), n_yaw - 1),
        )
        c = cells[key]
        c[0] += 1
        c[1] += x
        c[2] += y
        c[3] += math.cos(yaw)
        c[4] += math.sin(yaw)

    def neighbors(key):
        ix, iy, iyaw = key
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dyaw in (-1, 0, 1):
                    yield (ix + dx, iy + dy, (iyaw + dyaw) % n_yaw)

    merged = {k: sum(cells[n][0] for n in neighbors(k) if n in cells) for k in cells}

    unvisited = set(cells)
    clusters = []
    while unvisited:
        seed = unvisited.pop()
        comp = {seed}
        stack = [seed]
        while stack:
            cur = stack.pop()
            for n in neighbors(cur):
                if n in unvisited:
                    unvisited.remove(n)
                    comp.add(n)
                    stack.append(n)
        clusters.append(comp)

    out = []
    for comp in clusters:
        votes = sum(cells[k][0] for k in comp)
        sx = sum(cells[k][1] for k in comp)
        sy = sum(cells[k][2] for k in comp)
        sc = sum(cells[k][3] for k in comp)
        ss = sum(cells[k][4] for k in comp)
        out.append(
            {
                "votes": votes,
                "n_cells": len(comp),
                "merged": max(merged[k] for k in comp),
                "anchor": min(comp),
                "pose": (sx / votes, sy / votes, math.atan2(ss, sc)),
            }
        )
    out.sort(key=lambda d: (-d["merged"], d["anchor"]))
    return out


def test_unlimited_extraction_matches_oracle():
    rng = np.random.default_rng(3)
    poses = []
    # a few dense clusters plus scattered singles, some repeating cells
    for cx, cy, cyaw in [(0, 0, 0.0), (5, 5, 1.0), (-8, 3, -3.1)]:
        for _ in range(rng.integers(5, 15)):
            poses.append(
                (
                    cx + rng.uniform(-0.2, 0.2),
                    cy + rng.uniform(-0.2, 0.2),
                    cyaw + rng.uniform(-0.03, 0.03),
                )
            )
    for _ in range(60):
        poses.append(
            (rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-np.pi, np.pi))
        )

    corrs = []
    for x, y, yaw in poses:
        corrs.append(_corr(Se2Pose(x, y, yaw)))
    grid = cast_votes(corrs, residual_max_m=1e9)
    got = hierarchical_vote(grid, l_cells=None, k_cells=None, j_candidates=None)
    want = _oracle(poses)
    assert len(got) == len(want)
    for g, w in zip(got, want):
        assert g.votes == w["votes"]
        assert g.n_cells == w["n_cells"]
        assert g.merged_score == w["merged"]
        wx, wy, wyaw = w["pose"]
        assert abs(g.pose.x - wx) < 1e-9
        assert abs(g.pose.y - wy) < 1e-9
        assert abs(normalize_angle(g.pose.yaw - wyaw)) < 1e-9


def test_limits_trim_but_keep_strongest():
    rng = np.random.default_rng(4)
    truth = Se2Pose(2.0, 2.0, 0.5)
    corrs = _corrs_at(truth, 25, jitter=0.01, rng=rng)
    for _ in range(200):
        p = Se2Pose(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-np.pi, np.pi))
        corrs.append(_corr(p))
    grid = cast_votes(corrs)
    cands = hierarchical_vote(grid, l_cells=50, k_cells=25, j_candidates=5)
    assert len(cands) <= 5
    assert cands[0].votes >= 25
    assert np.hypot(cands[0].pose.x - truth.x, cands[0].pose.y - truth.y) < 0.15


# --- dump ---


def test_grid_csv_dump(tmp_path):
    rng = np.random.default_rng(5)
    corrs = _corrs_at(Se2Pose(1.0, 1.0, 0.2), 9, jitter=0.02, rng=rng)
    grid = cast_votes(corrs)
    path = tmp_path / "grid.csv"
    dump_grid_csv(grid, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "ix,iy,iyaw,count,mean_x,mean_y,mean_yaw_deg"
    assert len(lines) - 1 == grid.packed.shape[0]
    total = sum(int(l.split(",")[3]) for l in lines[1:])
    assert total == 9
