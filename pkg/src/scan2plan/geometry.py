"""Planar rigid transforms and the closed-form 2D alignment primitive.

Points are plain float64 ndarrays: shape (2,) / (N, 2) in 2D and (3,) /
(N, 3) in 3D. Yaw angles are radians, always normalized to [-pi, pi).
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import DegenerateInput

__all__ = [
    "Se2Pose",
    "LineSegment2",
    "normalize_angle",
    "se2_apply",
    "solve_se2",
    "solve_se2_batch",
    "pose_errors",
    "registration_success",
]


def normalize_angle(angle):
    """Wrap an angle (scalar or array, radians) to [-pi, pi)."""
    return np.mod(angle + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class Se2Pose:
    """Rigid transform of the plane: rotation by `yaw` then translation.

    Immutable; composition and inverse satisfy the group axioms up to
    floating point. Yaw is re-wrapped to [-pi, pi) on construction.
    """

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", float(normalize_angle(self.yaw)))

    @staticmethod
    def identity() -> "Se2Pose":
        return Se2Pose(0.0, 0.0, 0.0)

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def rotation(self) -> np.ndarray:
        """The 2x2 rotation matrix."""
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        return np.array([[c, -s], [s, c]])

    def matrix(self) -> np.ndarray:
        """The 3x3 homogeneous matrix."""
        m = np.eye(3)
        m[:2, :2] = self.rotation()
        m[:2, 2] = (self.x, self.y)
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point (2,) or a batch (N, 2)."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation().T + self.translation

    def compose(self, other: "Se2Pose") -> "Se2Pose":
        """self o other: apply `other` first, then `self`."""
        t = self.apply(other.translation)
        return Se2Pose(t[0], t[1], self.yaw + other.yaw)

    def inverse(self) -> "Se2Pose":
        c, s = np.cos(self.yaw), np.sin(self.yaw)
        return Se2Pose(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.yaw)


@dataclass(frozen=True)
class LineSegment2:
    """2D segment with positive length; direction is the p0->p1 unit vector."""

    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float))
        if not (np.all(np.isfinite(self.p0)) and np.all(np.isfinite(self.p1))):
            raise DegenerateInput("segment endpoints must be finite")
        if self.length <= 0.0:
            raise DegenerateInput("segment has zero length")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    @property
    def direction(self) -> np.ndarray:
        d = self.p1 - self.p0
        return d / np.linalg.norm(d)

    def transformed(self, pose: Se2Pose) -> "LineSegment2":
        return LineSegment2(pose.apply(self.p0), pose.apply(self.p1))

    def point_distance(self, p: np.ndarray) -> float:
        """Distance from `p` to the segment (not the infinite line)."""
        d = self.p1 - self.p0
        t = np.clip(np.dot(np.asarray(p) - self.p0, d) / np.dot(d, d), 0.0, 1.0)
        return float(np.linalg.norm(self.p0 + t * d - np.asarray(p)))


def se2_apply(pose: Se2Pose, points: np.ndarray) -> np.ndarray:
    """R(yaw) @ p + t for one point or a batch."""
    return pose.apply(points)


def solve_se2(src: Sequence, dst: Sequence) -> Tuple[Se2Pose, float]:
    """Least-squares proper-rotation alignment of two matched 2D point sets.

    Demeans both sets, forms the 2x2 cross-covariance, takes its SVD and
    corrects the sign so det(R) = +1, then recovers the translation from
    the centroids. Returns the pose mapping src onto dst and the RMS of
    the remaining point errors. Reflected matches are NOT flipped into
    rotations; they simply come back with a large residual.

    Raises DegenerateInput when fewer than 2 points are given or all
    source points coincide within 1e-9 m.
    """
    s = np.asarray(src, dtype=float).reshape(-1, 2)
    d = np.asarray(dst, dtype=float).reshape(-1, 2)
    if s.shape[0] < 2 or s.shape != d.shape:
        raise DegenerateInput("need >= 2 matched point pairs")
    s_mean = s.mean(axis=0)
    d_mean = d.mean(axis=0)
    s_c = s - s_mean
    d_c = d - d_mean
    if np.max(np.linalg.norm(s_c, axis=1)) < 1e-9:
        raise DegenerateInput("all source points coincide")

    h = s_c.T @ d_c
    u, _, vt = np.linalg.svd(h)
    sign = np.sign(np.linalg.det(vt.T @ u.T))
    if sign == 0.0:
        sign = 1.0
    r = vt.T @ np.diag([1.0, sign]) @ u.T
    t = d_mean - r @ s_mean
    yaw = float(np.arctan2(r[1, 0], r[0, 0]))
    pose = Se2Pose(t[0], t[1], yaw)
    rms = float(np.sqrt(np.mean(np.sum((s @ r.T + t - d) ** 2, axis=1))))
    return pose, rms


def solve_se2_batch(src: np.ndarray, dst: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized solve_se2 over M correspondences of shape (M, K, 2).

    Returns arrays (x, y, yaw, rms) of length M. Degenerate rows (all
    source points coincident) are not rejected here; they produce some
    finite pose and their residual does the gating downstream.
    """
    s = np.asarray(src, dtype=float)
    d = np.asarray(dst, dtype=float)
    s_mean = s.mean(axis=1, keepdims=True)
    d_mean = d.mean(axis=1, keepdims=True)
    s_c = s - s_mean
    d_c = d - d_mean

    h = np.einsum("mki,mkj->mij", s_c, d_c)
    u, _, vt = np.linalg.svd(h)
    v = np.swapaxes(vt, 1, 2)
    det = np.linalg.det(v @ np.swapaxes(u, 1, 2))
    corr = np.repeat(np.eye(2)[None, :, :], s.shape[0], axis=0)
    corr[:, 1, 1] = np.where(det < 0.0, -1.0, 1.0)
    r = v @ corr @ np.swapaxes(u, 1, 2)

    t = d_mean[:, 0, :] - np.einsum("mij,mj->mi", r, s_mean[:, 0, :])
    yaw = np.arctan2(r[:, 1, 0], r[:, 0, 0])
    res = np.einsum("mij,mkj->mki", r, s) + t[:, None, :] - d
    rms = np.sqrt(np.mean(np.sum(res**2, axis=2), axis=1))
    return t[:, 0], t[:, 1], yaw, rms


def _lift_to_3d(pose: Se2Pose) -> Tuple[np.ndarray, np.ndarray]:
    """3D rotation/translation with zero roll, pitch and z."""
    r = np.eye(3)
    r[:2, :2] = pose.rotation()
    t = np.array([pose.x, pose.y, 0.0])
    return r, t


def pose_errors(est: Se2Pose, gt: Se2Pose) -> Tuple[float, float]:
    """(geodesic rotation error in degrees, body-frame translation error in m).

    Poses are lifted to 3D with zero roll/pitch/z; the arccos argument is
    clamped to [-1, 1] so exact matches do not trip on rounding.
    """
    r_est, t_est = _lift_to_3d(est)
    r_gt, t_gt = _lift_to_3d(gt)
    cos_arg = np.clip((np.trace(r_est.T @ r_gt) - 1.0) / 2.0, -1.0, 1.0)
    rot_err = float(np.degrees(np.arccos(cos_arg)))
    trans_err = float(np.linalg.norm(r_est.T @ (t_gt - t_est)))
    return rot_err, trans_err


def registration_success(est: Se2Pose, gt: Se2Pose, rot_tol_deg: float = 5.0, trans_tol_m: float = 3.0) -> bool:
    """Success test: both pose errors under their tolerances."""
    if rot_tol_deg <= 0.0 or trans_tol_m <= 0.0:
        raise ValueError("tolerances must be positive")
    rot_err, trans_err = pose_errors(est, gt)
    return bool(rot_err < rot_tol_deg and trans_err < trans_tol_m)
