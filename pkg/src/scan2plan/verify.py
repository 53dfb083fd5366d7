"""Occupancy-aware candidate scoring against the wall model.

The wall model is rasterized at s_r and dilated with a linear falloff:
value 1 on occupied cells down to 1/k_d at Chebyshev distance k_d, zero
beyond. Non-ground submap points collect award where they land on wall
mass; ground points landing there collect a penalty, since real ground
is free space. Confidence is the normalized difference, so a pose that
drapes scanned walls over modeled walls while keeping scanned floor off
them scores near 1.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import distance_transform_cdt

from .errors import EmptyModel, EmptySubmap, NoCandidates
from .geometry import LineSegment2, Se2Pose
from .lines import rasterize_segments
from .voting import Candidate

VARIANTS = ("osc", "osc1", "osc2", "osc3")

__all__ = [
    "VARIANTS",
    "ScoreField",
    "ScoreResult",
    "build_score_field",
    "score_candidate",
    "select_best",
    "reliability_curve",
    "format_report",
]


@dataclass
class ScoreField:
    """Dilated wall-occupancy values on a regular grid."""

    values: np.ndarray  # (nx, ny) float64 in [0, 1]
    origin: np.ndarray  # (2,) meters
    s_r: float  # meters per cell

    def value_at(self, points_m: np.ndarray) -> np.ndarray:
        pts = np.asarray(points_m, dtype=np.float64).reshape(-1, 2)
        ij = np.floor((pts - self.origin) / self.s_r).astype(np.int64)
        inside = (
            (ij[:, 0] >= 0)
            & (ij[:, 1] >= 0)
            & (ij[:, 0] < self.values.shape[0])
            & (ij[:, 1] < self.values.shape[1])
        )
        out = np.zeros(pts.shape[0])
        out[inside] = self.values[ij[inside, 0], ij[inside, 1]]
        return out


@dataclass
class ScoreResult:
    s_a: float  # award mass under non-ground points
    s_p: float  # penalty mass under ground points
    n_ng: int
    n_g: int
    confidence: float
    variant: str


def build_score_field(
    walls: Sequence[LineSegment2], s_r: float = 0.2, k_d: int = 5
) -> ScoreField:
    """Rasterize walls at s_r and dilate with the linear k_d falloff."""
    if not walls:
        raise EmptyModel("no walls to build a score field from")
    if k_d < 1:
        raise ValueError("k_d must be >= 1")
    raster = rasterize_segments(walls, scale=1.0 / s_r, pad_px=k_d + 2)
    dist = distance_transform_cdt(~raster.grid, metric="chessboard").astype(np.float64)
    values = np.where(dist <= k_d, 1.0 - (dist / k_d) * (1.0 - 1.0 / k_d), 0.0)
    return ScoreField(values, raster.origin, s_r)


def _confidence(s_a, s_p, s_free, s_miss, n_ng, n_g, lam, variant):
    if variant == "osc":
        return (s_a - lam * s_p) / n_ng
    if variant == "osc1":
        return s_a / n_ng
    if variant == "osc2":
        return (s_a + s_free) / (n_ng + n_g) if n_g else s_a / n_ng
    if variant == "osc3":
        denom = n_ng + n_g
        return (s_a + s_free - lam * s_p - lam * s_miss) / (denom if n_g else n_ng)
    raise ValueError("unknown scoring variant %r" % (variant,))


def score_candidate(
    field: ScoreField,
    pose: Se2Pose,
    q_ng_xy: np.ndarray,
    q_g_xy: np.ndarray,
    lam: float = 0.5,
    variant: str = "osc",
) -> ScoreResult:
    """Score one pose hypothesis; points are submap-frame xy."""
    q_ng = np.asarray(q_ng_xy, dtype=np.float64).reshape(-1, 2)
    q_g = np.asarray(q_g_xy, dtype=np.float64).reshape(-1, 2)
    if q_ng.shape[0] == 0:
        raise EmptySubmap("no non-ground points to score")
    v_ng = field.value_at(pose.apply(q_ng))
    v_g = field.value_at(pose.apply(q_g)) if q_g.shape[0] else np.zeros(0)
    s_a = float(v_ng.sum())
    s_p = float(v_g.sum())
    s_free = float((1.0 - v_g).sum()) if q_g.shape[0] else 0.0
    s_miss = float((1.0 - v_ng).sum())
    conf = _confidence(s_a, s_p, s_free, s_miss, q_ng.shape[0], q_g.shape[0], lam, variant)
    return ScoreResult(s_a, s_p, q_ng.shape[0], q_g.shape[0], float(conf), variant)


def _subsample(points: np.ndarray, cap: Optional[int]) -> np.ndarray:
    if cap is None or points.shape[0] <= cap:
        return points
    idx = np.linspace(0, points.shape[0] - 1, cap).astype(np.int64)
    return points[idx]


def select_best(
    field: ScoreField,
    candidates: Sequence[Candidate],
    q_ng_xy: np.ndarray,
    q_g_xy: np.ndarray,
    lam: float = 0.5,
    variant: str = "osc",
    max_points: Optional[int] = None,
) -> Tuple[int, List[ScoreResult]]:
    """Score every candidate, return (best index, all results).

    Ties on confidence fall back to vote count, then to the
    lexicographically smallest pose. max_points caps the scored points
    with a deterministic even stride; confidence is a normalized mean,
    so the cap trades a little variance for time.
    """
    if not candidates:
        raise NoCandidates("no pose candidates to score")
    q_ng = _subsample(np.asarray(q_ng_xy, dtype=np.float64).reshape(-1, 2), max_points)
    q_g = _subsample(np.asarray(q_g_xy, dtype=np.float64).reshape(-1, 2), max_points)
    results = [
        score_candidate(field, c.pose, q_ng, q_g, lam=lam, variant=variant)
        for c in candidates
    ]
    best = min(
        range(len(candidates)),
        key=lambda i: (
            -results[i].confidence,
            -candidates[i].votes,
            candidates[i].pose.x,
            candidates[i].pose.y,
            candidates[i].pose.yaw,
        ),
    )
    return best, results


def reliability_curve(labels, scores):
    """Precision-recall over descending score thresholds.

    Returns (precision, recall, thresholds, auc); auc is the step-wise
    average precision. Tied scores collapse into single thresholds.
    """
    y = np.asarray(labels, dtype=bool).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != s.shape:
        raise ValueError("labels and scores must have the same length")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("reliability curve needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # comparison, not subtraction: ties at +-inf must still collapse
    last = np.nonzero(s[1:] != s[:-1])[0]
    idx = np.concatenate([last, [s.shape[0] - 1]])
    tp = np.cumsum(y)[idx].astype(np.float64)
    fp = np.cumsum(~y)[idx].astype(np.float64)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    auc = float(np.sum(np.diff(np.concatenate([[0.0], recall])) * precision))
    return precision, recall, s[idx], auc


def format_report(
    candidates: Sequence[Candidate], results: Sequence[ScoreResult], best_idx: int
) -> str:
    """Plain-text table, one candidate per row, best row starred."""
    lines = ["candidate_idx x y yaw_deg votes s_a s_p confidence"]
    for i, (c, r) in enumerate(zip(candidates, results)):
        mark = " *" if i == best_idx else ""
        lines.append(
            "%d %.6f %.6f %.6f %d %.3f %.3f %.6f%s"
            % (
                i,
                c.pose.x,
                c.pose.y,
                np.degrees(c.pose.yaw),
                c.votes,
                r.s_a,
                r.s_p,
                r.confidence,
                mark,
            )
        )
    return "\n".join(lines) + "\n"
