"""
From wall points to line segments and corners
=============================================

Projects wall patches to a bird's-eye raster, pulls line segments out of
it, and intersects them into the corner set that drives matching.
"""

import numpy as np

from scan2plan.lines import detect_segments, extract_corners, merge_refit, rasterize_points
from scan2plan.planes import classify_patches, merge_patches, segment_planes
from scan2plan.synthetic import generate_layout, random_interior_pose, synthesize_submap

layout = generate_layout(seed=7, n_rooms=8, corridor=True, extent_m=40.0)
rng = np.random.default_rng(0)
pose = random_interior_pose(layout, rng)
scene = synthesize_submap(layout.wall_model, pose, radius_m=12.0,
                          noise_sigma_m=0.03, seed=1)
sub = scene.submap

result = segment_planes(sub.points)
patches = merge_patches(result.patches)
walls, _, _ = classify_patches(patches, sub.gravity)
wall_xy = np.vstack([p.points[:, :2] for p in walls])
print("%d wall points from %d patches" % (wall_xy.shape[0], len(walls)))

# 60 px per meter keeps a 1 cm noise floor below one pixel
raster = rasterize_points(wall_xy, scale=60.0)
print("raster %dx%d px, %d occupied" % (
    raster.grid.shape[0], raster.grid.shape[1], int(raster.grid.sum())))

segments = detect_segments(raster, l_min_px=30, gap_px=5.0, band_px=5.0)
segments = merge_refit(segments, endpoint_tol_m=0.3, angle_tol_deg=5.0)
print("%d line segments after merge" % len(segments))
for s in segments[:5]:
    print("  (%6.2f, %6.2f) -> (%6.2f, %6.2f)  %5.2f m" % (
        s.p0[0], s.p0[1], s.p1[0], s.p1[1], np.linalg.norm(s.p1 - s.p0)))

# corners are intersections of nearby non-parallel segments
corners = extract_corners(segments, extend_m=1.0, nms_radius_m=0.5)
print("%d corners" % len(corners))
for c in corners[:5]:
    ang = np.degrees(np.arctan2(c.dirs[:, 1], c.dirs[:, 0]))
    print("  (%6.2f, %6.2f) between walls at %6.1f and %6.1f deg" % (
        c.position[0], c.position[1], ang[0], ang[1]))
