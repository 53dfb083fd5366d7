"""
Generate a floorplan and scan it
================================

Builds a random multi-room wall model, drops a sensor somewhere inside,
and synthesizes the point cloud that a short walk past that spot would
accumulate.
"""

import numpy as np

from scan2plan.synthetic import generate_layout, random_interior_pose, synthesize_submap

# a seeded layout is reproducible: same seed, same building
layout = generate_layout(seed=7, n_rooms=8, corridor=True, extent_m=40.0)
print("floor %s: %d rooms, %d wall segments" % (
    layout.wall_model.floor_id, len(layout.rooms), len(layout.wall_model.walls)))

lengths = [np.linalg.norm(w.p1 - w.p0) for w in layout.wall_model.walls]
print("wall lengths: %.1f m total, %.1f m median" % (sum(lengths), np.median(lengths)))

# place the sensor on open floor, away from any wall
rng = np.random.default_rng(0)
pose = random_interior_pose(layout, rng)
print("sensor at (%.2f, %.2f) heading %.1f deg" % (pose.x, pose.y, np.degrees(pose.yaw)))

# the scene deviates from the model: noisy points, missing walls, clutter
scene = synthesize_submap(
    layout.wall_model, pose, radius_m=12.0,
    noise_sigma_m=0.03, drop_wall_frac=0.2, clutter_frac=0.1, seed=1,
)
sub = scene.submap
print("submap: %d points, gravity %s" % (sub.points.shape[0], sub.gravity))
print("height range %.2f .. %.2f m" % (sub.points[:, 2].min(), sub.points[:, 2].max()))
for key, val in scene.deviation_log.items():
    print("  %s: %s" % (key, val))
