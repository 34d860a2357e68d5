"""Distance maps from optical flow.

A distance map answers, per pixel: what fraction of this pixel's total
start-to-end motion has already happened?  It is the projection of the
partial flow onto the full flow.  Collinear half-way motion gives 0.5,
orthogonal motion gives 0, stationary pixels fall back to 0.5.
"""

from pathlib import Path

import numpy as np

from distix import FlowField, distance_map_from_flows, two_channel_distance, uniform_map, write_pfm

out = Path("demo_out")
out.mkdir(exist_ok=True)

h = w = 6
full = FlowField(np.tile([4.0, 2.0], (h, w, 1)))

print("partial flow scaled by k  ->  distance map value k")
for k in (0.0, 0.25, 0.5, 0.75, 1.0):
    partial = FlowField(k * full.data)
    d = distance_map_from_flows(partial, full)
    print(f"  k={k:<5} D={d.data[0, 0]:.3f}")

orth = FlowField(np.tile([-2.0, 4.0], (h, w, 1)))
print(f"orthogonal motion projects to {distance_map_from_flows(orth, full).data[0, 0]:.3f}")

still = FlowField(np.zeros((h, w, 2)))
print(f"stationary pixels fall back to {distance_map_from_flows(still, still).data[0, 0]}")

uni = uniform_map(0.3, h, w)
print(f"uniform map: every pixel {uni.data[0, 0]} (the constant-speed assumption)")

tc = two_channel_distance(FlowField(0.25 * full.data), full)
print(f"two-channel variant: dx={tc.dx[0, 0]:.3f} dy={tc.dy[0, 0]:.3f}")

write_pfm(distance_map_from_flows(FlowField(0.4 * full.data), full), out / "dmap.pfm")
print(f"wrote {out / 'dmap.pfm'}")
