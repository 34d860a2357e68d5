"""Demo-only block-matching flow estimator.

Exhaustive SSD search over integer displacements, good enough to try
the engine on small frame pairs without precomputed flow.  Not meant
for production: real flows should arrive as .flo inputs.
"""

from __future__ import annotations

import numpy as np

from .imaging import Frame, FlowField, require_same_size


def block_matching_flow(i0: Frame, i1: Frame, block: int = 8, radius: int = 7) -> FlowField:
    """Estimate per-pixel flow from i0 to i1 by exhaustive block matching.

    Each block of i0 searches a +/- radius window in i1 for the lowest
    sum of squared differences; the winning displacement is assigned to
    every pixel of the block.
    """
    require_same_size(i0, i1)
    a = i0.data.mean(axis=2)
    b = i1.data.mean(axis=2)
    h, w = a.shape
    flow = np.zeros((h, w, 2))
    for by in range(0, h, block):
        for bx in range(0, w, block):
            tile = a[by : by + block, bx : bx + block]
            best = (np.inf, 0, 0)
            for dy in range(-radius, radius + 1):
                y0 = by + dy
                if y0 < 0 or y0 + tile.shape[0] > h:
                    continue
                for dx in range(-radius, radius + 1):
                    x0 = bx + dx
                    if x0 < 0 or x0 + tile.shape[1] > w:
                        continue
                    cand = b[y0 : y0 + tile.shape[0], x0 : x0 + tile.shape[1]]
                    ssd = float(np.sum((tile - cand) ** 2))
                    if ssd < best[0]:
                        best = (ssd, dx, dy)
            flow[by : by + block, bx : bx + block, 0] = best[1]
            flow[by : by + block, bx : bx + block, 1] = best[2]
    return FlowField(flow)
