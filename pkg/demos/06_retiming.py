"""Re-timing objects with per-object distance curves.

Two squares slide right together.  A mask over the red square's path
plus a distance curve re-times it independently: a flat curve freezes
it mid-path while the green square keeps moving; a falling curve plays
it backward.
"""

from pathlib import Path

import numpy as np

from distix import DistanceCurve, RenderJob, RetimeLayer, RetimeScript, render_retimed, save_frame
from distix.imaging import MaskImage
from distix.lab import SceneSpec, ShapeSpec, VelocityProfile, _coverage, render_scene

out = Path("demo_out")
out.mkdir(exist_ok=True)

profile = VelocityProfile(kind="constant")
red = ShapeSpec(shape="square", size=10.0, start=(14.5, 14.5), end=(34.5, 14.5),
                profile=profile, color=(1.0, 0.0, 0.0))
green = ShapeSpec(shape="square", size=10.0, start=(14.5, 33.5), end=(34.5, 33.5),
                  profile=profile, color=(0.0, 1.0, 0.0))
scene = SceneSpec(canvas=(48, 64), shapes=(red, green), background=(0.0, 0.0, 0.0))

i0, _, _ = render_scene(scene, 0.0)
i1, v01, _ = render_scene(scene, 1.0)
rev = SceneSpec(canvas=(48, 64), background=(0.0, 0.0, 0.0), shapes=tuple(
    ShapeSpec(shape=s.shape, size=s.size, start=s.end, end=s.start,
              profile=profile, color=s.color) for s in scene.shapes))
_, v10, _ = render_scene(rev, 1.0)

# corridor mask: the red square's footprint over its whole path, padded
h, w = i0.height, i0.width
cover = np.zeros((h, w))
for t in np.linspace(0, 1, 21):
    cover = np.maximum(cover, _coverage(red, red.position(float(t)), h, w))
binary = cover > 0
for _ in range(2):
    g = binary.copy()
    g[1:, :] |= binary[:-1, :]; g[:-1, :] |= binary[1:, :]
    g[:, 1:] |= binary[:, :-1]; g[:, :-1] |= binary[:, 1:]
    binary = g
mask = MaskImage(binary.astype(float))

curves = {
    "freeze": DistanceCurve(kind="linear", points=((0.0, 0.5), (1.0, 0.5))),
    "reverse": DistanceCurve(kind="linear", points=((0.0, 1.0), (1.0, 0.0))),
    "ease": DistanceCurve(kind="cubic_bezier",
                          points=((0.0, 0.0), (0.3, 0.0), (0.7, 1.0), (1.0, 1.0))),
}
for name, curve in curves.items():
    script = RetimeScript(layers=(RetimeLayer(mask=mask, curve=curve, name="red"),))
    job = RenderJob(i0=i0, i1=i1, v01=v01, v10=v10, script=script,
                    timesteps=(0.0, 0.25, 0.5, 0.75, 1.0))
    for t, frame in zip(job.timesteps, render_retimed(job)):
        save_frame(frame, out / f"retime_{name}_{t:.2f}.png")
    print(f"{name}: red square follows its own clock, green plays normally -> "
          f"{out}/retime_{name}_*.png")
