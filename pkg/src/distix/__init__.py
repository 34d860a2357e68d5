"""distix: distance-indexed video frame interpolation.

Replaces ambiguous scalar time indexing with per-pixel traveled
distance maps: compute maps from optical flow, interpolate frames by
distance-driven warping and blending, refine long-range predictions
iteratively, estimate dense maps from multi-frame B-spline
trajectories, and re-time individual objects through distance curves.
"""

from .imaging import (
    DimensionMismatchError,
    FileFormatError,
    FlowField,
    Frame,
    MaskImage,
    backward_warp,
    bilinear_sample,
    forward_warp_splat,
    load_frame,
    read_flo,
    save_frame,
    write_flo,
)
from .indexing import (
    DistanceMap,
    TwoChannelDistance,
    distance_map_from_flows,
    read_pfm,
    two_channel_distance,
    uniform_map,
    write_pfm,
)
from .interpolator import InterpConfig, WarpPair, blend_two, interpolate, occlusion_mask, scaled_flows, warp_endpoints
from .iterative import IterSchedule, RefState, iterative_interpolate, iterative_interpolate_map, make_schedule, step
from .trajectory import (
    MultiFrameSet,
    SplineBasis,
    SplineTrajectory,
    ThreeWayMask,
    basis_eval,
    dense_distance_map,
    eval_flow,
    fit_trajectory,
    refine_multiframe,
    remap_distance_to_outer,
)
from .lab import (
    SceneSpec,
    ShapeSpec,
    TinyModel,
    TripletSample,
    VelocityProfile,
    gradient_check,
    make_dataset,
    mode_average_report,
    render_scene,
    train,
)
from .retime import (
    DistanceCurve,
    RenderJob,
    RetimeLayer,
    RetimeScript,
    compose_maps,
    eval_curve,
    render_retimed,
)
from .metrics import MetricReport, map_loss, psnr, ssim

__version__ = "0.1.0"
