"""ldiphoto: single RGB-D image -> layered, inpainted 3D photo.

Pipeline: normalize + sharpen the disparity map, link depth discontinuities
into edges, lift the image onto a connected LDI, then per edge cut the
connectivity, grow context/synthesis regions, inpaint color/depth/structure,
and merge the new pixels back as additional layers until no edges remain.
The completed LDI converts to a vertex-colored triangle mesh for rendering.
"""

__version__ = "0.1.0"

from .config import PipelineConfig
from .errors import BackendError, ConfigError, ConsistencyError, InputError, LdiPhotoError
from .inpaint import (
    DiffusionBackend,
    InpaintBackend,
    InpaintResult,
    RunReport,
    SubprocessBackend,
    diffusion_inpaint,
    edge_diffusion_stub,
    inpaint_stage_order,
    run_pipeline,
)
from .ldi import Ldi, SilhouettePair, cut_edge, lift_image, undo_cut
from .mesh_render import (
    Camera,
    TexturedMesh,
    export_glb,
    export_obj,
    import_glb,
    ldi_to_mesh,
    naive_warp,
    render_trajectory,
    render_view,
    trajectory_cameras,
)
from .metrics import (
    combined_color_objective,
    depth_objective,
    masked_recon_losses,
    perceptual_loss,
    psnr,
    ssim,
    style_loss,
    tv_loss,
)
from .preprocess import (
    DepthEdge,
    bilateral_median_filter,
    detect_discontinuities,
    link_depth_edges,
    normalize_disparity,
    scaled_min_edge_length,
)
from .regions import (
    InpaintRequest,
    RegionPair,
    SynthesizedValues,
    extract_regions,
    flatten_regions,
    merge_synthesized,
)

__all__ = [
    "__version__",
    "PipelineConfig",
    "BackendError",
    "ConfigError",
    "ConsistencyError",
    "InputError",
    "LdiPhotoError",
    "DiffusionBackend",
    "InpaintBackend",
    "InpaintResult",
    "RunReport",
    "SubprocessBackend",
    "diffusion_inpaint",
    "edge_diffusion_stub",
    "inpaint_stage_order",
    "run_pipeline",
    "Ldi",
    "SilhouettePair",
    "cut_edge",
    "lift_image",
    "undo_cut",
    "Camera",
    "TexturedMesh",
    "export_glb",
    "export_obj",
    "import_glb",
    "ldi_to_mesh",
    "naive_warp",
    "render_trajectory",
    "render_view",
    "trajectory_cameras",
    "combined_color_objective",
    "depth_objective",
    "masked_recon_losses",
    "perceptual_loss",
    "psnr",
    "ssim",
    "style_loss",
    "tv_loss",
    "DepthEdge",
    "bilateral_median_filter",
    "detect_discontinuities",
    "link_depth_edges",
    "normalize_disparity",
    "scaled_min_edge_length",
    "InpaintRequest",
    "RegionPair",
    "SynthesizedValues",
    "extract_regions",
    "flatten_regions",
    "merge_synthesized",
]
