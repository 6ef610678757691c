"""sonomat: material-aware impact sounds.

Resolves the material under a world-space tap from a buffer of
segmentation masks and synthesizes the impact with a modal model of a
thin rectangular plate parameterized by that material's physical
properties.
"""

__version__ = "0.1.0"

from .materials import MaterialProperties, MaterialTable, default_table, load_material_db
from .plate import Mode, ModalModel, PlateGeometry, build_modal_model
from .synth import (
    AudioBuffer,
    ExcitationEvent,
    ResonatorState,
    kernel_backend,
    render_closed_form,
    render_streamed,
    spectrogram,
)
from .scene import (
    CameraIntrinsics,
    CameraPose,
    CollisionEvent,
    MaskBuffer,
    SegmentationMask,
    project_world_to_pixel,
    resolve_material,
    sample_neighborhood,
)
from .osc import OscMessage, decode_osc, encode_osc

__all__ = [
    "__version__",
    "MaterialProperties",
    "MaterialTable",
    "default_table",
    "load_material_db",
    "Mode",
    "ModalModel",
    "PlateGeometry",
    "build_modal_model",
    "AudioBuffer",
    "ExcitationEvent",
    "ResonatorState",
    "kernel_backend",
    "render_closed_form",
    "render_streamed",
    "spectrogram",
    "CameraIntrinsics",
    "CameraPose",
    "CollisionEvent",
    "MaskBuffer",
    "SegmentationMask",
    "project_world_to_pixel",
    "resolve_material",
    "sample_neighborhood",
    "OscMessage",
    "decode_osc",
    "encode_osc",
]
