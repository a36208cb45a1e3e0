"""Amodal completion: complete hidden parts of an object and cut it out as RGBA."""

from amodal._core import (
    AuthError,
    CanvasPlacement,
    DimensionError,
    Error,
    FixtureError,
    IoError,
    ParseError,
    PipelineError,
    ProtocolError,
    TransportError,
    ValidationError,
    boundary_mask,
    complete,
    compose_inpaint_mask,
    compute_canvas,
    default_dilation_radius,
    dilate,
    erode,
    grabcut,
    make_demo,
    otsu_threshold,
    place_on_canvas,
    ssim,
    wire_examples,
)

__all__ = [
    "AuthError",
    "CanvasPlacement",
    "DimensionError",
    "Error",
    "FixtureError",
    "IoError",
    "ParseError",
    "PipelineError",
    "ProtocolError",
    "TransportError",
    "ValidationError",
    "boundary_mask",
    "complete",
    "compose_inpaint_mask",
    "compute_canvas",
    "default_dilation_radius",
    "dilate",
    "erode",
    "grabcut",
    "make_demo",
    "otsu_threshold",
    "place_on_canvas",
    "ssim",
    "wire_examples",
]
