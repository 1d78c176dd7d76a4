"""Scattering delay network room reverberator with image-source reference
and room-acoustic analysis tools."""

from .geometry import (
    DirectivityPattern,
    ReflectionPoint,
    SceneConfig,
    SceneError,
    ValidationReport,
    delay_samples,
    directivity_gain,
    first_order_reflection_points,
    validate_scene,
)
from .ism import ImageSource, enumerate_images, render_rir_ism
from .network import (
    NumericalError,
    SDNNetwork,
    build_network,
    frequency_response,
    process_signal,
    render_rir,
)
from .rir import ImpulseResponse

__version__ = "0.1.0"

__all__ = [
    "DirectivityPattern",
    "ImageSource",
    "ImpulseResponse",
    "NumericalError",
    "ReflectionPoint",
    "SDNNetwork",
    "SceneConfig",
    "SceneError",
    "ValidationReport",
    "build_network",
    "delay_samples",
    "directivity_gain",
    "enumerate_images",
    "first_order_reflection_points",
    "frequency_response",
    "process_signal",
    "render_rir",
    "render_rir_ism",
    "validate_scene",
]
