"""Robustness benchmarking for frame-based object detectors.

Builds distortion ladders (compression, resolution, white noise, brightness)
over a reference frame sequence, evaluates detection accuracy on every
version, condenses the accuracy chains into a four-component stability
vector, and renders robustness-quadrangle charts.
"""

__version__ = "0.1.0"

from .errors import DataError, FormatError
from .frames import Image, load_frame, mean_luma, psnr, save_frame
from .manifest import QualityStats, SequenceManifest, load_manifest, save_manifest, sequence_psnr

__all__ = [
    "DataError",
    "FormatError",
    "Image",
    "QualityStats",
    "SequenceManifest",
    "load_frame",
    "load_manifest",
    "mean_luma",
    "psnr",
    "save_frame",
    "save_manifest",
    "sequence_psnr",
    "__version__",
]
