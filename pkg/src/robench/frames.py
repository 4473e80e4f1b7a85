"""8-bit raster frames: container type, binary PGM/PPM I/O, quality stats.

All pixel math in the toolkit runs on a normalized [0,1] float view of the
raw 8-bit samples; re-quantization always rounds half away from zero so
that every operator is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

# BT.601 luma weights, used whenever an RGB frame needs a single brightness value.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def quantize_unit(values: np.ndarray) -> np.ndarray:
    """Map normalized [0,1] floats to uint8, rounding half away from zero."""
    scaled = np.clip(values, 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def quantize_raw(values: np.ndarray) -> np.ndarray:
    """Round raw-scale floats to the 8-bit grid, half away from zero."""
    return np.floor(np.clip(values, 0.0, 255.0) + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class Image:
    """A single frame: (height, width, channels) uint8 samples, row-major.

    Channels is 1 (luma) or 3 (RGB). Instances are immutable: the sample
    buffer is marked read-only on construction.
    """

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) samples, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")
        if arr.dtype != np.uint8:
            raise ValueError(f"samples must be uint8, got {arr.dtype}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]

    def normalized(self) -> np.ndarray:
        """Float64 view of the samples scaled to [0,1]."""
        return self.samples.astype(np.float64) / 255.0

    @classmethod
    def from_normalized(cls, values: np.ndarray) -> "Image":
        return cls(quantize_unit(np.asarray(values, dtype=np.float64)))

    def luma(self) -> np.ndarray:
        """Per-pixel luma on the raw [0,255] scale (BT.601 for RGB)."""
        if self.channels == 1:
            return self.samples[:, :, 0].astype(np.float64)
        r, g, b = (self.samples[:, :, i].astype(np.float64) for i in range(3))
        wr, wg, wb = LUMA_WEIGHTS
        return wr * r + wg * g + wb * b


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Netpbm headers: tokens separated by whitespace, '#' starts a comment.
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("truncated header")
    return data[start:pos], pos


def load_frame(path, format: str | None = None) -> Image:
    """Read a binary PGM (P5, one channel) or PPM (P6, three channels) file.

    When ``format`` is given ("pgm" or "ppm") the file's magic must agree
    with it; otherwise the magic decides.
    """
    data = Path(path).read_bytes()
    if len(data) < 2:
        raise FormatError(f"{path}: too short to be a PGM/PPM file")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: unsupported magic {magic!r} (need binary P5/P6)")
    channels = 1 if magic == b"P5" else 3
    if format is not None:
        expected = {"pgm": b"P5", "ppm": b"P6"}.get(format.lower())
        if expected is None:
            raise ValueError(f"unknown format {format!r}")
        if magic != expected:
            raise FormatError(f"{path}: magic {magic!r} does not match requested {format}")
    pos = 2
    try:
        width_tok, pos = _read_header_token(data, pos)
        height_tok, pos = _read_header_token(data, pos)
        maxval_tok, pos = _read_header_token(data, pos)
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except (ValueError, FormatError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from exc
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after the maxval
    expected_bytes = width * height * channels
    payload = data[pos : pos + expected_bytes]
    if len(payload) != expected_bytes:
        raise FormatError(
            f"{path}: payload has {len(payload)} bytes, header promises {expected_bytes}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return Image(arr.copy())


def save_frame(img: Image, path, format: str | None = None) -> None:
    """Write ``img`` as binary PGM/PPM. Round-trips bit-exactly via load_frame."""
    if format is None:
        format = "pgm" if img.channels == 1 else "ppm"
    format = format.lower()
    if format == "pgm":
        if img.channels != 1:
            raise ValueError(f"cannot save {img.channels}-channel image as pgm")
        magic = b"P5"
    elif format == "ppm":
        if img.channels != 3:
            raise ValueError(f"cannot save {img.channels}-channel image as ppm")
        magic = b"P6"
    else:
        raise ValueError(f"unknown format {format!r}")
    header = magic + b"\n" + f"{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.samples.tobytes())


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB over all raw samples; inf if identical."""
    if a.samples.shape != b.samples.shape:
        raise DataError(
            f"dimension mismatch: {a.samples.shape} vs {b.samples.shape}"
        )
    diff = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0**2 / mse)


def mean_luma(img: Image) -> float:
    """Average luma over all pixels, in [0,255]."""
    return float(np.mean(img.luma()))
