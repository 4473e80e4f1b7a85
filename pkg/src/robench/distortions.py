"""Frame-level distortion operators and ladder level grids.

Four distortion families are supported: DCT-quantization compression (qp),
spatial downscaling (res), additive white Gaussian noise (wn) and additive
brightness shift (bv). Every operator is pure and deterministic given
(input, parameters, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import Image, quantize_unit

KINDS = ("qp", "res", "wn", "bv")

# 11 compression levels spanning quantizer indices 10..65.
DEFAULT_QP_LEVELS = (10, 15, 20, 25, 30, 35, 40, 45, 50, 58, 65)

# 11 scale levels: constant 1/8 steps down to 1/8, then finer steps so a
# 768x576 reference bottoms out at 24x18.
DEFAULT_RES_SCALES = (
    7 / 8, 6 / 8, 5 / 8, 4 / 8, 3 / 8, 2 / 8, 1 / 8,
    1 / 12, 1 / 16, 1 / 24, 1 / 32,
)

# 20 noise levels, log-spaced over sigma 0.005..0.5 on the normalized scale.
DEFAULT_WN_SIGMAS = tuple(float(s) for s in np.geomspace(0.005, 0.5, 20))

# 10 brightness offsets: 4 darkening, 6 brightening.
DEFAULT_BV_OFFSETS = (-0.4, -0.3, -0.2, -0.1, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


@dataclass(frozen=True)
class DistortionSpec:
    """One distortion instance: family, 1-based ladder level and parameter.

    ``param`` is the quantizer index for qp, the scale fraction for res,
    the Gaussian sigma for wn and the signed luma offset for bv. ``seed``
    is the per-sequence noise seed (wn only).
    """

    kind: str
    level: int
    param: float
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distortion kind {self.kind!r}")
        if self.level < 1:
            raise ValueError("level is 1-based")
        if self.kind == "qp":
            if self.param != int(self.param) or not 0 <= self.param <= 65:
                raise ValueError(f"qp param must be an integer in [0,65], got {self.param}")
        elif self.kind == "res":
            if not 0.0 < self.param <= 1.0:
                raise ValueError(f"res scale must be in (0,1], got {self.param}")
        elif self.kind == "wn":
            if not 0.0 < self.param <= 1.0:
                raise ValueError(f"wn sigma must be in (0,1], got {self.param}")
            if self.seed is None:
                raise ValueError("wn distortion requires a seed")
        elif self.kind == "bv":
            if not -1.0 <= self.param <= 1.0 or self.param == 0.0:
                raise ValueError(f"bv offset must be in [-1,1] and nonzero, got {self.param}")

    def to_json(self) -> dict:
        out = {"type": self.kind, "level": self.level, "param": self.param}
        out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DistortionSpec":
        return cls(
            kind=obj["type"],
            level=int(obj["level"]),
            param=float(obj["param"]),
            seed=None if obj.get("seed") is None else int(obj["seed"]),
        )


@dataclass(frozen=True)
class LadderConfig:
    """Per-family level grids. Defaults give 11 + 11 + 20 + 10 = 52 versions."""

    qp_levels: tuple = DEFAULT_QP_LEVELS
    res_scales: tuple = DEFAULT_RES_SCALES
    wn_sigmas: tuple = DEFAULT_WN_SIGMAS
    bv_offsets: tuple = DEFAULT_BV_OFFSETS

    def __post_init__(self):
        object.__setattr__(self, "qp_levels", tuple(self.qp_levels))
        object.__setattr__(self, "res_scales", tuple(self.res_scales))
        object.__setattr__(self, "wn_sigmas", tuple(self.wn_sigmas))
        object.__setattr__(self, "bv_offsets", tuple(self.bv_offsets))
        if not all(self.qp_levels[i] < self.qp_levels[i + 1] for i in range(len(self.qp_levels) - 1)):
            raise ValueError("qp_levels must be strictly increasing")
        if not all(self.res_scales[i] > self.res_scales[i + 1] for i in range(len(self.res_scales) - 1)):
            raise ValueError("res_scales must be strictly decreasing")
        if not all(self.wn_sigmas[i] < self.wn_sigmas[i + 1] for i in range(len(self.wn_sigmas) - 1)):
            raise ValueError("wn_sigmas must be strictly increasing")
        if any(off == 0.0 for off in self.bv_offsets):
            raise ValueError("bv_offsets must not contain zero")

    def params_for(self, kind: str):
        return {
            "qp": self.qp_levels,
            "res": self.res_scales,
            "wn": self.wn_sigmas,
            "bv": self.bv_offsets,
        }[kind]

    def total_levels(self) -> int:
        return sum(len(self.params_for(kind)) for kind in KINDS)


def add_gaussian_noise(img: Image, sigma: float, seed: int) -> Image:
    """Add zero-mean Gaussian noise (sigma on the normalized [0,1] scale)."""
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"sigma must be in (0,1], got {sigma}")
    rng = np.random.default_rng(seed)
    noisy = img.normalized() + rng.normal(0.0, sigma, img.samples.shape)
    return Image(quantize_unit(noisy))


def adjust_brightness(img: Image, offset: float) -> Image:
    """Shift every channel by ``offset`` on the normalized scale and clip."""
    if not -1.0 <= offset <= 1.0:
        raise ValueError(f"offset must be in [-1,1], got {offset}")
    return Image(quantize_unit(img.normalized() + offset))


def _resample_weights(n_src: int, n_dst: int) -> np.ndarray:
    """Row-stochastic (n_dst, n_src) matrix of exact box-filter overlaps.

    Destination pixel j covers the source interval
    [j * n_src/n_dst, (j+1) * n_src/n_dst); partially covered source pixels
    contribute proportionally to their overlap.
    """
    weights = np.zeros((n_dst, n_src), dtype=np.float64)
    step = n_src / n_dst
    for j in range(n_dst):
        lo = j * step
        hi = (j + 1) * step
        first = int(np.floor(lo))
        last = min(int(np.ceil(hi)), n_src)
        for i in range(first, last):
            overlap = min(hi, i + 1) - max(lo, i)
            if overlap > 0:
                weights[j, i] = overlap
        weights[j] /= weights[j].sum()
    return weights


def downscale(img: Image, scale: float) -> Image:
    """Box-filter downscale to round(w*scale) x round(h*scale)."""
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must be in (0,1], got {scale}")
    if scale == 1.0:
        return img
    out_w = int(np.floor(img.width * scale + 0.5))
    out_h = int(np.floor(img.height * scale + 0.5))
    if out_w < 1 or out_h < 1:
        raise ValueError(f"scale {scale} collapses {img.width}x{img.height} to zero size")
    wy = _resample_weights(img.height, out_h)
    wx = _resample_weights(img.width, out_w)
    src = img.samples.astype(np.float64)
    tmp = np.tensordot(wy, src, axes=(1, 0))  # (out_h, in_w, c)
    out = np.moveaxis(np.tensordot(tmp, wx, axes=(1, 1)), 1, 2)
    return Image(np.floor(out + 0.5).astype(np.uint8))


def apply_distortion(img: Image, spec: DistortionSpec, frame_index: int = 0) -> Image:
    """Apply one distortion to one frame of a sequence.

    For wn the per-frame noise seed is ``spec.seed + frame_index`` so a
    sequence is reproducible frame by frame.
    """
    if spec.kind == "qp":
        from .dct_codec import compress_dct

        out, _ = compress_dct(img, int(spec.param))
        return out
    if spec.kind == "res":
        return downscale(img, spec.param)
    if spec.kind == "wn":
        return add_gaussian_noise(img, spec.param, spec.seed + frame_index)
    if spec.kind == "bv":
        return adjust_brightness(img, spec.param)
    raise ValueError(f"unknown distortion kind {spec.kind!r}")
