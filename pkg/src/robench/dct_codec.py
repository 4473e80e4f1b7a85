"""Block-DCT uniform-quantization compression surrogate.

Stands in for a real inter-frame codec: each channel is split into 8x8
blocks (edges replication-padded), level-shifted by -128, transformed with
the orthonormal 2-D DCT-II, uniformly quantized with step = 2**((qp-4)/6)
(one quantizer-index unit widens the step by ~12%), dequantized and
inverse-transformed. The by-product is the exact byte size of an
entropy-coded stream of the quantized coefficients: per block, zig-zag
order, zero runs and values written as Exp-Golomb codes.

Set the ROBENCH_ENCODER_CMD environment variable to route the qp ladder
through an external encoder instead (see ladder.py).
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from .frames import Image, quantize_raw

BLOCK = 8

# Zig-zag scan order of an 8x8 block, as (flat) indices into row-major order.
_ZIGZAG = np.array(
    [
        0, 1, 8, 16, 9, 2, 3, 10,
        17, 24, 32, 25, 18, 11, 4, 5,
        12, 19, 26, 33, 40, 48, 41, 34,
        27, 20, 13, 6, 7, 14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36,
        29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46,
        53, 60, 61, 54, 47, 55, 62, 63,
    ],
    dtype=np.int64,
)


def quant_step(qp: int) -> float:
    """Quantizer step size for index ``qp``; each +1 multiplies it by 2**(1/6)."""
    return float(2.0 ** ((qp - 4) / 6.0))


def _to_blocks(channel: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Pad a (h, w) channel by edge replication and return (n, 8, 8) blocks."""
    h, w = channel.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    padded = np.pad(channel, ((0, ph), (0, pw)), mode="edge")
    hb, wb = padded.shape[0] // BLOCK, padded.shape[1] // BLOCK
    blocks = padded.reshape(hb, BLOCK, wb, BLOCK).swapaxes(1, 2).reshape(-1, BLOCK, BLOCK)
    return blocks, hb, wb


def _from_blocks(blocks: np.ndarray, hb: int, wb: int, h: int, w: int) -> np.ndarray:
    padded = blocks.reshape(hb, wb, BLOCK, BLOCK).swapaxes(1, 2).reshape(hb * BLOCK, wb * BLOCK)
    return padded[:h, :w]


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def _exp_golomb_bits(values: np.ndarray) -> np.ndarray:
    """Bit length of the unsigned Exp-Golomb code for each value (>= 0)."""
    return 2 * np.floor(np.log2(values + 1.0)).astype(np.int64) + 1


def _signed_to_unsigned(values: np.ndarray) -> np.ndarray:
    # Standard signed Exp-Golomb mapping: 1 -> 1, -1 -> 2, 2 -> 3, -2 -> 4, ...
    return np.where(values > 0, 2 * values - 1, -2 * values)


def _stream_bits(quantized: np.ndarray) -> int:
    """Exact bit count of the coefficient stream for (n, 8, 8) quantized blocks.

    Per block: ue(number of nonzero coefficients), then for every nonzero
    coefficient in zig-zag order ue(preceding zero-run) followed by
    se(value).
    """
    n = quantized.shape[0]
    zz = quantized.reshape(n, 64)[:, _ZIGZAG].astype(np.int64)
    nonzero = zz != 0
    counts = nonzero.sum(axis=1)
    bits = int(_exp_golomb_bits(counts.astype(np.float64)).sum())
    if not nonzero.any():
        return bits
    pos = np.broadcast_to(np.arange(64, dtype=np.int64), (n, 64))
    marked = np.where(nonzero, pos, -1)
    prev = np.concatenate(
        [np.full((n, 1), -1, dtype=np.int64), np.maximum.accumulate(marked, axis=1)[:, :-1]],
        axis=1,
    )
    runs = (pos - prev - 1)[nonzero]
    levels = _signed_to_unsigned(zz[nonzero])
    bits += int(_exp_golomb_bits(runs.astype(np.float64)).sum())
    bits += int(_exp_golomb_bits(levels.astype(np.float64)).sum())
    return bits


def dct_roundtrip(img: Image, step: float) -> tuple[Image, int]:
    """Quantize/reconstruct ``img`` through the block-DCT path at ``step``.

    Returns the reconstructed image and the coded stream size in bytes.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    total_bits = 0
    out = np.empty_like(img.samples)
    for ch in range(img.channels):
        blocks, hb, wb = _to_blocks(img.samples[:, :, ch].astype(np.float64) - 128.0)
        coeffs = dctn(blocks, type=2, norm="ortho", axes=(1, 2))
        quantized = _round_half_away(coeffs / step)
        total_bits += _stream_bits(quantized)
        recon = idctn(quantized * step, type=2, norm="ortho", axes=(1, 2))
        channel = _from_blocks(recon, hb, wb, img.height, img.width) + 128.0
        out[:, :, ch] = quantize_raw(channel)
    return Image(out), (total_bits + 7) // 8


def compress_dct(img: Image, qp: int) -> tuple[Image, int]:
    """Apply the compression surrogate at quantizer index ``qp`` in [0,65]."""
    if not isinstance(qp, (int, np.integer)) or not 0 <= qp <= 65:
        raise ValueError(f"qp must be an integer in [0,65], got {qp!r}")
    return dct_roundtrip(img, quant_step(qp))
