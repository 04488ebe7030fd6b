"""Image carrier, lossless file I/O, and block geometry.

Images are numpy uint8 arrays of shape (height, width, channels) with
channels 1 (gray) or 3 (RGB), C-contiguous, i.e. row-major with the
channel samples of one pixel adjacent. Every operation here is a pure
function; nothing mutates its input.

Interchange formats:
  * binary PPM (P6) / PGM (P5), maxval 255, raw payload
  * CIFAR-10 binary batches: 3073-byte records, 1 label byte followed by
    three channel-planar 1024-byte planes (R, G, B), 32x32 row-major
"""

from dataclasses import dataclass

import numpy as np


class FormatError(ValueError):
    """Malformed or truncated input file."""


def require_image(img: np.ndarray) -> np.ndarray:
    """Validate the (H, W, C) uint8 convention, returning the array."""
    if not isinstance(img, np.ndarray):
        raise ValueError(f"expected numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 samples, got {img.dtype}")
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1|3) shape, got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"degenerate image shape {img.shape}")
    return img


_WHITESPACE = b" \t\n\r\x0b\x0c"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the offset one byte past the single whitespace
    that terminates the last token (start of the raw payload).
    """
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1] in _WHITESPACE:
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while (
            pos < len(data)
            and data[pos : pos + 1] not in _WHITESPACE
            and data[pos : pos + 1] != b"#"
        ):
            pos += 1
        if pos == start:
            raise FormatError("truncated header")
        tokens.append(data[start:pos])
        if len(tokens) == count:
            if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
                raise FormatError("missing whitespace after maxval")
            pos += 1
    return tokens, pos


def load_ppm(data: bytes) -> np.ndarray:
    """Parse binary PPM (P6) or PGM (P5) bytes into an image array."""
    if data[:2] == b"P6":
        channels = 3
    elif data[:2] == b"P5":
        channels = 1
    else:
        raise FormatError(f"not a binary PPM/PGM file (magic {data[:2]!r})")

    tokens, payload_at = _header_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"non-integer header fields {tokens!r}") from None
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} (only 255)")

    payload = data[2 + payload_at :]
    expected = height * width * channels
    if len(payload) < expected:
        raise FormatError(
            f"payload has {len(payload)} bytes, expected {expected}"
        )
    pixels = np.frombuffer(payload[:expected], dtype=np.uint8)
    return pixels.reshape(height, width, channels).copy()


def save_ppm(img: np.ndarray) -> bytes:
    """Serialize an image as binary PGM (1 channel) or PPM (3 channels)."""
    require_image(img)
    height, width, channels = img.shape
    magic = b"P5" if channels == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (width, height)
    return header + np.ascontiguousarray(img).tobytes()


CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 * 32 * 32 channel-planar bytes


def load_cifar10_batch(data: bytes) -> list[tuple[int, np.ndarray]]:
    """Parse a CIFAR-10 binary batch into (label, 32x32x3 image) records."""
    if len(data) % CIFAR_RECORD_BYTES != 0:
        raise FormatError(
            f"batch length {len(data)} is not a multiple of {CIFAR_RECORD_BYTES}"
        )
    n = len(data) // CIFAR_RECORD_BYTES
    records = np.frombuffer(data, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
    labels = records[:, 0]
    if n and int(labels.max()) > 9:
        bad = int(np.argmax(labels > 9))
        raise FormatError(f"record {bad} has label {labels[bad]} > 9")
    # channel-planar (3, 32, 32) -> interleaved (32, 32, 3)
    images = records[:, 1:].reshape(n, 3, 32, 32).transpose(0, 2, 3, 1)
    return [(int(labels[i]), images[i].copy()) for i in range(n)]


def resize_nearest(img: np.ndarray, factor: int) -> np.ndarray:
    """Integer-factor nearest-neighbor upscale; factor 1 is a copy.

    Output pixel (y, x) equals input pixel (y // factor, x // factor),
    so the operation is deterministic and preserves the sample multiset
    up to exact repetition.
    """
    require_image(img)
    if factor < 1:
        raise ValueError(f"resize factor must be >= 1, got {factor}")
    return np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)


@dataclass
class BlockGrid:
    """Row-major M x M tiling of an image: blocks has shape (N, M, M, C)."""

    m: int
    rows: int
    cols: int
    blocks: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.rows * self.cols


def check_block_geometry(height: int, width: int, m: int) -> None:
    if m < 2 or m % 2 != 0:
        raise ValueError(f"block size must be an even integer >= 2, got {m}")
    if height < 1 or width < 1:
        raise ValueError(f"invalid image dims {height}x{width}")
    if height % m != 0 or width % m != 0:
        raise ValueError(f"dims {height}x{width} not divisible by block size {m}")


def divide_blocks(img: np.ndarray, m: int) -> BlockGrid:
    """Cut an image into its row-major grid of M x M blocks."""
    require_image(img)
    height, width, channels = img.shape
    check_block_geometry(height, width, m)
    rows, cols = height // m, width // m
    blocks = (
        img.reshape(rows, m, cols, m, channels)
        .transpose(0, 2, 1, 3, 4)
        .reshape(rows * cols, m, m, channels)
    )
    return BlockGrid(m=m, rows=rows, cols=cols, blocks=blocks.copy())


def assemble_blocks(grid: BlockGrid) -> np.ndarray:
    """Reassemble a BlockGrid into the image it tiles, bit-exactly."""
    blocks = np.asarray(grid.blocks)
    expected = (grid.rows * grid.cols, grid.m, grid.m)
    if blocks.ndim != 4 or blocks.shape[:3] != expected:
        raise ValueError(
            f"inconsistent grid: blocks shape {blocks.shape}, expected {expected} + (C,)"
        )
    channels = blocks.shape[3]
    img = (
        blocks.reshape(grid.rows, grid.cols, grid.m, grid.m, channels)
        .transpose(0, 2, 1, 3, 4)
        .reshape(grid.rows * grid.m, grid.cols * grid.m, channels)
    )
    return np.ascontiguousarray(img)
