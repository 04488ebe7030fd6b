"""Keyed image permutation cipher and its exact inverse.

Encryption, in order:
  1. divide the image into M x M blocks, row-major
  2. gather-permute whole blocks with K1 (out block i = in block K1[i])
  3. inside every block, split into the four (M/2) x (M/2) quadrants in the
     fixed order TL, TR, BL, BR, flatten each quadrant row-major, and
     gather-permute its pixels with the shared K2 (v'[k] = v[K2[k]])
  4. reassemble

All channels of a pixel travel together; the ciphertext is a pure pixel
permutation of the plaintext, so per-channel histograms are preserved.
Decryption applies the inverted permutations through the same machinery.
The quadrant order and row-major flattening are part of the cipher's
definition and must match the key file's conventions.
"""

import numpy as np

from .image import BlockGrid, assemble_blocks, divide_blocks, require_image
from .keys import EncryptionKey, invert_permutation


def permute_blocks(grid: BlockGrid, k1) -> BlockGrid:
    """Gather the grid's blocks: output block i is input block k1[i]."""
    k1 = np.asarray(k1, dtype=np.int64)
    if k1.shape != (grid.n_blocks,):
        raise ValueError(
            f"permutation length {k1.shape} does not match {grid.n_blocks} blocks"
        )
    invert_permutation(k1.tolist())
    return BlockGrid(m=grid.m, rows=grid.rows, cols=grid.cols, blocks=grid.blocks[k1])


def block_pixel_permutation(m: int, k2) -> np.ndarray:
    """Expand K2 into one permutation of all M*M pixel positions of a block.

    Position index is the row-major flat index y*M + x. Each quadrant
    (TL, TR, BL, BR) is permuted internally by the same K2, so the result
    applied as flat_out[k] = flat_in[perm[k]] equals the per-quadrant
    flatten/shuffle/unflatten pipeline.
    """
    half = m // 2
    s = half * half
    k2 = np.asarray(k2, dtype=np.int64)
    if k2.shape != (s,):
        raise ValueError(f"K2 length {k2.shape} does not match sub-block size {s}")
    invert_permutation(k2.tolist())

    ks = np.arange(s)
    perm = np.empty(m * m, dtype=np.int64)
    for oy, ox in ((0, 0), (0, half), (half, 0), (half, half)):
        dest = (oy + ks // half) * m + (ox + ks % half)
        src = (oy + k2 // half) * m + (ox + k2 % half)
        perm[dest] = src
    return perm


def expand_pixel_permutation(spatial_perm: np.ndarray, channels: int) -> np.ndarray:
    """Lift a spatial pixel permutation to interleaved samples.

    Channels of one pixel stay together: sample s*C + c moves wherever
    spatial position s moves.
    """
    spatial_perm = np.asarray(spatial_perm, dtype=np.int64)
    return (spatial_perm[:, None] * channels + np.arange(channels)).reshape(-1)


def shuffle_subblock_pixels(block: np.ndarray, k2) -> np.ndarray:
    """Apply the quadrant-wise K2 pixel shuffle to a single M x M block."""
    block = np.asarray(block)
    if block.ndim != 3 or block.shape[0] != block.shape[1]:
        raise ValueError(f"expected square (M, M, C) block, got {block.shape}")
    m, _, channels = block.shape
    if m < 2 or m % 2 != 0:
        raise ValueError(f"block side must be even and >= 2, got {m}")
    perm = block_pixel_permutation(m, k2)
    return block.reshape(m * m, channels)[perm].reshape(m, m, channels)


def _check_key_match(img: np.ndarray, key: EncryptionKey) -> None:
    height, width, _ = img.shape
    if (height, width) != (key.height, key.width):
        raise ValueError(
            f"image is {height}x{width} but key is for {key.height}x{key.width}"
        )


def _apply(img: np.ndarray, key: EncryptionKey, k1, k2) -> np.ndarray:
    grid = divide_blocks(img, key.m)
    grid = permute_blocks(grid, k1)
    n, m, _, channels = grid.blocks.shape
    perm = block_pixel_permutation(m, k2)
    shuffled = grid.blocks.reshape(n, m * m, channels)[:, perm, :]
    grid = BlockGrid(
        m=grid.m, rows=grid.rows, cols=grid.cols,
        blocks=shuffled.reshape(n, m, m, channels),
    )
    return assemble_blocks(grid)


def encrypt(img: np.ndarray, key: EncryptionKey) -> np.ndarray:
    """Encrypt an image whose dimensions match the key's geometry."""
    require_image(img)
    _check_key_match(img, key)
    return _apply(img, key, np.asarray(key.k1), np.asarray(key.k2))


def decrypt(img: np.ndarray, key: EncryptionKey) -> np.ndarray:
    """Exact inverse of encrypt: decrypt(encrypt(x, k), k) == x bit-exactly.

    Gathering with the inverted permutations undoes the forward gathers;
    because every block receives the same K2, the block and pixel stages
    commute and one pass suffices.
    """
    require_image(img)
    _check_key_match(img, key)
    inv_k1 = invert_permutation(key.k1)
    inv_k2 = invert_permutation(key.k2)
    return _apply(img, key, np.asarray(inv_k1), np.asarray(inv_k2))
