import numpy as np
import pytest

from vitcrypt.cipher import (
    block_pixel_permutation,
    decrypt,
    encrypt,
    expand_pixel_permutation,
    permute_blocks,
    shuffle_subblock_pixels,
)
from vitcrypt.image import divide_blocks
from vitcrypt.keys import EncryptionKey, generate_key, invert_permutation

from helpers import random_image, ref_decrypt, ref_encrypt


def identity_key(m, height, width):
    n = (height // m) * (width // m)
    s = (m // 2) ** 2
    return EncryptionKey(
        m=m, height=height, width=width,
        k1=tuple(range(n)), k2=tuple(range(s)),
    )


class TestPermuteBlocks:
    def test_identity(self, rng):
        grid = divide_blocks(random_image(rng, 8, 8, 3), 4)
        out = permute_blocks(grid, [0, 1, 2, 3])
        assert np.array_equal(out.blocks, grid.blocks)

    def test_gather_semantics(self, rng):
        grid = divide_blocks(random_image(rng, 8, 8, 3), 4)
        out = permute_blocks(grid, [2, 0, 3, 1])
        # [A,B,C,D] -> [C,A,D,B]
        for i, src in enumerate([2, 0, 3, 1]):
            assert np.array_equal(out.blocks[i], grid.blocks[src])

    def test_permute_then_inverse_restores(self, rng):
        grid = divide_blocks(random_image(rng, 16, 16, 1), 4)
        k1 = [3, 1, 0, 2, 7, 6, 5, 4, 11, 9, 10, 8, 15, 12, 13, 14]
        back = permute_blocks(permute_blocks(grid, k1), invert_permutation(k1))
        assert np.array_equal(back.blocks, grid.blocks)

    def test_length_mismatch_rejected(self, rng):
        grid = divide_blocks(random_image(rng, 8, 8, 3), 4)
        with pytest.raises(ValueError):
            permute_blocks(grid, [0, 1, 2])


class TestShuffleSubblockPixels:
    def test_m2_forced_identity(self, rng):
        block = random_image(rng, 2, 2, 3)
        assert np.array_equal(shuffle_subblock_pixels(block, [0]), block)

    def test_quadrant_gather_example(self):
        # gray quadrant [1,2,3,4] row-major under K2=[3,0,2,1] -> [4,1,3,2]
        block = np.zeros((4, 4, 1), dtype=np.uint8)
        block[0, 0, 0], block[0, 1, 0], block[1, 0, 0], block[1, 1, 0] = 1, 2, 3, 4
        out = shuffle_subblock_pixels(block, [3, 0, 2, 1])
        assert [out[0, 0, 0], out[0, 1, 0], out[1, 0, 0], out[1, 1, 0]] == [4, 1, 3, 2]

    def test_all_four_quadrants_move_identically(self, rng):
        block = random_image(rng, 4, 4, 3)
        out = shuffle_subblock_pixels(block, [3, 0, 2, 1])
        for oy, ox in ((0, 0), (0, 2), (2, 0), (2, 2)):
            quad = block[oy : oy + 2, ox : ox + 2].reshape(4, 3)
            moved = out[oy : oy + 2, ox : ox + 2].reshape(4, 3)
            assert np.array_equal(moved, quad[[3, 0, 2, 1]])

    def test_shuffle_then_inverse_restores(self, rng):
        block = random_image(rng, 8, 8, 3)
        k2 = [5, 0, 14, 3, 2, 8, 15, 9, 1, 6, 12, 4, 13, 7, 10, 11]
        back = shuffle_subblock_pixels(
            shuffle_subblock_pixels(block, k2), invert_permutation(k2)
        )
        assert np.array_equal(back, block)

    def test_channels_move_together(self, rng):
        block = random_image(rng, 4, 4, 3)
        out = shuffle_subblock_pixels(block, [1, 2, 3, 0])
        in_pixels = {tuple(px) for px in block.reshape(-1, 3)}
        out_pixels = {tuple(px) for px in out.reshape(-1, 3)}
        assert in_pixels == out_pixels

    def test_size_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            shuffle_subblock_pixels(random_image(rng, 4, 4, 3), [0, 1, 2])


class TestPixelPermutationExpansion:
    def test_block_permutation_matches_shuffle(self, rng):
        block = random_image(rng, 8, 8, 3)
        k2 = [5, 0, 14, 3, 2, 8, 15, 9, 1, 6, 12, 4, 13, 7, 10, 11]
        perm = block_pixel_permutation(8, k2)
        via_perm = block.reshape(64, 3)[perm].reshape(8, 8, 3)
        assert np.array_equal(via_perm, shuffle_subblock_pixels(block, k2))

    def test_expand_keeps_channels_adjacent(self):
        spatial = np.array([2, 0, 1])
        full = expand_pixel_permutation(spatial, 3)
        assert full.tolist() == [6, 7, 8, 0, 1, 2, 3, 4, 5]


# frozen from the independent per-pixel reference implementation
TRACE_4X4_M2_K1_2031 = [
    [8, 9, 0, 1],
    [12, 13, 4, 5],
    [10, 11, 2, 3],
    [14, 15, 6, 7],
]


class TestEncryptDecrypt:
    def test_identity_key_is_noop(self, rng):
        img = random_image(rng, 32, 32, 3)
        assert np.array_equal(encrypt(img, identity_key(8, 32, 32)), img)

    def test_frozen_4x4_trace(self):
        img = np.arange(16, dtype=np.uint8).reshape(4, 4, 1)
        key = EncryptionKey(m=2, height=4, width=4, k1=(2, 0, 3, 1), k2=(0,))
        assert encrypt(img, key)[:, :, 0].tolist() == TRACE_4X4_M2_K1_2031

    def test_matches_reference_implementation(self, rng):
        for m, height, width, channels in ((4, 8, 12, 3), (8, 16, 16, 1), (6, 12, 18, 3)):
            img = random_image(rng, height, width, channels)
            key = generate_key(rng.integers(2**63), m, height, width)
            assert np.array_equal(
                encrypt(img, key), ref_encrypt(img, m, list(key.k1), list(key.k2))
            )
            assert np.array_equal(
                decrypt(img, key), ref_decrypt(img, m, list(key.k1), list(key.k2))
            )

    def test_round_trip_bit_exact(self, rng):
        for seed in range(10):
            key = generate_key(seed, 16, 224, 224)
            img = random_image(rng, 224, 224, 3)
            assert np.array_equal(decrypt(encrypt(img, key), key), img)

    def test_round_trip_gray(self, rng):
        key = generate_key(17, 8, 64, 64)
        img = random_image(rng, 64, 64, 1)
        assert np.array_equal(decrypt(encrypt(img, key), key), img)

    def test_histogram_preserved(self, rng):
        img = random_image(rng, 64, 64, 3)
        enc = encrypt(img, generate_key(4, 16, 64, 64))
        for c in range(3):
            assert np.array_equal(
                np.bincount(img[:, :, c].reshape(-1), minlength=256),
                np.bincount(enc[:, :, c].reshape(-1), minlength=256),
            )

    def test_deterministic(self, rng):
        img = random_image(rng, 64, 64, 3)
        key = generate_key(11, 16, 64, 64)
        assert np.array_equal(encrypt(img, key), encrypt(img, key))

    def test_key_sensitivity(self, rng):
        img = random_image(rng, 32, 32, 3)  # non-constant with overwhelming probability
        for pair in range(100):
            a = generate_key(2 * pair, 8, 32, 32)  # N=16
            b = generate_key(2 * pair + 1, 8, 32, 32)
            assert not np.array_equal(encrypt(img, a), encrypt(img, b))

    def test_wrong_key_decrypt_preserves_histogram_but_not_image(self, rng):
        img = random_image(rng, 64, 64, 3)
        key = generate_key(100, 16, 64, 64)
        wrong = generate_key(101, 16, 64, 64)
        garbled = decrypt(encrypt(img, key), wrong)
        assert not np.array_equal(garbled, img)
        for c in range(3):
            assert np.array_equal(
                np.sort(garbled[:, :, c], axis=None), np.sort(img[:, :, c], axis=None)
            )

    def test_decrypt_with_equal_key_from_other_seed_object(self, rng):
        img = random_image(rng, 32, 32, 1)
        key = generate_key(55, 8, 32, 32)
        clone = EncryptionKey(m=8, height=32, width=32, k1=key.k1, k2=key.k2)
        assert np.array_equal(decrypt(encrypt(img, key), clone), img)

    def test_block_local_confinement_with_identity_k1(self, rng):
        m, height, width = 8, 32, 32
        n = (height // m) * (width // m)
        key = EncryptionKey(
            m=m, height=height, width=width,
            k1=tuple(range(n)),
            k2=tuple(generate_key(3, m, height, width).k2),
        )
        img = np.zeros((height, width, 1), dtype=np.uint8)
        # tag every pixel with its block index
        for r in range(height // m):
            for c in range(width // m):
                img[r * m : (r + 1) * m, c * m : (c + 1) * m] = r * (width // m) + c
        enc = encrypt(img, key)
        assert np.array_equal(enc, img)  # block tags cannot leave their block

    def test_geometry_mismatch_rejected(self, rng):
        key = generate_key(1, 16, 224, 224)
        with pytest.raises(ValueError):
            encrypt(random_image(rng, 112, 112, 3), key)
        with pytest.raises(ValueError):
            decrypt(random_image(rng, 112, 112, 3), key)
