"""Keyed perceptual image encryption with leakage metrics and encoder checks."""

from .cipher import (
    block_pixel_permutation,
    decrypt,
    encrypt,
    expand_pixel_permutation,
    permute_blocks,
    shuffle_subblock_pixels,
)
from .image import (
    BlockGrid,
    FormatError,
    assemble_blocks,
    divide_blocks,
    load_cifar10_batch,
    load_ppm,
    require_image,
    resize_nearest,
    save_ppm,
)
from .keys import (
    EncryptionKey,
    KeyFormatError,
    SplitMix64,
    fisher_yates,
    generate_key,
    invert_permutation,
    parse_key,
    serialize_key,
    splitmix64_next,
)
from .keyspace import factorial_big, keyspace, keyspace_bits
from .metrics import LeakageReport, histogram, leakage_report, ssim
from .vit import (
    EquivarianceReport,
    ShuffleAbsorptionResult,
    ToyViT,
    absorb_shuffle,
    check_patch_order_invariance,
    check_shuffle_absorption,
    embedding_fd_jacobian_error,
    encoder_forward,
    image_to_patches,
    init_toy_vit,
    key_patch_permutation,
    run_equivariance_suite,
)

__version__ = "0.1.0"
