"""Minimal transformer encoder for numeric equivariance checks.

Two algebraic facts justify pairing the cipher's block size with a
patch-embedding classifier whose patch size matches:

  * patch-order invariance: without (or with co-permuted) position
    embeddings, permuting input patches permutes the encoder's output
    tokens identically and leaves the class token unchanged;
  * shuffle absorption: the fixed pixel permutation that K2 induces on a
    patch can be folded into the patch-embedding matrix by gathering its
    columns, so embeddings of shuffled patches equal embeddings of plain
    patches.

This module verifies both numerically on a small from-scratch pre-norm
encoder (float64, fixed reduction order, no training). Model parameters
are drawn i.i.d. uniform in [-0.1, 0.1] from one SplitMix64 stream in a
fixed traversal order, so a seed pins every weight.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf

from .cipher import block_pixel_permutation, expand_pixel_permutation
from .image import divide_blocks, require_image
from .keys import (
    EncryptionKey,
    SplitMix64,
    fisher_yates,
    generate_key,
    invert_permutation,
)

INIT_SCALE = 0.1
LAYER_NORM_EPS = 1e-5


@dataclass
class EncoderLayer:
    ln1_scale: np.ndarray
    ln1_shift: np.ndarray
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    ln2_scale: np.ndarray
    ln2_shift: np.ndarray
    mlp_w1: np.ndarray
    mlp_b1: np.ndarray
    mlp_w2: np.ndarray
    mlp_b2: np.ndarray


@dataclass
class ToyViT:
    """Patch-embedding encoder: geometry (m, channels) ties it to the cipher."""

    m: int
    channels: int
    dim: int
    heads: int
    patch_embed: np.ndarray  # (dim, patch_dim)
    embed_bias: np.ndarray  # (dim,)
    cls_token: np.ndarray  # (dim,)
    pos_embed: np.ndarray  # (n_patches + 1, dim)
    layers: tuple[EncoderLayer, ...]

    @property
    def patch_dim(self) -> int:
        return self.m * self.m * self.channels

    @property
    def n_patches(self) -> int:
        return self.pos_embed.shape[0] - 1


def _draw(rng: SplitMix64, *shape: int) -> np.ndarray:
    flat = np.array(
        [rng.uniform(-INIT_SCALE, INIT_SCALE) for _ in range(int(np.prod(shape)))]
    )
    return flat.reshape(shape)


def init_toy_vit(
    seed: int,
    m: int = 8,
    channels: int = 3,
    dim: int = 64,
    heads: int = 4,
    depth: int = 2,
    n_patches: int = 16,
) -> ToyViT:
    """Build a deterministic encoder; same seed, same parameters.

    Traversal order of the draw stream: patch_embed (row-major),
    embed_bias, cls_token, pos_embed, then per layer ln1 scale/shift,
    Wq, Wk, Wv, Wo, ln2 scale/shift, MLP w1/b1/w2/b2.
    """
    if dim % heads != 0:
        raise ValueError(f"dim {dim} not divisible by heads {heads}")
    if m < 2 or m % 2 != 0:
        raise ValueError(f"patch side must be even and >= 2, got {m}")
    rng = SplitMix64(seed)
    patch_dim = m * m * channels
    hidden = 4 * dim
    patch_embed = _draw(rng, dim, patch_dim)
    embed_bias = _draw(rng, dim)
    cls_token = _draw(rng, dim)
    pos_embed = _draw(rng, n_patches + 1, dim)
    layers = tuple(
        EncoderLayer(
            ln1_scale=_draw(rng, dim),
            ln1_shift=_draw(rng, dim),
            wq=_draw(rng, dim, dim),
            wk=_draw(rng, dim, dim),
            wv=_draw(rng, dim, dim),
            wo=_draw(rng, dim, dim),
            ln2_scale=_draw(rng, dim),
            ln2_shift=_draw(rng, dim),
            mlp_w1=_draw(rng, hidden, dim),
            mlp_b1=_draw(rng, hidden),
            mlp_w2=_draw(rng, dim, hidden),
            mlp_b2=_draw(rng, dim),
        )
        for _ in range(depth)
    )
    return ToyViT(
        m=m, channels=channels, dim=dim, heads=heads,
        patch_embed=patch_embed, embed_bias=embed_bias,
        cls_token=cls_token, pos_embed=pos_embed, layers=layers,
    )


def _layer_norm(x: np.ndarray, scale: np.ndarray, shift: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return scale * (x - mean) / np.sqrt(var + LAYER_NORM_EPS) + shift


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def _attention(layer: EncoderLayer, x: np.ndarray, heads: int):
    tokens, dim = x.shape
    head_dim = dim // heads

    def split(mat):  # (T, dim) -> (heads, T, head_dim)
        return mat.reshape(tokens, heads, head_dim).transpose(1, 0, 2)

    q = split(x @ layer.wq)
    k = split(x @ layer.wk)
    v = split(x @ layer.wv)
    attn = _softmax_rows(q @ k.transpose(0, 2, 1) / np.sqrt(head_dim))
    ctx = (attn @ v).transpose(1, 0, 2).reshape(tokens, dim)
    return ctx @ layer.wo, attn


def _mlp(layer: EncoderLayer, x: np.ndarray) -> np.ndarray:
    return _gelu(x @ layer.mlp_w1.T + layer.mlp_b1) @ layer.mlp_w2.T + layer.mlp_b2


def forward_with_attention(
    model: ToyViT, patches: np.ndarray, use_pos: bool = True
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Run the encoder, also returning every layer's attention maps."""
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2 or patches.shape[1] != model.patch_dim:
        raise ValueError(
            f"expected (n, {model.patch_dim}) patches, got {patches.shape}"
        )
    if use_pos and patches.shape[0] != model.n_patches:
        raise ValueError(
            f"{patches.shape[0]} patches but {model.n_patches} position slots"
        )
    tokens = np.concatenate(
        [model.cls_token[None, :], patches @ model.patch_embed.T + model.embed_bias]
    )
    if use_pos:
        tokens = tokens + model.pos_embed
    maps = []
    for layer in model.layers:
        ctx, attn = _attention(layer, _layer_norm(tokens, layer.ln1_scale, layer.ln1_shift), model.heads)
        maps.append(attn)
        tokens = tokens + ctx
        tokens = tokens + _mlp(layer, _layer_norm(tokens, layer.ln2_scale, layer.ln2_shift))
    return tokens, maps


def encoder_forward(model: ToyViT, patches: np.ndarray, use_pos: bool = True) -> np.ndarray:
    """Encode [class token; patches] into (n + 1, dim) output tokens."""
    tokens, _ = forward_with_attention(model, patches, use_pos)
    return tokens


def image_to_patches(img: np.ndarray, m: int) -> np.ndarray:
    """Flatten an image's M x M blocks into (N, M*M*C) rows scaled to [0, 1].

    Uses the cipher's block order and flattening (row-major, channels of a
    pixel adjacent), so pixel permutations expand to patch indices via
    expand_pixel_permutation without any convention drift.
    """
    require_image(img)
    grid = divide_blocks(img, m)
    n = grid.n_blocks
    return grid.blocks.reshape(n, -1).astype(np.float64) / 255.0


def check_patch_order_invariance(
    model: ToyViT, patches: np.ndarray, perm, positions: str = "off"
) -> float:
    """Max-abs deviation between permuted-input outputs and permuted outputs.

    positions:
      "off"        no position embeddings on either side
      "copermute"  positions reordered exactly like the patches
      "fixed"      positions left in place (the control: breaks invariance)

    Near-zero (float reassociation only) for "off"/"copermute"; large for
    "fixed" whenever the permutation actually moves a patch.
    """
    perm = np.asarray(perm, dtype=np.int64)
    invert_permutation(perm.tolist())
    patches = np.asarray(patches, dtype=np.float64)
    if perm.shape[0] != patches.shape[0]:
        raise ValueError(
            f"permutation of {perm.shape[0]} patches but got {patches.shape[0]}"
        )
    permuted = patches[perm]
    if positions == "off":
        base = encoder_forward(model, patches, use_pos=False)
        moved = encoder_forward(model, permuted, use_pos=False)
    elif positions == "copermute":
        pos = model.pos_embed.copy()
        pos[1:] = model.pos_embed[1:][perm]
        base = encoder_forward(model, patches, use_pos=True)
        moved = encoder_forward(replace(model, pos_embed=pos), permuted, use_pos=True)
    elif positions == "fixed":
        base = encoder_forward(model, patches, use_pos=True)
        moved = encoder_forward(model, permuted, use_pos=True)
    else:
        raise ValueError(f"unknown positions mode {positions!r}")
    cls_dev = np.abs(moved[0] - base[0]).max()
    tok_dev = np.abs(moved[1:] - base[1:][perm]).max()
    return float(max(cls_dev, tok_dev))


def absorb_shuffle(patch_embed: np.ndarray, pixel_perm) -> np.ndarray:
    """Fold a patch-index permutation into the embedding matrix.

    Returns E' with columns E'[:, k] = E[:, perm[k]], which satisfies
    E' @ shuffle(v) == E @ v (exactly, up to dot-product reassociation)
    for shuffle(v)[k] = v[perm[k]].
    """
    pixel_perm = np.asarray(pixel_perm, dtype=np.int64)
    invert_permutation(pixel_perm.tolist())
    if pixel_perm.shape[0] != patch_embed.shape[1]:
        raise ValueError(
            f"permutation length {pixel_perm.shape[0]} != patch dim {patch_embed.shape[1]}"
        )
    # contiguous so downstream matmuls take the same BLAS path as the original
    return np.ascontiguousarray(patch_embed[:, pixel_perm])


def key_patch_permutation(key: EncryptionKey, channels: int) -> np.ndarray:
    """Full-patch sample permutation induced by the key's K2 shuffle."""
    spatial = block_pixel_permutation(key.m, np.asarray(key.k2))
    return expand_pixel_permutation(spatial, channels)


@dataclass
class ShuffleAbsorptionResult:
    embedding_dev: float  # max |E' shuffle(v) - E v| over all patches
    forward_dev: float  # max deviation of full encoder outputs


def check_shuffle_absorption(
    model: ToyViT,
    patches: np.ndarray,
    key: EncryptionKey,
    absorb_key: EncryptionKey | None = None,
) -> ShuffleAbsorptionResult:
    """Shuffle patches with `key`, absorb `absorb_key`'s shuffle into E.

    With absorb_key = key (the default) both deviations are float noise;
    passing a different absorb_key is the wrong-key control and should
    leave a large deviation.
    """
    if key.m != model.m:
        raise ValueError(f"key block size {key.m} != model patch side {model.m}")
    if absorb_key is None:
        absorb_key = key
    if absorb_key.m != model.m:
        raise ValueError(
            f"absorb key block size {absorb_key.m} != model patch side {model.m}"
        )
    patches = np.asarray(patches, dtype=np.float64)

    shuffled = np.ascontiguousarray(
        patches[:, key_patch_permutation(key, model.channels)]
    )
    absorbed = absorb_shuffle(
        model.patch_embed, key_patch_permutation(absorb_key, model.channels)
    )
    embedding_dev = float(
        np.abs(shuffled @ absorbed.T - patches @ model.patch_embed.T).max()
    )
    adapted = replace(model, patch_embed=absorbed)
    forward_dev = float(
        np.abs(
            encoder_forward(adapted, shuffled, use_pos=True)
            - encoder_forward(model, patches, use_pos=True)
        ).max()
    )
    return ShuffleAbsorptionResult(embedding_dev=embedding_dev, forward_dev=forward_dev)


@dataclass
class EquivarianceReport:
    """Aggregated deviations over a trial batch; see run_equivariance_suite."""

    invariance_off: float  # max over trials, positions off
    invariance_copermuted: float  # max over trials, positions co-permuted
    control_fixed_positions: float  # min over trials, positions fixed (should be big)
    embedding_dev: float  # max over keys
    forward_dev: float  # max over keys
    wrong_key_dev: float  # min over keys (should be big)

    def passes(
        self,
        invariance_tol: float = 1e-5,
        embedding_tol: float = 1e-6,
        forward_tol: float = 1e-5,
        control_min: float = 1e-2,
    ) -> bool:
        return (
            self.invariance_off <= invariance_tol
            and self.invariance_copermuted <= invariance_tol
            and self.control_fixed_positions > control_min
            and self.embedding_dev <= embedding_tol
            and self.forward_dev <= forward_tol
            and self.wrong_key_dev > control_min
        )


def run_equivariance_suite(
    seed: int = 0,
    m: int = 8,
    channels: int = 3,
    dim: int = 64,
    heads: int = 4,
    depth: int = 2,
    n_patches: int = 16,
    trials: int = 20,
) -> EquivarianceReport:
    """Exercise both checks over `trials` random permutations and keys.

    Patch-order invariance uses fresh random patches and permutations per
    trial in all three position modes; shuffle absorption uses one fresh
    key per trial plus a differently-seeded wrong key as control. The
    worst (for the properties) / best (for the controls) deviations are
    aggregated so a passing report certifies every trial.
    """
    model = init_toy_vit(
        seed, m=m, channels=channels, dim=dim, heads=heads,
        depth=depth, n_patches=n_patches,
    )
    rng = SplitMix64(seed ^ 0xA5A5A5A5A5A5A5A5)
    patch_dim = m * m * channels
    inv_off = inv_co = emb_dev = fwd_dev = 0.0
    control_fixed = wrong_key = float("inf")

    for trial in range(trials):
        patches = np.array(
            [rng.uniform(0.0, 1.0) for _ in range(n_patches * patch_dim)]
        ).reshape(n_patches, patch_dim)
        perm = fisher_yates(n_patches, rng)
        if perm == sorted(perm):  # an identity draw would make the control vacuous
            perm = perm[1:] + perm[:1]
        inv_off = max(inv_off, check_patch_order_invariance(model, patches, perm, "off"))
        inv_co = max(
            inv_co, check_patch_order_invariance(model, patches, perm, "copermute")
        )
        control_fixed = min(
            control_fixed, check_patch_order_invariance(model, patches, perm, "fixed")
        )

        key = generate_key(rng.next_u64(), m, m, n_patches * m)
        wrong = generate_key(rng.next_u64(), m, m, n_patches * m)
        while wrong.k2 == key.k2:
            wrong = generate_key(rng.next_u64(), m, m, n_patches * m)
        result = check_shuffle_absorption(model, patches, key)
        emb_dev = max(emb_dev, result.embedding_dev)
        fwd_dev = max(fwd_dev, result.forward_dev)
        control = check_shuffle_absorption(model, patches, key, absorb_key=wrong)
        wrong_key = min(wrong_key, control.forward_dev)

    return EquivarianceReport(
        invariance_off=inv_off,
        invariance_copermuted=inv_co,
        control_fixed_positions=control_fixed,
        embedding_dev=emb_dev,
        forward_dev=fwd_dev,
        wrong_key_dev=wrong_key,
    )


def embedding_fd_jacobian_error(
    model: ToyViT, patch: np.ndarray, directions: np.ndarray, eps: float = 1e-6
) -> float:
    """Relative error of finite-difference vs analytic embedding Jacobian action.

    The embedding is linear, so (f(v + eps u) - f(v - eps u)) / (2 eps)
    should match E @ u to float precision; checking it confirms the map
    a training loop would adapt is smooth in every probed direction.
    """
    patch = np.asarray(patch, dtype=np.float64)
    worst = 0.0
    for direction in np.atleast_2d(np.asarray(directions, dtype=np.float64)):
        fd = (
            (patch + eps * direction) @ model.patch_embed.T
            - (patch - eps * direction) @ model.patch_embed.T
        ) / (2.0 * eps)
        analytic = direction @ model.patch_embed.T
        scale = max(float(np.linalg.norm(analytic)), 1e-12)
        worst = max(worst, float(np.linalg.norm(fd - analytic)) / scale)
    return worst
