"""Shared test helpers: synthetic data and independent reference implementations.

The reference implementations deliberately avoid the package's vectorized
code paths (explicit per-pixel loops, Counter histograms, direct window
sums) so they can serve as oracles for the fast implementations.
"""

from collections import Counter

import numpy as np

# ---------------------------------------------------------------------------
# synthetic data


def random_image(rng: np.random.Generator, height: int, width: int, channels: int = 3) -> np.ndarray:
    return rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8)


def scene_image(rng: np.random.Generator, size: int = 32) -> np.ndarray:
    """Object-like thumbnail: gradient background, patterned shapes, grain.

    Mimics the statistics of 32x32 natural photo thumbnails (global
    structure, fine internal patterns, sensor noise).
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / (size - 1)
    base = rng.uniform(40, 215, size=3)
    tilt = rng.uniform(-70, 70, size=(2, 3))
    img = base + yy[..., None] * tilt[0] + xx[..., None] * tilt[1]
    iy, ix = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(4, 9))):
        color = rng.uniform(10, 245, size=3)
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        ry, rx = rng.uniform(0.06, 0.35, size=2)
        if rng.integers(2):
            mask = (((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2) <= 1.0
        else:
            mask = (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
        fill = np.broadcast_to(color, (size, size, 3)).copy()
        style = rng.integers(3)
        if style == 1:
            period = int(rng.integers(2, 5))
            axis = iy if rng.integers(2) else ix
            stripe = ((axis // max(period // 2, 1)) % 2).astype(np.float64)
            fill = fill * (0.55 + 0.45 * stripe[..., None])
        elif style == 2:
            period = int(rng.integers(1, 3))
            check = (((iy // period) + (ix // period)) % 2).astype(np.float64)
            fill = fill * (0.55 + 0.45 * check[..., None])
        img[mask] = fill[mask] * rng.uniform(0.8, 1.0) + img[mask] * rng.uniform(0.0, 0.2)
    img += rng.normal(0.0, rng.uniform(8.0, 16.0), size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def planarize_cifar_record(label: int, img: np.ndarray) -> bytes:
    """Inverse of the batch loader's record conversion (oracle form)."""
    assert img.shape == (32, 32, 3)
    planes = bytearray([label])
    for channel in range(3):
        for y in range(32):
            for x in range(32):
                planes.append(int(img[y, x, channel]))
    return bytes(planes)


def make_cifar_batch(images: list[np.ndarray], labels: list[int]) -> bytes:
    """Assemble 32x32x3 images into CIFAR-10 binary batch bytes."""
    out = bytearray()
    for label, img in zip(labels, images):
        out += bytes([label])
        out += np.ascontiguousarray(img.transpose(2, 0, 1)).tobytes()
    return bytes(out)


def scene_batch(n: int, seed: int) -> tuple[bytes, list[np.ndarray], list[int]]:
    rng = np.random.default_rng(seed)
    images = [scene_image(rng) for _ in range(n)]
    labels = [int(rng.integers(0, 10)) for _ in range(n)]
    return make_cifar_batch(images, labels), images, labels


# ---------------------------------------------------------------------------
# reference cipher: explicit per-pixel loops


def ref_encrypt(img: np.ndarray, m: int, k1, k2) -> np.ndarray:
    height, width, channels = img.shape
    cols_b = width // m
    n = (height // m) * cols_b

    def get_block(source, bi):
        r, c = divmod(bi, cols_b)
        return [
            [list(source[r * m + y, c * m + x]) for x in range(m)] for y in range(m)
        ]

    blocks = [get_block(img, i) for i in range(n)]
    blocks = [blocks[k1[i]] for i in range(n)]  # gather

    half = m // 2
    s = half * half
    out = np.zeros_like(img)
    for i, block in enumerate(blocks):
        shuffled = [[None] * m for _ in range(m)]
        for oy, ox in ((0, 0), (0, half), (half, 0), (half, half)):
            flat = [block[oy + k // half][ox + k % half] for k in range(s)]
            moved = [flat[k2[k]] for k in range(s)]
            for k in range(s):
                shuffled[oy + k // half][ox + k % half] = moved[k]
        r, c = divmod(i, cols_b)
        for y in range(m):
            for x in range(m):
                out[r * m + y, c * m + x] = shuffled[y][x]
    return out


def ref_invert(perm):
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return inv


def ref_decrypt(img: np.ndarray, m: int, k1, k2) -> np.ndarray:
    n = (img.shape[0] // m) * (img.shape[1] // m)
    s = (m // 2) ** 2
    step = ref_encrypt(img, m, list(range(n)), ref_invert(k2))
    return ref_encrypt(step, m, ref_invert(k1), list(range(s)))


# ---------------------------------------------------------------------------
# reference metrics


def ref_histogram(img: np.ndarray) -> list[list[int]]:
    channels = img.shape[2]
    result = []
    for c in range(channels):
        counts = Counter(int(v) for v in img[:, :, c].reshape(-1))
        result.append([counts.get(v, 0) for v in range(256)])
    return result


def ref_ssim_gray(x: np.ndarray, y: np.ndarray) -> float:
    """Direct per-window SSIM on 2-D float planes (slow, for small images)."""
    size, sigma = 11, 1.5
    offsets = np.arange(size) - (size - 1) / 2.0
    k1d = np.exp(-(offsets**2) / (2 * sigma**2))
    kernel = np.outer(k1d, k1d)
    kernel /= kernel.sum()
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    values = []
    for i in range(x.shape[0] - size + 1):
        for j in range(x.shape[1] - size + 1):
            wx = x[i : i + size, j : j + size]
            wy = y[i : i + size, j : j + size]
            mx = float((kernel * wx).sum())
            my = float((kernel * wy).sum())
            vx = float((kernel * wx * wx).sum()) - mx * mx
            vy = float((kernel * wy * wy).sum()) - my * my
            cxy = float((kernel * wx * wy).sum()) - mx * my
            values.append(
                ((2 * mx * my + c1) * (2 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(values))


def stirling_log2_factorial(n: int) -> float:
    """Stirling series approximation of log2(n!)."""
    if n < 2:
        return 0.0
    return (
        n * np.log(n) - n + 0.5 * np.log(2 * np.pi * n) + 1.0 / (12 * n)
    ) / np.log(2.0)
