"""Deterministic permutation keys.

A key is a pair of permutations drawn from one SplitMix64 stream per seed:
K1 reorders the M x M blocks of an image, K2 reorders pixel positions inside
each (M/2) x (M/2) sub-block. SplitMix64 is fully specified integer
arithmetic, so the same seed yields byte-identical keys on every platform.
It is NOT a cryptographic generator; at most 2**64 of the N!*((M/2)^2)!
possible keys are reachable through it.

Indices are 0-based everywhere, including the serialized key file.
"""

from dataclasses import dataclass
from typing import Sequence

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state once; return (value, new_state)."""
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)), state


class SplitMix64:
    """Stateful wrapper around splitmix64_next."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        value, self.state = splitmix64_next(self.state)
        return value

    def randbelow(self, n: int) -> int:
        # Plain modulo: bias is negligible for n << 2**64 and keeps the
        # draw reproducible with one u64 per call.
        return self.next_u64() % n

    def uniform(self, lo: float, hi: float) -> float:
        # 53 high bits -> double in [0, 1)
        u = self.next_u64() >> 11
        return lo + (hi - lo) * (u * 2.0**-53)


def fisher_yates(n: int, rng: SplitMix64) -> list[int]:
    """Keyed shuffle of [0..n-1], one modulo draw per swap."""
    if n < 1:
        raise ValueError("permutation length must be >= 1")
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.randbelow(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def invert_permutation(perm: Sequence[int]) -> list[int]:
    """Return q with q[perm[i]] = i. Raises on non-bijections."""
    n = len(perm)
    inv = [-1] * n
    for i, p in enumerate(perm):
        if not 0 <= p < n:
            raise ValueError(f"index {p} out of range for permutation of length {n}")
        if inv[p] != -1:
            raise ValueError(f"duplicate index {p} in permutation")
        inv[p] = i
    return inv


def _check_geometry(m: int, height: int, width: int) -> None:
    if m < 2 or m % 2 != 0:
        raise ValueError(f"block size must be an even integer >= 2, got {m}")
    if height < 1 or width < 1:
        raise ValueError(f"invalid image dims {height}x{width}")
    if height % m != 0 or width % m != 0:
        raise ValueError(f"dims {height}x{width} not divisible by block size {m}")


@dataclass(frozen=True)
class EncryptionKey:
    """Block permutation K1 + sub-block pixel permutation K2 with geometry.

    k1 permutes {0..N-1} with N = (height/m)*(width/m); k2 permutes
    {0..S-1} with S = (m/2)**2. Both stored as tuples so keys compare
    and hash by value.
    """

    m: int
    height: int
    width: int
    k1: tuple[int, ...]
    k2: tuple[int, ...]

    def __post_init__(self):
        _check_geometry(self.m, self.height, self.width)
        if len(self.k1) != self.n_blocks:
            raise ValueError(
                f"K1 length {len(self.k1)} != block count {self.n_blocks}"
            )
        if len(self.k2) != self.subblock_size:
            raise ValueError(
                f"K2 length {len(self.k2)} != sub-block size {self.subblock_size}"
            )
        invert_permutation(self.k1)
        invert_permutation(self.k2)

    @property
    def n_blocks(self) -> int:
        return (self.height // self.m) * (self.width // self.m)

    @property
    def subblock_size(self) -> int:
        return (self.m // 2) ** 2


def generate_key(seed: int, m: int, height: int, width: int) -> EncryptionKey:
    """Derive (K1, K2) for the given geometry from one SplitMix64 stream.

    K1 is drawn first, K2 continues the same stream, so a single 64-bit
    seed is the whole secret.
    """
    _check_geometry(m, height, width)
    rng = SplitMix64(seed)
    n = (height // m) * (width // m)
    s = (m // 2) ** 2
    k1 = fisher_yates(n, rng)
    k2 = fisher_yates(s, rng)
    return EncryptionKey(m=m, height=height, width=width, k1=tuple(k1), k2=tuple(k2))


MAGIC = "VITCRYPT-KEY"
FORMAT_VERSION = 1


def serialize_key(key: EncryptionKey) -> str:
    """Render a key in the VITCRYPT-KEY text format (LF line endings)."""
    return (
        f"{MAGIC} {FORMAT_VERSION}\n"
        f"M={key.m} H={key.height} W={key.width}\n"
        f"K1={','.join(str(i) for i in key.k1)}\n"
        f"K2={','.join(str(i) for i in key.k2)}\n"
    )


class KeyFormatError(ValueError):
    """Raised when a key file does not parse or is internally inconsistent."""


def parse_key(text: str) -> EncryptionKey:
    """Parse and validate the VITCRYPT-KEY format produced by serialize_key."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if len(lines) != 4:
        raise KeyFormatError(f"expected 4 lines, got {len(lines)}")

    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise KeyFormatError(f"bad magic line {lines[0]!r}")
    if head[1] != str(FORMAT_VERSION):
        raise KeyFormatError(f"unsupported key format version {head[1]!r}")

    geom = {}
    for field in lines[1].split():
        name, _, value = field.partition("=")
        if name not in ("M", "H", "W") or not value:
            raise KeyFormatError(f"bad geometry field {field!r}")
        try:
            geom[name] = int(value)
        except ValueError:
            raise KeyFormatError(f"non-integer geometry field {field!r}") from None
    if sorted(geom) != ["H", "M", "W"]:
        raise KeyFormatError(f"incomplete geometry line {lines[1]!r}")

    perms = []
    for lineno, label in ((2, "K1"), (3, "K2")):
        name, _, value = lines[lineno].partition("=")
        if name != label:
            raise KeyFormatError(f"expected {label}= on line {lineno + 1}")
        try:
            perms.append(tuple(int(tok) for tok in value.split(",")))
        except ValueError:
            raise KeyFormatError(f"non-integer entry in {label}") from None

    try:
        return EncryptionKey(
            m=geom["M"], height=geom["H"], width=geom["W"],
            k1=perms[0], k2=perms[1],
        )
    except ValueError as exc:
        raise KeyFormatError(str(exc)) from None
