"""Exact key-count arithmetic.

The cipher's key space is N! * ((M/2)^2)! distinct (K1, K2) pairs, where
N is the block count: one factor for the block permutation, one for the
single pixel permutation shared by all sub-blocks. Counts are exact
arbitrary-precision integers; the bit size is derived from the integer
itself, never from floating-point logs.

Note the seeded generator reaches at most 2**64 of these keys; the count
below describes the cipher's definition, not the generator.
"""

from .image import check_block_geometry


def factorial_big(n: int) -> int:
    """Exact n! as an arbitrary-precision integer."""
    if n < 0:
        raise ValueError(f"factorial of negative {n}")
    result = 1
    for i in range(2, n + 1):
        result *= i
    return result


def keyspace(m: int, height: int, width: int) -> int:
    """Exact count of distinct keys for the given geometry."""
    check_block_geometry(height, width, m)
    n = (height // m) * (width // m)
    s = (m // 2) ** 2
    return factorial_big(n) * factorial_big(s)


def keyspace_bits(m: int, height: int, width: int) -> int:
    """Binary digit count of the exact key count.

    This is int.bit_length(): the unique b with 2**(b-1) <= count < 2**b,
    i.e. ceil(log2) for counts that are not powers of two. For the
    16/224/224 geometry the count has 1511 binary digits (log2 ~ 1510.84).
    """
    return keyspace(m, height, width).bit_length()
