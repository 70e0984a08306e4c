""" XOR-fold hashing shared by the selection tables and the prefetch engines """

from functools import lru_cache

MASK64 = (1 << 64) - 1


@lru_cache(maxsize=1 << 16)
def pc_hash(value, width):
    """Fold a 64-bit value into `width` bits.

    The value is cut into ceil(64 / width) consecutive chunks, lowest bits
    first (the last chunk zero-padded), and the chunks are XOR-ed together.

    Args:
        value (int): 64-bit value, usually a PC or a block address.
        width (int): output width in bits, 1..64.

    Returns:
        int: the folded value, in [0, 2**width).
    """
    if not 1 <= width <= 64:
        raise ValueError(f"hash width must be in 1..64, got {width}")
    value &= MASK64
    mask = (1 << width) - 1
    folded = 0
    for shift in range(0, 64, width):
        folded ^= (value >> shift) & mask
    return folded


def log2_exact(n):
    """log2 of a power of two; raises ValueError otherwise."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1
