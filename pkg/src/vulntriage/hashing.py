"""Stable 64-bit hashing used for split assignment and feature hashing.

FNV-1a is used everywhere a hash must be identical across runs, machines and
language runtimes. The exact definition (so it can be re-implemented
elsewhere): 64-bit FNV-1a with offset basis 14695981039346656037 and prime
1099511628211, applied to a byte string, all arithmetic modulo 2^64.
"""

FNV64_OFFSET = 14695981039346656037
FNV64_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes, basis: int = FNV64_OFFSET) -> int:
    """64-bit FNV-1a of ``data``, starting from ``basis``."""
    h = basis & _MASK64
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def fnv1a64_str(text: str, basis: int = FNV64_OFFSET) -> int:
    """FNV-1a over the UTF-8 encoding of ``text``."""
    return fnv1a64(text.encode("utf-8"), basis)


def seeded_token_hash(token: str, seed: int) -> int:
    """Seeded token hash: FNV-1a over the 8-byte little-endian seed, then the token bytes."""
    basis = fnv1a64((seed & _MASK64).to_bytes(8, "little"))
    return fnv1a64(token.encode("utf-8"), basis)
