"""Canonical length-prefixed encoding and XOF helpers.

Every value that is hashed (oracle inputs, public keys, ciphertexts, seeds)
goes through :func:`encode` first. Layout, one tag byte then payload:

    None          b"N"
    bool          b"b" + 0x00 | 0x01
    int           b"i" + u32be(len) + big-endian two's complement, minimal length
    bytes         b"B" + u32be(len) + data
    str           b"S" + u32be(len) + utf-8
    tuple / list  b"T" + u32be(count) + encode(item) ...
    ndarray       b"A" + encode(shape) + encode(flat tuple of ints)

For non-negative ints the encodings sort lexicographically in the same order
as the integers themselves (shorter length prefix first, then big-endian),
so byte order and numeric order agree on message spaces.

The XOF is SHAKE-256 and the fixed hash is SHA3-256, both from hashlib.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def _u32(n: int) -> bytes:
    return struct.pack(">I", n)


def encode(obj) -> bytes:
    if obj is None:
        return b"N"
    if isinstance(obj, (bool, np.bool_)):
        return b"b" + (b"\x01" if obj else b"\x00")
    if isinstance(obj, (int, np.integer)):
        x = int(obj)
        n = (x.bit_length() + 8) // 8
        return b"i" + _u32(n) + x.to_bytes(n, "big", signed=True)
    if isinstance(obj, (bytes, bytearray)):
        return b"B" + _u32(len(obj)) + bytes(obj)
    if isinstance(obj, str):
        raw = obj.encode("utf-8")
        return b"S" + _u32(len(raw)) + raw
    if isinstance(obj, np.ndarray):
        return b"A" + encode(tuple(obj.shape)) + encode(tuple(int(v) for v in obj.ravel()))
    if isinstance(obj, (tuple, list)):
        return b"T" + _u32(len(obj)) + b"".join(encode(v) for v in obj)
    raise TypeError(f"no canonical encoding for {type(obj).__name__}")


def xof(data: bytes, n: int) -> bytes:
    return hashlib.shake_256(data).digest(n)


def hash_bytes(data: bytes) -> bytes:
    return hashlib.sha3_256(data).digest()


class XofStream:
    """Byte stream read sequentially from SHAKE-256(prefix)."""

    def __init__(self, prefix: bytes, chunk: int = 64):
        self._prefix = prefix
        self._buf = xof(prefix, chunk)
        self._pos = 0

    def read(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._buf):
            self._buf = xof(self._prefix, max(2 * len(self._buf), end))
        out = self._buf[self._pos:end]
        self._pos = end
        return out


def sample_below(stream: XofStream, size: int) -> int:
    """Uniform integer in range(size) by rejection sampling.

    Each attempt reads ceil(k/8) bytes (k = bit length of size-1), takes them
    as a little-endian integer and keeps the low k bits. For power-of-two
    sizes this is plain truncation and never rejects.
    """
    if size < 1:
        raise ValueError("output space must be non-empty")
    k = (size - 1).bit_length()
    if k == 0:
        return 0
    nbytes = (k + 7) // 8
    mask = (1 << k) - 1
    while True:
        v = int.from_bytes(stream.read(nbytes), "little") & mask
        if v < size:
            return v


def derive_seed(master: int, *labels) -> int:
    """64-bit child seed: first 8 bytes of SHAKE-256(encode((tag, master, labels)))."""
    data = encode(("fo-lab/seed", int(master)) + tuple(labels))
    return int.from_bytes(xof(data, 8), "little")


def derive_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))


def random_bits(rng: np.random.Generator, bits: int) -> int:
    """Uniform integer with the given bit length budget, drawn from rng bytes."""
    if bits <= 0:
        return 0
    raw = rng.bytes((bits + 7) // 8)
    return int.from_bytes(raw, "little") & ((1 << bits) - 1)
