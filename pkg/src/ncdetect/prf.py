"""Keyed pseudorandom function mapping (key, space id, counters) to field elements.

The core is keyed BLAKE2b with a 128-bit output block. Inputs are encoded
injectively: 16-byte space id, a length byte, two fixed-width 8-byte counters
(missing positions zero-filled, disambiguated by the length byte), and a 4-byte
rejection counter. Outputs are reduced to [0, q) by rejection sampling on the
128-bit block, so every field element is exactly equally likely.

Counters must stay below 2^32; the high 32 bits of the first counter are
reserved for derivation epochs and tag-slot indices (see intermac/protocols).
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass

import numpy as np

SPACE_ID_BYTES = 16
_BLOCK_BITS = 128
_BLOCK_BYTES = _BLOCK_BITS // 8
COUNTER_LIMIT = 1 << 32


@dataclass(frozen=True)
class PrfKey:
    material: bytes

    def __post_init__(self):
        if len(self.material) != 32:
            raise ValueError("PRF key must be 32 bytes")


def random_key() -> PrfKey:
    return PrfKey(secrets.token_bytes(32))


def key_from_seed(seed: bytes, label: bytes = b"prf") -> PrfKey:
    """Deterministic key derivation for reproducible runs."""
    return PrfKey(hashlib.blake2b(seed, key=label[:64], digest_size=32).digest())


def _encode(space_id: bytes, idx: tuple[int, ...], reject: int) -> bytes:
    if len(space_id) != SPACE_ID_BYTES:
        raise ValueError(f"space id must be {SPACE_ID_BYTES} bytes")
    if not 1 <= len(idx) <= 2:
        raise ValueError("idx takes one or two counters")
    parts = [space_id, bytes([len(idx)])]
    padded = tuple(idx) + (0,) * (2 - len(idx))
    for c in padded:
        c = int(c)
        if not 0 <= c < 1 << 64:
            raise ValueError(f"counter out of range: {c}")
        parts.append(c.to_bytes(8, "big"))
    parts.append(reject.to_bytes(4, "big"))
    return b"".join(parts)


def prf_eval(key: PrfKey, space_id: bytes, idx: tuple[int, ...], q: int) -> int:
    """Evaluate F(key, space_id, idx) in [0, q).

    q must fit the 128-bit block with room for rejection sampling.
    """
    if q < 2 or q.bit_length() > _BLOCK_BITS - 2:
        raise ValueError(f"modulus out of range for the PRF block: {q}")
    limit = ((1 << _BLOCK_BITS) // q) * q
    reject = 0
    while True:
        digest = hashlib.blake2b(
            _encode(space_id, idx, reject), key=key.material,
            digest_size=_BLOCK_BYTES).digest()
        val = int.from_bytes(digest, "big")
        if val < limit:
            return val % q
        reject += 1


def prf_vector(key: PrfKey, space_id: bytes, prefix: tuple[int, ...],
               length: int, q: int) -> np.ndarray:
    """Vector (F(key, id, prefix + (1,)), ..., F(key, id, prefix + (length,))).

    Positions are 1-based in the counter domain.
    """
    vals = [prf_eval(key, space_id, prefix + (i,), q) for i in range(1, length + 1)]
    dtype = np.int64 if q <= 3_037_000_499 else object
    return np.array(vals, dtype=dtype)


def mix_counter(base: int, epoch: int) -> int:
    """Fold an epoch or tag-slot index into the high bits of a counter."""
    if not 0 <= base < COUNTER_LIMIT:
        raise ValueError(f"counter {base} exceeds the mixing range")
    if epoch < 0 or epoch >= COUNTER_LIMIT:
        raise ValueError(f"epoch {epoch} out of range")
    return epoch * COUNTER_LIMIT + base
