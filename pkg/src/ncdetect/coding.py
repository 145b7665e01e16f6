"""Inter-session network coding: packets, generations, combination and decoding.

A generation couples s source-receiver sessions. Source i owns packets
j = 1..g; packet (i, j) is the data block v (length n), an optional padding
block (length pad_len, used by the padded-key MAC construction), and an
augmentation block of length m = s*g carrying the global coefficient vector.
At the sources the augmentation is the unit vector at position g*(i-1)+j.
Symbols are laid out data | padding | augmentation, which is also the wire
order.

The augmentation of any linear combination equals its coefficient vector
relative to the source packets, so a packet with zero augmentation and nonzero
data can never lie in the committed span.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import PrimeField, ModulusMismatchError

GEN_ID_BYTES = 16


class DimMismatchError(ValueError):
    """Packet or vector length does not match the generation parameters."""


class GenerationMismatchError(ValueError):
    """Packets from different generations were combined."""


class DegenerateSpaceError(ValueError):
    """Committed packets are linearly dependent."""


@dataclass(frozen=True)
class GenerationParams:
    """Shape of one generation: s sessions, g packets each, n data symbols."""

    field: PrimeField
    sources: int
    gen_size: int
    data_len: int
    pad_len: int = 0

    def __post_init__(self):
        if self.sources < 1 or self.gen_size < 1 or self.data_len < 1:
            raise ValueError("sources, gen_size and data_len must be positive")
        if self.pad_len < 0:
            raise ValueError("pad_len must be nonnegative")

    @property
    def packet_count(self) -> int:
        """m = s*g, the number of source packets and the augmentation width."""
        return self.sources * self.gen_size

    @property
    def aug_offset(self) -> int:
        return self.data_len + self.pad_len

    @property
    def symbol_len(self) -> int:
        return self.data_len + self.pad_len + self.packet_count

    def position(self, i: int, j: int) -> int:
        """0-based augmentation slot of source i's packet j (both 1-based)."""
        if not 1 <= i <= self.sources:
            raise DimMismatchError(f"source index {i} outside 1..{self.sources}")
        if not 1 <= j <= self.gen_size:
            raise DimMismatchError(f"packet index {j} outside 1..{self.gen_size}")
        return self.gen_size * (i - 1) + (j - 1)

    def owner_of(self, position: int) -> tuple[int, int]:
        """Inverse of position(): (i, j) owning a 0-based augmentation slot."""
        if not 0 <= position < self.packet_count:
            raise DimMismatchError(f"position {position} outside the generation")
        return position // self.gen_size + 1, position % self.gen_size + 1


def random_gen_id(rng: np.random.Generator) -> bytes:
    return rng.bytes(GEN_ID_BYTES)


@dataclass(frozen=True, eq=False)
class Packet:
    """One coded packet: generation tag, symbol vector, attached MAC tags."""

    gen_id: bytes
    symbols: np.ndarray
    tags: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.gen_id) != GEN_ID_BYTES:
            raise ValueError(f"gen_id must be {GEN_ID_BYTES} bytes")

    def data(self, params: GenerationParams) -> np.ndarray:
        return self.symbols[: params.data_len]

    def padding(self, params: GenerationParams) -> np.ndarray:
        return self.symbols[params.data_len: params.aug_offset]

    def aug(self, params: GenerationParams) -> np.ndarray:
        return self.symbols[params.aug_offset:]


def augment(data, i: int, j: int, params: GenerationParams, gen_id: bytes,
            padding=None) -> Packet:
    """Source packet (i, j): data | padding | unit coefficient vector."""
    f = params.field
    data = f.array(data)
    if data.shape != (params.data_len,):
        raise DimMismatchError(
            f"data length {data.shape} != ({params.data_len},)")
    if padding is None:
        padding = f.zeros(params.pad_len)
    else:
        padding = f.array(padding)
        if padding.shape != (params.pad_len,):
            raise DimMismatchError(
                f"padding length {padding.shape} != ({params.pad_len},)")
    unit = f.zeros(params.packet_count)
    unit[params.position(i, j)] = 1
    return Packet(gen_id, np.concatenate([data, padding, unit]))


def combine(packets, coeffs, params: GenerationParams) -> Packet:
    """Linear combination sum(coeffs[k] * packets[k]) over the symbol vectors.

    Tags are not combined here; the MAC modules own tag algebra. The returned
    packet carries no tags.
    """
    if len(packets) == 0:
        raise ValueError("nothing to combine")
    if len(packets) != len(coeffs):
        raise DimMismatchError(f"{len(packets)} packets vs {len(coeffs)} coefficients")
    gen_id = packets[0].gen_id
    for p in packets:
        if p.gen_id != gen_id:
            raise GenerationMismatchError("packets from different generations")
        if p.symbols.shape != (params.symbol_len,):
            raise DimMismatchError(
                f"symbol length {p.symbols.shape} != ({params.symbol_len},)")
    f = params.field
    stacked = np.stack([p.symbols for p in packets])
    out = f.lincomb(f.array(coeffs), stacked)
    return Packet(gen_id, out)


def decode(packets, params: GenerationParams) -> dict[int, np.ndarray]:
    """Gaussian elimination on the received packets.

    Returns {position: data-plus-padding vector} for every source packet whose
    coefficient vector reduces to a unit row; empty when nothing is decodable.
    """
    if len(packets) == 0:
        return {}
    f = params.field
    m = params.packet_count
    # eliminate on the augmentation block first: unit rows expose source packets
    rows = np.stack([
        np.concatenate([p.aug(params), p.symbols[: params.aug_offset]])
        for p in packets
    ])
    R, pivots = f.rref(rows)
    out: dict[int, np.ndarray] = {}
    for ridx, pc in enumerate(pivots):
        if pc >= m:
            continue
        head = R[ridx, :m]
        if head[pc] == 1 and np.count_nonzero(head) == 1:
            out[pc] = R[ridx, m:]
    return out


@dataclass(eq=False)
class SourceSpace:
    """Committed source packets of one generation plus span-membership state."""

    params: GenerationParams
    packets: list[Packet]
    _whole: tuple = dc_field(init=False, repr=False)
    _data: tuple = dc_field(init=False, repr=False)

    def __post_init__(self):
        if len(self.packets) != self.params.packet_count:
            raise DegenerateSpaceError(
                f"need {self.params.packet_count} committed packets, "
                f"got {len(self.packets)}")
        f = self.params.field
        whole = np.stack([p.symbols for p in self.packets])
        R, piv = f.rref(whole)
        if len(piv) != self.params.packet_count:
            raise DegenerateSpaceError("committed packets are linearly dependent")
        self._whole = (R, piv)
        data_rows = np.stack([p.data(self.params) for p in self.packets])
        self._data = f.rref(data_rows)

    def matrix(self) -> np.ndarray:
        return np.stack([p.symbols for p in self.packets])

    def in_span(self, packet: Packet, mode: str = "whole") -> bool:
        """Span membership: mode 'whole' checks the full symbol vector,
        'data' checks the data block against the span of committed data blocks."""
        f = self.params.field
        if mode == "whole":
            R, piv = self._whole
            return f.in_row_space(R, piv, packet.symbols)
        if mode == "data":
            R, piv = self._data
            return f.in_row_space(R, piv, packet.data(self.params))
        raise ValueError(f"unknown mode {mode!r}")

    def corrupted(self, packet: Packet) -> bool:
        """Ground truth: data block outside the data span, or the whole packet
        outside the committed span."""
        return (not self.in_span(packet, "data")) or (not self.in_span(packet, "whole"))


def build_space(data_matrix, params: GenerationParams, gen_id: bytes,
                paddings=None) -> SourceSpace:
    """SourceSpace from an m x n data matrix (row g*(i-1)+j-1 is packet (i, j))."""
    packets = []
    for i in range(1, params.sources + 1):
        for j in range(1, params.gen_size + 1):
            pos = params.position(i, j)
            pad = None if paddings is None else paddings[pos]
            packets.append(augment(data_matrix[pos], i, j, params, gen_id, padding=pad))
    return SourceSpace(params, packets)


# -- wire format ----------------------------------------------------------

def serialize_symbols(symbols, f: PrimeField) -> bytes:
    w = f.symbol_bytes
    return b"".join(int(x).to_bytes(w, "big") for x in symbols)


def deserialize_symbols(blob: bytes, count: int, f: PrimeField) -> np.ndarray:
    w = f.symbol_bytes
    if len(blob) != count * w:
        raise DimMismatchError(f"expected {count * w} bytes, got {len(blob)}")
    vals = [int.from_bytes(blob[k * w:(k + 1) * w], "big") for k in range(count)]
    return f.array(vals)


def packet_to_bytes(p: Packet, params: GenerationParams) -> bytes:
    """gen_id | big-endian fixed-width symbols | tags (as trailing symbols)."""
    f = params.field
    if p.symbols.shape != (params.symbol_len,):
        raise DimMismatchError("packet does not match the generation shape")
    return p.gen_id + serialize_symbols(p.symbols, f) + serialize_symbols(p.tags, f)


def packet_from_bytes(blob: bytes, params: GenerationParams) -> Packet:
    f = params.field
    gen_id = blob[:GEN_ID_BYTES]
    body = blob[GEN_ID_BYTES:]
    w = f.symbol_bytes
    need = params.symbol_len * w
    if len(body) < need or (len(body) - need) % w:
        raise DimMismatchError("truncated or misaligned packet")
    symbols = deserialize_symbols(body[:need], params.symbol_len, f)
    ntags = (len(body) - need) // w
    tags = tuple(int(x) for x in deserialize_symbols(body[need:], ntags, f))
    return Packet(gen_id, symbols, tags)


def data_digest(data, f: PrimeField) -> bytes:
    """SHA-256 of the serialized data block; the traditional-hash commitment."""
    return hashlib.sha256(serialize_symbols(data, f)).digest()
