"""Discrete-log homomorphic hash over a prime-order subgroup, plus commitments.

Parameters are a prime P, a prime q dividing P-1, and data_len generators of
the order-q subgroup of Z_P*. The hash of a data block v is prod g_i^(v_i) mod P.
It is linear in the exponent, so the hash of any combination of blocks equals
the same combination of their hashes carried out in the group; that is what
lets intermediate nodes check coded packets against per-source-packet
commitments without decoding.

Commitments pair the group hash h with a traditional digest hbar of the same
block, used on the cheap path when a node can decode.

Profiles: 'toy' is a 23-element group for desk checks, 'nist-like' is a
2048-bit P with 256-bit q. For a security level of lam bits, setup generates
q of lam+1 bits inside a P of at least 1024 bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coding
from .field import PrimeField, is_prime, powmod, rand_bits, random_prime

PROFILES = {
    "toy": {"q_bits": 5, "p_bits": 8},
    "nist-like": {"q_bits": 256, "p_bits": 2048},
}


class ParameterGenError(RuntimeError):
    """Group generation failed within the retry budget."""


@dataclass(frozen=True)
class HdlParams:
    """Subgroup description: modulus P, order q, one generator per data symbol."""

    group_prime: int
    order: int
    generators: tuple[int, ...]

    def __post_init__(self):
        if (self.group_prime - 1) % self.order:
            raise ValueError("order must divide P - 1")
        for g in self.generators:
            if g == 1 or powmod(g, self.order, self.group_prime) != 1:
                raise ValueError("generator outside the order-q subgroup")

    @property
    def data_len(self) -> int:
        return len(self.generators)


def _subgroup_element(P: int, q: int, rng: np.random.Generator,
                      max_tries: int) -> int:
    k = (P - 1) // q
    for _ in range(max_tries):
        h = 2 + rand_bits(rng, P.bit_length()) % (P - 3)
        g = powmod(h, k, P)
        if g != 1:
            return g
    raise ParameterGenError("could not find a subgroup generator")


def setup(security_bits: int | None, data_len: int, rng: np.random.Generator,
          q: int | None = None, group_bits: int | None = None,
          max_tries: int = 4096) -> HdlParams:
    """Generate hash parameters.

    Either pass q explicitly (desk profiles) or a security level, in which
    case q gets security_bits+1 bits. group_bits defaults to 1024 for
    q up to 161 bits and 2048 beyond.
    """
    if q is None:
        if security_bits is None:
            raise ValueError("need security_bits or an explicit q")
        q = random_prime(rng, security_bits + 1)
    if not is_prime(q):
        raise ValueError(f"subgroup order must be prime, got {q}")
    if group_bits is None:
        group_bits = 1024 if q.bit_length() <= 161 else 2048
    if group_bits <= q.bit_length() + 1:
        raise ValueError("group_bits must exceed the order width")
    P = None
    k_bits = group_bits - q.bit_length()
    for _ in range(max_tries):
        k = 1 + rand_bits(rng, k_bits + 1)
        cand = k * q + 1
        if cand.bit_length() == group_bits and is_prime(cand):
            P = cand
            break
    if P is None:
        raise ParameterGenError(
            f"no prime P = k*q + 1 of {group_bits} bits within {max_tries} tries")
    gens = tuple(_subgroup_element(P, q, rng, max_tries) for _ in range(data_len))
    return HdlParams(P, q, gens)


def setup_profile(name: str, data_len: int, rng: np.random.Generator,
                  max_orders: int = 64) -> HdlParams:
    # some orders admit no prime P of the profile width (e.g. q=31 at 8 bits),
    # so retry with a fresh q instead of failing
    prof = PROFILES[name]
    for _ in range(max_orders):
        q = random_prime(rng, prof["q_bits"])
        try:
            return setup(None, data_len, rng, q=q, group_bits=prof["p_bits"])
        except ParameterGenError:
            continue
    raise ParameterGenError(f"profile {name!r}: no viable order in {max_orders} draws")


def hash_data(pp: HdlParams, data) -> int:
    """prod g_i^(v_i) mod P for a data block of pp.data_len symbols."""
    if len(data) != pp.data_len:
        raise ValueError(f"data length {len(data)} != {pp.data_len}")
    acc = 1
    for g, v in zip(pp.generators, data):
        acc = acc * powmod(g, int(v) % pp.order, pp.group_prime) % pp.group_prime
    return acc


def test(pp: HdlParams, data, coeffs, hashes) -> bool:
    """Check a coded packet against committed hashes.

    data is the packet's data block, coeffs its coefficient (augmentation)
    vector, hashes the committed group hashes in augmentation order. Accepts
    iff hash(data) equals prod hashes[k]^(coeffs[k]).
    """
    if len(coeffs) != len(hashes):
        raise ValueError(f"{len(coeffs)} coefficients vs {len(hashes)} hashes")
    lhs = hash_data(pp, data)
    rhs = 1
    for h, b in zip(hashes, coeffs):
        rhs = rhs * powmod(int(h), int(b) % pp.order, pp.group_prime) % pp.group_prime
    return lhs == rhs


@dataclass
class Commitments:
    """Per source packet: group hash and traditional digest, augmentation order."""

    gen_id: bytes
    hashes: list[int]
    digests: list[bytes]

    def hash_at(self, pos: int) -> int:
        return self.hashes[pos]

    def digest_at(self, pos: int) -> bytes:
        return self.digests[pos]


def commit(pp: HdlParams, space: coding.SourceSpace) -> Commitments:
    f = space.params.field
    if f.q != pp.order:
        raise ValueError("hash group order must equal the field modulus")
    hashes, digests = [], []
    for p in space.packets:
        d = p.data(space.params)
        hashes.append(hash_data(pp, d))
        digests.append(coding.data_digest(d, f))
    return Commitments(space.packets[0].gen_id, hashes, digests)


def write_commitment_file(path, com: Commitments, params: coding.GenerationParams):
    """One record per source packet: i, j, group hash (hex), digest (hex)."""
    with open(path, "w") as fh:
        fh.write(f"gen_id {com.gen_id.hex()}\n")
        for pos, (h, d) in enumerate(zip(com.hashes, com.digests)):
            i, j = params.owner_of(pos)
            fh.write(f"{i} {j} {h:x} {d.hex()}\n")


def read_commitment_file(path, params: coding.GenerationParams) -> Commitments:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "gen_id":
            raise ValueError("malformed commitment file header")
        gen_id = bytes.fromhex(header[1])
        hashes = [0] * params.packet_count
        digests = [b""] * params.packet_count
        seen = 0
        for line in fh:
            i, j, h_hex, d_hex = line.split()
            pos = params.position(int(i), int(j))
            hashes[pos] = int(h_hex, 16)
            digests[pos] = bytes.fromhex(d_hex)
            seen += 1
        if seen != params.packet_count:
            raise ValueError(f"expected {params.packet_count} records, got {seen}")
    return Commitments(gen_id, hashes, digests)
