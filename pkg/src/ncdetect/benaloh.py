"""Additively homomorphic encryption with a dense prime plaintext space,
and the private inner-product exchange built on it.

The cryptosystem takes the plaintext modulus r equal to the working field
modulus q, so plaintexts are field symbols with no wasted space. Keys are
N = p1*p2 with r | p1-1, gcd(r, (p1-1)/r) = 1 and gcd(r, p2-1) = 1;
Enc(m) = y^m * u^r mod N for a random unit u. Then Enc(a)*Enc(b) decrypts to
a+b and Enc(a)^k to k*a, which is all the inner-product exchange needs.

Decryption raises to phi/r and takes a discrete log in the order-r subgroup:
a lookup table for small r, baby-step giant-step above, feasible for
r up to about 2^20.

The inner-product exchange: the holder of the secret key encrypts its vector
elementwise and ships it; the data holder returns prod c_i^(v_i), one
ciphertext per data vector; decryption yields r_vec . v exactly, and the data
holder never sees r_vec in the clear. Message sizes land on a Transcript so
analytic bandwidth formulas can be checked bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field as dc_field

import gmpy2
import numpy as np

from .field import is_prime, rand_below, rand_bits

_DLOG_TABLE_MAX = 4096


class DecryptionFailureError(ValueError):
    """Ciphertext is not a unit mod N or falls outside the plaintext group."""


@dataclass(frozen=True)
class PublicKey:
    modulus: int          # N
    base: int             # y
    plain_modulus: int    # r

    @property
    def modulus_bits(self) -> int:
        return self.modulus.bit_length()

    @property
    def ciphertext_bytes(self) -> int:
        return (self.modulus_bits + 7) // 8


@dataclass(eq=False)
class SecretKey:
    public: PublicKey
    phi: int
    _x: int = dc_field(init=False, repr=False)
    _dlog: dict = dc_field(init=False, repr=False)
    _giant: tuple = dc_field(init=False, repr=False)

    def __post_init__(self):
        pk = self.public
        self._x = int(gmpy2.powmod(pk.base, self.phi // pk.plain_modulus, pk.modulus))
        r, N = pk.plain_modulus, pk.modulus
        if r <= _DLOG_TABLE_MAX:
            table, acc = {}, 1
            for i in range(r):
                table[acc] = i
                acc = acc * self._x % N
            self._dlog = table
            self._giant = ()
        else:
            m = math.isqrt(r) + 1
            table, acc = {}, 1
            for j in range(m):
                table[acc] = j
                acc = acc * self._x % N
            step = int(gmpy2.powmod(gmpy2.invert(self._x, N), m, N))
            self._dlog = table
            self._giant = (m, step)

    def _order_r_dlog(self, a: int) -> int:
        if not self._giant:
            try:
                return self._dlog[a]
            except KeyError:
                raise DecryptionFailureError("value outside the plaintext group")
        m, step = self._giant
        cur = a
        for i in range(m + 1):
            if cur in self._dlog:
                val = i * m + self._dlog[cur]
                if val < self.public.plain_modulus:
                    return val
            cur = cur * step % self.public.modulus
        raise DecryptionFailureError("value outside the plaintext group")


def keygen(rng: np.random.Generator, modulus_bits: int, plain_modulus: int,
           max_tries: int = 100_000) -> tuple[PublicKey, SecretKey]:
    """Key pair with an exactly modulus_bits-wide N and plaintext modulus r.

    r must be prime (it is the working field modulus). Tries random prime
    pairs until the divisibility conditions and the exact width hold.
    """
    r = int(plain_modulus)
    if not is_prime(r):
        raise ValueError(f"plaintext modulus must be prime, got {r}")
    half = modulus_bits // 2
    if half <= r.bit_length() + 1:
        raise ValueError("modulus too narrow for this plaintext modulus")
    for _ in range(max_tries):
        # p1 = r*k + 1 prime with r not dividing k
        k = rand_bits(rng, half - r.bit_length())
        p1 = r * k + 1
        if k == 0 or k % r == 0 or p1.bit_length() != half or not is_prime(p1):
            continue
        p2 = None
        for _ in range(max_tries):
            cand = rand_bits(rng, modulus_bits - half) | (1 << (modulus_bits - half - 1)) | 1
            if cand % r != 1 and cand != p1 and is_prime(cand):
                p2 = cand
                break
        if p2 is None:
            continue
        N = p1 * p2
        if N.bit_length() != modulus_bits:
            continue
        phi = (p1 - 1) * (p2 - 1)
        # y with y^(phi/r) != 1: fails for a 1/r fraction of units
        for _ in range(max_tries):
            y = 2 + rand_below(rng, N - 3)
            if math.gcd(y, N) != 1:
                continue
            if gmpy2.powmod(y, phi // r, N) != 1:
                pk = PublicKey(N, y, r)
                return pk, SecretKey(pk, phi)
    raise RuntimeError("key generation failed within the retry budget")


def encrypt(pk: PublicKey, m: int, rng: np.random.Generator) -> int:
    m = int(m) % pk.plain_modulus
    while True:
        u = 2 + rand_below(rng, pk.modulus - 3)
        if math.gcd(u, pk.modulus) == 1:
            break
    c = gmpy2.powmod(pk.base, m, pk.modulus) * gmpy2.powmod(u, pk.plain_modulus, pk.modulus)
    return int(c % pk.modulus)


def decrypt(sk: SecretKey, c: int) -> int:
    pk = sk.public
    c = int(c)
    if not 0 < c < pk.modulus or math.gcd(c, pk.modulus) != 1:
        raise DecryptionFailureError("ciphertext is not a unit mod N")
    a = int(gmpy2.powmod(c, sk.phi // pk.plain_modulus, pk.modulus))
    return sk._order_r_dlog(a)


def add_ciphertexts(pk: PublicKey, c1: int, c2: int) -> int:
    return c1 * c2 % pk.modulus


def scale_ciphertext(pk: PublicKey, c: int, k: int) -> int:
    return int(gmpy2.powmod(c, int(k) % pk.plain_modulus, pk.modulus))


# -- transcripts ----------------------------------------------------------

@dataclass(frozen=True)
class Message:
    kind: str
    sender: str
    receiver: str
    nbytes: int
    digest: str


@dataclass
class Transcript:
    messages: list = dc_field(default_factory=list)

    def add(self, kind: str, sender: str, receiver: str, payload: bytes):
        self.messages.append(Message(
            kind, sender, receiver, len(payload),
            hashlib.blake2b(payload, digest_size=8).hexdigest()))

    def total_bytes(self, kinds=None) -> int:
        return sum(m.nbytes for m in self.messages
                   if kinds is None or m.kind in kinds)

    def total_bits(self, kinds=None) -> int:
        return 8 * self.total_bytes(kinds)

    def dump_jsonl(self, path):
        with open(path, "w") as fh:
            for m in self.messages:
                fh.write(json.dumps(m.__dict__) + "\n")


def load_transcript(path) -> Transcript:
    t = Transcript()
    with open(path) as fh:
        for line in fh:
            t.messages.append(Message(**json.loads(line)))
    return t


# -- private inner products ----------------------------------------------

def serialize_ciphertexts(pk: PublicKey, cts) -> bytes:
    w = pk.ciphertext_bytes
    return b"".join(int(c).to_bytes(w, "big") for c in cts)


def encrypt_vector(pk: PublicKey, vec, rng: np.random.Generator) -> list[int]:
    return [encrypt(pk, int(v), rng) for v in vec]


def inner_product_response(pk: PublicKey, cts, v_vec) -> int:
    """prod c_i^(v_i) mod N: an encryption of r_vec . v_vec."""
    if len(cts) != len(v_vec):
        raise ValueError(f"{len(cts)} ciphertexts vs {len(v_vec)} symbols")
    acc = 1
    for c, v in zip(cts, v_vec):
        acc = acc * scale_ciphertext(pk, c, int(v)) % pk.modulus
    return acc


def pip_exchange(pk: PublicKey, sk: SecretKey, r_vec, v_vecs,
                 rng: np.random.Generator, transcript: Transcript | None = None,
                 controller: str = "C", source: str = "S") -> list[int]:
    """One private inner-product exchange.

    The controller sends Enc(r_vec) once; the source answers with one product
    ciphertext per vector in v_vecs; the controller (key holder) decrypts.
    Returns [r_vec . v for v in v_vecs] as plain residues.
    """
    cts = encrypt_vector(pk, r_vec, rng)
    if transcript is not None:
        transcript.add("enc-vector", controller, source,
                       serialize_ciphertexts(pk, cts))
    responses = [inner_product_response(pk, cts, v) for v in v_vecs]
    if transcript is not None:
        transcript.add("enc-inner", source, controller,
                       serialize_ciphertexts(pk, responses))
    return [decrypt(sk, w) for w in responses]
