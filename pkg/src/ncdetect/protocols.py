"""Private commitment protocols run by a controller before transmission.

Both protocols let a controller prepare MAC material without any source
revealing its data to the controller or to other sources; all cross-source
information flows through the encrypted inner-product exchange.

Padded-key protocol (cpk_run): the controller derives one PRF vector r_i per
source over symbols data | padding (width s-1) | augmentation. It learns the
encrypted inner products of each r_i with every other source's data blocks,
then solves, per packet (i, j), an (s-1) x (s-1) system that chooses the
padding so every OTHER source's r vector annihilates the padded packet. Source
i's key IS r_i: foreign packets are annihilated by construction of their
padding, so verification works exactly as in the null-space MAC, but keys can
be derived before any data is committed and no source ever sees another's
packets. If a padding system is singular the controller re-derives every r
with the epoch counter bumped. An unresponsive source cannot be padded around,
so it is excluded from the session (SourceExcludedError); the caller reruns
without it.

Tag-issuance protocol (pm_run): the controller holds a single secret subspace
MAC vector r over data | augmentation. Each source learns the tags of its own
packets, t = r_hat . data + r[aug slot], computed from one encrypted
inner-product exchange per source. A packet the source will not commit to
simply gets no tag (the withhold policy). Verifiers then run the plain
subspace MAC check t == r . y.

The subspace MAC primitives (mac/verify_mac) take the whole symbol vector
against one PRF-derived vector; combining is the same slot-wise tag algebra as
the null-space MAC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import benaloh, coding, intermac, prf
from .field import InconsistentSystemError, PrimeField, SingularSystemError

_EPOCH_SLOTS = 64  # cpk folds (epoch, slot) into one 32-bit high field


class SourceExcludedError(RuntimeError):
    """Unresponsive sources must be dropped from the session before rerunning."""

    def __init__(self, sources):
        self.sources = tuple(sorted(sources))
        super().__init__(f"sources excluded from the session: {self.sources}")


# -- subspace MAC primitives ----------------------------------------------

def tag_vector(key: prf.PrfKey, space_id: bytes, length: int, q: int,
               slot: int = 0) -> np.ndarray:
    """PRF-derived MAC vector r; slot indices give independent vectors."""
    vals = [prf.prf_eval(key, space_id, (prf.mix_counter(i, slot),), q)
            for i in range(1, length + 1)]
    dtype = np.int64 if q <= 3_037_000_499 else object
    return np.array(vals, dtype=dtype)


def mac(key: prf.PrfKey, space_id: bytes, symbols, f: PrimeField,
        tag_slots: int = 1) -> tuple[int, ...]:
    return tuple(
        f.dot(tag_vector(key, space_id, len(symbols), f.q, slot), symbols)
        for slot in range(tag_slots))


def combine_tags(tag_tuples, coeffs, f: PrimeField) -> tuple[int, ...]:
    return intermac.combine_tags(tag_tuples, coeffs, f)


def verify_mac(key: prf.PrfKey, space_id: bytes, symbols,
               tags: tuple[int, ...], f: PrimeField) -> bool:
    return all(
        f.dot(tag_vector(key, space_id, len(symbols), f.q, slot), symbols)
        == int(tags[slot]) % f.q
        for slot in range(len(tags)))


# -- padded-key protocol ---------------------------------------------------

@dataclass(eq=False)
class CpkResult:
    params: coding.GenerationParams      # pad_len = s - 1
    space: coding.SourceSpace            # committed padded packets
    keyset: intermac.KeySet              # key of source i is r_i
    paddings: np.ndarray                 # shape (m, s-1)
    tags: dict                           # (i, j) -> tag tuple, signed by sources
    transcript: benaloh.Transcript
    epoch: int


def _cpk_r_vector(key, space_id, i, epoch, length, q):
    first = prf.mix_counter(i, epoch * _EPOCH_SLOTS)
    return np.array(
        [prf.prf_eval(key, space_id, (first, j), q) for j in range(1, length + 1)],
        dtype=np.int64 if q <= 3_037_000_499 else object)


def solve_padding(r_vectors: dict, data, i: int, j: int,
                  params: coding.GenerationParams) -> np.ndarray:
    """Padding of packet (i, j) in a pad_len = s-1 generation.

    r_vectors maps source index to its full-width r vector. Chooses x with,
    for every other source i2:  r2_hat . data + sum_l x_l r2[n+l] + r2[unit] = 0.
    """
    f = params.field
    n, w = params.data_len, params.pad_len
    pos = params.position(i, j)
    others = [i2 for i2 in range(1, params.sources + 1) if i2 != i]
    A = f.zeros((len(others), w))
    b = f.zeros(len(others))
    for row, i2 in enumerate(others):
        r2 = r_vectors[i2]
        A[row] = r2[n: n + w]
        b[row] = (-(f.dot(r2[:n], data) + int(r2[params.aug_offset + pos]))) % f.q
    return f.solve(A, b)


def cpk_run(data_matrix, f: PrimeField, sources: int, gen_size: int,
            gen_id: bytes, space_id: bytes, prf_key: prf.PrfKey,
            he_pk: benaloh.PublicKey, he_sk: benaloh.SecretKey,
            rng: np.random.Generator,
            transcript: benaloh.Transcript | None = None,
            unresponsive=(), max_epochs: int = 16) -> CpkResult:
    """Commitment phase of the padded-key construction.

    data_matrix is m x n in augmentation order. Only single-slot tags: one
    padding block cannot satisfy the annihilation equations of several
    independent r vectors at once.
    """
    if sources < 2:
        raise ValueError("need at least two sources")
    if unresponsive:
        raise SourceExcludedError(unresponsive)
    if he_pk.plain_modulus != f.q:
        raise ValueError("encryption plaintext modulus must equal the field modulus")
    data_matrix = f.array(data_matrix)
    m_rows, n = data_matrix.shape
    params = coding.GenerationParams(f, sources, gen_size, n, pad_len=sources - 1)
    if m_rows != params.packet_count:
        raise ValueError(f"data matrix rows {m_rows} != m = {params.packet_count}")
    if transcript is None:
        transcript = benaloh.Transcript()

    for epoch in range(max_epochs):
        r_vectors = {
            i: _cpk_r_vector(prf_key, space_id, i, epoch, params.symbol_len, f.q)
            for i in range(1, sources + 1)}
        # encrypted inner products: r_hat of every source against every other
        # source's data blocks (the r holder side runs through the controller)
        ips: dict[tuple[int, int], list[int]] = {}
        for i in range(1, sources + 1):
            for i2 in range(1, sources + 1):
                if i2 == i:
                    continue
                rows = [data_matrix[params.position(i2, j)]
                        for j in range(1, gen_size + 1)]
                ips[(i, i2)] = benaloh.pip_exchange(
                    he_pk, he_sk, r_vectors[i][:n], rows, rng, transcript,
                    controller="C", source=f"S{i2}")
        try:
            paddings = f.zeros((params.packet_count, sources - 1))
            for i in range(1, sources + 1):
                others = [i2 for i2 in range(1, sources + 1) if i2 != i]
                for j in range(1, gen_size + 1):
                    pos = params.position(i, j)
                    A = f.zeros((sources - 1, sources - 1))
                    b = f.zeros(sources - 1)
                    for row, i2 in enumerate(others):
                        r2 = r_vectors[i2]
                        A[row] = r2[n: n + sources - 1]
                        b[row] = (-(int(ips[(i2, i)][j - 1])
                                    + int(r2[params.aug_offset + pos]))) % f.q
                    paddings[pos] = f.solve(A, b)
        except (SingularSystemError, InconsistentSystemError):
            # this epoch's r vectors admit no padding for some packet
            continue
        for pos in range(params.packet_count):
            i, j = params.owner_of(pos)
            transcript.add("padding", "C", f"S{i}",
                           coding.serialize_symbols(paddings[pos], f))
        keys = []
        for i in range(1, sources + 1):
            transcript.add("key", "C", f"S{i}",
                           coding.serialize_symbols(r_vectors[i], f))
            keys.append(intermac.MacKey(i, r_vectors[i][None, :].copy()))
        keyset = intermac.KeySet(f, tuple(keys))
        space = coding.build_space(data_matrix, params, gen_id, paddings=paddings)
        tags = {}
        for pos, packet in enumerate(space.packets):
            i, j = params.owner_of(pos)
            tags[(i, j)] = intermac.sign(keyset.keys[i - 1], packet.symbols, f)
        return CpkResult(params, space, keyset, paddings, tags, transcript, epoch)
    raise SingularSystemError(
        f"padding systems stayed singular for {max_epochs} epochs")


# -- tag-issuance protocol -------------------------------------------------

@dataclass(eq=False)
class PmResult:
    params: coding.GenerationParams      # pad_len = 0
    space: coding.SourceSpace
    tags: dict                           # (i, j) -> tag tuple; withheld keys absent
    prf_key: prf.PrfKey                  # controller secret, handed to verifiers
    space_id: bytes
    transcript: benaloh.Transcript
    tag_slots: int


def pm_run(data_matrix, f: PrimeField, sources: int, gen_size: int,
           gen_id: bytes, space_id: bytes, prf_key: prf.PrfKey,
           he_pk: benaloh.PublicKey, he_sk: benaloh.SecretKey,
           rng: np.random.Generator,
           transcript: benaloh.Transcript | None = None,
           tag_slots: int = 1, withhold=()) -> PmResult:
    """Tag-issuance phase of the subspace MAC.

    withhold is a set of (i, j) the source refuses to commit; those packets
    get no tag and any later transmission of them fails verification with
    probability 1 - 1/q per slot.
    """
    if he_pk.plain_modulus != f.q:
        raise ValueError("encryption plaintext modulus must equal the field modulus")
    data_matrix = f.array(data_matrix)
    m_rows, n = data_matrix.shape
    params = coding.GenerationParams(f, sources, gen_size, n)
    if m_rows != params.packet_count:
        raise ValueError(f"data matrix rows {m_rows} != m = {params.packet_count}")
    if transcript is None:
        transcript = benaloh.Transcript()
    withhold = set(withhold)

    vectors = [tag_vector(prf_key, space_id, params.symbol_len, f.q, slot)
               for slot in range(tag_slots)]
    tags: dict[tuple[int, int], tuple[int, ...]] = {}
    for i in range(1, sources + 1):
        live = [j for j in range(1, gen_size + 1) if (i, j) not in withhold]
        slot_ips = []
        for slot in range(tag_slots):
            rows = [data_matrix[params.position(i, j)] for j in live]
            slot_ips.append(benaloh.pip_exchange(
                he_pk, he_sk, vectors[slot][:n], rows, rng, transcript,
                controller="C", source=f"S{i}"))
        for k, j in enumerate(live):
            pos = params.position(i, j)
            t = tuple(
                (int(slot_ips[slot][k])
                 + int(vectors[slot][params.aug_offset + pos])) % f.q
                for slot in range(tag_slots))
            tags[(i, j)] = t
            transcript.add("tag", "C", f"S{i}",
                           coding.serialize_symbols(t, f))
    space = coding.build_space(data_matrix, params, gen_id)
    return PmResult(params, space, tags, prf_key, space_id, transcript, tag_slots)


# -- unforgeability game against the subspace MAC --------------------------

def attack_game_2(trials: int, q: int = 251, s: int = 2, g: int = 1, n: int = 4,
                  strategy: str = "random-tag", tag_slots: int = 1,
                  seed: int = 0) -> intermac.GameResult:
    """Tag-forgery game where the adversary holds only issued tags.

    Strategies: 'random-tag' guesses uniformly; 'reuse-tag' submits a modified
    packet under the tag of a committed one (wins iff the MAC vector
    annihilates the difference); 'replay' is rejected by the off-span winning
    condition.
    """
    f = PrimeField(q)
    rng = np.random.default_rng(seed)
    space = intermac._game_space(f, s, g, n, rng)
    target = intermac._off_span_target(space, rng,
                                       in_span_replay=(strategy == "replay"))
    if space.in_span(target, "whole"):
        raise intermac.GameSetupError(
            "target packet is in the committed span; a replayed packet "
            "cannot win the game")
    if strategy == "random-tag":
        c = target.symbols
        known = f.zeros(tag_slots)
        run_strategy = "random-tag"
    elif strategy == "reuse-tag":
        c = (target.symbols - space.packets[0].symbols) % f.q
        known = f.zeros(tag_slots)
        run_strategy = "algebraic"
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if not np.any(c):
        raise intermac.GameSetupError("degenerate target")
    return intermac._run_trials(trials, f, c, known, run_strategy, tag_slots,
                                rng, scheme="spacemac", game="2")
