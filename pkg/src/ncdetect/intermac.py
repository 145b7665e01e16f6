"""Multi-source homomorphic MAC for inter-session coding.

Key idea: the key of source p is a random element of the dual (null) space of
every OTHER source's committed packets, drawn as a PRF-weighted combination of
a null-space basis. Then p's key annihilates all foreign packets, a tag
t = key . packet survives linear combining (tags combine with the same
coefficients as symbols), and a verifier holding the SUM of all keys, or the
sum over any subset covering the sessions present plus at least one honest
key, checks t == key_sum . y without learning individual keys.

Tags may carry ell slots; slot indices are folded into the PRF counter domain
so each slot has an independent key. A forger who must match ell independent
tags succeeds with probability 1/q^ell.

The attack-game harness plays the unforgeability game: the adversary sees all
tags and all keys except one and must produce (y*, t*) with y* outside the
committed span that verifies under the full key sum. Per-trial key draws come
from a seeded generator (the security argument replaces the PRF by true
randomness); the basis construction, tag algebra and off-span condition all go
through the real code paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coding, prf
from .field import PrimeField

MAX_MALICIOUS_DEFAULT = None


class SubsetTooSmallError(ValueError):
    """Key subset cannot guarantee an honest key under the malicious bound."""


class GameSetupError(ValueError):
    """Adversary strategy produced an in-span target; the game forbids replays."""


@dataclass(frozen=True, eq=False)
class MacKey:
    """Key of one source: owner index (1-based) and one vector per tag slot."""

    owner: int
    vectors: np.ndarray  # shape (tag_slots, symbol_len)

    @property
    def tag_slots(self) -> int:
        return self.vectors.shape[0]


@dataclass(eq=False)
class KeySet:
    field: PrimeField
    keys: tuple[MacKey, ...]

    @property
    def tag_slots(self) -> int:
        return self.keys[0].tag_slots

    def key_sum(self, subset=None, max_malicious=MAX_MALICIOUS_DEFAULT) -> np.ndarray:
        """Sum of key vectors over a 1-based owner subset (default: everyone)."""
        if subset is None:
            subset = range(1, len(self.keys) + 1)
        subset = sorted(set(subset))
        if max_malicious is not None and len(subset) < max_malicious + 1:
            raise SubsetTooSmallError(
                f"subset of {len(subset)} keys cannot contain an honest key "
                f"with up to {max_malicious} malicious sources")
        acc = self.field.zeros(self.keys[0].vectors.shape)
        for owner in subset:
            acc = (acc + self.keys[owner - 1].vectors) % self.field.q
        return acc


def _null_basis_excluding(space: coding.SourceSpace, exclude: int) -> np.ndarray:
    """Basis of the dual of all sources' packets except `exclude` (1-based)."""
    params = space.params
    rows = [p.symbols for pos, p in enumerate(space.packets)
            if params.owner_of(pos)[0] != exclude]
    f = params.field
    if not rows:
        return f.eye(params.symbol_len)
    return f.null_space_basis(np.stack(rows))


def gen(space: coding.SourceSpace, space_id: bytes, key: prf.PrfKey,
        tag_slots: int = 1) -> KeySet:
    """Derive one MAC key per source from the committed space.

    The key of source p is sum_i F(key, id, (p, i)) * b_i over a basis of the
    null space of the other sources' committed packets. Requires at least two
    sources (with one source there is no foreign space to be orthogonal to).
    """
    params = space.params
    if params.sources < 2:
        raise ValueError("need at least two sources")
    if tag_slots < 1:
        raise ValueError("tag_slots must be positive")
    f = params.field
    keys = []
    for p in range(1, params.sources + 1):
        basis = _null_basis_excluding(space, p)
        slots = []
        for slot in range(tag_slots):
            first = prf.mix_counter(p, slot)
            weights = np.array(
                [prf.prf_eval(key, space_id, (first, i), f.q)
                 for i in range(1, basis.shape[0] + 1)],
                dtype=basis.dtype)
            slots.append(f.lincomb(weights, basis))
        keys.append(MacKey(p, np.stack(slots)))
    return KeySet(f, tuple(keys))


def sign(mac_key: MacKey, symbols, f: PrimeField) -> tuple[int, ...]:
    """Tag of a packet under one source's key, one value per slot."""
    return tuple(f.dot(mac_key.vectors[s], symbols)
                 for s in range(mac_key.tag_slots))


def combine_tags(tag_tuples, coeffs, f: PrimeField) -> tuple[int, ...]:
    """Slot-wise linear combination of tags; the tag of the combined packet."""
    if len(tag_tuples) != len(coeffs):
        raise ValueError(f"{len(tag_tuples)} tags vs {len(coeffs)} coefficients")
    slots = {len(t) for t in tag_tuples}
    if len(slots) != 1:
        raise ValueError("tags with differing slot counts")
    arr = np.array(tag_tuples, dtype=object)
    out = []
    for s in range(slots.pop()):
        acc = 0
        for t, a in zip(arr[:, s], coeffs):
            acc = (acc + int(t) * int(a)) % f.q
        out.append(acc)
    return tuple(out)


def verify(key_sum: np.ndarray, symbols, tag: tuple[int, ...], f: PrimeField) -> bool:
    """t == key_sum . y, slot by slot."""
    if key_sum.ndim == 1:
        key_sum = key_sum[None, :]
    if len(tag) != key_sum.shape[0]:
        raise ValueError(f"{len(tag)} tag slots vs {key_sum.shape[0]} key slots")
    return all(f.dot(key_sum[s], symbols) == int(tag[s]) % f.q
               for s in range(key_sum.shape[0]))


# -- key distribution files ----------------------------------------------

def write_key_file(path, assignments: dict, f: PrimeField):
    """Per node: owner subset and the key-sum vector it verifies with.

    assignments maps node name -> (subset iterable, key_sum array of shape
    (tag_slots, symbol_len)).
    """
    with open(path, "w") as fh:
        fh.write(f"q {f.q}\n")
        for node, (subset, ksum) in assignments.items():
            subset_txt = ",".join(str(s) for s in sorted(set(subset)))
            if ksum.ndim == 1:
                ksum = ksum[None, :]
            for slot in range(ksum.shape[0]):
                vec = " ".join(str(int(x)) for x in ksum[slot])
                fh.write(f"{node} {subset_txt} {slot} {vec}\n")


def read_key_file(path) -> tuple[PrimeField, dict]:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 2 or head[0] != "q":
            raise ValueError("malformed key file header")
        f = PrimeField(int(head[1]))
        rows: dict[str, dict] = {}
        for line in fh:
            node, subset_txt, slot, *vec = line.split()
            rows.setdefault(node, {"subset": subset_txt, "slots": {}})
            rows[node]["slots"][int(slot)] = f.array([int(x) for x in vec])
    out = {}
    for node, rec in rows.items():
        subset = tuple(int(x) for x in rec["subset"].split(","))
        slots = [rec["slots"][k] for k in sorted(rec["slots"])]
        out[node] = (subset, np.stack(slots))
    return f, out


# -- unforgeability game --------------------------------------------------

@dataclass
class GameResult:
    trials: int
    successes: int
    expected_rate: float
    scheme: str
    strategy: str

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def _game_space(f: PrimeField, s: int, g: int, n: int,
                rng: np.random.Generator):
    params = coding.GenerationParams(f, s, g, n)
    data = f.random_array(rng, (params.packet_count, n))
    gen_id = bytes(rng.bytes(coding.GEN_ID_BYTES))
    return coding.build_space(data, params, gen_id)


def _off_span_target(space: coding.SourceSpace, rng, in_span_replay: bool):
    """Adversary's target packet y*.

    A random committed combination plus, unless replaying, a nonzero pure-data
    perturbation (zero augmentation), which can never lie in the span.
    """
    params = space.params
    f = params.field
    coeffs = f.random_array(rng, params.packet_count)
    y = coding.combine(space.packets, coeffs, params)
    if in_span_replay:
        return y
    delta = f.zeros(params.symbol_len)
    delta[: params.data_len] = f.random_nonzero(rng, params.data_len)
    return coding.Packet(y.gen_id, (y.symbols + delta) % f.q)


def attack_game_1(trials: int, q: int = 251, s: int = 2, g: int = 1, n: int = 4,
                  strategy: str = "random-tag", tag_slots: int = 1,
                  hidden: int = 1, seed: int = 0) -> GameResult:
    """Unforgeability game for the null-space MAC.

    The adversary sees every committed packet with its tags and every key
    except `hidden`. Strategies: 'random-tag' guesses a uniform tag,
    'algebraic' signs with the keys it has and hopes the hidden key
    annihilates y*, 'replay' tries an in-span packet (rejected by the game's
    winning condition, raises GameSetupError).
    """
    f = PrimeField(q)
    rng = np.random.default_rng(seed)
    space = _game_space(f, s, g, n, rng)
    params = space.params
    target = _off_span_target(space, rng, in_span_replay=(strategy == "replay"))
    if space.in_span(target, "whole"):
        raise GameSetupError("target packet is in the committed span; "
                             "a replayed packet cannot win the game")

    if s < 2:
        raise ValueError("need at least two sources")
    basis = _null_basis_excluding(space, hidden)
    # per-slot hidden-key response to y* is (weights . c) with c = basis @ y*
    c = f.matvec(basis, target.symbols)
    if not np.any(c):
        raise GameSetupError("target is orthogonal to the whole hidden-key space")
    known_sum = f.zeros((tag_slots, params.symbol_len))
    for p in range(1, s + 1):
        if p == hidden:
            continue
        b_p = _null_basis_excluding(space, p)
        w = f.random_array(rng, (tag_slots, b_p.shape[0]))
        known_sum = (known_sum + f.matmul(w, b_p)) % f.q
    known_part = f.matvec(known_sum, target.symbols)

    return _run_trials(trials, f, c, known_part, strategy, tag_slots, rng,
                       scheme="intermac", game="1")


def _run_trials(trials, f: PrimeField, c, known_part, strategy, tag_slots, rng,
                scheme, game) -> GameResult:
    """Vectorized trial loop shared by both games.

    Per trial and slot, fresh hidden randomness R gives the unknowable tag
    component R . c; the adversary wins iff its guess hits it exactly.
    """
    q = f.q
    if q > 2**31 - 1:
        raise ValueError("game harness is vectorized for word-size moduli")
    c = np.asarray(c, dtype=np.int64)
    successes = 0
    done = 0
    chunk = 1 << 15
    while done < trials:
        t = min(chunk, trials - done)
        R = rng.integers(0, q, size=(t, tag_slots, len(c)), dtype=np.int64)
        hidden_part = ((R * c[None, None, :]) % q).sum(axis=2) % q
        if strategy == "random-tag":
            guess = rng.integers(0, q, size=(t, tag_slots), dtype=np.int64)
            truth = (hidden_part + np.asarray(known_part, dtype=np.int64)[None, :]) % q
            hit = guess == truth
        elif strategy == "algebraic":
            # adversary submits known_part as the tag, i.e. guesses the hidden
            # contribution is zero
            hit = hidden_part == 0
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        successes += int(hit.all(axis=1).sum())
        done += t
    expected = 1.0 / float(q) ** tag_slots
    return GameResult(trials, successes, expected, scheme,
                      f"game{game}:{strategy}")
