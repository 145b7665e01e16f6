"""Round-based simulator for coded sessions on a DAG with adversaries.

Nodes are sources, intermediates or receivers; edges are unit-capacity links
flooded once per round. Sources emit their committed (tagged) packets in round
zero; an intermediate either forwards what it accepted or emits fresh linear
combinations of its verified buffer; receivers decode at the end and their
output is compared against the committed data of their session.

Verification is scheme-dependent and runs at every node marked verify (an
idealized placement: deployments may restrict key distribution, but the
fixtures here hand verifiers what the scheme says verifiers hold):

  none          accept everything
  hash          decode-first traditional digests, group hash fallback
  intermac_cpk  tag check against a key sum (full sum or per-node subset)
  spacemac_pm   subspace MAC check with the controller key

Adversary strategies:

  conflicting-source  a source commits one data block but sends a different
                      one on selected edges, keeping the unit augmentation
                      (and, under MACs, its best available tag: a self-signed
                      tag when it holds a key, a reused issued tag otherwise)
  random-injector     an intermediate emits uniformly random packets, tagged
                      with whatever key material its colluders leak

Every verdict lands in the report: per-node counters, byte/multiplication/
exponentiation totals for the transmission phase, and an event list with
ground-truth corruption flags (data block outside the committed data span, or
whole packet outside the committed span).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np
import yaml

from . import benaloh, coding, detector, hdl, intermac, prf, protocols
from .field import COUNTER, PrimeField

SCHEMES = ("none", "hash", "intermac_cpk", "spacemac_pm")


class ConfigError(ValueError):
    """Topology fails validation (cycles, dangling edges, unpaired sessions)."""


class InvariantError(RuntimeError):
    """Report bookkeeping is internally inconsistent."""


@dataclass
class NodeSpec:
    name: str
    role: str                    # source | intermediate | receiver
    index: int = 0               # session index for sources and receivers
    policy: str = "combine"      # combine | forward
    coeffs: str = "random"       # random | ones
    emits: int = 1               # combinations emitted per activation
    decode_at_node: bool = True  # hash scheme: try the decode-first path
    verify: bool = True


@dataclass
class AdversarySpec:
    node: str
    strategy: str                       # conflicting-source | random-injector
    fake_edges: tuple = ()              # conflicting-source: targets of the fake
    fake_packet: int = 1                # which of its packets (j) is faked
    inject_count: int = 1               # random-injector: packets per run
    colluders: tuple = ()               # source nodes leaking their keys


@dataclass
class Topology:
    name: str
    nodes: dict
    edges: list
    pairs: dict                         # session index -> receiver name
    adversaries: list = dc_field(default_factory=list)

    @property
    def sessions(self) -> int:
        return max((n.index for n in self.nodes.values() if n.role == "source"),
                   default=0)

    def out_edges(self, node: str) -> list:
        return [e for e in self.edges if e[0] == node]

    def without_adversaries(self) -> "Topology":
        return Topology(self.name, self.nodes, self.edges, self.pairs, [])


def validate(topo: Topology):
    names = set(topo.nodes)
    for a, b in topo.edges:
        if a not in names or b not in names:
            raise ConfigError(f"edge ({a}, {b}) references unknown node")
    # acyclicity by Kahn's algorithm
    indeg = {n: 0 for n in names}
    for _, b in topo.edges:
        indeg[b] += 1
    queue = sorted(n for n, d in indeg.items() if d == 0)
    seen = 0
    order = []
    while queue:
        cur = queue.pop(0)
        order.append(cur)
        seen += 1
        for a, b in topo.edges:
            if a == cur:
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue.append(b)
        queue.sort()
    if seen != len(names):
        raise ConfigError("topology has a cycle")
    sources = {n.index: n.name for n in topo.nodes.values() if n.role == "source"}
    if sorted(sources) != list(range(1, len(sources) + 1)):
        raise ConfigError("source indices must be 1..s")
    for idx, rname in topo.pairs.items():
        if idx not in sources:
            raise ConfigError(f"pair {idx} has no source")
        if rname not in names or topo.nodes[rname].role != "receiver":
            raise ConfigError(f"pair {idx} target {rname} is not a receiver")
        if not _has_path(topo, sources[idx], rname):
            raise ConfigError(f"no path from {sources[idx]} to {rname}")
    for adv in topo.adversaries:
        if adv.node not in names:
            raise ConfigError(f"adversary at unknown node {adv.node}")
    return order


def _has_path(topo: Topology, a: str, b: str) -> bool:
    frontier, seen = [a], {a}
    while frontier:
        cur = frontier.pop()
        if cur == b:
            return True
        for _, nxt in topo.out_edges(cur):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


# -- topology files --------------------------------------------------------

def topology_to_dict(topo: Topology) -> dict:
    return {
        "name": topo.name,
        "nodes": [asdict(n) for n in topo.nodes.values()],
        "edges": [list(e) for e in topo.edges],
        "pairs": {int(k): v for k, v in topo.pairs.items()},
        "adversaries": [asdict(a) for a in topo.adversaries],
    }


def topology_from_dict(d: dict) -> Topology:
    nodes = {}
    for rec in d["nodes"]:
        rec = dict(rec)
        spec = NodeSpec(**rec)
        nodes[spec.name] = spec
    advs = []
    for rec in d.get("adversaries", []):
        rec = dict(rec)
        for key in ("fake_edges", "colluders"):
            if key in rec:
                rec[key] = tuple(rec[key])
        advs.append(AdversarySpec(**rec))
    topo = Topology(
        d.get("name", "topology"), nodes,
        [tuple(e) for e in d["edges"]],
        {int(k): v for k, v in d["pairs"].items()}, advs)
    validate(topo)
    return topo


def save_topology(topo: Topology, path):
    with open(path, "w") as fh:
        yaml.safe_dump(topology_to_dict(topo), fh, sort_keys=False)


def load_topology(path) -> Topology:
    with open(path) as fh:
        return topology_from_dict(yaml.safe_load(fh))


# -- fixtures --------------------------------------------------------------

def butterfly(adversary: bool = True) -> Topology:
    """Two crossing unicast sessions sharing one coding node.

    S2 is the classic conflicting source: it commits one block but sends a
    different one to the coding node A, keeping the committed block on its
    direct edge to R1, so R1's decoded output is corrupted although every
    individual link looks plausible.
    """
    nodes = {
        "S1": NodeSpec("S1", "source", index=1),
        "S2": NodeSpec("S2", "source", index=2),
        "A": NodeSpec("A", "intermediate", policy="combine", coeffs="ones"),
        "B": NodeSpec("B", "intermediate", policy="forward"),
        "R1": NodeSpec("R1", "receiver", index=1),
        "R2": NodeSpec("R2", "receiver", index=2),
    }
    edges = [("S1", "A"), ("S1", "R2"), ("S2", "A"), ("S2", "R1"),
             ("A", "B"), ("B", "R1"), ("B", "R2")]
    advs = [AdversarySpec("S2", "conflicting-source", fake_edges=("A",))] \
        if adversary else []
    return Topology("butterfly", nodes, edges, {1: "R1", 2: "R2"}, advs)


def four_pair(gen_size: int = 1) -> Topology:
    """Four sessions; receivers see combinations of different source subsets,
    so they verify with different key sums."""
    nodes = {}
    for i in range(1, 5):
        nodes[f"S{i}"] = NodeSpec(f"S{i}", "source", index=i)
        nodes[f"R{i}"] = NodeSpec(f"R{i}", "receiver", index=i)
    nodes["N12"] = NodeSpec("N12", "intermediate", emits=2 * gen_size)
    nodes["N23"] = NodeSpec("N23", "intermediate", emits=2 * gen_size)
    nodes["Nall"] = NodeSpec("Nall", "intermediate", emits=4 * gen_size)
    edges = [("S1", "N12"), ("S2", "N12"), ("S2", "N23"), ("S3", "N23"),
             ("S1", "Nall"), ("S2", "Nall"), ("S3", "Nall"), ("S4", "Nall"),
             ("N12", "R1"), ("N12", "R2"), ("N23", "R3"), ("Nall", "R4")]
    return Topology("four_pair", nodes, edges,
                    {1: "R1", 2: "R2", 3: "R3", 4: "R4"}, [])


FOUR_PAIR_SUBSETS = {"R1": (1, 2, 3), "R2": (1, 2, 4),
                     "R3": (2, 3, 4), "R4": (1, 2, 3, 4)}


def random_dag(sessions: int = 2, layers: int = 3, width: int = 3,
               seed: int = 0) -> Topology:
    """Layered random DAG: sources, `layers` ranks of combining nodes, receivers."""
    rng = np.random.default_rng(seed)
    nodes = {}
    ranks = []
    srcs = [f"S{i}" for i in range(1, sessions + 1)]
    for i, s in enumerate(srcs, 1):
        nodes[s] = NodeSpec(s, "source", index=i)
    ranks.append(srcs)
    for layer in range(layers):
        rank = []
        for w in range(width):
            name = f"N{layer}_{w}"
            nodes[name] = NodeSpec(name, "intermediate", emits=2)
            rank.append(name)
        ranks.append(rank)
    rcvs = [f"R{i}" for i in range(1, sessions + 1)]
    for i, r in enumerate(rcvs, 1):
        nodes[r] = NodeSpec(r, "receiver", index=i)
    ranks.append(rcvs)
    edges = []
    for prev, cur in zip(ranks, ranks[1:]):
        for node in cur:
            fan = 1 + int(rng.integers(0, min(2, len(prev))))
            picks = rng.choice(len(prev), size=fan, replace=False)
            for p in sorted(int(x) for x in picks):
                edges.append((prev[p], node))
        for node in prev:  # no orphan ranks
            if not any(a == node for a, _ in edges):
                tgt = cur[int(rng.integers(0, len(cur)))]
                edges.append((node, tgt))
    topo = Topology(f"random_dag_{seed}", nodes, edges,
                    {i: f"R{i}" for i in range(1, sessions + 1)}, [])
    # guarantee session paths through the middle ranks
    for i in range(1, sessions + 1):
        if not _has_path(topo, f"S{i}", f"R{i}"):
            chain = [f"S{i}"] + [rank[int(rng.integers(0, len(rank)))]
                                 for rank in ranks[1:-1]] + [f"R{i}"]
            for a, b in zip(chain, chain[1:]):
                if (a, b) not in topo.edges:
                    topo.edges.append((a, b))
    validate(topo)
    return topo


FIXTURES = {
    "butterfly": butterfly,
    "four_pair": four_pair,
    "random_dag": random_dag,
}


# -- run configuration and reports ----------------------------------------

@dataclass
class RunConfig:
    scheme: str = "none"
    gen_size: int = 1
    data_len: int = 2
    q: int = 65521
    seed: int = 0
    tag_slots: int = 1
    he_modulus_bits: int = 128
    hdl_group_bits: int = 64
    key_subsets: dict | None = None     # node -> owner subset (intermac)
    max_rounds: int | None = None
    hdl_pp: object = None               # reuse group parameters across runs
    he_keys: object = None              # reuse encryption keys across runs

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")


@dataclass
class NodeReport:
    name: str
    received: int = 0
    accepted: int = 0
    dropped: int = 0
    corrupted_received: int = 0
    corrupted_accepted: int = 0


@dataclass
class ReceiverReport:
    name: str
    session: int
    ok: bool
    recovered: list
    mismatched: list


@dataclass
class SimReport:
    topology: str
    scheme: str
    seed: int
    q: int
    rounds: int
    bytes_sent: int
    mults: int
    exps: int
    nodes: dict
    receivers: dict
    events: list

    def validate(self):
        for rep in self.nodes.values():
            if rep.received != rep.accepted + rep.dropped:
                raise InvariantError(
                    f"{rep.name}: received {rep.received} != accepted "
                    f"{rep.accepted} + dropped {rep.dropped}")
            if rep.corrupted_accepted > rep.accepted:
                raise InvariantError(f"{rep.name}: corrupted_accepted overflow")
            if rep.corrupted_received > rep.received:
                raise InvariantError(f"{rep.name}: corrupted_received overflow")
        return self

    def all_ok(self) -> bool:
        return all(r.ok for r in self.receivers.values())

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            head = {k: getattr(self, k) for k in
                    ("topology", "scheme", "seed", "q", "rounds",
                     "bytes_sent", "mults", "exps")}
            head["type"] = "summary"
            fh.write(json.dumps(head) + "\n")
            for rep in self.nodes.values():
                fh.write(json.dumps({"type": "node", **asdict(rep)}) + "\n")
            for rep in self.receivers.values():
                fh.write(json.dumps({"type": "receiver", **asdict(rep)}) + "\n")
            for ev in self.events:
                fh.write(json.dumps({"type": "event", **ev}) + "\n")


@dataclass
class RunState:
    """Everything the run derived; tests read ground truth from here."""

    params: coding.GenerationParams
    space: coding.SourceSpace
    data: np.ndarray
    fake_packets: dict
    scheme_state: dict
    accepted: dict
    decoded: dict


def _digest8(packet, params) -> str:
    return hashlib.blake2b(coding.packet_to_bytes(packet, params),
                           digest_size=8).hexdigest()


# -- the run ---------------------------------------------------------------

def run(topo: Topology, cfg: RunConfig, return_state: bool = False):
    order = validate(topo)
    f = PrimeField(cfg.q)
    rng = np.random.default_rng(cfg.seed)
    s = topo.sessions
    if s < 1:
        raise ConfigError("topology has no sources")
    base = coding.GenerationParams(f, s, cfg.gen_size, cfg.data_len)
    data = f.random_array(rng, (base.packet_count, cfg.data_len))
    gen_id = bytes(rng.bytes(coding.GEN_ID_BYTES))
    space_id = hashlib.blake2b(gen_id, digest_size=prf.SPACE_ID_BYTES).digest()
    source_names = {n.index: n.name for n in topo.nodes.values()
                    if n.role == "source"}

    conflicting = {a.node: a for a in topo.adversaries
                   if a.strategy == "conflicting-source"}
    fake_data = {}
    for name, adv in sorted(conflicting.items()):
        fake_data[name] = f.random_array(rng, cfg.data_len)

    state = _scheme_setup(topo, cfg, f, base, data, gen_id, space_id, rng)
    params = state["params"]
    space = state["space"]

    # committed, tagged source packets
    committed = {}
    for pos, packet in enumerate(space.packets):
        i, j = params.owner_of(pos)
        tags = state["tags"].get((i, j), ())
        committed[(i, j)] = coding.Packet(gen_id, packet.symbols, tags)

    fake_packets = {}
    for name, adv in sorted(conflicting.items()):
        idx = topo.nodes[name].index
        j = adv.fake_packet
        real = committed[(idx, j)]
        symbols = real.symbols.copy()
        symbols[: params.data_len] = fake_data[name]
        tags = _forged_tags(cfg.scheme, state, symbols, idx, j, f)
        fake_packets[name] = coding.Packet(gen_id, symbols, tags)

    reports = {n: NodeReport(n) for n in topo.nodes}
    events = []
    accepted = {n: [] for n in topo.nodes}
    verifier_state = {}
    bytes_sent = 0
    cost0 = COUNTER.snapshot()

    inboxes = {n: [] for n in topo.nodes}

    def emit(sender, packet):
        nonlocal bytes_sent
        for _, dst in topo.out_edges(sender):
            if conflicting.get(sender) is not None:
                adv = conflicting[sender]
                idx = topo.nodes[sender].index
                pos_match = packet is committed[(idx, adv.fake_packet)]
                if pos_match and dst in adv.fake_edges:
                    packet_out = fake_packets[sender]
                else:
                    packet_out = packet
            else:
                packet_out = packet
            bytes_sent += len(coding.packet_to_bytes(packet_out, params))
            next_inboxes[dst].append((sender, packet_out))

    # round 0: sources flood their packets
    next_inboxes = {n: [] for n in topo.nodes}
    for idx in sorted(source_names):
        name = source_names[idx]
        for j in range(1, cfg.gen_size + 1):
            emit(name, committed[(idx, j)])
    injectors = [a for a in topo.adversaries if a.strategy == "random-injector"]
    injected = set()

    rounds = 0
    max_rounds = cfg.max_rounds or len(topo.nodes) + 2
    while any(next_inboxes.values()) and rounds < max_rounds:
        inboxes = next_inboxes
        next_inboxes = {n: [] for n in topo.nodes}
        rounds += 1
        for name in order:
            spec = topo.nodes[name]
            arrivals = inboxes[name]
            if not arrivals:
                continue
            fresh = []
            for sender, packet in arrivals:
                decision = _verify(cfg, state, spec, packet, f,
                                   verifier_state, name)
                rep = reports[name]
                rep.received += 1
                bad = space.corrupted(packet)
                if bad:
                    rep.corrupted_received += 1
                if decision.accepted:
                    rep.accepted += 1
                    if bad:
                        rep.corrupted_accepted += 1
                    accepted[name].append(packet)
                    fresh.append(packet)
                else:
                    rep.dropped += 1
                events.append({
                    "round": rounds, "node": name, "sender": sender,
                    "decision": decision.value, "corrupted": bool(bad),
                    "digest": _digest8(packet, params)})
            if spec.role != "intermediate" or not fresh:
                continue
            if name in (a.node for a in injectors):
                adv = next(a for a in injectors if a.node == name)
                if name not in injected:
                    injected.add(name)
                    for _ in range(adv.inject_count):
                        junk = _inject(cfg, state, params, f, rng,
                                       gen_id, adv, topo)
                        emit(name, junk)
                continue
            if spec.policy == "forward":
                for packet in fresh:
                    emit(name, packet)
            else:
                pool = accepted[name]
                for _ in range(spec.emits):
                    if spec.coeffs == "ones":
                        coeffs = f.array([1] * len(pool))
                    else:
                        coeffs = f.random_nonzero(rng, len(pool))
                    combo = coding.combine(pool, coeffs, params)
                    tags = ()
                    if state["tags"] and all(p.tags for p in pool):
                        tags = intermac.combine_tags(
                            [p.tags for p in pool], coeffs, f)
                    emit(name, coding.Packet(gen_id, combo.symbols, tags))

    cost1 = COUNTER.snapshot()
    receivers = {}
    decoded_all = {}
    for name, spec in topo.nodes.items():
        if spec.role != "receiver":
            continue
        got = coding.decode(accepted[name], params)
        decoded_all[name] = got
        mismatched, recovered = [], sorted(got)
        ok = True
        for j in range(1, cfg.gen_size + 1):
            pos = params.position(spec.index, j)
            if pos not in got:
                ok = False
                continue
            if np.any((got[pos][: params.data_len] - data[pos]) % f.q):
                ok = False
                mismatched.append(pos)
        receivers[name] = ReceiverReport(name, spec.index, ok, recovered,
                                         mismatched)

    report = SimReport(
        topo.name, cfg.scheme, cfg.seed, cfg.q, rounds, bytes_sent,
        cost1[0] - cost0[0], cost1[1] - cost0[1], reports, receivers, events)
    report.validate()
    if return_state:
        return report, RunState(params, space, data, fake_packets, state,
                                accepted, decoded_all)
    return report


def _scheme_setup(topo, cfg, f, base, data, gen_id, space_id, rng) -> dict:
    state = {"params": base, "tags": {}, "space": None}
    if cfg.scheme in ("none", "hash"):
        state["space"] = coding.build_space(data, base, gen_id)
    if cfg.scheme == "hash":
        pp = cfg.hdl_pp or hdl.setup(None, cfg.data_len, rng, q=f.q,
                                     group_bits=cfg.hdl_group_bits)
        if pp.order != f.q:
            raise ConfigError("hash group order must match the field modulus")
        state["pp"] = pp
        state["commitments"] = hdl.commit(pp, state["space"])
    elif cfg.scheme == "intermac_cpk":
        pk, sk = cfg.he_keys or benaloh.keygen(rng, cfg.he_modulus_bits, f.q)
        prf_key = prf.key_from_seed(gen_id, b"cpk")
        res = protocols.cpk_run(data, f, base.sources, cfg.gen_size, gen_id,
                                space_id, prf_key, pk, sk, rng)
        state.update(params=res.params, space=res.space, keyset=res.keyset,
                     tags=res.tags, transcript=res.transcript)
    elif cfg.scheme == "spacemac_pm":
        pk, sk = cfg.he_keys or benaloh.keygen(rng, cfg.he_modulus_bits, f.q)
        prf_key = prf.key_from_seed(gen_id, b"pm")
        res = protocols.pm_run(data, f, base.sources, cfg.gen_size, gen_id,
                               space_id, prf_key, pk, sk, rng,
                               tag_slots=cfg.tag_slots)
        state.update(space=res.space, tags=res.tags, prf_key=res.prf_key,
                     space_id=res.space_id, transcript=res.transcript)
    if cfg.scheme == "intermac_cpk":
        subsets = dict(cfg.key_subsets or {})
        state["key_sums"] = {
            node: state["keyset"].key_sum(subsets.get(node))
            for node in topo.nodes}
    return state


def _forged_tags(scheme, state, symbols, idx, j, f):
    """Best tag a conflicting source can attach to its fake packet."""
    if scheme == "intermac_cpk":
        # it holds its own key, so it signs honestly with it
        return intermac.sign(state["keyset"].keys[idx - 1], symbols, f)
    if scheme == "spacemac_pm":
        # it only holds issued tags, so it reuses the committed packet's tag
        return state["tags"].get((idx, j), ())
    return ()


def _inject(cfg, state, params, f, rng, gen_id, adv, topo):
    symbols = f.random_array(rng, params.symbol_len)
    tags = ()
    if cfg.scheme == "intermac_cpk":
        known = [topo.nodes[c].index for c in adv.colluders]
        if known:
            ksum = state["keyset"].key_sum(known)
            tags = tuple(f.dot(ksum[sl], symbols)
                         for sl in range(ksum.shape[0]))
        else:
            tags = tuple(int(x) for x in f.random_array(rng, 1))
    elif cfg.scheme == "spacemac_pm":
        tags = tuple(int(x) for x in f.random_array(rng, cfg.tag_slots))
    return coding.Packet(gen_id, symbols, tags)


def _verify(cfg, state, spec, packet, f, verifier_state, name):
    if cfg.scheme == "none" or not spec.verify or spec.role == "source":
        return detector.Decision.ACCEPTED_UNCHECKED
    if cfg.scheme == "hash":
        vs = verifier_state.get(name)
        if vs is None:
            vs = detector.VerifierState(
                state["params"], state["pp"], state["commitments"],
                decode_at_node=spec.decode_at_node)
            verifier_state[name] = vs
        return detector.receive_and_verify(vs, packet)
    if cfg.scheme == "intermac_cpk":
        ksum = state["key_sums"][name]
        if len(packet.tags) != ksum.shape[0]:
            return detector.Decision.DROPPED
        ok = intermac.verify(ksum, packet.symbols, packet.tags, f)
    else:
        if len(packet.tags) != cfg.tag_slots:
            return detector.Decision.DROPPED
        ok = protocols.verify_mac(state["prf_key"], state["space_id"],
                                  packet.symbols, packet.tags, f)
    return detector.Decision.ACCEPTED_HOMOMORPHIC if ok \
        else detector.Decision.DROPPED
