import json

import numpy as np
import pytest

from ncdetect import benaloh, coding, hdl, simulator as sim
from ncdetect.detector import Decision
from ncdetect.field import PrimeField
from ncdetect.simulator import (
    FOUR_PAIR_SUBSETS,
    AdversarySpec,
    ConfigError,
    InvariantError,
    NodeSpec,
    RunConfig,
    Topology,
    butterfly,
    four_pair,
    load_topology,
    random_dag,
    save_topology,
    topology_from_dict,
    topology_to_dict,
    validate,
)

Q = 65521


@pytest.fixture(scope="module")
def he_keys():
    return benaloh.keygen(np.random.default_rng(1000), 128, Q)


@pytest.fixture(scope="module")
def hdl_pp():
    return hdl.setup(None, 2, np.random.default_rng(1001), q=Q, group_bits=64)


def run_butterfly(scheme, seed=0, adversary=True, state=False, **kw):
    cfg = RunConfig(scheme=scheme, q=Q, seed=seed, **kw)
    return sim.run(butterfly(adversary=adversary), cfg, return_state=state)


class TestValidation:
    def test_butterfly_is_valid(self):
        order = validate(butterfly())
        assert set(order) == set(butterfly().nodes)
        assert order.index("S1") < order.index("A") < order.index("B")

    def test_cycle_rejected(self):
        topo = butterfly()
        topo.edges.append(("B", "A"))
        with pytest.raises(ConfigError, match="cycle"):
            validate(topo)

    def test_dangling_edge(self):
        topo = butterfly()
        topo.edges.append(("A", "ghost"))
        with pytest.raises(ConfigError, match="unknown node"):
            validate(topo)

    def test_source_indices_contiguous(self):
        topo = butterfly()
        topo.nodes["S2"].index = 3
        with pytest.raises(ConfigError, match="1..s"):
            validate(topo)

    def test_pair_target_must_be_receiver(self):
        topo = butterfly()
        topo.pairs[1] = "A"
        with pytest.raises(ConfigError, match="not a receiver"):
            validate(topo)

    def test_pair_needs_path(self):
        topo = butterfly()
        topo.edges = [e for e in topo.edges if e != ("B", "R1")]
        topo.edges = [e for e in topo.edges if e != ("S2", "R1")]
        with pytest.raises(ConfigError, match="no path"):
            validate(topo)

    def test_adversary_node_must_exist(self):
        topo = butterfly()
        topo.adversaries.append(AdversarySpec("ghost", "random-injector"))
        with pytest.raises(ConfigError, match="adversary"):
            validate(topo)

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(scheme="bogus")


class TestTopologyFiles:
    def test_dict_round_trip(self):
        topo = butterfly()
        back = topology_from_dict(topology_to_dict(topo))
        assert back.name == topo.name
        assert set(back.nodes) == set(topo.nodes)
        assert back.edges == topo.edges
        assert back.pairs == topo.pairs
        assert back.adversaries[0].fake_edges == ("A",)

    def test_yaml_round_trip(self, tmp_path):
        topo = four_pair()
        path = tmp_path / "topo.yaml"
        save_topology(topo, path)
        back = load_topology(path)
        assert back.edges == topo.edges
        assert back.pairs == topo.pairs
        rep = sim.run(back, RunConfig(scheme="none", q=Q))
        assert rep.topology == "four_pair"

    def test_loaded_topology_is_validated(self):
        d = topology_to_dict(butterfly())
        d["edges"].append(["B", "A"])
        with pytest.raises(ConfigError):
            topology_from_dict(d)


class TestFixtures:
    def test_four_pair_shape(self):
        topo = four_pair()
        assert topo.sessions == 4
        assert len(topo.edges) == 12
        assert topo.nodes["Nall"].emits == 4

    def test_random_dag_deterministic(self):
        a = random_dag(seed=5)
        b = random_dag(seed=5)
        assert a.edges == b.edges
        assert random_dag(seed=6).edges != a.edges

    def test_random_dag_validates(self):
        for seed in range(4):
            validate(random_dag(sessions=3, layers=2, width=2, seed=seed))


class TestUndefendedRun:
    def test_wrong_decode_at_both_receivers(self):
        rep, st = run_butterfly("none", state=True)
        assert not rep.receivers["R1"].ok
        assert not rep.receivers["R2"].ok
        assert rep.receivers["R1"].mismatched == [0]
        assert rep.receivers["R2"].mismatched == [1]

    def test_decoded_value_matches_closed_form(self):
        # R1 holds v2 and v1 + v2'; eliminating v2 leaves v1 + (v2' - v2)
        rep, st = run_butterfly("none", state=True)
        v1 = st.data[0]
        v2 = st.data[1]
        fake = st.fake_packets["S2"].symbols[: st.params.data_len]
        expect = (v1 + fake - v2) % Q
        got = st.decoded["R1"][0][: st.params.data_len]
        assert got.tolist() == expect.tolist()
        # session 2 at R1 decodes clean (it came straight from S2)
        assert st.decoded["R1"][1][: st.params.data_len].tolist() == v2.tolist()

    def test_corruption_propagates_unchecked(self):
        rep = run_butterfly("none")
        total = sum(r.corrupted_accepted for r in rep.nodes.values())
        assert total == 4  # A, B, R1, R2 each accept one tainted packet
        assert all(r.dropped == 0 for r in rep.nodes.values())

    def test_exact_byte_count(self):
        # 7 transmissions of 16 + 4 * 2 bytes: no padding, no tags
        rep = run_butterfly("none")
        assert rep.bytes_sent == 7 * 24


class TestDefendedButterfly:
    @pytest.mark.parametrize("scheme", ["hash", "intermac_cpk", "spacemac_pm"])
    def test_fake_dropped_at_coding_node(self, scheme, he_keys, hdl_pp):
        kw = {"he_keys": he_keys} if scheme != "hash" else {"hdl_pp": hdl_pp}
        rep, st = run_butterfly(scheme, state=True, **kw)
        assert rep.nodes["A"].received == 2
        assert rep.nodes["A"].accepted == 1
        assert rep.nodes["A"].dropped == 1
        drop_events = [e for e in rep.events if e["decision"] == "dropped"]
        assert len(drop_events) == 1
        ev = drop_events[0]
        assert ev["node"] == "A" and ev["sender"] == "S2"
        assert ev["corrupted"] is True
        assert ev["digest"] == sim._digest8(st.fake_packets["S2"], st.params)

    @pytest.mark.parametrize("scheme", ["hash", "intermac_cpk", "spacemac_pm"])
    def test_session_one_restored(self, scheme, he_keys, hdl_pp):
        kw = {"he_keys": he_keys} if scheme != "hash" else {"hdl_pp": hdl_pp}
        rep = run_butterfly(scheme, **kw)
        assert rep.receivers["R1"].ok
        assert rep.receivers["R1"].mismatched == []
        # nothing corrupted is ever accepted anywhere
        assert sum(r.corrupted_accepted for r in rep.nodes.values()) == 0
        # the malicious source's own session is honestly undeliverable
        assert not rep.receivers["R2"].ok
        assert rep.receivers["R2"].recovered == [0]

    def test_fake_packet_ground_truth(self, he_keys):
        _, st = run_butterfly("intermac_cpk", state=True, he_keys=he_keys)
        fake = st.fake_packets["S2"]
        assert st.space.corrupted(fake)
        # with n = 2 and m = 2 the data span is everything: only the
        # whole-packet clause catches this forgery
        assert st.space.in_span(fake, "data")
        assert not st.space.in_span(fake, "whole")

    def test_hash_run_uses_both_paths(self, hdl_pp):
        rep = run_butterfly("hash", hdl_pp=hdl_pp)
        decisions = {e["decision"] for e in rep.events}
        assert Decision.ACCEPTED_TRADITIONAL.value in decisions
        assert Decision.ACCEPTED_HOMOMORPHIC.value in decisions
        assert rep.exps > 0

    def test_deterministic(self, he_keys):
        a = run_butterfly("intermac_cpk", seed=3, he_keys=he_keys)
        b = run_butterfly("intermac_cpk", seed=3, he_keys=he_keys)
        assert a.events == b.events
        assert a.bytes_sent == b.bytes_sent
        assert (a.mults, a.exps) == (b.mults, b.exps)

    def test_benign_run_all_clean(self, he_keys):
        rep = run_butterfly("spacemac_pm", adversary=False, he_keys=he_keys)
        assert rep.all_ok()
        assert all(r.dropped == 0 for r in rep.nodes.values())
        assert all(r.corrupted_received == 0 for r in rep.nodes.values())

    def test_pm_multi_slot(self, he_keys):
        rep = run_butterfly("spacemac_pm", he_keys=he_keys, tag_slots=2)
        assert rep.receivers["R1"].ok
        assert rep.nodes["A"].dropped == 1

    def test_hash_group_must_match_field(self):
        toy = hdl.HdlParams(23, 11, (2, 4))
        with pytest.raises(ConfigError):
            run_butterfly("hash", hdl_pp=toy)


class TestKeySubsets:
    def test_four_pair_subset_keys_verify(self, he_keys):
        cfg = RunConfig(scheme="intermac_cpk", q=Q, seed=2, he_keys=he_keys,
                        key_subsets=FOUR_PAIR_SUBSETS)
        rep = sim.run(four_pair(), cfg)
        assert rep.all_ok()
        assert all(r.dropped == 0 for r in rep.nodes.values())

    def test_non_covering_subset_rejects_honest_traffic(self, he_keys):
        # R1 sees sessions 1 and 2; a key sum over {3, 4} cannot verify them
        cfg = RunConfig(scheme="intermac_cpk", q=Q, seed=2, he_keys=he_keys,
                        key_subsets={**FOUR_PAIR_SUBSETS, "R1": (3, 4)})
        rep = sim.run(four_pair(), cfg)
        assert not rep.receivers["R1"].ok
        assert rep.nodes["R1"].dropped > 0
        assert rep.receivers["R4"].ok


class TestInjector:
    def _with_injector(self, colluders):
        topo = butterfly(adversary=False)
        topo.adversaries.append(
            AdversarySpec("B", "random-injector", colluders=colluders))
        return topo

    def test_uncollided_junk_dropped(self, he_keys):
        cfg = RunConfig(scheme="intermac_cpk", q=Q, seed=4, he_keys=he_keys)
        rep = sim.run(self._with_injector(()), cfg)
        assert rep.nodes["R1"].dropped >= 1
        assert rep.nodes["R2"].dropped >= 1
        assert sum(r.corrupted_accepted for r in rep.nodes.values()) == 0

    def test_full_collusion_defeats_the_mac(self, he_keys):
        # when every key holder colludes, the forged tag equals the full key
        # sum applied to the junk, so default verifiers accept it
        cfg = RunConfig(scheme="intermac_cpk", q=Q, seed=4, he_keys=he_keys)
        rep = sim.run(self._with_injector(("S1", "S2")), cfg)
        assert rep.nodes["R1"].corrupted_accepted >= 1
        assert rep.nodes["R2"].corrupted_accepted >= 1

    def test_spacemac_junk_dropped(self, he_keys):
        cfg = RunConfig(scheme="spacemac_pm", q=Q, seed=5, he_keys=he_keys)
        rep = sim.run(self._with_injector(()), cfg)
        assert rep.nodes["R1"].dropped >= 1
        assert sum(r.corrupted_accepted for r in rep.nodes.values()) == 0


class TestRandomDag:
    def test_benign_delivery(self, he_keys, hdl_pp):
        topo = random_dag(sessions=2, layers=2, width=2, seed=3)
        for scheme, kw in (("spacemac_pm", {"he_keys": he_keys}),
                           ("hash", {"hdl_pp": hdl_pp})):
            rep = sim.run(topo, RunConfig(scheme=scheme, q=Q, seed=103, **kw))
            assert rep.all_ok(), scheme
            assert all(r.corrupted_accepted == 0 for r in rep.nodes.values())

    def test_deterministic(self, he_keys):
        topo = random_dag(sessions=2, layers=2, width=2, seed=3)
        cfg = RunConfig(scheme="spacemac_pm", q=Q, seed=103, he_keys=he_keys)
        a = sim.run(topo, cfg)
        b = sim.run(topo, cfg)
        assert a.events == b.events and a.bytes_sent == b.bytes_sent


class TestStatisticalSoundness:
    def test_hash_scheme_never_accepts_fakes(self, hdl_pp):
        for seed in range(25):
            rep = run_butterfly("hash", seed=seed, hdl_pp=hdl_pp)
            assert rep.nodes["A"].dropped == 1
            assert sum(r.corrupted_accepted for r in rep.nodes.values()) == 0

    def test_forged_tag_acceptance_matches_field_size(self):
        # self-signed fake passes the full-sum check only when the hidden
        # key annihilates the perturbation: rate 1/q over key draws
        q = 31
        keys = benaloh.keygen(np.random.default_rng(0), 128, q)
        topo = butterfly()
        runs, hits = 1000, 0
        for seed in range(runs):
            cfg = RunConfig(scheme="intermac_cpk", q=q, seed=seed, he_keys=keys)
            rep = sim.run(topo, cfg)
            hits += bool(rep.nodes["A"].corrupted_accepted)
        p = 1 / q
        sigma = (p * (1 - p) / runs) ** 0.5
        assert abs(hits / runs - p) <= 3 * sigma


class TestReports:
    def test_event_counts_match_node_counters(self, he_keys):
        rep = run_butterfly("intermac_cpk", he_keys=he_keys)
        assert len(rep.events) == sum(r.received for r in rep.nodes.values())
        for name, nrep in rep.nodes.items():
            mine = [e for e in rep.events if e["node"] == name]
            assert len(mine) == nrep.received
            assert sum(e["decision"] != "dropped" for e in mine) == nrep.accepted

    def test_jsonl_layout(self, tmp_path, hdl_pp):
        rep = run_butterfly("hash", hdl_pp=hdl_pp)
        path = tmp_path / "report.jsonl"
        rep.to_jsonl(path)
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        kinds = [l["type"] for l in lines]
        assert kinds[0] == "summary"
        assert lines[0]["scheme"] == "hash" and lines[0]["q"] == Q
        assert kinds.count("node") == len(rep.nodes)
        assert kinds.count("receiver") == 2
        assert kinds.count("event") == len(rep.events)

    def test_invariant_violation_detected(self):
        rep = run_butterfly("none")
        rep.nodes["A"].received += 1
        with pytest.raises(InvariantError):
            rep.validate()

    def test_max_rounds_cap(self):
        rep = run_butterfly("none", max_rounds=1)
        assert rep.rounds == 1
        # the combination never crossed B, so R1 cannot decode session 1
        assert not rep.receivers["R1"].ok

    def test_cpk_run_uses_padded_params(self, he_keys):
        rep, st = run_butterfly("intermac_cpk", state=True, he_keys=he_keys)
        assert st.params.pad_len == 1
        assert st.params.symbol_len == 2 + 1 + 2
        rep2, st2 = run_butterfly("none", state=True)
        assert st2.params.pad_len == 0
