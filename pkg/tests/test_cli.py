import csv
import json

import pytest

from ncdetect import simulator as sim
from ncdetect.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSimulate:
    def test_defended_butterfly_summary(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--topology", "butterfly", "--scheme", "hash",
            "--q", "2147483647")
        assert code == 0
        summary = json.loads(out)
        assert summary["scheme"] == "hash"
        assert summary["dropped"] == {"A": 1}
        assert summary["corrupted_accepted"] == 0
        assert summary["receivers"]["R1"] is True
        assert summary["receivers"]["R2"] is False

    def test_undefended_butterfly(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--scheme", "none")
        assert code == 0
        summary = json.loads(out)
        assert summary["dropped"] == {}
        assert summary["corrupted_accepted"] == 4
        assert summary["receivers"] == {"R1": False, "R2": False}

    def test_adversary_stripping(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--scheme", "none", "--adversary", "none")
        assert code == 0
        summary = json.loads(out)
        assert summary["corrupted_accepted"] == 0
        assert summary["receivers"] == {"R1": True, "R2": True}

    def test_four_pair_uses_subset_keys(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--topology", "four_pair",
            "--scheme", "intermac_cpk", "--q", "251")
        assert code == 0
        summary = json.loads(out)
        assert all(summary["receivers"].values())

    def test_report_file(self, capsys, tmp_path):
        path = tmp_path / "rep.jsonl"
        code, out, _ = run_cli(
            capsys, "simulate", "--scheme", "spacemac_pm", "--q", "251",
            "--report", str(path))
        assert code == 0
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert lines[0]["type"] == "summary"
        assert lines[0]["scheme"] == "spacemac_pm"

    def test_yaml_topology_path(self, capsys, tmp_path):
        path = tmp_path / "topo.yaml"
        sim.save_topology(sim.butterfly(adversary=False), path)
        code, out, _ = run_cli(
            capsys, "simulate", "--topology", str(path), "--scheme", "none")
        assert code == 0
        assert json.loads(out)["topology"] == "butterfly"

    def test_missing_topology_file(self, capsys):
        code, _, err = run_cli(
            capsys, "simulate", "--topology", "/nonexistent.yaml")
        assert code == 2
        assert "bad topology" in err


class TestGame:
    def test_intermac_game(self, capsys):
        code, out, _ = run_cli(
            capsys, "game", "--scheme", "intermac", "--trials", "20000",
            "--seed", "1")
        assert code == 0
        res = json.loads(out)
        assert res["trials"] == 20000
        assert res["scheme"] == "intermac"
        p0 = 1 / 251
        sigma = (p0 * (1 - p0) / res["trials"]) ** 0.5
        assert abs(res["rate"] - p0) <= 4 * sigma

    def test_spacemac_game_two_tags(self, capsys):
        code, out, _ = run_cli(
            capsys, "game", "--scheme", "spacemac", "--trials", "50000",
            "--tags", "2")
        assert code == 0
        res = json.loads(out)
        assert res["expected_rate"] == pytest.approx(1 / 251 ** 2)
        assert res["rate"] <= 3 / 251 ** 2


class TestOverhead:
    def test_headline_numbers(self, capsys, tmp_path):
        path = tmp_path / "fig5.csv"
        code, out, _ = run_cli(
            capsys, "overhead", "--figure", "5", "--out", str(path))
        assert code == 0
        head = json.loads(out)
        assert head["baseline_over_ours_online"] == pytest.approx(32.0312)
        assert head["single_tag_pct"] == pytest.approx(0.0977)
        assert head["cpk_saved_pct"] == pytest.approx(93.8373)
        assert head["pm_saved_pct"] == pytest.approx(98.5249)
        assert head["mac_ms"] == pytest.approx(6.246)
        assert head["baseline_ms"] == pytest.approx(982.272)
        rows = list(csv.reader(path.read_text().splitlines()[1:]))
        assert rows[0][0] == "q_bits" and len(rows) == 9

    def test_fig7_csv(self, capsys, tmp_path):
        path = tmp_path / "fig7.csv"
        code, out, _ = run_cli(
            capsys, "overhead", "--figure", "7", "--out", str(path))
        assert code == 0
        rows = list(csv.reader(path.read_text().splitlines()[1:]))
        header, body = rows[0], rows[1:]
        assert header == ["data_len", "mac_ms", "hash_ms", "baseline_ms"]
        for row in body:
            assert 4.0 < float(row[1]) < 6.0


class TestBench:
    def test_bench_runs(self, capsys):
        code, out, _ = run_cli(capsys, "bench", "--op", "mult", "--q-bits", "64")
        assert code == 0
        res = json.loads(out)
        assert res["ops_per_second"] > 0


class TestParser:
    def test_command_required(self, capsys):
        with pytest.raises(SystemExit):
            main([])

    def test_unknown_scheme_rejected(self, capsys):
        with pytest.raises(SystemExit):
            main(["simulate", "--scheme", "bogus"])
