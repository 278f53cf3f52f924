import json
from pathlib import Path

import pytest

from pbqc import cli
from pbqc.config import AuthConfig, ConfigError, ScenarioConfig
from pbqc.protocols import run_scheme_a
from pbqc.stats import stats

GOLDEN = Path(__file__).parent / "data" / "table1.txt"


def run_cli(tmp_path, *argv, name="out.jsonl"):
    out = tmp_path / name
    code = cli.main(["run", *argv, "--out", str(out), "--quiet"])
    lines = out.read_text().splitlines() if out.exists() else []
    return code, [json.loads(line) for line in lines], out


class TestDeterminism:
    @pytest.mark.parametrize("scheme,adv", [("a", "none"), ("b", "entangling-intercept"), ("pv-bb84", "intercept-resend"), ("iv", "scheme-iv-attack")])
    def test_same_seed_same_bytes(self, tmp_path, scheme, adv):
        args = ["--scheme", scheme, "--adversary", adv, "--trials", "3", "--rounds", "2", "--seed", "99"]
        _, _, a = run_cli(tmp_path, *args, name="a.jsonl")
        _, _, b = run_cli(tmp_path, *args, name="b.jsonl")
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        _, _, a = run_cli(tmp_path, "--scheme", "b", "--seed", "1", name="a.jsonl")
        _, _, b = run_cli(tmp_path, "--scheme", "b", "--seed", "2", name="b.jsonl")
        assert a.read_bytes() != b.read_bytes()

    def test_trial_seed_independent_of_count(self):
        assert cli.derive_seed(5, 0, 1) == cli.derive_seed(5, 0, 1)
        assert len({cli.derive_seed(5, t, r) for t in range(10) for r in range(10)}) == 100

    def test_prefix_stable(self, tmp_path):
        _, short, _ = run_cli(tmp_path, "--scheme", "a", "--trials", "2", "--seed", "4", name="s.jsonl")
        _, long, _ = run_cli(tmp_path, "--scheme", "a", "--trials", "5", "--seed", "4", name="l.jsonl")
        assert long[: len(short)] == short


class TestRun:
    def test_scheme_a_ten_rounds(self, tmp_path):
        code, recs, _ = run_cli(tmp_path, "--scheme", "a", "--rounds", "10", "--seed", "7")
        assert code == 0
        ts = [r for r in recs if r["record"] == "transcript"]
        assert len(ts) == 10
        assert all(r["outcome"]["accepted"] for r in ts)
        assert [r["round"] for r in ts] == list(range(10))
        keys = [r for r in recs if r["record"] == "keys"]
        assert len(keys) == 1
        assert keys[0]["verifier"]["V0"]["K_P"] == keys[0]["prover"]["V0"]["K_P"]
        assert keys[0]["verifier"]["V0"]["N"] == 10

    def test_scheme_iii_attack_summary(self, tmp_path, capsys):
        code = cli.main(["run", "--scheme", "iii", "--adversary", "scheme-iii-attack", "--trials", "50", "--out", str(tmp_path / "x")])
        err = capsys.readouterr().err
        assert code == 0
        assert "spoof-rate=1.000" in err
        assert "detection=0.000" in err

    def test_scheme_i_rounds_inside_transcript(self, tmp_path):
        code, recs, _ = run_cli(tmp_path, "--scheme", "i", "--rounds", "3", "--trials", "2")
        assert code == 0
        assert len(recs) == 2

    def test_auth_flag(self, tmp_path, capsys):
        code = cli.main(["run", "--scheme", "b", "--rounds", "2", "--auth-z", "3", "--out", str(tmp_path / "x")])
        err = capsys.readouterr().err
        assert code == 0 and "auth_ok=2/2" in err
        rec = [json.loads(l) for l in (tmp_path / "x").read_text().splitlines() if '"keys"' in l][0]
        assert rec["auth"]["V0"] == {"bits": 4, "decoded_ok": True}

    def test_stdout_stream(self, capsys):
        assert cli.main(["run", "--scheme", "iii", "--quiet"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 1 and json.loads(out[0])["scheme"] == "iii"


class TestExitCodes:
    def test_expect_accept_fails_under_attack(self, tmp_path):
        code, _, _ = run_cli(tmp_path, "--scheme", "b", "--adversary", "entangling-intercept", "--trials", "20", "--expect", "accept")
        assert code == 1

    def test_expect_detect(self, tmp_path):
        code, _, _ = run_cli(tmp_path, "--scheme", "b", "--adversary", "entangling-intercept-both", "--rounds", "10", "--trials", "5", "--expect", "detect")
        assert code == 0
        code, _, _ = run_cli(tmp_path, "--scheme", "a", "--expect", "detect")
        assert code == 1

    def test_bad_flag_value(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--scheme", "z"])
        assert exc.value.code == 2

    def test_bad_config_values(self, tmp_path):
        code, _, _ = run_cli(tmp_path, "--rounds", "0")
        assert code == 2
        code, _, _ = run_cli(tmp_path, "--scheme", "iii", "--auth-z", "2")
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.json"), "--quiet"]) == 2

    def test_internal_error(self, monkeypatch, tmp_path):
        from pbqc.lab import OwnershipError

        def boom(cfg):
            raise OwnershipError("E0 does not hold qubit 1")

        monkeypatch.setattr(cli, "run_batch", boom)
        assert cli.main(["run", "--quiet"]) == 3


class TestSeedSource:
    def test_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PBQC_SEED", "31")
        _, _, a = run_cli(tmp_path, "--scheme", "b", name="a.jsonl")
        monkeypatch.delenv("PBQC_SEED")
        _, _, b = run_cli(tmp_path, "--scheme", "b", "--seed", "31", name="b.jsonl")
        assert a.read_bytes() == b.read_bytes()

    def test_flag_beats_env(self):
        args = cli.build_parser().parse_args(["run", "--seed", "3"])
        assert cli.config_from_args(args, {"PBQC_SEED": "9"}).seed == 3
        args = cli.build_parser().parse_args(["run"])
        assert cli.config_from_args(args, {"PBQC_SEED": "9"}).seed == 9
        with pytest.raises(ConfigError):
            cli.config_from_args(args, {"PBQC_SEED": "x"})

    def test_auth_z_mapping(self):
        args = cli.build_parser().parse_args(["run", "--scheme", "a", "--auth-z", "4"])
        assert cli.config_from_args(args, {}).auth == AuthConfig(True, 4, 5)


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = ScenarioConfig(scheme="b", d=2.5, rounds=3, trials=4, seed=11, adversary="entangling-intercept", backend="labels", expect="any", auth=AuthConfig(True, 2, 3))
        path = tmp_path / "c.json"
        path.write_text(cfg.to_json())
        assert ScenarioConfig.load(str(path)) == cfg
        assert ScenarioConfig.from_dict(json.loads(cfg.to_json())) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"scheme": "a", "sheme": "b"})
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"auth": {"zp": 1}})

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"scheme": "b", "seed": 5, "trials": 2}))
        args = cli.build_parser().parse_args(["run", "--config", str(path), "--trials", "7"])
        cfg = cli.config_from_args(args, {"PBQC_SEED": "1"})
        assert (cfg.scheme, cfg.seed, cfg.trials) == ("b", 5, 7)

    def test_positions(self):
        cfg = ScenarioConfig(positions={"V0": 0.0, "P": 2.0, "V1": 3.0}).validate()
        assert cfg.world().positions["P"] == 2.0
        with pytest.raises(ConfigError):
            ScenarioConfig(positions={"V0": 0.0, "P": 5.0, "V1": 3.0}).validate()

    def test_expectation_auto(self):
        assert ScenarioConfig().expectation() == "accept"
        assert ScenarioConfig(adversary="passive").expectation() == "any"


class TestTableAndStats:
    def test_emit_table_bytes(self, tmp_path):
        out = tmp_path / "t.txt"
        assert cli.main(["run", "--emit-table", "--out", str(out)]) == 0
        assert out.read_bytes() == GOLDEN.read_bytes()

    def test_emit_table_stdout(self, capsys):
        assert cli.main(["run", "--emit-table"]) == 0
        assert capsys.readouterr().out.encode() == GOLDEN.read_bytes()

    def test_stats_without_adversary(self):
        rep = stats([run_scheme_a(seed=s) for s in range(5)])
        assert rep["adversary"] == {}
        assert rep["acceptance_rate"] == 1.0 and rep["n"] == 5
        assert sum(sum(c.values()) for c in rep["branches"].values()) > 0

    def test_stats_empty(self):
        with pytest.raises(ValueError):
            stats([])
