import json
import subprocess
import sys

import numpy as np
import pytest

from nshutter.cli import abl_table, exact_report, main
from nshutter.config import ConfigError, ScenarioConfig
from nshutter.shutter import default_scenario

SQ2, SQ6 = np.sqrt(2), np.sqrt(6)


def write(tmp_path, data, name="s.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data, indent=2))
    return str(path)


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


class TestConfig:
    def test_round_trip(self, tmp_path):
        s = default_scenario(photon_amplitudes=[0.6, 0.8j])
        cfg = ScenarioConfig.from_scenario(s)
        back = ScenarioConfig.load(write(tmp_path, cfg.to_dict())).to_scenario()
        np.testing.assert_allclose(back.photon_amplitudes, s.photon_amplitudes, atol=1e-15)
        np.testing.assert_allclose(back.post_state.amplitudes, s.post_state.amplitudes, atol=1e-15)
        np.testing.assert_allclose(back.pre_state.amplitudes, s.pre_state.amplitudes, atol=1e-15)

    def test_defaults(self):
        s = ScenarioConfig.default().to_scenario()
        np.testing.assert_allclose(s.post_state.amplitudes, np.array([1, 1, -1]) / np.sqrt(3), atol=1e-15)

    def test_malformed_amplitude_names_field_and_line(self):
        text = '{\n  "shutters": ["a", "b", "c"],\n  "photon_modes": ["a", "b"],\n  "photon_amplitudes": [[1, 0], "x"]\n}'
        with pytest.raises(ConfigError) as err:
            ScenarioConfig.from_json(text)
        assert err.value.field == "photon_amplitudes[1]"
        assert err.value.line == 4

    def test_bad_json_line(self):
        with pytest.raises(ConfigError) as err:
            ScenarioConfig.from_json('{\n  "shutters": ["a",\n  ]\n}')
        assert err.value.line == 3

    @pytest.mark.parametrize(
        "patch, field",
        [
            ({"extra": 1}, "extra"),
            ({"photon_amplitudes": [[1, 0]]}, "photon_amplitudes"),
            ({"pre_state": [[1, 0]]}, "pre_state"),
            ({"shutters": "abc"}, "shutters"),
            ({"post_state": [[1, 0], [0, float("nan")], [0, 0]]}, "post_state[1]"),
            ({"photon_amplitudes": [[1, 0], [1, 0]]}, "photon_amplitudes"),
        ],
    )
    def test_field_errors(self, patch, field):
        data = ScenarioConfig.default().to_dict() | patch
        with pytest.raises(ConfigError) as err:
            ScenarioConfig.from_dict(data).to_scenario()
        assert err.value.field == field

    def test_missing_field(self):
        data = ScenarioConfig.default().to_dict()
        del data["photon_modes"]
        with pytest.raises(ConfigError, match="missing"):
            ScenarioConfig.from_dict(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ScenarioConfig.load(tmp_path / "nope.json")


class TestExact:
    def test_default_values(self):
        r = exact_report(ScenarioConfig.default())
        p = r["probabilities"]
        assert p["reflect"] == pytest.approx(1 / 3, abs=1e-12)
        assert p["transmit"] == pytest.approx(2 / 3, abs=1e-12)
        assert p["postselect_given_reflect"] == pytest.approx(1 / 3, abs=1e-12)
        assert p["postselect_given_transmit"] == 0
        assert p["reflect_and_postselect"] == pytest.approx(1 / 9, abs=1e-12)
        coeffs = [complex(*c) for c in r["transmitted_in_postselection_basis"]]
        np.testing.assert_allclose(coeffs, [0, 0, SQ6 / 4, SQ6 / 4, -SQ2 / 4, SQ2 / 4], atol=1e-10)
        assert r["postselection_basis"][:3] == ["psi2(a')", "psi2(b')", "perp1(a')"]
        assert r["certainty"]["certain"] == {"a": True, "b": True}

    def test_arbitrary_photon(self, tmp_path, capsys):
        cfg = ScenarioConfig.default().to_dict() | {"photon_amplitudes": [[0.6, 0], [0.8, 0]]}
        code, out = run_json(capsys, "exact", "--config", write(tmp_path, cfg))
        assert code == 0
        assert out["certainty"]["residual"] == 0
        assert out["certainty"]["orthogonal"]

    def test_text_output(self, capsys):
        assert main(["exact"]) == 0
        out = capsys.readouterr().out
        assert "reflect_and_postselect" in out and "0.111111111111" in out

    def test_zero_transmission_still_reports(self):
        cfg = ScenarioConfig(("a", "b", "c"), ("a", "b"), (1, 0), (1, 0, 0), (1, 0, 0))
        r = exact_report(cfg)
        assert r["transmitted_state"] is None and r["probabilities"]["reflect"] == 1


class TestAbl:
    def test_default(self):
        rows = {r["shutter"]: r for r in abl_table(ScenarioConfig.default())}
        assert rows["a"]["certain"] and rows["b"]["certain"]
        assert rows["c"]["abl"] == pytest.approx(0.2, abs=1e-12) and not rows["c"]["certain"]
        assert all(r["abl_all_open"] == pytest.approx(1 / 3, abs=1e-12) for r in rows.values())

    def test_post_equals_pre(self):
        u = (3 ** -0.5,) * 3
        rows = abl_table(ScenarioConfig(("a", "b", "c"), ("a", "b"), (2 ** -0.5,) * 2, u, u))
        assert all(r["abl"] == pytest.approx(0.2, abs=1e-12) for r in rows)
        assert all(r["abl_all_open"] == pytest.approx(1 / 3, abs=1e-12) for r in rows)
        assert not any(r["certain"] for r in rows)

    def test_single_shutter(self, tmp_path, capsys):
        cfg = {"shutters": ["a"], "photon_modes": [], "photon_amplitudes": [], "post_state": [[1, 0]]}
        code, rows = run_json(capsys, "abl", "--config", write(tmp_path, cfg))
        assert code == 0
        assert rows[0]["abl"] == 1 and rows[0]["certain"]

    def test_degenerate_row(self):
        cfg = ScenarioConfig(("a", "b", "c"), ("a", "b"), (2 ** -0.5,) * 2, (1, 0, 0), (0, 1, 0))
        rows = abl_table(cfg)
        assert all(r["error"] for r in rows) and rows[0]["abl_all_open"] is None

    def test_text(self, capsys):
        assert main(["abl"]) == 0
        assert "yes" in capsys.readouterr().out


class TestSimulate:
    def test_json_deterministic_across_processes(self):
        cmd = [sys.executable, "-m", "nshutter.cli", "simulate", "--n", "20000", "--seed", "12345", "--json"]
        a = subprocess.run(cmd, capture_output=True, check=True).stdout
        b = subprocess.run(cmd, capture_output=True, check=True).stdout
        assert a == b
        assert json.loads(a)["stats"]["counts"]["transmitted_postselected"] == 0

    def test_workers_do_not_change_output(self, capsys):
        _, one = run_json(capsys, "simulate", "--n", "200000", "--seed", "3")
        _, four = run_json(capsys, "simulate", "--n", "200000", "--seed", "3", "--workers", "4")
        assert one == four

    def test_text(self, capsys):
        assert main(["simulate", "--n", "10000"]) == 0
        assert "verdict: pass" in capsys.readouterr().out

    def test_bad_n(self, capsys):
        assert main(["simulate", "--n", "0"]) == 2

    def test_bad_seed(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--seed", "-1"])
        assert exc.value.code == 2


class TestErrors:
    def test_malformed_config_exit_code(self, tmp_path, capsys):
        cfg = ScenarioConfig.default().to_dict() | {"pre_state": [[1, 0], [0, 0], [0]]}
        assert main(["exact", "--config", write(tmp_path, cfg)]) == 2
        err = capsys.readouterr().err
        assert "pre_state[2]" in err and "line" in err

    def test_unnormalized_state_exit_code(self, tmp_path, capsys):
        cfg = ScenarioConfig.default().to_dict() | {"post_state": [[1, 0], [1, 0], [0, 0]]}
        assert main(["abl", "--config", write(tmp_path, cfg)]) == 2
        assert "post_state" in capsys.readouterr().err

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(["nope"])
        assert exc.value.code == 2


class TestVerify:
    def test_passes(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert out.count("[PASS]") == 9 and "all checks passed" in out

    def test_tight_tolerance_fails_roundoff_checks(self, capsys):
        code, out = run_json(capsys, "verify", "--tolerance", "1e-16")
        assert code == 1 and not out["passed"]
        # Statistical and exact-integer checks are unaffected by the override.
        assert {"monte_carlo", "determinism"}.isdisjoint(out["failed"])
        assert "eq7" in out["failed"]
