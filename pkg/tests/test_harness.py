import csv
import json
from pathlib import Path

import pytest

from metashock.errors import ConfigParseError, ConfigValidationError
from metashock.harness import (
    REFERENCE_TABLE,
    TABLE_EPS,
    TABLE_TIMES,
    config_from_dict,
    format_number,
    initial_profile,
    load_config,
    run,
)


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.delenv("METASHOCK_OUT", raising=False)
    return tmp_path / "out"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_minimal_reduced_config(self):
        cfg = config_from_dict({"mode": "reduced", "eps": [0.07], "xi0": -0.4})
        assert (cfg.a, cfg.ell, cfg.cfl, cfg.n) == (1.0, 1.0, 0.45, 800)
        assert cfg.eps == (0.07,) and cfg.xi0 == -0.4

    def test_negative_eps_names_the_field(self):
        with pytest.raises(ConfigValidationError) as info:
            config_from_dict({"mode": "steady", "eps": [-0.1]})
        assert info.value.field == "eps"
        assert str(info.value) == "eps must be positive"

    def test_table_defaults(self):
        cfg = config_from_dict({"mode": "table-repro"})
        assert cfg.eps == TABLE_EPS == (0.1, 0.07, 0.055, 0.04, 0.02)
        assert cfg.sample_times == TABLE_TIMES

    @pytest.mark.parametrize("data, field", [
        ({"mode": "explode"}, "mode"),
        ({"mode": "steady", "colour": 1}, "colour"),
        ({"mode": "steady", "n": 2}, "n"),
        ({"mode": "steady", "flux": "cubic"}, "flux"),
        ({"mode": "evolve", "sample_times": [1, 0.5]}, "sample_times"),
        ({"mode": "evolve", "sample_times": [1, 2], "tmax": 1}, "sample_times"),
        ({"mode": "reduced"}, "xi0"),
        ({"mode": "reduced", "xi0": 1.5}, "xi0"),
        ({"mode": "steady", "xi": [2.0]}, "xi"),
        ({"mode": "steady", "u_minus": -1, "u_plus": 1}, "u_minus"),
        ({"mode": "evolve", "u0": "wiggly"}, "u0"),
        ({"mode": "reduced", "xi0": 0.1, "theta": "exact"}, "theta"),
        ({"mode": "steady", "threads": 0}, "threads"),
    ])
    def test_invalid_fields(self, data, field):
        with pytest.raises(ConfigValidationError) as info:
            config_from_dict(data)
        assert info.value.field == field

    def test_parse_error_has_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "mode": "steady",\n  "eps": [0.1,]\n}\n')
        with pytest.raises(ConfigParseError) as info:
            load_config(path)
        assert info.value.line == 3

    def test_digest_is_stable(self):
        a = config_from_dict({"mode": "steady", "eps": 0.1})
        b = config_from_dict({"mode": "steady", "eps": [0.1]})
        assert a.digest() == b.digest()
        assert a.digest() != config_from_dict({"mode": "steady", "eps": 0.2}).digest()

    def test_initial_profiles(self):
        table = initial_profile(config_from_dict({"mode": "evolve"}))
        assert table(-1.0) == 1.0 and table(1.0) == -1.0
        linear = initial_profile(config_from_dict({"mode": "evolve", "u0": "linear"}))
        assert linear(0.0) == 0.0
        poly = initial_profile(config_from_dict({"mode": "evolve", "u0": [-0.5, -1, 0.5]}))
        assert poly(0.5) == pytest.approx(table(0.5))


def test_number_format():
    assert format_number(5e-5) == "5e-05"
    assert format_number(-0.4008) == "-0.4008"
    assert format_number(0.0) == "0"
    assert format_number("") == ""


def test_reference_table_shape():
    assert set(REFERENCE_TABLE) == set(TABLE_EPS)
    assert all(set(row) == set(TABLE_TIMES) for row in REFERENCE_TABLE.values())
    assert REFERENCE_TABLE[0.1][0.2] == -0.4008
    assert REFERENCE_TABLE[0.04][10] == -0.3320


class TestRun:
    def test_spectrum_outputs(self, outdir):
        cfg = config_from_dict({"mode": "spectrum", "eps": [0.05], "n": 200,
                                "output_dir": str(outdir)})
        manifest = run(cfg)
        assert manifest.ok and manifest.exit_code == 0
        names = {Path(f).name for f in manifest.files}
        assert {"spectrum_eps0.05_xi0.csv", "spectrum_eps0.05_xi0.json"} <= names
        summary = json.loads((outdir / "spectrum_eps0.05_xi0.json").read_text())
        assert -1e-3 < summary["lambda1_numeric"] < 0
        assert {"lambda1_asymptotic", "ratio", "k_count", "complex_band_re"} <= set(summary)
        rows = read_csv(outdir / "spectrum_eps0.05_xi0.csv")
        assert len(rows) == 2 * 200 + 1
        assert sum(r["class"] == "lambda1" for r in rows) == 1

    def test_manifest_lists_existing_files(self, outdir):
        cfg = config_from_dict({"mode": "steady", "eps": [0.1, 0.05], "xi": [-0.2, 0.3],
                                "n": 400, "output_dir": str(outdir)})
        manifest = run(cfg, threads=2)
        data = json.loads(Path(manifest.path).read_text())
        assert data["config_hash"] == cfg.digest()
        assert len(data["runs"]) == 2
        for f in manifest.files:
            assert Path(f).stat().st_size > 0
        assert not list(outdir.glob("*.partial"))

    def test_evolve_with_snapshots(self, outdir):
        cfg = config_from_dict({"mode": "evolve", "eps": [0.1], "n": 200,
                                "sample_times": [0, 0.2, 10], "snapshots": True,
                                "output_dir": str(outdir)})
        assert run(cfg).ok
        assert len(list(outdir.glob("state_eps0.1_t*.csv"))) == 3
        rows = read_csv(outdir / "evolve_eps0.1.csv")
        assert [float(r["t"]) for r in rows] == [0, 0.2, 10]
        assert float(rows[0]["xi_zero"]) == pytest.approx(-0.41421, abs=1e-3)

    def test_table_comparison_columns(self, outdir):
        cfg = config_from_dict({"mode": "table-repro", "eps": [0.1], "n": 200,
                                "sample_times": [0.2, 1.0], "output_dir": str(outdir)})
        assert run(cfg).ok
        rows = read_csv(outdir / "table_comparison.csv")
        assert {"eps", "t", "xi_paper", "xi_ours", "abs_diff"} <= set(rows[0])
        assert float(rows[0]["xi_paper"]) == -0.4008

    def test_env_overrides_output_dir(self, tmp_path, monkeypatch):
        target = tmp_path / "env"
        monkeypatch.setenv("METASHOCK_OUT", str(target))
        cfg = config_from_dict({"mode": "asymptotics", "eps": [0.1], "output_dir": "ignored"})
        manifest = run(cfg)
        assert Path(manifest.path).parent == target

    def test_failure_keeps_partial_output(self, outdir):
        # eps = 0.5 makes the layer too wide for the matching bracket at xi = 0.9
        cfg = config_from_dict({"mode": "steady", "eps": [0.1, 0.5], "xi": [0.9], "n": 400,
                                "output_dir": str(outdir)})
        manifest = run(cfg)
        assert manifest.exit_code == 1
        failed = [r for r in manifest.runs if r["status"] == "failed"]
        assert len(failed) == 1 and "BracketError" in failed[0]["error"]

    def test_outputs_are_deterministic(self, tmp_path, monkeypatch):
        monkeypatch.delenv("METASHOCK_OUT", raising=False)
        texts = []
        for sub in ("a", "b"):
            cfg = config_from_dict({"mode": "reduced", "eps": [0.1], "xi0": -0.3, "tmax": 500,
                                    "output_dir": str(tmp_path / sub)})
            run(cfg)
            texts.append((tmp_path / sub / "reduced_eps0.1.csv").read_bytes())
        assert texts[0] == texts[1]
