import json
import math
import os

import pytest

import anisospec
from anisospec.errors import ConfigurationError, DataIOError
from anisospec.estimators import TestConfig
from anisospec.fields import GaussianAniso, Matern, Seed
from anisospec.harness import (
    CSV_HEADER,
    MonteCarloRow,
    config_as_dict,
    config_from_dict,
    parse_config,
    resolve_threads,
    run_montecarlo,
    run_single,
    serialize_config,
)
from anisospec.windows import CosinePower, Rectangular

# small but honest cells: the full pipeline at ~0.01 s per replication
FAST_TEST_KEYS = {"a": 6, "lambda": 8.0, "a_r": 30, "lambda_r": 30.0}


def fast_config(out=None, **overrides):
    data = {
        "model": "gauss-aniso",
        "r": [1.0],
        "n": [50],
        "reps": 5,
        "seed": 11,
        "timing": False,
        **FAST_TEST_KEYS,
    }
    if out is not None:
        data["out"] = str(out)
    data.update(overrides)
    return config_from_dict(data)


class TestConfigParsing:
    def test_defaults(self):
        cfg = config_from_dict({"model": "gauss-aniso"})
        assert cfg.model == GaussianAniso(1.0)
        assert cfg.r_sweep == (1.0,)
        assert cfg.n_list == (2000,)
        assert cfg.reps == 200
        assert cfg.seed == Seed(0, 0)
        assert cfg.threads == 1
        assert cfg.timing is True
        assert cfg.out_path == "results"
        assert cfg.test == TestConfig()
        assert cfg.alpha_level == 0.05

    def test_scalar_and_list_forms_agree(self):
        scalars = config_from_dict({"model": "gauss-aniso", "r": 2.0, "n": 64})
        lists = config_from_dict({"model": "gauss-aniso", "r": [2.0], "n": [64]})
        assert scalars == lists

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigurationError, match="bogus, zeta"):
            config_from_dict({"model": "gauss-aniso", "zeta": 1, "bogus": 2})

    def test_model_specific_keys(self):
        with pytest.raises(ConfigurationError, match="matern model only"):
            config_from_dict({"model": "gauss-aniso", "nu": 2.0})
        with pytest.raises(ConfigurationError, match="gauss-aniso model only"):
            config_from_dict({"model": "matern", "r": 2.0})
        with pytest.raises(ConfigurationError, match="model must be"):
            config_from_dict({"model": "brownian"})

    def test_matern_defaults(self):
        cfg = config_from_dict({"model": "matern"})
        assert cfg.model == Matern(nu=3.0, ell=1.0)
        assert len(cfg.r_sweep) == 1 and math.isnan(cfg.r_sweep[0])
        (label, model), = cfg.cell_models()
        assert math.isnan(label) and model == cfg.model

    def test_taper_variants(self):
        assert config_from_dict(
            {"model": "matern", "taper": "rect"}
        ).test.taper == Rectangular()
        assert config_from_dict(
            {"model": "matern", "taper": "cosine", "alpha": 4}
        ).test.taper == CosinePower(4)
        with pytest.raises(ConfigurationError, match="taper"):
            config_from_dict({"model": "matern", "taper": "hann"})

    @pytest.mark.parametrize(
        "bad",
        [
            {"reps": 0},
            {"n": 2},
            {"alpha_level": 1.5},
            {"threads": 0},
            {"threads": "many"},
            {"r": []},
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(ConfigurationError):
            config_from_dict({"model": "gauss-aniso", **bad})

    def test_parse_config_io(self, tmp_path):
        path = tmp_path / "study.toml"
        path.write_text('model = "gauss-aniso"\nr = [1.0, 4.0]\nreps = 10\n')
        cfg = parse_config(path)
        assert cfg.r_sweep == (1.0, 4.0) and cfg.reps == 10

        with pytest.raises(DataIOError):
            parse_config(tmp_path / "missing.toml")

        broken = tmp_path / "broken.toml"
        broken.write_text("n = [oops\n")
        with pytest.raises(ConfigurationError, match="not valid TOML"):
            parse_config(broken)

    def test_serialize_round_trip(self, tmp_path):
        cfg = config_from_dict(
            {
                "model": "gauss-aniso",
                "r": [1.0, 4.0],
                "n": [50, 64],
                "reps": 7,
                "seed": 11,
                "stream": 5,
                "threads": 2,
                "timing": False,
                "alpha": 4,
                **FAST_TEST_KEYS,
            }
        )
        path = tmp_path / "echo.toml"
        path.write_text(serialize_config(cfg))
        assert parse_config(path) == cfg

    def test_serialize_round_trip_matern_rect(self, tmp_path):
        cfg = config_from_dict(
            {"model": "matern", "nu": 1.5, "ell": 0.8, "taper": "rect"}
        )
        path = tmp_path / "echo.toml"
        path.write_text(serialize_config(cfg))
        assert parse_config(path) == cfg

    def test_config_as_dict_is_json_ready(self):
        gauss = config_from_dict({"model": "gauss-aniso", "r": [2.0]})
        echo = json.loads(json.dumps(config_as_dict(gauss)))
        assert echo["model"] == "gauss-aniso" and echo["r"] == [2.0]

        matern = config_from_dict({"model": "matern", "taper": "rect"})
        echo = json.loads(json.dumps(config_as_dict(matern)))
        assert echo["nu"] == 3.0 and echo["ell"] == 1.0
        assert echo["taper"] == "rect" and "alpha" not in echo


class TestReplication:
    def test_run_single_deterministic(self):
        cfg = fast_config()
        first = run_single(cfg, Seed(11, 3))
        second = run_single(cfg, Seed(11, 3))
        assert first == second
        other = run_single(cfg, Seed(11, 4))
        assert other.statistic != first.statistic

    def test_run_single_matches_montecarlo_cell(self, tmp_path):
        # with reps=1 the cell mean IS the replication at stream offset 0
        cfg = fast_config(out=tmp_path / "res", reps=1, stream=7)
        (row,) = run_montecarlo(cfg)
        single = run_single(cfg, Seed(11, 7))
        assert row.mean_statistic == single.statistic
        assert row.mean_m_hat == single.m_hat
        assert row.rejections == int(single.reject)


class TestMonteCarloOutputs:
    def test_csv_and_json_layout(self, tmp_path):
        out = tmp_path / "res"
        cfg = fast_config(out=out, reps=4)
        (row,) = run_montecarlo(cfg)

        lines = (out / "results.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert len(fields) == 10
        assert float(fields[0]) == 1.0 and int(fields[1]) == 50
        assert int(fields[2]) == 4 and int(fields[3]) == row.rejections
        assert float(fields[4]) == row.rate  # 17 digits round-trip exactly
        assert float(fields[6]) == row.mean_statistic
        assert int(fields[8]) == 0  # no degenerate replications
        assert float(fields[9]) == 0.0  # timing disabled
        assert not (out / "results.csv.partial").exists()

        payload = json.loads((out / "results.json").read_text())
        assert payload["version"] == anisospec.__version__
        assert payload["config"]["model"] == "gauss-aniso"
        assert payload["rows"] == [row.as_dict()]

    def test_single_replication_rate(self, tmp_path):
        cfg = fast_config(out=tmp_path / "res", reps=1)
        (row,) = run_montecarlo(cfg)
        assert row.rate in (0.0, 1.0)
        assert row.rate_se == 0.0

    def test_cell_order(self, tmp_path):
        cfg = fast_config(out=tmp_path / "res", r=[1.0, 4.0], n=[50, 64], reps=1)
        rows = run_montecarlo(cfg)
        assert [(row.r, row.n) for row in rows] == [
            (1.0, 50),
            (1.0, 64),
            (4.0, 50),
            (4.0, 64),
        ]

    def test_rerun_is_byte_identical(self, tmp_path):
        first = run_montecarlo(fast_config(out=tmp_path / "one"))
        second = run_montecarlo(fast_config(out=tmp_path / "two"))
        assert first == second
        assert (tmp_path / "one/results.csv").read_bytes() == (
            tmp_path / "two/results.csv"
        ).read_bytes()

    def test_stream_offset_changes_results(self, tmp_path):
        base = run_montecarlo(fast_config(out=tmp_path / "a"))
        moved = run_montecarlo(fast_config(out=tmp_path / "b", stream=1))
        assert base[0].mean_statistic != moved[0].mean_statistic

    def test_blocked_output_dir(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("i am a file")
        cfg = fast_config(out=blocker)
        with pytest.raises(DataIOError, match="not writable"):
            run_montecarlo(cfg)


class TestThreadResolution:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("ANISO_THREADS", "3")
        assert resolve_threads(fast_config(threads=1), max_n=50) == 3

    def test_config_threads(self, monkeypatch):
        monkeypatch.delenv("ANISO_THREADS", raising=False)
        assert resolve_threads(fast_config(threads=2), max_n=50) == 2

    def test_auto_is_positive(self, monkeypatch):
        monkeypatch.delenv("ANISO_THREADS", raising=False)
        workers = resolve_threads(fast_config(threads="auto"), max_n=50)
        assert 1 <= workers <= max(1, os.cpu_count() or 1)

    def test_memory_cap(self, monkeypatch):
        monkeypatch.delenv("ANISO_THREADS", raising=False)
        # 20 bytes/entry at n=1e5 is ~200 GB per worker: cap collapses to 1
        assert resolve_threads(fast_config(threads=64), max_n=100_000) == 1


class TestRowFormatting:
    def test_as_csv_round_trips_floats_exactly(self):
        row = MonteCarloRow(
            r=1.0 / 3.0,
            n=50,
            reps=7,
            rejections=3,
            rate=3.0 / 7.0,
            rate_se=math.sqrt((3 / 7) * (4 / 7) / 7),
            mean_statistic=-1.2345678901234567,
            mean_m_hat=1e-17,
            degenerate=0,
            wall_seconds=0.125,
        )
        fields = row.as_csv().split(",")
        assert len(fields) == 10
        assert float(fields[0]) == row.r
        assert float(fields[4]) == row.rate
        assert float(fields[5]) == row.rate_se
        assert float(fields[6]) == row.mean_statistic
        assert float(fields[7]) == row.mean_m_hat
