"""Tests for config parsing, presets, and field-path error reporting."""

import json
import math

import pytest

from pvsmooth.config import BATTERY_PRESETS, load_preset, load_run_config
from pvsmooth.errors import ConfigError


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestDefaults:
    def test_empty_config_fills_everything(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path, {}))
        assert cfg.weather_synth is not None
        assert cfg.weather_synth.days == 3
        assert cfg.battery.name == "NaS"
        assert cfg.diesel.fuel_per_kwh == 0.5
        assert cfg.econ.discount_rate == 0.05
        assert cfg.constraints.fluctuation_limit == 150.0
        assert cfg.cases == ("A", "B", "C", "D", "baseline")
        assert len(cfg.battery_candidates) == 4

    def test_output_dir_relative_to_config(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path, {"output_dir": "results"}))
        assert cfg.output_dir == tmp_path / "results"

    def test_weather_file_relative_to_config(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path, {"weather": {"file": "w.csv"}}))
        assert cfg.weather_file == (tmp_path / "w.csv").resolve()
        assert cfg.weather_synth is None


class TestPresets:
    def test_all_battery_presets_load(self):
        for name in BATTERY_PRESETS:
            data = load_preset(name)
            assert data["eff_power"] == 0.85
            assert data["soc_min_fraction"] == 0.10

    def test_nas_is_the_costliest_per_kw(self):
        caps = {n: load_preset(n)["capital_power"] for n in BATTERY_PRESETS}
        assert caps["table1_liion"] > caps["table1_nas"] > caps["table1_nicd"]

    def test_unknown_preset_lists_the_bundled_ones(self):
        with pytest.raises(ConfigError, match="table1_nas"):
            load_preset("table9_unobtainium")

    def test_battery_by_preset_name(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path, {"battery": "table1_la"}))
        assert cfg.battery.name == "Lead-Acid"
        assert cfg.battery.lifetime_years == 2.0

    def test_inline_battery_spec(self, tmp_path):
        spec = load_preset("table1_nas")
        spec["capital_power"] = 900.0
        cfg = load_run_config(write_config(tmp_path, {"battery": spec}))
        assert cfg.battery.capital_power == 900.0


class TestFieldPathErrors:
    def test_negative_fluctuation_limit_names_the_field(self, tmp_path):
        path = write_config(tmp_path, {"constraints": {"fluctuation_limit": -5}})
        with pytest.raises(ConfigError, match="constraints.*fluctuation_limit"):
            load_run_config(path)

    def test_unknown_section_key(self, tmp_path):
        path = write_config(tmp_path, {"econ": {"engery_price": 1.0}})
        with pytest.raises(ConfigError, match="econ.engery_price"):
            load_run_config(path)

    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(ConfigError, match="wether"):
            load_run_config(write_config(tmp_path, {"wether": {}}))

    def test_unknown_case(self, tmp_path):
        with pytest.raises(ConfigError, match="cases"):
            load_run_config(write_config(tmp_path, {"cases": ["A", "Z"]}))

    def test_empty_cases(self, tmp_path):
        with pytest.raises(ConfigError, match="at least one case"):
            load_run_config(write_config(tmp_path, {"cases": []}))

    def test_invalid_json_reports_the_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_run_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "absent.json")

    def test_two_weather_sources_rejected(self, tmp_path):
        path = write_config(
            tmp_path, {"weather": {"file": "w.csv", "synthetic": {}}}
        )
        with pytest.raises(ConfigError, match="exactly one"):
            load_run_config(path)


class TestCoercions:
    def test_inf_strings_accepted_for_limits(self, tmp_path):
        path = write_config(
            tmp_path, {"constraints": {"fluctuation_limit": "inf"}}
        )
        cfg = load_run_config(path)
        assert cfg.constraints.fluctuation_limit == math.inf

    def test_other_strings_rejected(self, tmp_path):
        path = write_config(
            tmp_path, {"constraints": {"fluctuation_limit": "lots"}}
        )
        with pytest.raises(ConfigError, match="fluctuation_limit"):
            load_run_config(path)

    def test_solver_options_pass_through(self, tmp_path):
        path = write_config(tmp_path, {"solver": {"max_iterations": 123}})
        assert load_run_config(path).solver.max_iterations == 123

    def test_case_list_deduplicated_in_order(self, tmp_path):
        path = write_config(tmp_path, {"cases": ["B", "A", "B"]})
        assert load_run_config(path).cases == ("B", "A")
