"""
Tests for RunConfig resolution and validation
"""

import json

import pytest

from cksc.config import RunConfig
from cksc.errors import ConfigError


class TestDefaults:
    """Test the built-in defaults."""

    def test_default_values(self):
        """Defaults match the documented training parameters."""
        config = RunConfig()
        assert config.get("train.alpha") == 0.1
        assert config.get("train.sparsity") == 4
        assert config.get("train.atoms") is None
        assert config.get("eval.folds") == 5
        assert config.get("eval.mode") == "cv"
        assert config.threads == 1

    def test_get_missing_returns_default(self):
        assert RunConfig().get("train.nothing", "fallback") == "fallback"

    def test_hyperparams(self):
        hyper = RunConfig({"train": {"alpha": 0.3, "sparsity": 2}}).hyperparams()
        assert hyper.alpha == 0.3
        assert hyper.sparsity == 2
        assert hyper.nqp_tol == 1e-8

    def test_to_dict_is_a_copy(self):
        config = RunConfig()
        data = config.to_dict()
        data["train"]["alpha"] = 9.0
        assert config.get("train.alpha") == 0.1


class TestValidation:
    """Test rejection of unknown keys and out-of-range values."""

    def test_unknown_section(self):
        with pytest.raises(ConfigError):
            RunConfig({"solver": {"tol": 1}})

    def test_unknown_key(self):
        """Typos are errors rather than silently ignored."""
        with pytest.raises(ConfigError, match="train.alpah"):
            RunConfig({"train": {"alpah": 0.2}})

    @pytest.mark.parametrize("section,key,value", [
        ("train", "alpha", -0.1),
        ("train", "sparsity", 0),
        ("train", "sparsity", 2.5),
        ("train", "rel_tol", 0),
        ("nqp", "max_inner", 0),
        ("eval", "folds", 1),
        ("eval", "test_fraction", 1.0),
        ("eval", "mode", "bootstrap"),
        ("sweep", "param", "beta"),
        ("sweep", "values", []),
        ("runtime", "threads", 0),
        ("kernel", "clip_psd", "yes"),
    ])
    def test_out_of_range(self, section, key, value):
        with pytest.raises(ConfigError):
            RunConfig({section: {key: value}})

    def test_boolean_is_not_a_number(self):
        with pytest.raises(ConfigError):
            RunConfig({"train": {"sparsity": True}})

    def test_integer_valued_float_accepted(self):
        assert RunConfig({"train": {"sparsity": 3.0}}).get("train.sparsity") == 3


class TestResolve:
    """Test precedence: defaults < preset < file < flags."""

    def test_preset(self):
        config = RunConfig.resolve(preset="cricket")
        assert config.get("train.sparsity") == 6
        assert config.get("train.alpha") == 0.2

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="Unknown preset"):
            RunConfig.resolve(preset="mnist")

    def test_file_overrides_preset(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"sparsity": 3}}))
        config = RunConfig.resolve(path, preset="cricket")
        assert config.get("train.sparsity") == 3
        assert config.get("train.alpha") == 0.2

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"sparsity": 3, "alpha": 0.5}}))
        config = RunConfig.resolve(path, overrides={"train.sparsity": 7, "train.alpha": None})
        assert config.get("train.sparsity") == 7
        assert config.get("train.alpha") == 0.5

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            RunConfig.resolve(path)

    def test_non_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            RunConfig.resolve(path)

    def test_save_round_trip(self, tmp_path):
        """A saved config resolves back to the same values."""
        config = RunConfig.resolve(preset="words", overrides={"runtime.threads": 4})
        path = tmp_path / "saved.json"
        config.save(path)
        assert RunConfig.resolve(path).to_dict() == config.to_dict()
