"""Flat key/value config format and the dataclass validators behind it."""

import numpy as np
import pytest
from conftest import SMOKE_CONFIG_TEXT, tiny_model_config

from casep.config import (
    ModelConfig,
    PathConfig,
    config_hash,
    default_model_config,
    eval_settings_from_flat,
    model_config_from_flat,
    model_config_to_flat,
    parse_flat,
    serialize_flat,
    synthetic_spec_from_flat,
    train_settings_from_flat,
)
from casep.tensor import ConfigError


class TestParseFlat:
    def test_basic_entries(self):
        entries = parse_flat("a.b = 1\nc.d = hello\n")
        assert entries == {"a.b": "1", "c.d": "hello"}

    def test_comments_and_blanks(self):
        entries = parse_flat("# header\n\na.b = 1  # trailing\n   \n")
        assert entries == {"a.b": "1"}

    def test_missing_equals_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_flat("a.b = 1\nbogus line\n")

    def test_undotted_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_flat("plainkey = 1\n")

    def test_values_may_contain_equals(self):
        entries = parse_flat("a.b = x = y\n")
        assert entries["a.b"] == "x = y"


class TestSerializeAndHash:
    def test_round_trip(self):
        entries = {"b.x": "2", "a.y": "1"}
        assert parse_flat(serialize_flat(entries)) == entries

    def test_serialization_is_sorted(self):
        text = serialize_flat({"b.x": "2", "a.y": "1"})
        assert text.index("a.y") < text.index("b.x")

    def test_hash_ignores_insertion_order(self):
        assert config_hash({"a.x": "1", "b.y": "2"}) == config_hash(
            {"b.y": "2", "a.x": "1"})

    def test_hash_sees_value_changes(self):
        assert config_hash({"a.x": "1"}) != config_hash({"a.x": "2"})


class TestModelConfigFlat:
    def test_round_trip(self):
        cfg = tiny_model_config(shared=True, precision="double")
        rebuilt = model_config_from_flat(model_config_to_flat(cfg))
        assert model_config_to_flat(rebuilt) == model_config_to_flat(cfg)

    def test_smoke_text_parses(self):
        cfg = model_config_from_flat(parse_flat(SMOKE_CONFIG_TEXT))
        assert cfg.width == 16
        assert cfg.encoder.stride == 2
        assert cfg.intra.kernel == 5 and cfg.inter.kernel == 3

    def test_missing_required_key(self):
        entries = parse_flat(SMOKE_CONFIG_TEXT)
        del entries["encoder.filters"]
        with pytest.raises(ConfigError, match="encoder.filters"):
            model_config_from_flat(entries)

    def test_bad_int_names_key(self):
        entries = parse_flat(SMOKE_CONFIG_TEXT)
        entries["model.blocks"] = "two"
        with pytest.raises(ConfigError, match="model.blocks"):
            model_config_from_flat(entries)

    def test_layer_width_follows_encoder(self):
        entries = parse_flat(SMOKE_CONFIG_TEXT)
        entries["intra.attn_channels"] = "9"   # 9 + 8 != 16
        with pytest.raises(ConfigError):
            model_config_from_flat(entries)


class TestOtherSections:
    def test_synthetic_spec(self):
        entries = parse_flat(SMOKE_CONFIG_TEXT)
        spec = synthetic_spec_from_flat(entries, n_sources=2, sample_rate=8000)
        assert spec.bands == [(200.0, 400.0), (1000.0, 2000.0)]
        assert spec.length == 512 and spec.kind == "sinusoid"

    def test_train_settings(self):
        entries = parse_flat(SMOKE_CONFIG_TEXT)
        ts = train_settings_from_flat(entries)
        assert ts.steps == 500 and ts.lr == 1e-3 and ts.batch == 2

    def test_train_defaults(self):
        ts = train_settings_from_flat({})
        assert ts.length_cap == 0 and ts.out_dir == "run"

    def test_eval_settings(self):
        es = eval_settings_from_flat(parse_flat(SMOKE_CONFIG_TEXT))
        assert es.count == 16 and es.seed == 7

    def test_band_syntax_error(self):
        with pytest.raises(ConfigError):
            synthetic_spec_from_flat({"data.bands": "not-a-band"},
                                     n_sources=1, sample_rate=8000)


class TestValidators:
    def test_default_config_is_valid(self):
        cfg = default_model_config()
        cfg.validate()
        assert cfg.width == 256 and cfg.chunk_size == 250

    def test_speaker_minimum(self):
        cfg = tiny_model_config()
        cfg.speakers = 1
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_odd_chunk_size_rejected(self):
        cfg = tiny_model_config()
        cfg.chunk_size = 7
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_heads_must_divide_attention_channels(self):
        with pytest.raises(ConfigError):
            PathConfig(16, 6, 10, heads=4, kernel=5, ffn_dim=64).validate()

    def test_even_conv_kernel_rejected(self):
        with pytest.raises(ConfigError):
            PathConfig(16, 8, 8, heads=2, kernel=4, ffn_dim=64).validate()

    def test_degenerate_paths_validate(self):
        PathConfig(16, 16, 0, heads=2, kernel=1, ffn_dim=64).validate()
        PathConfig(16, 0, 16, heads=1, kernel=5, ffn_dim=64).validate()

    def test_precision_values(self):
        cfg = tiny_model_config()
        cfg.precision = "half"
        with pytest.raises(ConfigError):
            cfg.validate()
        assert tiny_model_config(precision="double").dtype == np.float64
