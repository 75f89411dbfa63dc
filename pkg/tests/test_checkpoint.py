"""Binary checkpoint container: layout, round trips, error paths."""

import struct

import numpy as np
import pytest
from conftest import tiny_model_config

from casep.checkpoint import (
    MAGIC,
    VERSION,
    load_checkpoint,
    load_model_state,
    model_state,
    save_checkpoint,
)
from casep.config import model_config_to_flat
from casep.model import Separator
from casep.tensor import ConfigError


@pytest.fixture
def ckpt_path(tmp_path):
    return tmp_path / "model.ckpt"


class TestRoundTrip:
    def test_weights_bit_exact(self, ckpt_path):
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=3)
        save_checkpoint(ckpt_path, cfg, model_state(model))
        _, _, tensors = load_checkpoint(ckpt_path)
        for name, original in model_state(model).items():
            assert np.array_equal(tensors[name], original), name

    def test_scalar_tensors_keep_rank_zero(self, ckpt_path):
        # the learnable activation slope is 0-d and must stay 0-d
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=0)
        save_checkpoint(ckpt_path, cfg, model_state(model))
        _, _, tensors = load_checkpoint(ckpt_path)
        assert tensors["post_act.slope"].shape == ()

    def test_config_survives(self, ckpt_path):
        cfg = tiny_model_config(shared=True)
        save_checkpoint(ckpt_path, cfg, {})
        loaded_cfg, entries, _ = load_checkpoint(ckpt_path)
        assert model_config_to_flat(loaded_cfg) == model_config_to_flat(cfg)
        assert entries["model.shared"] == "true"

    def test_extra_entries_preserved(self, ckpt_path):
        cfg = tiny_model_config()
        save_checkpoint(ckpt_path, cfg, {}, {"trained.steps": "500"})
        _, entries, _ = load_checkpoint(ckpt_path)
        assert entries["trained.steps"] == "500"

    def test_loaded_state_restores_model(self, ckpt_path):
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=3)
        save_checkpoint(ckpt_path, cfg, model_state(model))
        _, _, tensors = load_checkpoint(ckpt_path)
        fresh = Separator.build(cfg, seed=99)
        load_model_state(fresh, tensors)
        for name, original in model_state(model).items():
            assert np.array_equal(model_state(fresh)[name], original), name

    def test_shared_weights_stored_once(self, ckpt_path):
        cfg = tiny_model_config(shared=True)
        cfg.n_intra = cfg.n_inter = 4
        model = Separator.build(cfg, seed=0)
        state = model_state(model)
        assert sum(a.size for a in state.values()) == model.param_count()


class TestLayoutDetails:
    def test_header_bytes(self, ckpt_path):
        save_checkpoint(ckpt_path, tiny_model_config(), {})
        blob = ckpt_path.read_bytes()
        assert blob[:4] == MAGIC
        assert struct.unpack("<I", blob[4:8])[0] == VERSION

    def test_payloads_are_little_endian_f32(self, ckpt_path):
        cfg = tiny_model_config()
        arr = np.arange(4, dtype=np.float64).reshape(2, 2)
        save_checkpoint(ckpt_path, cfg, {"w": arr})
        _, _, tensors = load_checkpoint(ckpt_path)
        assert tensors["w"].dtype == np.float32
        assert np.array_equal(tensors["w"], arr.astype(np.float32))


class TestErrorPaths:
    def test_bad_magic(self, ckpt_path):
        ckpt_path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ConfigError, match="magic"):
            load_checkpoint(ckpt_path)

    def test_bad_version(self, ckpt_path):
        save_checkpoint(ckpt_path, tiny_model_config(), {})
        blob = bytearray(ckpt_path.read_bytes())
        blob[4:8] = struct.pack("<I", 99)
        ckpt_path.write_bytes(bytes(blob))
        with pytest.raises(ConfigError, match="version"):
            load_checkpoint(ckpt_path)

    def test_truncated_file(self, ckpt_path):
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=0)
        save_checkpoint(ckpt_path, cfg, model_state(model))
        blob = ckpt_path.read_bytes()
        ckpt_path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ConfigError, match="truncated"):
            load_checkpoint(ckpt_path)

    def test_trailing_bytes(self, ckpt_path):
        save_checkpoint(ckpt_path, tiny_model_config(), {})
        ckpt_path.write_bytes(ckpt_path.read_bytes() + b"junk")
        with pytest.raises(ConfigError, match="trailing"):
            load_checkpoint(ckpt_path)

    def test_missing_weight_rejected(self, ckpt_path):
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=0)
        state = model_state(model)
        state.pop("post_act.slope")
        save_checkpoint(ckpt_path, cfg, state)
        _, _, tensors = load_checkpoint(ckpt_path)
        with pytest.raises(ConfigError, match="lacks"):
            load_model_state(Separator.build(cfg, seed=1), tensors)

    def test_unknown_weight_rejected(self, ckpt_path):
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=0)
        state = dict(model_state(model))
        state["mystery.w"] = np.zeros(3, dtype=np.float32)
        save_checkpoint(ckpt_path, cfg, state)
        _, _, tensors = load_checkpoint(ckpt_path)
        with pytest.raises(ConfigError, match="unknown"):
            load_model_state(Separator.build(cfg, seed=1), tensors)

    def test_shape_mismatch_rejected(self, ckpt_path):
        cfg = tiny_model_config()
        model = Separator.build(cfg, seed=0)
        state = dict(model_state(model))
        state["pre_linear.bias"] = np.zeros(7, dtype=np.float32)
        save_checkpoint(ckpt_path, cfg, state)
        _, _, tensors = load_checkpoint(ckpt_path)
        with pytest.raises(ConfigError, match="shape mismatch"):
            load_model_state(Separator.build(cfg, seed=1), tensors)
