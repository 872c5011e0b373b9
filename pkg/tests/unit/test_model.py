import numpy as np
import pytest
from pydantic import ValidationError

from src.core.exceptions import CheckpointException, ValidationException
from src.diffcore import Tensor
from src.domain.models import ModelConfig, NormMode, SkipMode
from src.model import (
    LFPNet,
    VideoDynamicsPrior,
    load_checkpoint,
    sample_initial_latent,
    save_checkpoint,
)
from src.model.checkpoint import checkpoint_paths
from src.model.fdnet import block_widths

pytestmark = pytest.mark.unit


class TestModelConfig:
    def test_grid_must_divide_frame(self):
        with pytest.raises(ValidationError):
            ModelConfig(height=10, width=16, decoder_blocks=2)

    def test_with_frame_shape_revalidates(self, tiny_model):
        with pytest.raises(ValidationError):
            tiny_model.with_frame_shape(3, 18, 16)
        resized = tiny_model.with_frame_shape(1, 32, 8)
        assert (resized.channels, resized.grid_height, resized.grid_width) == (1, 8, 2)

    def test_block_widths_concat_and_add(self, tiny_model):
        assert block_widths(tiny_model) == [(4, 2), (6, 2)]
        added = tiny_model.updated(skip_mode=SkipMode.ADD)
        assert block_widths(added) == [(4, 4), (4, 4)]


class TestInitialLatent:
    def test_reproducible(self):
        np.testing.assert_array_equal(sample_initial_latent(3, 16), sample_initial_latent(3, 16))
        assert not np.array_equal(sample_initial_latent(3, 16), sample_initial_latent(4, 16))

    def test_standard_normal_moments(self):
        z0 = sample_initial_latent(0, 100_000)
        assert z0.dtype == np.float32
        assert abs(float(z0.mean())) < 0.02
        assert abs(float(z0.std()) - 1.0) < 0.02

    def test_invalid_dim(self):
        with pytest.raises(ValidationException) as exc_info:
            sample_initial_latent(0, 0)
        assert exc_info.value.details["field"] == "latent_dim"


class TestLFPNet:
    def make(self, config: ModelConfig, seed: int = 0) -> LFPNet:
        return LFPNet(config, np.random.default_rng(seed))

    def z0(self, config: ModelConfig) -> Tensor:
        return Tensor(sample_initial_latent(1, config.latent_dim))

    def test_zero_parameters_give_zero_latent(self, tiny_model):
        net = self.make(tiny_model)
        for leaf in net.parameters():
            leaf.data[...] = 0.0
        state = net.step(net.initial_state(self.z0(tiny_model)))
        np.testing.assert_array_equal(state.z.data, np.zeros(tiny_model.latent_dim))
        assert state.timestep == 1

    def test_unroll_matches_repeated_step(self, tiny_model):
        net = self.make(tiny_model)
        z0 = self.z0(tiny_model)
        unrolled = net.unroll(z0, 4)

        state = net.initial_state(z0)
        for expected in unrolled:
            state = net.step(state)
            np.testing.assert_array_equal(state.z.data, expected.data)
        assert len(unrolled) == 4

    def test_latents_stay_in_tanh_range(self, tiny_model):
        net = self.make(tiny_model.updated(lstm_layers=2))
        for leaf in net.parameters():
            leaf.data *= 10.0
        for z in net.unroll(self.z0(tiny_model), 6):
            assert z.shape == (tiny_model.latent_dim,)
            assert np.all(np.abs(z.data) <= 1.0)

    def test_forget_gate_bias_starts_at_one(self, tiny_model):
        hidden = tiny_model.hidden_size
        for cell in self.make(tiny_model).cells:
            np.testing.assert_array_equal(cell.bias.data[hidden : 2 * hidden], 1.0)


class TestVideoDynamicsPrior:
    def test_reconstruct_shapes_and_range(self, tiny_model):
        model = VideoDynamicsPrior(tiny_model)
        frames, latents = model.reconstruct(4)
        assert frames.shape == (4, 3, 16, 16)
        assert len(latents) == 4
        assert np.all((frames.data > 0.0) & (frames.data < 1.0))

    def test_rollout_without_auxiliary_frame(self, tiny_model):
        model = VideoDynamicsPrior(tiny_model.updated(auxiliary_first_frame=False))
        rollout = model.rollout(3, include_initial=True)
        assert rollout.frames.shape == (3, 3, 16, 16)
        assert rollout.initial_frame is not None
        assert rollout.initial_frame.shape == (3, 16, 16)

    def test_same_seed_same_weights(self, tiny_model):
        first = VideoDynamicsPrior(tiny_model).state_dict()
        second = VideoDynamicsPrior(tiny_model).state_dict()
        assert first.keys() == second.keys()
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])

    def test_trainable_initial_latent(self, tiny_model):
        frozen = VideoDynamicsPrior(tiny_model)
        trainable = VideoDynamicsPrior(tiny_model.updated(train_initial_latent=True))
        assert "latent.z0" not in [leaf.name for leaf in frozen.parameters()]
        assert "latent.z0" in [leaf.name for leaf in trainable.parameters()]
        assert trainable.parameter_count == frozen.parameter_count + tiny_model.latent_dim

    def test_truncated_bptt_keeps_forward_values(self, tiny_model):
        full, _ = VideoDynamicsPrior(tiny_model).reconstruct(5)
        truncated, _ = VideoDynamicsPrior(tiny_model.updated(bptt_window=2)).reconstruct(5)
        np.testing.assert_array_equal(full.data, truncated.data)

    @pytest.mark.parametrize("skip_mode", [SkipMode.CONCAT, SkipMode.ADD])
    @pytest.mark.parametrize("norm_mode", [NormMode.BATCH, NormMode.INSTANCE])
    def test_decoder_variants(self, tiny_model, skip_mode, norm_mode):
        model = VideoDynamicsPrior(tiny_model.updated(skip_mode=skip_mode, norm_mode=norm_mode))
        frames, _ = model.reconstruct(3)
        assert frames.shape == (3, 3, 16, 16)

    def test_decode_requires_training_forward(self, tiny_model):
        model = VideoDynamicsPrior(tiny_model)
        with pytest.raises(CheckpointException):
            model.decode(np.zeros(tiny_model.latent_dim, dtype=np.float32))

    def test_lerp_endpoints_match_decoded_latents(self, tiny_model):
        model = VideoDynamicsPrior(tiny_model)
        frames, latents = model.reconstruct(3)
        z_a, z_b = latents[0].data, latents[1].data

        np.testing.assert_allclose(model.decode_lerp(z_a, z_b, 0.0), model.decode(z_a), atol=1e-6)
        np.testing.assert_allclose(model.decode_lerp(z_a, z_b, 1.0), model.decode(z_b), atol=1e-6)
        # modo inferência com as estatísticas congeladas reproduz o forward de treino
        np.testing.assert_allclose(model.decode(z_a), frames.data[0], atol=1e-5)


class TestCheckpoint:
    def test_round_trip_restores_model(self, tiny_model, tmp_path):
        model = VideoDynamicsPrior(tiny_model)
        frames, latents = model.reconstruct(3)
        manifest = save_checkpoint(model.state_dict(), tmp_path / "model")
        assert manifest.name == "model.manifest"

        restored = VideoDynamicsPrior(tiny_model.updated(init_seed=5, latent_seed=5))
        restored.load_state_dict(load_checkpoint(tmp_path / "model"))
        # estatísticas de normalização passam por float32 no blob
        np.testing.assert_allclose(
            restored.decode(latents[2].data), model.decode(latents[2].data), atol=1e-5
        )

    def test_paths_accept_suffix(self, tmp_path):
        assert checkpoint_paths(tmp_path / "m.manifest") == checkpoint_paths(tmp_path / "m")

    def test_bad_header(self, tmp_path):
        save_checkpoint({"w": np.ones(2)}, tmp_path / "m")
        (tmp_path / "m.manifest").write_text("outro formato\n", encoding="utf-8")
        with pytest.raises(CheckpointException):
            load_checkpoint(tmp_path / "m")

    def test_truncated_blob(self, tmp_path):
        save_checkpoint({"w": np.ones((4, 4))}, tmp_path / "m")
        blob = tmp_path / "m.bin"
        blob.write_bytes(blob.read_bytes()[:10])
        with pytest.raises(CheckpointException):
            load_checkpoint(tmp_path / "m")

    def test_missing_leaf(self, tiny_model):
        model = VideoDynamicsPrior(tiny_model)
        state = model.state_dict()
        state.pop("fdnet.output.bias")
        with pytest.raises(CheckpointException):
            model.load_state_dict(state)

    def test_little_endian_float32_layout(self, tmp_path):
        save_checkpoint({"a": np.array([1.0, 2.0]), "b": np.array([[3.0]])}, tmp_path / "m")
        assert (tmp_path / "m.bin").read_bytes() == np.array([1, 2, 3], dtype="<f4").tobytes()
        lines = (tmp_path / "m.manifest").read_text(encoding="utf-8").splitlines()
        assert lines[1:] == ["a\t2\t0", "b\t1,1\t8"]
