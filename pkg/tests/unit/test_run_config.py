import pytest

from src.core.exceptions import ConfigurationException, FileNotFoundException, ValidationException
from src.domain.models import AblationMode, NoiseKind, TaskConfig, TaskKind
from src.schemas.run_config import (
    NoiseSettings,
    build_run_config,
    format_value,
    merge_sections,
    read_config_file,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def sections() -> dict[str, dict[str, str]]:
    return {
        "run": {"command": "interpolate", "input_dir": "in", "output_dir": "out", "seeds": "3,4"},
        "task": {
            "kind": "interpolate",
            "epochs": "12",
            "learning_rate": "0.001",
            "lambda_spl": "0.01",
            "factor": "4",
        },
        "model": {"latent_dim": "16"},
        "noise": {"gaussian": "20", "seed": "2"},
    }


class TestFormatValue:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (None, ""),
            (True, "true"),
            (0.1, "0.1"),
            ((2, 4, 8), "2,4,8"),
            (TaskKind.SUPERRES, "superres"),
        ],
    )
    def test_formats(self, value, expected):
        assert format_value(value) == expected

    def test_nested_values_are_rejected(self):
        with pytest.raises(TypeError):
            format_value({"a": 1})


class TestBuildRunConfig:
    def test_values_override_base(self, sections, tiny_task):
        config = build_run_config(sections, tiny_task)
        assert config.task.kind is TaskKind.INTERPOLATE
        assert config.task.epochs == 12
        assert config.task.weights.spl == 0.01
        assert config.task.weights.rec == tiny_task.weights.rec
        assert config.task.interpolation.alphas == (0.25, 0.5, 0.75)
        assert config.task.model.latent_dim == 16
        assert config.task.model.hidden_size == tiny_task.model.hidden_size
        assert config.run.seeds == (3, 4)
        assert config.noise.gaussian == 20.0

    def test_echo_reproduces_config(self, sections, tiny_task, tmp_path):
        config = build_run_config(sections, tiny_task)
        echo = config.write_echo(tmp_path / "run-config.echo")
        # o eco carrega todos os campos: a base do segundo build não importa
        rebuilt = build_run_config(read_config_file(echo), TaskConfig())
        assert rebuilt == config
        assert rebuilt.render_echo() == config.render_echo()

    def test_unknown_key(self, sections, tiny_task):
        sections["task"]["lambda_foo"] = "1"
        with pytest.raises(ConfigurationException) as exc_info:
            build_run_config(sections, tiny_task)
        assert "lambda_foo" in exc_info.value.details["reason"]

    def test_invalid_value_names_field(self, sections, tiny_task):
        sections["task"]["epochs"] = "0"
        with pytest.raises(ValidationException) as exc_info:
            build_run_config(sections, tiny_task)
        assert exc_info.value.details["field"] == "epochs"

    def test_invalid_factor(self, sections, tiny_task):
        sections["task"]["factor"] = "1"
        with pytest.raises(ValidationException):
            build_run_config(sections, tiny_task)

    def test_ablation(self, sections, tiny_task):
        sections["task"]["ablation"] = "rec+var"
        config = build_run_config(sections, tiny_task)
        assert config.task.ablation is AblationMode.REC_VAR
        assert config.task.effective_weights.spl == 0.0


class TestConfigFile:
    def test_unknown_section(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[run]\ncommand = denoise\n[extra]\nx = 1\n", encoding="utf-8")
        with pytest.raises(ConfigurationException):
            read_config_file(path)

    def test_syntax_error(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("command = denoise\n", encoding="utf-8")
        with pytest.raises(ConfigurationException):
            read_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundException):
            read_config_file(tmp_path / "nope.cfg")

    def test_merge_precedence(self):
        merged = merge_sections(
            {"task": {"epochs": "10", "seed": "1"}},
            {"task": {"epochs": "20", "seed": None}},
        )
        assert merged == {"task": {"epochs": "20", "seed": "1"}}


class TestNoiseSettings:
    def test_fixed_composition_order(self):
        noise = NoiseSettings(scale=2, gaussian=10.0, poisson=5.0, replace_frame=1, seed=3)
        assert [spec.kind for spec in noise.specs()] == [
            NoiseKind.DOWNSCALE,
            NoiseKind.GAUSSIAN,
            NoiseKind.POISSON,
            NoiseKind.FRAME_REPLACE,
        ]
        assert all(spec.seed == 3 for spec in noise.specs())

    def test_scale_one_is_not_a_degradation(self):
        assert NoiseSettings(scale=1).is_empty
