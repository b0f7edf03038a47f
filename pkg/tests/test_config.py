import pytest

from stereoconv.config import PipelineConfig, load_config, parse_config
from stereoconv.core import ConfigError


def test_defaults():
    cfg = PipelineConfig()
    assert (cfg.alpha, cfg.lambda1, cfg.lambda2, cfg.lambda3) == (10.0, 10.0, 2.0, 0.1)
    assert cfg.eval_stride == 20
    assert (cfg.learning_rate, cfg.beta1, cfg.beta2) == (1e-4, 0.5, 0.999)


def test_parse_with_comments():
    cfg = parse_config(
        """
        # expansion
        expand_radius = 2   # k
        expand-threshold = 4.5
        use_external = yes
        external_dir = /tmp/x
        channels = 4, 8
        """
    )
    assert cfg.expand_radius == 2 and cfg.expand_threshold == 4.5
    assert cfg.use_external is True and cfg.external_dir == "/tmp/x"
    assert cfg.channels == (4, 8)


def test_text_round_trip():
    cfg = PipelineConfig(expand_radius=5, channels=(3, 5, 7), weights_path="w.bin", debug_poison=True)
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "nonsense = 1",
        "expand_radius 3",
        "expand_radius = three",
        "use_poly = maybe",
        "expand_radius = 0",
        "expand_threshold = 0",
        "canny_low = 0.5\ncanny_high = 0.4",
        "alpha = -1",
        "lambda3 = -0.1",
        "eval_stride = 0",
        "channels = 8",
        "kernel_size = 4",
        "jobs = 0",
    ],
)
def test_bad_config(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_and_override(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("expand_radius = 2\nseed = 5\n")
    cfg = load_config(path, {"seed": 9, "jobs": None})
    assert cfg.expand_radius == 2 and cfg.seed == 9 and cfg.jobs == 1
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        load_config(None, {"bogus": 1})
