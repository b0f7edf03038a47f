import numpy as np
import pytest

from stereoconv.cli import EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main
from stereoconv.core import Frame
from stereoconv.io import read_disparity, read_frame, write_disparity, write_frame
from stereoconv.pipeline import write_sequence
from stereoconv.refiner import RefinerWeights, load_weights, save_weights
from stereoconv.synthetic import bar_scene


@pytest.fixture
def scene_files(tmp_path):
    s = bar_scene(32, 40, (8, 24, 12, 24), 6)
    write_frame(s.left, tmp_path / "left.png")
    write_disparity(s.disparity, tmp_path / "d.pfm")
    return s, tmp_path


def test_help_and_usage_errors(capsys):
    assert main(["--help"]) == 0
    assert main([]) == 2
    assert main(["warp"]) == 2


def test_warp_and_inpaint(scene_files):
    s, d = scene_files
    assert main(["warp", "--frame", str(d / "left.png"), "--disparity", str(d / "d.pfm"),
                 "--out", str(d / "w.png"), "--mask-out", str(d / "m.png")]) == EXIT_OK
    assert read_frame(d / "w.png").width == 40
    for branch in ("poly", "de", "fallback"):
        out = d / f"{branch}.png"
        assert main(["inpaint", "--branch", branch, "--frame", str(d / "left.png"),
                     "--disparity", str(d / "d.pfm"), "--out", str(out)]) == EXIT_OK
    assert main(["inpaint", "--branch", "external", "--frame", str(d / "left.png"),
                 "--disparity", str(d / "d.pfm"), "--out", str(d / "x.png")]) == EXIT_INPUT


def test_expand_disparity_flags(scene_files):
    _, d = scene_files
    args = ["expand-disparity", "--disparity", str(d / "d.pfm"), "--out", str(d / "e.pfm")]
    assert main(args + ["--k", "2", "--lambda", "4", "--edges-out", str(d / "edges.png")]) == EXIT_OK
    assert read_disparity(d / "e.pfm").values.max() == 6
    assert main(args + ["--k", "0"]) == EXIT_CONFIG
    assert main(args + ["--canny-low", "0.5", "--canny-high", "0.2"]) == EXIT_CONFIG


def test_config_errors(tmp_path, scene_files):
    _, d = scene_files
    (tmp_path / "bad.cfg").write_text("expand_radius = x\n")
    base = ["warp", "--frame", str(d / "left.png"), "--disparity", str(d / "d.pfm"), "--out", str(d / "w.png")]
    assert main(["--config", str(tmp_path / "bad.cfg")] + base) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "none.cfg")] + base) == EXIT_CONFIG
    assert main(["--jobs", "0"] + base) == EXIT_CONFIG


def test_input_errors(tmp_path):
    (tmp_path / "bad.ppm").write_bytes(b"P6\n4")
    write_disparity(np.zeros((2, 2)), tmp_path / "d.pfm")
    assert main(["warp", "--frame", str(tmp_path / "bad.ppm"), "--disparity", str(tmp_path / "d.pfm"),
                 "--out", str(tmp_path / "o.png")]) == EXIT_INPUT
    assert main(["split-sbs", "--input", str(tmp_path / "missing.png"), "--left-out", "a.png",
                 "--right-out", "b.png"]) == EXIT_INPUT


def test_refine(tmp_path, rng):
    for name in ("ip", "ie", "il"):
        write_frame(Frame(rng.random((8, 8, 3)).astype(np.float32)), tmp_path / f"{name}.png")
    w = RefinerWeights.init((2, 3), seed=0)
    save_weights(w, tmp_path / "ok.mhfu")
    args = ["refine"] + [a for n in ("ip", "ie", "il") for a in (f"--{n}", str(tmp_path / f"{n}.png"))]
    assert main(args + ["--weights", str(tmp_path / "ok.mhfu"), "--out", str(tmp_path / "r.png")]) == EXIT_OK
    w.heads["content"].bias[...] = np.nan
    save_weights(w, tmp_path / "nan.mhfu")
    assert main(args + ["--weights", str(tmp_path / "nan.mhfu"), "--out", str(tmp_path / "r.png")]) == EXIT_INPUT
    assert main(args + ["--out", str(tmp_path / "r.png")]) == EXIT_CONFIG
    (tmp_path / "junk.mhfu").write_bytes(b"nope")
    assert main(args + ["--weights", str(tmp_path / "junk.mhfu"), "--out", str(tmp_path / "r.png")]) == EXIT_INPUT


def test_metrics_line_format(tmp_path, rng, capsys):
    for i in range(3):
        f = Frame(rng.random((12, 12, 3)).astype(np.float32))
        write_frame(f, tmp_path / "gt" / f"{i:06d}.png")
        write_frame(f, tmp_path / "pred" / f"{i:06d}.png")
    assert main(["metrics", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"),
                 "--stride", "2", "--format", "lines", "--out", str(tmp_path / "m.txt")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split()[0] for ln in lines] == ["0", "2"]
    idx, mae_, psnr_, ssim_ = lines[0].split()
    assert (float(mae_), float(psnr_), float(ssim_)) == (0.0, 99.0, 1.0)
    assert (tmp_path / "m.txt").read_text().splitlines() == lines
    assert main(["metrics", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "nope")]) == EXIT_INPUT


def test_compose_split(tmp_path, rng):
    a, b = (Frame(rng.random((4, 6, 3)).astype(np.float32)) for _ in range(2))
    write_frame(a, tmp_path / "a.png")
    write_frame(b, tmp_path / "b.png")
    assert main(["compose", "--left", str(tmp_path / "a.png"), "--right", str(tmp_path / "b.png"),
                 "--out", str(tmp_path / "s.png")]) == EXIT_OK
    assert main(["split-sbs", "--input", str(tmp_path / "s.png"), "--left-out", str(tmp_path / "l.png"),
                 "--right-out", str(tmp_path / "r.png")]) == EXIT_OK
    assert (tmp_path / "l.png").read_bytes() == (tmp_path / "a.png").read_bytes() or np.array_equal(
        read_frame(tmp_path / "l.png").to_uint8(), a.to_uint8())
    assert np.array_equal(read_frame(tmp_path / "r.png").to_uint8(), b.to_uint8())
    assert main(["compose", "--mode", "anaglyph", "--left", str(tmp_path / "a.png"),
                 "--right", str(tmp_path / "b.png"), "--out", str(tmp_path / "an.png")]) == EXIT_OK


def test_manifest(tmp_path, capsys):
    dirs = [str(tmp_path / f"v{i}") for i in range(20)]
    out = tmp_path / "m.tsv"
    assert main(["--seed", "4", "manifest", *dirs, "--train", "15", "--test", "5", "--out", str(out)]) == EXIT_OK
    first = out.read_text()
    assert main(["--seed", "4", "manifest", *dirs, "--train", "15", "--test", "5", "--out", str(out)]) == EXIT_OK
    assert out.read_text() == first
    assert main(["manifest", *dirs, "--train", "955", "--test", "45", "--out", str(out)]) == EXIT_INPUT


def test_train_and_convert(tmp_path, capsys):
    w = tmp_path / "w.mhfu"
    args = ["--seed", "3", "train", "--synthetic", "2", "--size", "16", "--steps", "3",
            "--channels", "2,3", "--batch-size", "1", "--out", str(w), "--trace", str(tmp_path / "t.txt")]
    assert main(args) == EXIT_OK
    trace = np.loadtxt(tmp_path / "t.txt", skiprows=1)
    assert trace.shape == (3, 5)
    first = w.read_bytes()
    assert main(args) == EXIT_OK
    assert w.read_bytes() == first
    assert load_weights(w).channels == (2, 3)

    s = bar_scene(16, 24, (4, 12, 8, 16), 4)
    write_sequence([s.left] * 2, [s.disparity] * 2, tmp_path / "in")
    conv = ["convert", "--input", str(tmp_path / "in"), "--output", str(tmp_path / "out"), "--sbs"]
    assert main(conv + ["--weights", str(w), "--debug-poison"]) == EXIT_OK
    assert (tmp_path / "out" / "sbs" / "000001.png").is_file()
    assert main(conv) == EXIT_CONFIG
    assert main(conv + ["--variant", "dl", "--use-external", "--external-dir", str(tmp_path / "x")]) == EXIT_INPUT


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_diverging_training_is_a_numeric_failure(tmp_path):
    (tmp_path / "c.cfg").write_text("learning_rate = 1e300\nchannels = 2,3\nbatch_size = 1\n")
    args = ["--config", str(tmp_path / "c.cfg"), "train", "--synthetic", "1", "--size", "16",
            "--steps", "4", "--out", str(tmp_path / "w.mhfu")]
    assert main(args) == EXIT_NUMERIC
    assert not (tmp_path / "w.mhfu").exists()
