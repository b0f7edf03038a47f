import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import ssim_oracle
from stereoconv.core import DimensionMismatchError, Frame, InputError
from stereoconv.io import write_frame
from stereoconv.metrics import (
    PSNR_CAP,
    SSIM_C1,
    FrameTooSmallError,
    evaluate_sequence,
    mae,
    psnr,
    sampled_indices,
    score_frames,
    ssim,
)

unit = st.floats(0, 1, allow_nan=False)


def _mse_oracle(a, b):
    tot = 0.0
    for v in (a.astype(np.float64) - b.astype(np.float64)).ravel():
        tot += v * v
    return tot / a.size


class TestFrameMetrics:
    def test_mae_closed_forms(self, rng):
        a = rng.random((4, 5, 3))
        assert mae(a, a) == 0.0
        assert mae(np.zeros((3, 3, 3)), np.ones((3, 3, 3))) == 1.0
        b = rng.random((4, 5, 3))
        expect = sum(abs(x - y) for x, y in zip(a.ravel(), b.ravel())) / a.size
        assert mae(a, b) == pytest.approx(expect, rel=1e-13)

    def test_psnr_closed_forms(self, rng):
        a = rng.random((6, 6, 3))
        assert psnr(a, a) == PSNR_CAP
        assert psnr(np.zeros((8, 8, 3)), np.full((8, 8, 3), 0.1)) == pytest.approx(20.0, abs=1e-6)
        b = rng.random((6, 6, 3))
        assert psnr(a, b) == pytest.approx(10 * math.log10(1 / _mse_oracle(a, b)), rel=1e-12)

    def test_ssim_closed_forms(self, rng):
        a = rng.random((16, 16, 3))
        assert ssim(a, a) == 1.0
        assert ssim(np.zeros((16, 16, 3)), np.ones((16, 16, 3))) == pytest.approx(
            SSIM_C1 / (1 + SSIM_C1), abs=1e-9
        )

    @pytest.mark.parametrize("shape", [(11, 11), (14, 19), (20, 12)])
    def test_ssim_matches_windowed_formula(self, rng, shape):
        a = rng.random(shape + (3,))
        b = np.clip(a + 0.2 * rng.standard_normal(a.shape), 0, 1)
        assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-12)

    def test_frames_accepted(self, rng):
        a, b = Frame(rng.random((12, 12, 3)).astype(np.float32)), Frame(rng.random((12, 12, 3)).astype(np.float32))
        s = score_frames(a, b, 7)
        assert s.index == 7 and s.mae == mae(a.pixels, b.pixels)
        assert s.line().split()[0] == "7" and len(s.line().split()) == 4

    @settings(max_examples=25)
    @given(arrays(np.float64, (12, 13, 3), elements=unit), arrays(np.float64, (12, 13, 3), elements=unit))
    def test_symmetry_and_mirror(self, a, b):
        assert mae(a, b) == mae(b, a)
        assert psnr(a, b) == psnr(b, a)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
        fa, fb = a[:, ::-1], b[:, ::-1]
        assert mae(fa, fb) == pytest.approx(mae(a, b), abs=1e-15)
        assert psnr(fa, fb) == pytest.approx(psnr(a, b), abs=1e-9)
        assert ssim(fa, fb) == pytest.approx(ssim(a, b), abs=1e-12)
        assert -1 <= ssim(a, b) <= 1

    def test_errors(self):
        with pytest.raises(FrameTooSmallError):
            ssim(np.zeros((10, 20, 3)), np.ones((10, 20, 3)))
        with pytest.raises(DimensionMismatchError):
            mae(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)))


class TestSequence:
    def test_sampling(self):
        assert sampled_indices(100, 20) == [0, 20, 40, 60, 80]
        for n in (1, 19, 20, 21, 57):
            assert len(sampled_indices(n, 20)) == math.ceil(n / 20)
        with pytest.raises(InputError):
            sampled_indices(5, 0)

    def _dirs(self, tmp_path, rng, n, noise=0.1):
        pred, gt = tmp_path / "pred", tmp_path / "gt"
        frames = []
        for i in range(n):
            g = Frame(rng.random((12, 12, 3)).astype(np.float32))
            p = Frame(np.clip(g.pixels + noise * rng.standard_normal(g.pixels.shape), 0, 1).astype(np.float32))
            write_frame(g, gt / f"{i:06d}.png")
            write_frame(p, pred / f"{i:06d}.png")
            frames.append(i)
        return pred, gt

    def test_identical_dirs(self, tmp_path, rng):
        pred, _ = self._dirs(tmp_path, rng, 45)
        score = evaluate_sequence(pred, pred)
        assert [f.index for f in score.frames] == [0, 20, 40]
        assert all(f.mae == 0 and f.ssim == 1 and f.psnr == PSNR_CAP for f in score.frames)

    def test_stride_one_is_dense(self, tmp_path, rng):
        from stereoconv.io import read_frame

        pred, gt = self._dirs(tmp_path, rng, 6)
        score = evaluate_sequence(pred, gt, stride=1, jobs=2)
        dense = [score_frames(read_frame(pred / f"{i:06d}.png"), read_frame(gt / f"{i:06d}.png"), i) for i in range(6)]
        assert score.mae == pytest.approx(np.mean([d.mae for d in dense]), abs=1e-15)
        assert score.psnr == pytest.approx(np.mean([d.psnr for d in dense]), abs=1e-12)
        assert score.ssim == pytest.approx(np.mean([d.ssim for d in dense]), abs=1e-15)
        assert score.table().splitlines()[-1].split()[0] == "mean"

    def test_mismatched(self, tmp_path, rng):
        pred, gt = self._dirs(tmp_path, rng, 3)
        (gt / "000002.png").unlink()
        with pytest.raises(InputError):
            evaluate_sequence(pred, gt)
        with pytest.raises(InputError):
            evaluate_sequence(tmp_path / "missing", gt)
