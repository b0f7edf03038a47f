import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import splat_oracle
from stereoconv.core import DimensionMismatchError, DisparityMap, Frame, OcclusionMask
from stereoconv.kernels import NO_SPLAT
from stereoconv.warp import compose_anaglyph, compose_sbs, forward_warp, mask_stats, split_sbs

A, B, C, D = (np.float32(v) for v in (0.1, 0.2, 0.3, 0.4))


def row(*vals):
    return Frame(np.array([[[v, v, v] for v in vals]], dtype=np.float32))


class TestForwardWarp:
    def test_zero_disparity_identity(self, rng):
        f = Frame(rng.random((6, 9, 3)).astype(np.float32))
        res = forward_warp(f, DisparityMap.zeros(6, 9))
        assert res.warped == f
        assert not res.mask.bits.any()

    def test_hand_example_drop_left(self):
        res = forward_warp(row(A, B, C, D), DisparityMap(np.array([[1, 1, 0, 0]])))
        assert res.mask.bits.tolist() == [[False, True, False, False]]
        assert res.warped.pixels[0, :, 0].tolist() == [B, 0.0, C, D]

    def test_hand_example_occlusion(self):
        res = forward_warp(row(A, B, C, D), DisparityMap(np.array([[0, 0, 2, 2]])))
        assert res.mask.bits.tolist() == [[False, False, True, True]]
        assert res.warped.pixels[0, :2, 0].tolist() == [C, D]
        assert res.zbuffer[0].tolist() == [2.0, 2.0, NO_SPLAT, NO_SPLAT]

    def test_larger_disparity_wins(self):
        # x=0 (d=0) and x=1 (d=1) both land on column 0
        res = forward_warp(row(A, B, C), DisparityMap(np.array([[0.0, 1.0, 1.0]])))
        assert res.source_x[0].tolist() == [1, 2, -1]

    def test_rounding_half_away_from_zero(self):
        # 1 - 0.5 = 0.5 rounds to 1, 0 - 0.5 = -0.5 rounds to -1 and is dropped
        res = forward_warp(row(A, B), DisparityMap(np.array([[0.5, 0.5]])))
        assert res.source_x[0].tolist() == [-1, 1]

    @given(st.integers(1, 10), st.integers(1, 14), st.integers(0, 2**31 - 1), st.booleans())
    def test_matches_splat_oracle(self, h, w, seed, integer):
        rng = np.random.default_rng(seed)
        px = rng.random((h, w, 3)).astype(np.float32)
        d = rng.random((h, w)) * min(5.0, w)
        if integer:
            d = np.floor(d)
        res = forward_warp(Frame(px), DisparityMap(d))
        warped, mask = splat_oracle(px, np.asarray(d, dtype=np.float32))
        assert np.array_equal(res.mask.bits, mask)
        assert np.array_equal(res.warped.pixels, warped)
        assert np.array_equal(res.mask.bits, res.zbuffer == NO_SPLAT)

    @given(st.integers(0, 2**31 - 1), st.integers(0, 7))
    def test_constant_disparity_is_translation(self, seed, d):
        rng = np.random.default_rng(seed)
        px = rng.random((5, 12, 3)).astype(np.float32)
        res = forward_warp(Frame(px), DisparityMap(np.full((5, 12), float(d))))
        assert np.array_equal(res.warped.pixels[:, : 12 - d], px[:, d:])
        assert res.mask.bits[:, 12 - d :].all() and not res.mask.bits[:, : 12 - d].any()

    @given(st.integers(0, 2**31 - 1))
    def test_iteration_order_independent(self, seed):
        # the winner per target is a function of (d, x) only: shuffled ties give the same result
        rng = np.random.default_rng(seed)
        px = rng.random((3, 10, 3)).astype(np.float32)
        d = rng.integers(0, 4, (3, 10)).astype(np.float32)
        a = forward_warp(Frame(px), DisparityMap(d))
        b = forward_warp(Frame(px[::-1]), DisparityMap(d[::-1]))
        assert np.array_equal(a.warped.pixels, b.warped.pixels[::-1])

    def test_poison_fill_only_touches_holes(self, rng):
        f = Frame(rng.random((4, 8, 3)).astype(np.float32))
        d = DisparityMap(np.tile([0, 0, 3, 3, 3, 0, 0, 0], (4, 1)).astype(np.float32))
        plain, poisoned = forward_warp(f, d), forward_warp(f, d, fill=(1.0, 0.0, 1.0))
        known = ~plain.mask.bits
        assert np.array_equal(plain.warped.pixels[known], poisoned.warped.pixels[known])
        assert (poisoned.warped.pixels[plain.mask.bits] == [1.0, 0.0, 1.0]).all()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            forward_warp(Frame.filled(2, 3), DisparityMap.zeros(2, 4))


class TestMaskStats:
    def test_empty(self):
        assert mask_stats(OcclusionMask(np.zeros((3, 3)))).count == 0

    def test_row(self):
        s = mask_stats(OcclusionMask(np.array([[0, 1, 1, 0]])))
        assert (s.count, s.largest_run) == (2, 2)

    def test_random_against_loops(self, rng):
        bits = rng.random((64, 64)) < 0.3
        s = mask_stats(OcclusionMask(bits))
        count, best = 0, []
        for y in range(64):
            run = top = 0
            for x in range(64):
                count += bool(bits[y, x])
                run = run + 1 if bits[y, x] else 0
                top = max(top, run)
            best.append(top)
        assert s.count == count
        assert s.largest_run_per_row.tolist() == best and s.largest_run == max(best)


class TestComposites:
    def test_sbs_layout(self):
        red = Frame.filled(8, 8, (1.0, 0.0, 0.0))
        blue = Frame.filled(8, 8, (0.0, 0.0, 1.0))
        out = compose_sbs(red, blue)
        assert out.width == 16 and out.height == 8
        assert (out.pixels[:, :8] == [1, 0, 0]).all() and (out.pixels[:, 8:] == [0, 0, 1]).all()

    def test_sbs_identical_halves(self, rng):
        f = Frame(rng.random((2, 2, 3)).astype(np.float32))
        out = compose_sbs(f, f)
        assert out.shape == (2, 4) and np.array_equal(out.pixels[:, :2], out.pixels[:, 2:])

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_split_inverts_compose(self, h, w, seed):
        rng = np.random.default_rng(seed)
        l, r = (Frame(rng.random((h, w, 3)).astype(np.float32)) for _ in range(2))
        assert split_sbs(compose_sbs(l, r)) == (l, r)

    def test_split_full_size(self):
        left, right = split_sbs(Frame.filled(1180, 2360))
        assert left.shape == right.shape == (1180, 1180)

    def test_split_odd_width(self):
        with pytest.raises(DimensionMismatchError):
            split_sbs(Frame.filled(2, 5))

    def test_sbs_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            compose_sbs(Frame.filled(2, 2), Frame.filled(2, 3))

    def test_anaglyph(self, rng):
        white, black = Frame.filled(4, 4, (1, 1, 1)), Frame.filled(4, 4)
        assert (compose_anaglyph(white, black).pixels == [1, 0, 0]).all()
        f = Frame(rng.random((5, 6, 3)).astype(np.float32))
        assert compose_anaglyph(f, f) == f
        l, r = (Frame(rng.random((5, 6, 3)).astype(np.float32)) for _ in range(2))
        out = compose_anaglyph(l, r).pixels
        assert np.array_equal(out[..., 0], l.pixels[..., 0])
        assert np.array_equal(out[..., 1:], r.pixels[..., 1:])
