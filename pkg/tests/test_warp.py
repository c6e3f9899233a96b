import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import rotate_patch_loops
from uastrack.errors import ConfigError
from uastrack.imagebuf import GrayImage
from uastrack.warp import AffineMap, apply_map, build_bank, warp_patch


class TestApplyMap:
    def test_identity(self):
        assert apply_map(AffineMap(), 3.5, -2.0) == (3.5, -2.0)

    def test_quarter_turn(self):
        x, y = apply_map(AffineMap(alpha=math.pi / 2), 1.0, 0.0)
        assert x == pytest.approx(0.0, abs=1e-12)
        assert y == pytest.approx(-1.0, abs=1e-12)

    def test_scale_then_translate(self):
        assert apply_map(AffineMap(s=2.0, tx=1.0, ty=1.0), 1.0, 1.0) == (3.0, 3.0)

    def test_matrix_matches_pointwise(self):
        m = AffineMap(s=1.5, alpha=0.3, tx=-2.0, ty=4.0)
        H = m.matrix()
        v = H @ np.array([2.0, -1.0, 1.0])
        assert apply_map(m, 2.0, -1.0) == pytest.approx((v[0], v[1]), abs=1e-12)

    @given(
        alpha=st.floats(-math.pi, math.pi),
        x=st.floats(-100, 100),
        y=st.floats(-100, 100),
    )
    def test_pure_rotation_is_isometry(self, alpha, x, y):
        xx, yy = apply_map(AffineMap(alpha=alpha), x, y)
        assert math.hypot(xx, yy) == pytest.approx(math.hypot(x, y), abs=1e-9)

    @given(
        alpha=st.floats(-math.pi, math.pi),
        x=st.floats(-100, 100),
        y=st.floats(-100, 100),
    )
    def test_rotation_inverts(self, alpha, x, y):
        xx, yy = apply_map(AffineMap(alpha=alpha), x, y)
        bx, by = apply_map(AffineMap(alpha=-alpha), xx, yy)
        assert bx == pytest.approx(x, abs=1e-9)
        assert by == pytest.approx(y, abs=1e-9)


class TestWarpPatch:
    def test_zero_angle_is_identity(self, checker22x36):
        assert warp_patch(checker22x36, 0.0) == checker22x36

    def test_half_turn_is_double_flip(self, checker22x36):
        out = warp_patch(checker22x36, math.pi)
        assert np.array_equal(out.pixels, checker22x36.pixels[::-1, ::-1])

    def test_matches_scalar_oracle_at_10deg(self, checker22x36):
        out = warp_patch(checker22x36, math.radians(10.0))
        expected = np.array(rotate_patch_loops(checker22x36.pixels.tolist(), math.radians(10.0)))
        assert np.abs(out.pixels.astype(int) - expected).max() <= 1

    def test_matches_scalar_oracle_random(self, rng):
        patch = GrayImage(rng.integers(0, 256, (13, 9), dtype=np.uint8))
        for deg in (23.0, -61.5, 170.0):
            out = warp_patch(patch, math.radians(deg))
            expected = np.array(rotate_patch_loops(patch.pixels.tolist(), math.radians(deg)))
            assert np.abs(out.pixels.astype(int) - expected).max() <= 1

    def test_preserves_dimensions(self, checker22x36):
        out = warp_patch(checker22x36, 1.234)
        assert (out.width, out.height) == (22, 36)


class TestBuildBank:
    def test_default_bank_angles(self, checker22x36):
        bank = build_bank(checker22x36, 36, 10.0)
        assert len(bank) == 36
        assert bank.angles == tuple(float(a) for a in range(0, 360, 10))

    def test_entry_zero_is_input(self, checker22x36):
        bank = build_bank(checker22x36)
        assert bank.entries[0].patch is checker22x36

    def test_exact_quarter_bank(self, checker22x36):
        bank = build_bank(checker22x36, 4, 90.0)
        assert bank.angles == (0.0, 90.0, 180.0, 270.0)
        half_turn = bank.entries[2].patch
        assert np.array_equal(half_turn.pixels, checker22x36.pixels[::-1, ::-1])

    def test_rejects_non_360_cover(self, checker22x36):
        with pytest.raises(ConfigError):
            build_bank(checker22x36, 35, 10.0)

    def test_uniform_dimensions_and_increasing_angles(self, checker22x36):
        bank = build_bank(checker22x36)
        for e in bank.entries:
            assert (e.patch.width, e.patch.height) == (bank.base_width, bank.base_height)
        assert all(a < b for a, b in zip(bank.angles, bank.angles[1:]))
