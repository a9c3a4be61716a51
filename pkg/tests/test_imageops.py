import colorsys
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domaingap.imageops import (Image, Patch, crop_resize, extract_patches,
                                hue_hsi, hue_image, load_patch_list,
                                patches_from_list, resize_bilinear,
                                to_grayscale)
from tests.conftest import solid_image


def naive_bilinear(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Independent per-pixel bilinear sampler (half-pixel centers)."""
    in_h, in_w = src.shape[:2]
    out = np.zeros((out_h, out_w) + src.shape[2:])
    for i in range(out_h):
        for j in range(out_w):
            sy = min(max((i + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1.0)
            sx = min(max((j + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1.0)
            y0, x0 = int(math.floor(sy)), int(math.floor(sx))
            y1, x1 = min(y0 + 1, in_h - 1), min(x0 + 1, in_w - 1)
            fy, fx = sy - y0, sx - x0
            out[i, j] = ((1 - fy) * ((1 - fx) * src[y0, x0] + fx * src[y0, x1])
                         + fy * ((1 - fx) * src[y1, x0] + fx * src[y1, x1]))
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


class TestCropResize:
    def test_full_frame_identity(self):
        rng = np.random.default_rng(0)
        img = Image(rng.integers(0, 256, (256, 256, 3), dtype=np.uint8))
        out = crop_resize(img, (0, 0, 256, 256), 256)
        assert np.array_equal(out.pixels, img.pixels)

    def test_square_expansion_side_is_max(self):
        # 100x50 bbox in a large image -> intermediate square side 100,
        # observable because the crop content is position-coded.
        px = np.zeros((400, 400, 3), dtype=np.uint8)
        px[:, :, 0] = (np.arange(400) % 256)[None, :]
        img = Image(px)
        out = crop_resize(img, (150, 100, 100, 50), 100)
        # expanded square is x in [150, 250), y in [75, 175)
        expected = px[75:175, 150:250]
        assert np.array_equal(out.pixels, expected)

    def test_upscale_2x2_checker_hand_table(self):
        src = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        img = Image(np.stack([src] * 3, axis=-1))
        out = crop_resize(img, (0, 0, 2, 2), 4)
        # src coords for dst index i: clamp(0.5*i - 0.25) -> [0, .25, .75, 1]
        f = [0.0, 0.25, 0.75, 1.0]
        expected = np.clip(np.rint(np.array(
            [[(1 - fy) * ((1 - fx) * 0 + fx * 255) + fy * ((1 - fx) * 255 + fx * 0)
              for fx in f] for fy in f])), 0, 255).astype(np.uint8)
        assert np.array_equal(out.pixels[..., 0], expected)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(3)
        src = rng.integers(0, 256, (7, 11, 3), dtype=np.uint8)
        got = resize_bilinear(src, 13, 5)
        assert np.array_equal(got, naive_bilinear(src, 13, 5))

    def test_output_always_square(self):
        rng = np.random.default_rng(1)
        img = Image(rng.integers(0, 256, (60, 90, 3), dtype=np.uint8))
        for bbox in [(0, 0, 10, 10), (80, 50, 30, 30), (-5, -5, 20, 8)]:
            out = crop_resize(img, bbox, 64)
            assert out.pixels.shape == (64, 64, 3)

    def test_no_intersection_raises(self):
        img = solid_image((10, 20, 30))
        with pytest.raises(ValueError):
            crop_resize(img, (100, 100, 5, 5))


class TestGrayscale:
    @pytest.mark.parametrize("rgb,expected", [
        ((255, 255, 255), 255),
        ((0, 0, 0), 0),
        ((255, 0, 0), 76),  # round(0.299 * 255) = round(76.245)
    ])
    def test_known_values(self, rgb, expected):
        gray = to_grayscale(solid_image(rgb, (4, 4)))
        assert gray.pixels[0, 0] == expected

    @given(st.integers(0, 255))
    def test_idempotent_on_gray(self, v):
        gray = to_grayscale(solid_image((v, v, v), (2, 2)))
        assert int(gray.pixels[0, 0]) == v


class TestHue:
    def test_primaries(self):
        assert hue_hsi(255, 0, 0) == pytest.approx(0.0)
        assert hue_hsi(0, 255, 0) == pytest.approx(120.0)
        assert hue_hsi(0, 0, 255) == pytest.approx(240.0)

    def test_achromatic_is_absent(self):
        assert hue_hsi(128, 128, 128) is None
        assert hue_hsi(100, 101, 102) is None

    @given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
    @settings(max_examples=300)
    def test_agrees_with_circular_hue_oracle(self, r, g, b):
        # Independent circular-hue oracle: atan2(sqrt(3)(G-B), 2R-G-B).
        # The hexagonal colorsys hue deviates from the circular one by up
        # to ~1.12 degrees, so it only gets a coarser bound.
        h = hue_hsi(r, g, b)
        mx, mn = max(r, g, b), min(r, g, b)
        if h is None:
            assert mx - mn < 3
            return
        sat = (mx - mn) / mx
        if sat <= 0.1:
            return
        oracle = math.degrees(math.atan2(math.sqrt(3) * (g - b),
                                         2 * r - g - b)) % 360.0
        diff = abs(h - oracle)
        assert min(diff, 360.0 - diff) < 1.0
        hsv = colorsys.rgb_to_hsv(r / 255, g / 255, b / 255)[0] * 360.0
        hsv_diff = abs(h - hsv)
        assert min(hsv_diff, 360.0 - hsv_diff) < 1.5

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(5)
        px = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        hues, mask = hue_image(Image(px))
        for y in range(8):
            for x in range(8):
                scalar = hue_hsi(*(int(v) for v in px[y, x]))
                if scalar is None:
                    assert not mask[y, x]
                else:
                    assert hues[y, x] == pytest.approx(scalar, abs=1e-9)


class TestPatches:
    def test_whole_image_patch(self):
        img = Image((np.arange(400) % 256).astype(np.uint8).reshape(20, 20))
        (p,) = extract_patches(img, side=20, count=1, seed=0)
        assert p.origin == (0, 0)
        assert np.array_equal(p.pixels, img.pixels)

    def test_deterministic(self):
        img = Image(np.zeros((256, 256), dtype=np.uint8))
        a = extract_patches(img, 20, 4, seed=7)
        b = extract_patches(img, 20, 4, seed=7)
        assert [p.origin for p in a] == [p.origin for p in b]

    def test_non_overlapping_when_feasible(self):
        img = Image(np.zeros((256, 256), dtype=np.uint8))
        patches = extract_patches(img, 20, 4, seed=1)
        for i, p in enumerate(patches):
            for q in patches[i + 1:]:
                assert (abs(p.origin[0] - q.origin[0]) >= 20
                        or abs(p.origin[1] - q.origin[1]) >= 20)

    def test_overlap_fallback_warns(self):
        # Four 20x20 patches cannot pack a 30x30 image (area 1600 > 900).
        img = Image(np.zeros((30, 30), dtype=np.uint8))
        with pytest.warns(UserWarning, match="overlap"):
            patches = extract_patches(img, 20, 4, seed=2)
        assert len(patches) == 4

    def test_too_small_raises(self):
        img = Image(np.zeros((10, 10), dtype=np.uint8))
        with pytest.raises(ValueError):
            extract_patches(img, 20, 1, seed=0)

    def test_manual_patch_list(self, tmp_path):
        path = tmp_path / "patches.csv"
        path.write_text("image_id,x,y,side\na,0,0,20\na,20,20,20\n")
        entries = load_patch_list(path)
        assert entries == {"a": [(0, 0, 20), (20, 20, 20)]}
        img = Image(np.zeros((64, 64), dtype=np.uint8))
        patches = patches_from_list(img, entries["a"])
        assert [p.origin for p in patches] == [(0, 0), (20, 20)]

    def test_patch_side_minimum(self):
        with pytest.raises(ValueError):
            Patch(origin=(0, 0), pixels=np.zeros((1, 1), dtype=np.uint8))
