import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from skimage.metrics import structural_similarity

from dmpjfrft.errors import ShapeMismatch, TooSmall, ZeroReference
from dmpjfrft.metrics import MetricReport, evaluate, mse, psnr, psnr_from_mse, snr, ssim


def sk_ssim(a, b):
    return structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
                                 use_sample_covariance=False, data_range=255)


class TestSnr:
    @pytest.mark.parametrize("scale,expected", [(0.1, 20.0), (1.0, 0.0), (0.01, 40.0), (10.0, -20.0)])
    def test_table(self, scale, expected):
        X = np.array([[3.0, 4.0]])
        err = scale * np.array([[0.0, 5.0]])
        assert snr(X, X + err) == pytest.approx(expected, abs=1e-12)

    def test_exact_match_and_zero_reference(self):
        X = np.ones((2, 2))
        assert snr(X, X) == math.inf
        with pytest.raises(ZeroReference):
            snr(np.zeros((2, 2)), X)
        with pytest.raises(ShapeMismatch):
            snr(X, np.ones((2, 3)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.01, 0.9))
    def test_shrinking_error_raises_snr(self, seed, shrink):
        rng = np.random.default_rng(seed)
        X, E = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
        assert snr(X, X + shrink * E) > snr(X, X + E)
        assert snr(X, X + shrink * E) - snr(X, X + E) == pytest.approx(-20 * np.log10(shrink))

    def test_complex(self):
        X = np.array([1j, 0])
        assert snr(X, np.array([1j, 0.1j])) == pytest.approx(20.0)
        assert mse(X, np.array([1j, 1 + 1j])) == pytest.approx(1.0)


class TestPsnr:
    def test_values(self):
        assert psnr_from_mse(1.0) == pytest.approx(48.1308036, abs=1e-6)
        assert psnr_from_mse(255.0 ** 2) == pytest.approx(0.0)
        img = np.full((4, 4), 100.0)
        assert psnr(img, img) == math.inf
        assert psnr(img, img + 1) == pytest.approx(48.1308036, abs=1e-6)

    def test_clamping(self):
        img = np.full((4, 4), 255.0)
        assert psnr(img, img + 50) == math.inf
        assert psnr(np.zeros((4, 4)), np.full((4, 4), -3.0 + 2j)) == math.inf

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_identity_with_mse(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.uniform(0, 255, (6, 6)), rng.uniform(0, 255, (6, 6))
        assert 10 ** (-psnr(a, b) / 10) * 255 ** 2 == pytest.approx(mse(a, b), rel=1e-10)


class TestSsim:
    def test_identical(self, rng):
        a = rng.uniform(0, 255, (20, 20))
        assert ssim(a, a) == 1.0

    def test_negative_image(self, rng):
        a = rng.uniform(0, 255, (20, 20))
        assert ssim(a, 255 - a) < 0

    @pytest.mark.parametrize("a,b", [(100.0, 120.0), (0.0, 255.0), (30.0, 31.0)])
    def test_constant_images(self, a, b):
        c1 = (0.01 * 255) ** 2
        expected = (2 * a * b + c1) / (a * a + b * b + c1)
        assert ssim(np.full((15, 13), a), np.full((15, 13), b)) == pytest.approx(expected, rel=1e-9)

    def test_symmetric(self, rng):
        a, b = rng.uniform(0, 255, (16, 16)), rng.uniform(0, 255, (16, 16))
        assert ssim(a, b) == pytest.approx(ssim(b, a), rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_skimage(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(0, 255, (32, 24))
        b = np.clip(a + rng.normal(0, 20 + 10 * seed, a.shape), 0, 255)
        assert ssim(a, b) == pytest.approx(sk_ssim(a, b), abs=1e-10)

    def test_too_small(self):
        with pytest.raises(TooSmall):
            ssim(np.zeros((10, 20)), np.zeros((10, 20)))


class TestReport:
    def test_evaluate_frames(self, rng):
        frames = rng.uniform(0, 255, (3, 12, 12))
        noisy = frames + rng.normal(0, 5, frames.shape)
        r = evaluate(frames, noisy, images=True)
        assert r.psnr_db == pytest.approx(np.mean([psnr(a, b) for a, b in zip(frames, noisy)]))
        assert r.ssim == pytest.approx(np.mean([ssim(a, b) for a, b in zip(frames, noisy)]))
        assert r.snr_db == pytest.approx(snr(frames, noisy))

    def test_dict_round_trip_with_inf(self):
        X = np.ones((12, 12))
        r = evaluate(X, X, images=True)
        d = r.to_dict()
        assert d["snr_db"] == "inf" and d["psnr_db"] == "inf"
        assert MetricReport.from_dict(d) == r
        assert evaluate(X, X).psnr_db is None
