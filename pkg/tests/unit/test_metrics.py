import numpy as np
import pytest

from src.core.exceptions import DimensionMismatchException, ValidationException
from src.metrics.quality import (
    PSNR_CAP,
    build_metrics_report,
    frame_metrics,
    gaussian_window,
    nmi,
    nmi_matrix,
    psnr,
    ssim,
)
from src.schemas.report import FitSummary, dump_json

pytestmark = pytest.mark.unit


def reference_ssim(a: np.ndarray, b: np.ndarray) -> float:
    """SSIM janela a janela, sem convolução, para um único canal."""
    window = gaussian_window()
    size = window.shape[0]
    c1, c2 = 0.01**2, 0.03**2
    scores = []
    for i in range(a.shape[0] - size + 1):
        for j in range(a.shape[1] - size + 1):
            pa = a[i : i + size, j : j + size]
            pb = b[i : i + size, j : j + size]
            mu_a, mu_b = np.sum(window * pa), np.sum(window * pb)
            var_a = np.sum(window * (pa - mu_a) ** 2)
            var_b = np.sum(window * (pb - mu_b) ** 2)
            cov = np.sum(window * (pa - mu_a) * (pb - mu_b))
            scores.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(scores))


class TestPsnr:
    def test_identical_frames_hit_cap(self, rng):
        frame = rng.uniform(size=(3, 8, 8))
        assert psnr(frame, frame) == PSNR_CAP == 99.0

    def test_closed_form(self):
        assert psnr(np.zeros((4, 4)), np.full((4, 4), 0.5)) == pytest.approx(6.0206, abs=1e-4)

    def test_matches_pixel_loop(self, rng):
        a = rng.uniform(size=(3, 5, 7))
        b = rng.uniform(size=(3, 5, 7))
        total = 0.0
        for value_a, value_b in zip(a.ravel(), b.ravel()):
            total += (value_a - value_b) ** 2
        expected = 10 * np.log10(1.0 / (total / a.size))
        assert psnr(a, b) == pytest.approx(expected, abs=1e-9)
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchException):
            psnr(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))


class TestSsim:
    def test_identical_frames(self, rng):
        frame = rng.uniform(size=(3, 16, 16))
        assert ssim(frame, frame) == pytest.approx(1.0, abs=1e-12)

    def test_inverted_binary_is_negative(self, rng):
        frame = (rng.uniform(size=(16, 16)) > 0.5).astype(np.float64)
        assert ssim(frame, 1.0 - frame) < 0.0

    def test_symmetric_and_matches_window_loop(self, rng):
        a = rng.uniform(size=(14, 15))
        b = np.clip(a + rng.normal(0, 0.1, size=a.shape), 0, 1)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
        assert ssim(a, b) == pytest.approx(reference_ssim(a, b), abs=1e-6)

    def test_frame_smaller_than_window(self):
        with pytest.raises(ValidationException):
            ssim(np.zeros((3, 8, 8)), np.zeros((3, 8, 8)))


class TestNmi:
    def test_identical_frames(self, rng):
        frame = rng.uniform(size=(3, 32, 32))
        assert nmi(frame, frame) == pytest.approx(1.0)

    def test_independent_noise_is_near_zero(self, rng):
        structured = np.tile(np.linspace(0, 1, 64), (3, 64, 1))
        noise = rng.uniform(size=(3, 64, 64))
        assert nmi(structured, noise) < 0.1

    def test_invariant_to_shared_permutation(self, rng):
        a = rng.uniform(size=(16, 16))
        b = np.clip(a * 0.5 + rng.uniform(size=a.shape) * 0.2, 0, 1)
        order = rng.permutation(a.size)
        shuffled = nmi(a.ravel()[order], b.ravel()[order])
        assert shuffled == pytest.approx(nmi(a, b), abs=1e-12)

    def test_constant_frames(self):
        assert nmi(np.full((4, 4), 0.3), np.full((4, 4), 0.3)) == 1.0

    def test_matrix_is_symmetric_with_unit_diagonal(self, square_video):
        matrix = np.array(nmi_matrix(square_video.frames))
        assert matrix.shape == (3, 3)
        np.testing.assert_array_equal(np.diag(matrix), 1.0)
        np.testing.assert_array_equal(matrix, matrix.T)


class TestReport:
    def test_frame_count_mismatch(self, square_video):
        with pytest.raises(ValidationException):
            frame_metrics(square_video.frames, square_video.frames[:2])

    def test_ssim_skipped_for_small_frames(self, rng):
        frames = rng.uniform(size=(2, 1, 8, 8))
        assert [m.ssim for m in frame_metrics(frames, frames)] == [None, None]

    def test_identical_sequences(self, square_video):
        report = build_metrics_report("metrics", square_video.frames, square_video.frames)
        assert report.aggregate.mean_psnr == 99.0
        assert report.aggregate.mean_ssim == pytest.approx(1.0)
        assert report.aggregate.frame_count == 3
        assert report.baseline is None

    def test_indices_and_baseline(self, square_video, rng):
        reference = square_video.frames
        restored = np.clip(reference + 0.01, 0, 1)
        degraded = np.clip(reference + rng.normal(0, 0.1, size=reference.shape), 0, 1)
        report = build_metrics_report(
            "interpolate",
            restored,
            reference,
            indices=[1],
            degraded=degraded,
            fit=FitSummary(epochs_run=10, final_loss=0.5),
            include_nmi=True,
        )
        assert [m.index for m in report.frames] == [1]
        assert report.baseline.frame_count == 1
        assert report.baseline.mean_psnr < report.aggregate.mean_psnr
        assert len(report.nmi) == 3
        assert report.fit.epochs_run == 10

    def test_dump_is_stable(self, square_video):
        report = build_metrics_report("metrics", square_video.frames, square_video.frames)
        assert dump_json(report) == dump_json(report.model_copy())
        assert "seconds" not in dump_json(report)
