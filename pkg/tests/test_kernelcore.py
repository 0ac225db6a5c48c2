"""Tests for DTW distances, the Gaussian kernel and spectrum helpers."""

import itertools
import math

import numpy as np
import pytest

from cksc.errors import (
    ContractError,
    DegenerateBandwidthError,
    DimensionError,
    DomainError,
)
from cksc.kernelcore import (
    CrossKernel,
    KernelMatrix,
    TimeSeries,
    bandwidth,
    build_gaussian_kernel,
    clip_psd,
    cross_kernel,
    cross_kernels,
    dtw_distance,
    gaussian_kernel,
    gram_spectrum,
    pairwise_distances,
    spectrum_summary,
)


def brute_force_dtw(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum over every monotone warping path, enumerated recursively."""
    la, lb = len(a), len(b)
    best = math.inf

    def walk(i: int, j: int, total: float) -> None:
        nonlocal best
        total += abs(a[i] - b[j])
        if i == la - 1 and j == lb - 1:
            best = min(best, total)
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            if i + di < la and j + dj < lb:
                walk(i + di, j + dj, total)

    walk(0, 0, 0.0)
    return best


class TestTimeSeries:
    """Tests for series validation."""

    def test_univariate_reshaped(self):
        s = TimeSeries([1.0, 2.0, 3.0])
        assert s.channels == 1
        assert s.length == 3

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            TimeSeries(np.empty((2, 0)))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            TimeSeries([1.0, np.nan])

    def test_values_read_only(self):
        s = TimeSeries([[1.0, 2.0]])
        with pytest.raises(ValueError):
            s.values[0, 0] = 5.0


class TestDtw:
    """Tests for dtw_distance."""

    def test_self_distance_zero(self, rng):
        s = TimeSeries(rng.normal(size=(3, 12)))
        assert dtw_distance(s, s) == 0.0

    def test_repeated_frame(self):
        assert dtw_distance(TimeSeries([0.0]), TimeSeries([0.0, 0.0, 0.0])) == 0.0

    def test_small_example_matches_enumeration(self):
        a, b = np.array([1.0, 2.0, 3.0]), np.array([1.0, 3.0])
        assert dtw_distance(TimeSeries(a), TimeSeries(b)) == pytest.approx(brute_force_dtw(a, b))
        assert dtw_distance(TimeSeries(a), TimeSeries(b)) == pytest.approx(1.0)

    def test_random_matches_enumeration(self, rng):
        for _ in range(10):
            a = rng.normal(size=rng.integers(1, 6))
            b = rng.normal(size=rng.integers(1, 6))
            assert dtw_distance(TimeSeries(a), TimeSeries(b)) == pytest.approx(
                brute_force_dtw(a, b), abs=1e-12
            )

    def test_symmetric(self, rng):
        for _ in range(10):
            a = TimeSeries(rng.normal(size=(2, rng.integers(2, 9))))
            b = TimeSeries(rng.normal(size=(2, rng.integers(2, 9))))
            assert abs(dtw_distance(a, b) - dtw_distance(b, a)) <= 1e-12

    def test_euclidean_frame_cost(self):
        a = TimeSeries([[0.0], [0.0]])
        b = TimeSeries([[3.0], [4.0]])
        assert dtw_distance(a, b) == pytest.approx(5.0)

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            dtw_distance(TimeSeries([[1.0, 2.0]]), TimeSeries([[1.0], [2.0]]))

    def test_band_must_be_positive(self):
        s = TimeSeries([1.0, 2.0])
        with pytest.raises(DomainError):
            dtw_distance(s, s, band=0)

    def test_band_widened_to_length_difference(self):
        a = TimeSeries(np.arange(10.0))
        b = TimeSeries(np.arange(3.0))
        assert math.isfinite(dtw_distance(a, b, band=1))

    def test_wide_band_equals_unconstrained(self, rng):
        a = TimeSeries(rng.normal(size=(2, 8)))
        b = TimeSeries(rng.normal(size=(2, 6)))
        assert dtw_distance(a, b, band=8) == pytest.approx(dtw_distance(a, b))

    def test_band_never_below_unconstrained(self, rng):
        a = TimeSeries(rng.normal(size=12))
        b = TimeSeries(rng.normal(size=12))
        assert dtw_distance(a, b, band=1) >= dtw_distance(a, b) - 1e-12


class TestBandwidth:
    """Tests for the mean-distance bandwidth."""

    def test_single_pair(self):
        assert bandwidth(np.array([[0.0, 4.0], [4.0, 0.0]])) == 4.0

    def test_three_by_three(self):
        d = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
        assert bandwidth(d) == pytest.approx(2.0)

    def test_random_matches_direct_sum(self, rng):
        upper = np.triu(rng.uniform(0.1, 5.0, size=(5, 5)), k=1)
        d = upper + upper.T
        direct = sum(d[i, j] for i in range(5) for j in range(5) if i != j) / 20
        assert bandwidth(d) == pytest.approx(direct)

    def test_permutation_invariant(self, rng):
        upper = np.triu(rng.uniform(0.1, 5.0, size=(6, 6)), k=1)
        d = upper + upper.T
        perm = rng.permutation(6)
        assert bandwidth(d[np.ix_(perm, perm)]) == pytest.approx(bandwidth(d))

    def test_too_few_samples(self):
        with pytest.raises(DomainError):
            bandwidth(np.zeros((1, 1)))

    def test_all_zero_is_degenerate(self):
        with pytest.raises(DegenerateBandwidthError):
            bandwidth(np.zeros((3, 3)))


class TestGaussianKernel:
    """Tests for the Gaussian kernel builder."""

    def test_zero_distance_is_one(self):
        K = gaussian_kernel(np.zeros((2, 2)), 1.0)
        assert np.all(K.values == 1.0)

    def test_exponent_minus_one(self):
        d = np.array([[0.0, 2.0], [2.0, 0.0]])
        K = gaussian_kernel(d, 4.0)
        assert K.values[0, 1] == pytest.approx(math.exp(-1.0))
        assert K.values[0, 1] == pytest.approx(0.367879, abs=1e-6)

    def test_delta_must_be_positive(self):
        with pytest.raises(DomainError):
            gaussian_kernel(np.zeros((2, 2)), 0.0)

    def test_pipeline_matches_scalar_recomputation(self, rng):
        series = [TimeSeries(rng.normal(size=(2, rng.integers(4, 9)))) for _ in range(4)]
        build = build_gaussian_kernel(series)
        delta = np.mean([dtw_distance(a, b) for a, b in itertools.permutations(series, 2)])
        assert build.delta == pytest.approx(delta)
        for i, j in itertools.product(range(4), repeat=2):
            expected = 1.0 if i == j else math.exp(-dtw_distance(series[i], series[j]) ** 2 / delta)
            assert build.kernel.values[i, j] == pytest.approx(expected, abs=1e-12)

    def test_unit_diagonal_and_range(self, rng):
        series = [TimeSeries(rng.normal(size=6)) for _ in range(5)]
        K = build_gaussian_kernel(series).kernel.values
        assert np.all(np.diag(K) == 1.0)
        assert np.all(K > 0) and np.all(K <= 1.0)
        assert np.array_equal(K, K.T)

    def test_identical_samples_have_unit_entry(self):
        a = TimeSeries([0.0, 1.0, 2.0])
        b = TimeSeries([5.0, 5.0, 5.0])
        K = build_gaussian_kernel([a, a, b]).kernel.values
        assert K[0, 1] == 1.0
        assert K[0, 2] < 1.0

    def test_parallel_matches_sequential(self, rng):
        series = [TimeSeries(rng.normal(size=(2, 7))) for _ in range(5)]
        assert np.array_equal(pairwise_distances(series, n_jobs=1),
                              pairwise_distances(series, n_jobs=2))

    def test_inconsistent_channels(self):
        with pytest.raises(DimensionError):
            pairwise_distances([TimeSeries([[1.0, 2.0]]), TimeSeries([[1.0], [2.0]])])


class TestKernelMatrix:
    """Tests for kernel validation and hashing."""

    def test_asymmetric_rejected(self):
        with pytest.raises(ContractError):
            KernelMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            KernelMatrix(np.ones((2, 3)))

    def test_hash_tracks_values(self):
        K = KernelMatrix(np.eye(3))
        assert K.sha256() == KernelMatrix(np.eye(3)).sha256()
        changed = np.eye(3)
        changed[0, 0] = 1.0 + 1e-15
        assert K.sha256() != KernelMatrix(changed).sha256()

    def test_submatrix_and_cross_rows(self):
        K = KernelMatrix(np.arange(16.0).reshape(4, 4) + np.arange(16.0).reshape(4, 4).T)
        assert np.array_equal(K.submatrix([0, 2]).values, K.values[np.ix_([0, 2], [0, 2])])
        assert np.array_equal(K.cross_rows([1], [0, 3]), K.values[[1]][:, [0, 3]])


class TestCrossKernel:
    """Tests for test-point kernel rows."""

    def test_training_point_reproduces_kernel_row(self, rng):
        series = [TimeSeries(rng.normal(size=(2, 6))) for _ in range(4)]
        build = build_gaussian_kernel(series)
        row = cross_kernel(series[0], series, build.delta)
        assert np.allclose(row.values, build.kernel.values[0], atol=1e-12)

    def test_length_checked(self):
        with pytest.raises(DimensionError):
            CrossKernel(np.ones(3), 4)

    def test_empty_test_set(self):
        train = [TimeSeries([1.0, 2.0]), TimeSeries([2.0, 3.0])]
        assert cross_kernels([], train, 1.0).shape == (0, 2)


class TestSpectrum:
    """Tests for eigenvalue diagnostics."""

    def test_identity(self):
        assert np.allclose(gram_spectrum(KernelMatrix(np.eye(3))), [1.0, 1.0, 1.0])

    def test_all_ones(self):
        assert np.allclose(gram_spectrum(np.ones((2, 2))), [0.0, 2.0], atol=1e-12)

    def test_random_residuals(self, rng):
        M = rng.normal(size=(6, 6))
        M = (M + M.T) / 2
        eigs = gram_spectrum(M)
        assert np.all(np.diff(eigs) >= 0)
        for lam in eigs:
            _, vectors = np.linalg.eigh(M)
            v = vectors[:, np.argmin(np.abs(np.linalg.eigvalsh(M) - lam))]
            assert np.linalg.norm(M @ v - lam * v) <= 1e-8

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            gram_spectrum(np.array([[1.0, np.inf], [np.inf, 1.0]]))

    def test_summary(self):
        summary = spectrum_summary(np.array([-0.5, 0.2, 3.0]))
        assert summary["lambda_min"] == -0.5
        assert summary["lambda_max"] == 3.0
        assert summary["negative_count"] == 1

    def test_clip_psd(self):
        K = KernelMatrix(np.array([[1.0, 0.9, 0.0], [0.9, 1.0, 0.9], [0.0, 0.9, 1.0]]))
        assert gram_spectrum(K)[0] < 0
        clipped, count = clip_psd(K)
        assert count == 1
        assert gram_spectrum(clipped)[0] >= -1e-10
