"""Problem generators shared by the test modules."""

import numpy as np
from scipy.spatial.distance import cdist

from cksc.kernelcore import KernelMatrix, TimeSeries, build_gaussian_kernel
from cksc.synthetic import SyntheticSpec, generate
from cksc.trainer import LabelMatrix


def random_psd(rng: np.random.Generator, m: int, rank: int = 0) -> np.ndarray:
    """Random symmetric PSD matrix (full rank unless `rank` is given)."""
    factor = rng.normal(size=(m, rank or m))
    Q = factor @ factor.T / m
    return (Q + Q.T) / 2.0


def block_kernel(rng: np.random.Generator, classes: int = 3, per_class: int = 10,
                 separation: float = 6.0, noise: float = 0.5, dim: int = 3) -> tuple:
    """Gaussian kernel over clustered points: well separated classes give a block-structured K."""
    centers = rng.normal(scale=separation, size=(classes, dim))
    points = np.vstack([c + noise * rng.normal(size=(per_class, dim)) for c in centers])
    d = cdist(points, points)
    delta = d[~np.eye(len(points), dtype=bool)].mean()
    K = np.exp(-(d ** 2) / delta)
    np.fill_diagonal(K, 1.0)
    K = (K + K.T) / 2.0
    labels = LabelMatrix.from_indices(np.repeat(np.arange(classes), per_class),
                                      [f"class_{q}" for q in range(classes)])
    return KernelMatrix(K), labels


def dtw_kernel(rng: np.random.Generator, n: int = 8, length: int = 5) -> KernelMatrix:
    """Gaussian-of-DTW kernel over random series; usually indefinite."""
    series = [TimeSeries(rng.normal(size=(2, int(rng.integers(3, length + 1))))) for _ in range(n)]
    return build_gaussian_kernel(series).kernel


def random_labels(rng: np.random.Generator, n: int, p: int) -> LabelMatrix:
    indices = np.concatenate([np.arange(p), rng.integers(0, p, size=n - p)])
    return LabelMatrix.from_indices(rng.permutation(indices), [f"c{q}" for q in range(p)])


def synthetic_blocks(per_class: int = 20, seed: int = 0, separation: float = 3.0,
                     noise: float = 0.1) -> tuple:
    """Three synthetic classes as (kernel, labels, delta); well separated by default."""
    spec = SyntheticSpec(classes=3, samples_per_class=per_class, channels=2, length=20,
                         separation=separation, noise=noise, seed=seed)
    samples = generate(spec)
    build = build_gaussian_kernel([s for s, _ in samples])
    return build.kernel, LabelMatrix.from_labels([label for _, label in samples]), build.delta
