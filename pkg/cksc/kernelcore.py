"""
Kernel construction for multivariate time series

Builds the Gram matrix the learner works on:
- DTW distances between multivariate series (optional Sakoe-Chiba band)
- Gaussian kernel exp(-D^2 / delta) with delta the mean pairwise distance
- Cross-kernel rows for new series against the training series
- Spectrum diagnostics and optional PSD clipping

Gaussian kernels over DTW are usually indefinite; the learner absorbs this
with its beta ridge, so clipping is opt-in.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numba as nb
import numpy as np
from joblib import Parallel, delayed
from scipy import linalg
from scipy.spatial.distance import cdist

from cksc.errors import (
    ContractError,
    DegenerateBandwidthError,
    DimensionError,
    DomainError,
    NumericError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


def _readonly(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class TimeSeries:
    """A d x L multivariate series: d channels, L time steps."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(1, -1)
        if values.ndim != 2:
            raise DimensionError(f"Series must be 1-D or 2-D, got {values.ndim}-D")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DomainError(f"Series must be non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("Series contains non-finite values")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def channels(self) -> int:
        return int(self.values.shape[0])

    @property
    def length(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric N x N Gram matrix K(Y, Y)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionError(f"Kernel must be square, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("Kernel contains non-finite values")
        asymmetry = float(np.max(np.abs(values - values.T))) if values.size else 0.0
        if asymmetry > SYMMETRY_TOL:
            raise ContractError(f"Kernel is not symmetric (max |K - K^T| = {asymmetry:.3g})")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def sha256(self) -> str:
        """Content hash over shape and little-endian float64 bytes."""
        digest = hashlib.sha256()
        digest.update(f"{self.n}x{self.n}".encode("ascii"))
        digest.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return digest.hexdigest()

    def submatrix(self, index: Sequence[int]) -> "KernelMatrix":
        idx = np.asarray(index, dtype=int)
        return KernelMatrix(self.values[np.ix_(idx, idx)])

    def cross_rows(self, rows: Sequence[int], columns: Sequence[int]) -> np.ndarray:
        """Rows of K restricted to `columns`, used as cross-kernels in validation splits."""
        return np.array(self.values[np.ix_(np.asarray(rows, dtype=int), np.asarray(columns, dtype=int))])


@dataclass(frozen=True)
class CrossKernel:
    """Kernel row K(z, Y) of one test point against N training samples.

    `kernel_sha256` optionally names the training kernel the row was built
    against; recall refuses rows built for a different kernel.
    """

    values: np.ndarray
    n_train: int
    kernel_sha256: Optional[str] = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape[0] != self.n_train:
            raise DimensionError(
                f"Cross-kernel has {values.shape[0]} entries, expected {self.n_train}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("Cross-kernel contains non-finite values")
        object.__setattr__(self, "values", _readonly(values))


def _local_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # frames are columns; cdist wants them as rows
    return cdist(a.T, b.T, metric="euclidean")


def dtw_distance(a: TimeSeries, b: TimeSeries, band: Optional[int] = None) -> float:
    """Classic DTW with Euclidean frame cost and (diag, up, left) steps.

    Args:
        a: First series (d x La).
        b: Second series (d x Lb).
        band: Optional Sakoe-Chiba half-width. Widened to |La - Lb| so a
            path always exists.

    Returns:
        Minimal cumulative alignment cost.
    """
    if a.channels != b.channels:
        raise DimensionError(f"Channel mismatch: {a.channels} vs {b.channels}")
    if band is not None and band < 1:
        raise DomainError(f"Band must be >= 1, got {band}")

    cost = _local_cost(a.values, b.values)
    rows, cols = cost.shape
    window = -1 if band is None else max(band, abs(rows - cols))
    return float(_accumulate(cost, window))


# infinities mark unreachable cells, so fastmath stays off
@nb.njit(nogil=True, cache=False, error_model="numpy")
def _accumulate(cost: np.ndarray, window: int) -> float:
    """Cumulative (diag, up, left) cost; window < 0 means unconstrained."""
    rows, cols = cost.shape
    acc = np.full((rows + 1, cols + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, rows + 1):
        if window < 0:
            lo, hi = 1, cols
        else:
            lo, hi = max(1, i - window), min(cols, i + window)
        for j in range(lo, hi + 1):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i - 1, j - 1] + best
    return acc[rows, cols]


def _check_channels(series: Sequence[TimeSeries]) -> None:
    channels = {s.channels for s in series}
    if len(channels) > 1:
        raise DimensionError(f"Inconsistent channel counts: {sorted(channels)}")


def pairwise_distances(
    series: Sequence[TimeSeries],
    band: Optional[int] = None,
    n_jobs: int = 1,
) -> np.ndarray:
    """Symmetric N x N DTW distance matrix with zero diagonal."""
    _check_channels(series)
    n = len(series)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    logger.debug("Computing %d DTW distances (n_jobs=%d)", len(pairs), n_jobs)
    results = Parallel(n_jobs=n_jobs)(
        delayed(dtw_distance)(series[i], series[j], band) for i, j in pairs
    )
    distances = np.zeros((n, n))
    for (i, j), value in zip(pairs, results):
        distances[i, j] = value
        distances[j, i] = value
    return distances


def bandwidth(distances: np.ndarray) -> float:
    """Mean distance over ordered pairs i != j (diagonal excluded)."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError(f"Distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if n < 2:
        raise DomainError("Bandwidth needs at least 2 samples")
    if np.any(np.diag(d) != 0) or np.max(np.abs(d - d.T)) > SYMMETRY_TOL:
        raise DomainError("Distance matrix must be symmetric with zero diagonal")
    delta = float(d[~np.eye(n, dtype=bool)].mean())
    if delta <= 0.0:
        raise DegenerateBandwidthError("All pairwise distances are zero")
    return delta


def gaussian_kernel(distances: np.ndarray, delta: float) -> KernelMatrix:
    """K_ij = exp(-D_ij^2 / delta), unit diagonal."""
    if not delta > 0:
        raise DomainError(f"Bandwidth must be positive, got {delta}")
    d = np.asarray(distances, dtype=np.float64)
    upper = np.triu(np.exp(-(d ** 2) / delta), k=1)
    values = upper + upper.T
    np.fill_diagonal(values, 1.0)
    return KernelMatrix(values)


def gaussian_row(distances: np.ndarray, delta: float) -> np.ndarray:
    if not delta > 0:
        raise DomainError(f"Bandwidth must be positive, got {delta}")
    return np.exp(-(np.asarray(distances, dtype=np.float64) ** 2) / delta)


def cross_kernel(
    z: TimeSeries,
    train: Sequence[TimeSeries],
    delta: float,
    band: Optional[int] = None,
    kernel_sha256: Optional[str] = None,
) -> CrossKernel:
    """K(z, Y) against the training series using the frozen training delta."""
    _check_channels(list(train) + [z])
    row = np.array([dtw_distance(z, y, band) for y in train])
    return CrossKernel(gaussian_row(row, delta), len(train), kernel_sha256)


def cross_kernels(
    tests: Sequence[TimeSeries],
    train: Sequence[TimeSeries],
    delta: float,
    band: Optional[int] = None,
    n_jobs: int = 1,
) -> np.ndarray:
    """M x N matrix of cross-kernel rows."""
    if not tests:
        return np.empty((0, len(train)))
    rows = Parallel(n_jobs=n_jobs)(
        delayed(cross_kernel)(z, train, delta, band) for z in tests
    )
    return np.vstack([r.values for r in rows])


@dataclass(frozen=True)
class KernelBuild:
    """Everything the kernel pipeline produced."""

    kernel: KernelMatrix
    distances: np.ndarray
    delta: float


def build_gaussian_kernel(
    series: Sequence[TimeSeries],
    band: Optional[int] = None,
    n_jobs: int = 1,
) -> KernelBuild:
    distances = pairwise_distances(series, band=band, n_jobs=n_jobs)
    delta = bandwidth(distances)
    logger.info("Gaussian kernel over %d series, delta=%.6g", len(series), delta)
    return KernelBuild(gaussian_kernel(distances, delta), distances, delta)


def _as_array(kernel: Union[KernelMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(kernel, KernelMatrix):
        return kernel.values
    return np.asarray(kernel, dtype=np.float64)


def gram_spectrum(kernel: Union[KernelMatrix, np.ndarray]) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in ascending order."""
    values = _as_array(kernel)
    if not np.all(np.isfinite(values)):
        raise DomainError("Matrix contains non-finite values")
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DimensionError(f"Matrix must be square, got shape {values.shape}")
    if values.size == 0:
        return np.empty(0)
    try:
        return np.asarray(linalg.eigh(values, eigvals_only=True))
    except linalg.LinAlgError as e:
        raise NumericError(f"Eigensolver failed: {e}") from e


def spectrum_summary(eigenvalues: np.ndarray, tol: float = 0.0) -> Dict[str, Any]:
    eigs = np.asarray(eigenvalues, dtype=np.float64)
    return {
        "lambda_min": float(eigs[0]) if eigs.size else None,
        "lambda_max": float(eigs[-1]) if eigs.size else None,
        "negative_count": int(np.sum(eigs < -tol)),
        "eigenvalues": [float(v) for v in eigs],
    }


def clip_psd(kernel: KernelMatrix) -> Tuple[KernelMatrix, int]:
    """Zero out negative eigenvalues and reassemble.

    Returns:
        (clipped kernel, number of eigenvalues clipped)
    """
    try:
        w, v = linalg.eigh(kernel.values)
    except linalg.LinAlgError as e:
        raise NumericError(f"Eigensolver failed: {e}") from e
    clipped = int(np.sum(w < 0))
    if clipped:
        logger.warning("Clipping %d negative eigenvalues (min %.3g)", clipped, float(w[0]))
    values = (v * np.maximum(w, 0.0)) @ v.T
    return KernelMatrix((values + values.T) / 2.0), clipped
