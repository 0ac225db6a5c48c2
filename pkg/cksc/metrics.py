"""
Evaluation: accuracy, atom interpretability, cross-validation and sweeps

Cross-validation runs in two modes:
- cv:      R repeats of stratified k-fold
- holdout: R random stratified train/test selections

Every split trains on the sub-kernel of its training indices and predicts
its test indices from the matching kernel rows. Splits are independent
jobs with seeds spawned from the master seed.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import StratifiedKFold, StratifiedShuffleSplit

from cksc import recall
from cksc.errors import DimensionError, DomainError, StratificationError
from cksc.kernelcore import KernelMatrix
from cksc.trainer import Hyperparams, LabelMatrix, train

logger = logging.getLogger(__name__)

MODES = ("cv", "holdout")
SWEEP_PARAMS = ("alpha", "sparsity")


@dataclass(frozen=True)
class Dataset:
    """A precomputed training kernel with its labels."""

    kernel: KernelMatrix
    labels: LabelMatrix
    delta: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kernel.n != self.labels.n:
            raise DimensionError(f"{self.labels.n} labels for a {self.kernel.n}-sample kernel")

    @property
    def n(self) -> int:
        return self.kernel.n


def accuracy(predicted: Sequence[Optional[int]], actual: Sequence[int]) -> float:
    """Percentage of matching labels. None (unclassifiable) never matches."""
    if len(predicted) != len(actual):
        raise DimensionError(f"{len(predicted)} predictions for {len(actual)} labels")
    if not actual:
        raise DomainError("Accuracy of an empty set is undefined")
    matches = sum(1 for p, a in zip(predicted, actual) if p is not None and p == a)
    return 100.0 * matches / len(actual)


def per_class_accuracy(
    predicted: Sequence[Optional[int]],
    actual: Sequence[int],
    p: int,
) -> np.ndarray:
    """Accuracy percentage per class; NaN for classes absent from `actual`."""
    if len(predicted) != len(actual):
        raise DimensionError(f"{len(predicted)} predictions for {len(actual)} labels")
    result = np.full(p, np.nan)
    for q in range(p):
        idx = [i for i, a in enumerate(actual) if a == q]
        if idx:
            result[q] = accuracy([predicted[i] for i in idx], [q] * len(idx))
    return result


def interpretability(dictionary: np.ndarray, labels: LabelMatrix) -> np.ndarray:
    """IP_i = max_j rho_j^T a_i / 1^T H a_i per atom; NaN where the mass is zero."""
    A = np.asarray(dictionary, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != labels.n:
        raise DimensionError(f"Dictionary shape {A.shape} does not match {labels.n} labels")
    per_class = labels.values @ A
    mass = per_class.sum(axis=0)
    ip = np.full(A.shape[1], np.nan)
    defined = mass > 0
    ip[defined] = per_class[:, defined].max(axis=0) / mass[defined]
    return ip


def mean_interpretability(ip: np.ndarray) -> Tuple[float, int]:
    """(mean over defined atoms, number of undefined atoms)."""
    values = np.asarray(ip, dtype=np.float64)
    defined = values[~np.isnan(values)]
    undefined = int(values.size - defined.size)
    return (float(defined.mean()) if defined.size else math.nan), undefined


@dataclass(frozen=True)
class SplitResult:
    accuracy: float
    per_class: np.ndarray
    ip: np.ndarray
    unclassifiable: int
    objective_trace: Tuple[float, ...]


@dataclass(frozen=True)
class EvalReport:
    """Aggregate over all splits. Standard deviations are population-style."""

    accuracy_percent: float
    std_accuracy: float
    split_accuracies: Tuple[float, ...]
    per_class_accuracy: np.ndarray
    mean_ip: float
    per_atom_ip: np.ndarray
    undefined_ip_count: int
    unclassifiable_count: int
    objective_trace: Tuple[float, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        def clean(values: Sequence[float]) -> List[Optional[float]]:
            return [None if math.isnan(v) else float(v) for v in values]

        return {
            "accuracy_percent": self.accuracy_percent,
            "std_accuracy": self.std_accuracy,
            "split_accuracies": list(self.split_accuracies),
            "per_class_accuracy": clean(self.per_class_accuracy),
            "mean_ip": None if math.isnan(self.mean_ip) else self.mean_ip,
            "per_atom_ip": clean(self.per_atom_ip),
            "undefined_ip_count": self.undefined_ip_count,
            "unclassifiable_count": self.unclassifiable_count,
            "objective_trace": list(self.objective_trace),
            "metadata": self.metadata,
        }


def _split_seeds(seed: int, count: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def make_splits(
    labels: LabelMatrix,
    folds: int = 5,
    seed: int = 0,
    repeats: int = 1,
    mode: str = "cv",
    test_fraction: float = 0.3,
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Stratified (train, test) index pairs, deterministic in `seed`."""
    if mode not in MODES:
        raise DomainError(f"Unknown evaluation mode '{mode}'")
    if repeats < 1:
        raise DomainError(f"repeats must be >= 1, got {repeats}")
    y = labels.indices
    counts = np.bincount(y, minlength=labels.p)
    placeholder = np.zeros((labels.n, 1))

    if mode == "cv":
        if folds < 2:
            raise DomainError(f"folds must be >= 2, got {folds}")
        small = [labels.classes[q] for q in range(labels.p) if counts[q] < folds]
        if small:
            raise StratificationError(
                f"Classes {small} have fewer than {folds} samples"
            )
        splits: List[Tuple[np.ndarray, np.ndarray]] = []
        for repeat_seed in _split_seeds(seed, repeats):
            splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=repeat_seed % 2**32)
            splits.extend(splitter.split(placeholder, y))
        return splits

    if not 0 < test_fraction < 1:
        raise DomainError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    try:
        shuffler = StratifiedShuffleSplit(
            n_splits=repeats, test_size=test_fraction, random_state=seed % 2**32
        )
        return list(shuffler.split(placeholder, y))
    except ValueError as e:
        raise StratificationError(str(e)) from e


def _run_split(
    dataset: Dataset,
    hyper: Hyperparams,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
) -> SplitResult:
    kernel = dataset.kernel.submatrix(train_idx)
    labels = dataset.labels.subset(train_idx)
    model = train(kernel, labels, hyper)
    rows = dataset.kernel.cross_rows(test_idx, train_idx)
    self_kernel = np.diag(dataset.kernel.values)[test_idx]
    predictions = recall.predict_batch(model, rows, self_kernel=self_kernel)
    predicted = [p.class_id for p in predictions]
    actual = [int(i) for i in dataset.labels.indices[test_idx]]
    return SplitResult(
        accuracy=accuracy(predicted, actual),
        per_class=per_class_accuracy(predicted, actual, dataset.labels.p),
        ip=interpretability(model.dictionary.values, labels),
        unclassifiable=sum(p.unclassifiable for p in predictions),
        objective_trace=model.objective_trace,
    )


def crossvalidate(
    dataset: Dataset,
    hyper: Hyperparams,
    folds: int = 5,
    seed: int = 0,
    repeats: int = 1,
    mode: str = "cv",
    test_fraction: float = 0.3,
    n_jobs: int = 1,
) -> EvalReport:
    """Train and test on every split, then aggregate.

    Each split trains with its own seed spawned from `seed`, so results do
    not depend on `n_jobs`.
    """
    splits = make_splits(dataset.labels, folds, seed, repeats, mode, test_fraction)
    seeds = _split_seeds(seed + 1, len(splits))
    logger.info("Evaluating %d splits (%s mode, n_jobs=%d)", len(splits), mode, n_jobs)
    results: List[SplitResult] = Parallel(n_jobs=n_jobs)(
        delayed(_run_split)(dataset, replace(hyper, seed=s), tr, te)
        for (tr, te), s in zip(splits, seeds)
    )

    accuracies = np.array([r.accuracy for r in results])
    ips = [mean_interpretability(r.ip) for r in results]
    defined_ips = [m for m, _ in ips if not math.isnan(m)]
    per_class = np.vstack([r.per_class for r in results])
    with np.errstate(all="ignore"):
        class_means = np.array([
            np.mean(col[~np.isnan(col)]) if np.any(~np.isnan(col)) else np.nan
            for col in per_class.T
        ])
    report = EvalReport(
        accuracy_percent=float(accuracies.mean()),
        std_accuracy=float(accuracies.std()),
        split_accuracies=tuple(float(a) for a in accuracies),
        per_class_accuracy=class_means,
        mean_ip=float(np.mean(defined_ips)) if defined_ips else math.nan,
        per_atom_ip=results[0].ip,
        undefined_ip_count=sum(u for _, u in ips),
        unclassifiable_count=sum(r.unclassifiable for r in results),
        objective_trace=results[0].objective_trace,
        metadata={
            "mode": mode,
            "folds": folds if mode == "cv" else None,
            "repeats": repeats,
            "test_fraction": test_fraction if mode == "holdout" else None,
            "seed": seed,
            "splits": len(splits),
            "std": f"population std over {len(splits)} splits",
            "objective_trace": "first split",
            "per_atom_ip": "first split",
        },
    )
    logger.info("Accuracy %.2f +/- %.2f, mean IP %.3f",
                report.accuracy_percent, report.std_accuracy, report.mean_ip)
    return report


@dataclass(frozen=True)
class SweepRow:
    param_name: str
    param_value: float
    mean_accuracy: float
    std_accuracy: float


def sensitivity_sweep(
    dataset: Dataset,
    param: str,
    values: Sequence[float],
    hyper: Hyperparams,
    folds: int = 5,
    seed: int = 0,
    repeats: int = 1,
    mode: str = "cv",
    test_fraction: float = 0.3,
    n_jobs: int = 1,
) -> List[SweepRow]:
    """Vary one parameter with the others fixed; same splits at every grid point.

    Sweeping `sparsity` resizes the dictionary to p * T unless `atoms` is set.
    """
    if param not in SWEEP_PARAMS:
        raise DomainError(f"Cannot sweep '{param}'; choose from {', '.join(SWEEP_PARAMS)}")
    if not values:
        raise DomainError("Sweep grid is empty")
    rows: List[SweepRow] = []
    for value in values:
        if param == "alpha":
            point = replace(hyper, alpha=float(value))
        else:
            if float(value) != int(value):
                raise DomainError(f"sparsity must be an integer, got {value}")
            point = replace(hyper, sparsity=int(value))
        report = crossvalidate(dataset, point, folds, seed, repeats, mode, test_fraction, n_jobs)
        rows.append(SweepRow(param, float(value), report.accuracy_percent, report.std_accuracy))
        logger.info("Sweep %s=%g: %.2f +/- %.2f", param, value,
                    report.accuracy_percent, report.std_accuracy)
    return rows


@dataclass(frozen=True)
class ScalingReport:
    n_small: int
    n_large: int
    seconds_small: float
    seconds_large: float

    @property
    def factor(self) -> float:
        return self.seconds_large / self.seconds_small if self.seconds_small > 0 else math.inf


def iteration_scaling(small: Dataset, large: Dataset, hyper: Hyperparams) -> ScalingReport:
    """Mean seconds per outer iteration on two dataset sizes.

    Informational: per-iteration cost is dominated by an O(N^3) term, so
    doubling N should multiply the time by roughly 4 to 12.
    """
    timings = []
    for dataset in (small, large):
        model = train(dataset.kernel, dataset.labels, hyper)
        timings.append(float(np.mean(model.iteration_seconds)))
    report = ScalingReport(small.n, large.n, timings[0], timings[1])
    logger.info("Iteration time N=%d: %.3fs, N=%d: %.3fs, factor %.2f",
                report.n_small, report.seconds_small, report.n_large,
                report.seconds_large, report.factor)
    return report
