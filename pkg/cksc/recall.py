"""
Recall: sparse coding of new points and class assignment

A test point z is coded against the trained dictionary with the
discriminant term kept, using the training-time beta:

    min_x  ||Phi(z) - Phi(Y)Ax||^2 + beta ||Ax||^2 + alpha x^T A^T H^T (1 - I) H A x

and assigned to the class contributing most to its reconstruction,
argmax_j rho_j^T A x.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from cksc import nqp
from cksc.errors import DimensionError, DomainError, IntegrityError
from cksc.kernelcore import CrossKernel
from cksc.nqp import QuadProgram
from cksc.trainer import TrainedModel

logger = logging.getLogger(__name__)

RowLike = Union[CrossKernel, np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class Prediction:
    """Outcome for one test point.

    `class_id` is None when the code is all zero: nothing contributes to
    the reconstruction, so no class can be named. Such points count as
    errors in accuracy.
    """

    class_id: Optional[int]
    contributions: np.ndarray
    code: np.ndarray
    g_value: float = 0.0
    residual: Optional[float] = None

    @property
    def unclassifiable(self) -> bool:
        return self.class_id is None

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.code))

    def to_record(self, index: int, classes: Sequence[str]) -> Dict[str, Any]:
        return {
            "index": index,
            "class_id": self.class_id,
            "label": None if self.class_id is None else classes[self.class_id],
            "contributions": [float(v) for v in self.contributions],
            "g_value": self.g_value,
            "support_size": self.support_size,
            "residual": self.residual,
            "unclassifiable": self.unclassifiable,
        }


def _row(model: TrainedModel, kz: RowLike) -> np.ndarray:
    if isinstance(kz, CrossKernel):
        if kz.kernel_sha256 is not None and kz.kernel_sha256 != model.kernel_sha256:
            raise IntegrityError("Cross-kernel was built against a different training kernel")
        row = kz.values
    else:
        row = np.asarray(kz, dtype=np.float64).reshape(-1)
    if row.shape[0] != model.kernel.n:
        raise DimensionError(
            f"Cross-kernel has {row.shape[0]} entries, model kernel has {model.kernel.n}"
        )
    return row


def recall_gram(model: TrainedModel) -> np.ndarray:
    """A^T (K + alpha H^T (1 - I) H + beta I) A, shared by every test point."""
    A = model.dictionary.values
    V = model.kernel.values + model.hyper.alpha * model.labels.discriminant()
    Q = A.T @ V @ A + model.beta * (A.T @ A)
    return (Q + Q.T) / 2.0


def build_test_subproblem(
    model: TrainedModel,
    kz: RowLike,
    gram: Optional[np.ndarray] = None,
) -> QuadProgram:
    """QP for one test code. Q is shared; only b = -2 K(z, Y) A depends on z.

    Raises:
        IntegrityError: `kz` carries a hash for a different training kernel.
        DimensionError: `kz` has the wrong length.
    """
    row = _row(model, kz)
    A = model.dictionary.values
    Q = recall_gram(model) if gram is None else gram
    return QuadProgram(Q, -2.0 * (row @ A), min(model.hyper.sparsity, A.shape[1]))


def encode(model: TrainedModel, kz: RowLike, gram: Optional[np.ndarray] = None) -> np.ndarray:
    program = build_test_subproblem(model, kz, gram)
    return nqp.solve(program, model.hyper.nqp_tol, model.hyper.max_inner).x


def _check_code(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    code = np.asarray(x, dtype=np.float64).reshape(-1)
    if code.shape[0] != model.dictionary.k:
        raise DimensionError(f"Code has {code.shape[0]} entries, dictionary has {model.dictionary.k}")
    if np.any(code < 0):
        raise DomainError("Code must be non-negative")
    return code


def contributions(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    """Per-class mass h = H A x."""
    code = _check_code(model, x)
    return model.labels.values @ (model.dictionary.values @ code)


def classify(model: TrainedModel, x: np.ndarray) -> Prediction:
    code = _check_code(model, x)
    h = contributions(model, code)
    class_id = None if not np.any(h > 0) else int(np.argmax(h))
    return Prediction(class_id=class_id, contributions=h, code=code, g_value=g_sum_form(h))


def g_sum_form(h: np.ndarray) -> float:
    """sum_i (sum_{s != i} h_s) h_i. Zero iff at most one class contributes."""
    h = np.asarray(h, dtype=np.float64)
    return float(np.sum((h.sum() - h) * h))


def g_value(model: TrainedModel, x: np.ndarray) -> float:
    return g_sum_form(contributions(model, x))


def g_quadratic_form(model: TrainedModel, x: np.ndarray) -> float:
    """x^T A^T H^T (1 - I) H A x."""
    s = model.dictionary.values @ _check_code(model, x)
    return float(s @ model.labels.discriminant() @ s)


def reconstruction_residual(
    model: TrainedModel,
    kz: RowLike,
    x: np.ndarray,
    kzz: float,
) -> float:
    """||Phi(z) - Phi(Y)Ax||^2 = K(z, z) - 2 K(z, Y) A x + x^T A^T K A x."""
    row = _row(model, kz)
    s = model.dictionary.values @ _check_code(model, x)
    return float(kzz - 2.0 * (row @ s) + s @ model.kernel.values @ s)


def predict(
    model: TrainedModel,
    kz: RowLike,
    gram: Optional[np.ndarray] = None,
    kzz: Optional[float] = None,
) -> Prediction:
    """Code and classify one point. The residual needs K(z, z); without it it is None."""
    row = _row(model, kz)
    code = encode(model, row, gram)
    outcome = classify(model, code)
    return Prediction(
        class_id=outcome.class_id,
        contributions=outcome.contributions,
        code=code,
        g_value=outcome.g_value,
        residual=None if kzz is None else reconstruction_residual(model, row, code, kzz),
    )


def predict_batch(
    model: TrainedModel,
    rows: np.ndarray,
    n_jobs: int = 1,
    kernel_sha256: Optional[str] = None,
    self_kernel: Optional[Sequence[float]] = None,
) -> List[Prediction]:
    """Predict every row of an M x N cross-kernel matrix independently.

    `self_kernel` holds K(z, z) per row; residuals are reported only when it is given.
    """
    if kernel_sha256 is not None and kernel_sha256 != model.kernel_sha256:
        raise IntegrityError("Cross-kernel rows were built against a different training kernel")
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.size == 0:
        return []
    if matrix.ndim != 2 or matrix.shape[1] != model.kernel.n:
        raise DimensionError(
            f"Cross-kernel matrix shape {matrix.shape} does not match {model.kernel.n} training samples"
        )
    diagonal: List[Optional[float]] = [None] * matrix.shape[0]
    if self_kernel is not None:
        values = np.asarray(self_kernel, dtype=np.float64).reshape(-1)
        if values.shape[0] != matrix.shape[0]:
            raise DimensionError(
                f"Self-kernel has {values.shape[0]} entries for {matrix.shape[0]} rows"
            )
        diagonal = [float(v) for v in values]
    gram = recall_gram(model)
    predictions: List[Prediction] = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(predict)(model, row, gram, kzz) for row, kzz in zip(matrix, diagonal)
    )
    unclassifiable = sum(p.unclassifiable for p in predictions)
    logger.info("Predicted %d points (%d unclassifiable)", len(predictions), unclassifiable)
    return predictions
