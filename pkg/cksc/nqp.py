"""
Non-negative quadratic pursuit

Solves
    min_x  x^T Q x + b^T x   s.t.  x >= 0,  ||x||_0 <= T
by greedy forward selection followed by cyclic non-negative coordinate
descent restricted to the selected support.

Selection picks the index with the largest guaranteed single-coordinate
decrease, i.e. the most negative g_j / sqrt(Q_jj). On unit-diagonal
problems this is the most negative gradient entry; on diagonal problems it
makes the greedy result exactly optimal.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from cksc.errors import ContractError, NumericError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_INNER = 100
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class QuadProgram:
    """The (Q, b, T) triple of a cardinality-constrained non-negative QP."""

    Q: np.ndarray
    b: np.ndarray
    T: int

    def __post_init__(self) -> None:
        Q = np.asarray(self.Q, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ContractError(f"Q must be square, got shape {Q.shape}")
        if Q.shape[0] != b.shape[0]:
            raise ContractError(f"Q is {Q.shape[0]}x{Q.shape[0]} but b has {b.shape[0]} entries")
        if Q.size and np.max(np.abs(Q - Q.T)) > SYMMETRY_TOL:
            raise ContractError("Q is not symmetric")
        if not 1 <= int(self.T) <= Q.shape[0]:
            raise ContractError(f"Sparsity cap T={self.T} outside [1, {Q.shape[0]}]")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "T", int(self.T))

    @property
    def m(self) -> int:
        return int(self.b.shape[0])

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(x @ self.Q @ x + self.b @ x)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QuadProgram":
        return cls(Q=np.array(data["Q"], dtype=np.float64),
                   b=np.array(data["b"], dtype=np.float64),
                   T=int(data["T"]))


@dataclass(frozen=True)
class NqpStep:
    """One greedy selection: chosen index and objective after the inner solve."""

    index: int
    objective: float


@dataclass(frozen=True)
class NqpSolution:
    x: np.ndarray
    support: Tuple[int, ...]
    objective: float
    steps: Tuple[NqpStep, ...] = ()
    skipped: Tuple[int, ...] = field(default=())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": [float(v) for v in self.x],
            "support": list(self.support),
            "objective": self.objective,
            "steps": [{"index": s.index, "objective": s.objective} for s in self.steps],
            "skipped": list(self.skipped),
        }


def coordinate_min(
    Q: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    j: int,
    grad_j: Optional[float] = None,
) -> float:
    """Exact minimizer of the objective along coordinate j, clamped at zero.

    `grad_j` is the j-th entry of 2Qx + b when the caller already tracks it.
    Coordinates with Q_jj <= 0 have no finite minimizer; they are left
    unchanged and a warning is logged.
    """
    qjj = float(Q[j, j])
    if qjj <= 0.0:
        logger.warning("Skipping coordinate %d with non-positive curvature Q_jj=%.3g", j, qjj)
        return float(x[j])
    g_j = 2.0 * float(Q[j] @ x) + float(b[j]) if grad_j is None else float(grad_j)
    return max(0.0, float(x[j]) - g_j / (2.0 * qjj))


def _support_value(p: QuadProgram, x: np.ndarray, support: List[int]) -> float:
    if not support:
        return 0.0
    idx = np.asarray(support)
    xs = x[idx]
    return float(xs @ p.Q[np.ix_(idx, idx)] @ xs + p.b[idx] @ xs)


def solve(
    p: QuadProgram,
    tol: float = DEFAULT_TOL,
    max_inner: int = DEFAULT_MAX_INNER,
) -> NqpSolution:
    """Greedy pursuit with restricted non-negative coordinate descent.

    Args:
        p: The problem.
        tol: Gradient screen for new atoms and inner-loop improvement threshold.
        max_inner: Maximum coordinate-descent passes after each selection.

    Returns:
        NqpSolution with the per-selection objective trace.
    """
    m = p.m
    Q, b = p.Q, p.b
    if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(b))):
        raise NumericError("NQP problem contains non-finite values", {"step": 0})
    diag = np.diag(Q).copy()
    usable = diag > 0.0
    skipped = tuple(int(j) for j in np.flatnonzero(~usable))
    if skipped:
        logger.warning("NQP: %d coordinates with Q_jj <= 0 excluded", len(skipped))

    x = np.zeros(m)
    grad = b.copy()
    support: List[int] = []
    in_support = np.zeros(m, dtype=bool)
    steps: List[NqpStep] = []
    objective = 0.0

    # pruning can free slots, so bound the total number of selections
    for _ in range(m + p.T):
        if len(support) >= p.T:
            break
        candidates = usable & ~in_support & (grad < -tol)
        if not candidates.any():
            break
        score = np.full(m, np.inf)
        score[candidates] = grad[candidates] / np.sqrt(diag[candidates])
        j = int(np.argmin(score))
        support.append(j)
        in_support[j] = True

        for sweep in range(max_inner):
            before = objective
            for s in support:
                new = coordinate_min(Q, b, x, s, grad[s])
                delta = new - x[s]
                if delta != 0.0:
                    x[s] = new
                    grad += (2.0 * delta) * Q[:, s]
            dropped = [s for s in support if x[s] <= 0.0]
            for s in dropped:
                x[s] = 0.0
                in_support[s] = False
            support = [s for s in support if x[s] > 0.0]
            objective = _support_value(p, x, support)
            if not np.isfinite(objective) or not np.all(np.isfinite(grad)):
                raise NumericError(
                    "NQP produced non-finite values",
                    {"step": len(steps), "index": j, "pass": sweep},
                )
            if before - objective < tol:
                break
        steps.append(NqpStep(j, objective))
        logger.debug("NQP step %d: index=%d objective=%.12g |S|=%d",
                     len(steps), j, objective, len(support))

    return NqpSolution(
        x=x,
        support=tuple(sorted(support)),
        objective=p.value(x),
        steps=tuple(steps),
        skipped=skipped,
    )
