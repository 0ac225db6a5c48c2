"""
Confident kernel dictionary learning

Trains a non-negative dictionary A (atoms live in feature space as Phi(Y)A)
and non-negative sparse codes X by alternating two convex sub-problems:

- codes:      each column x_i solves a non-negative QP with a discriminant
              linear term penalizing contributions from other classes
- dictionary: columns a_i are updated one at a time against the residual
              operator E_i built from the freshest columns, then rescaled to
              unit kernel norm

A ridge beta, computed once from the smallest eigenvalue of
V = K + alpha * H^T (1 - I) H, keeps every quadratic term PSD.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from cksc import nqp
from cksc.errors import (
    ContractError,
    DeadAtomSignal,
    DimensionError,
    DomainError,
    IntegrityError,
    NumericError,
    SchemaError,
)
from cksc.kernelcore import KernelMatrix
from cksc.nqp import QuadProgram

logger = logging.getLogger(__name__)

BETA_EPSILON = 1e-10
NORM_FLOOR = 1e-12
UNIT_NORM_TOL = 1e-8
MODEL_VERSION = "1"


@dataclass(frozen=True)
class LabelMatrix:
    """p x N one-hot class indicator H; row s flags membership in class s."""

    values: np.ndarray
    classes: Tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError(f"Label matrix must be 2-D, got shape {values.shape}")
        if values.shape[0] != len(self.classes):
            raise DimensionError(
                f"Label matrix has {values.shape[0]} rows for {len(self.classes)} classes"
            )
        if not np.all((values == 0.0) | (values == 1.0)) or not np.all(values.sum(axis=0) == 1.0):
            raise ContractError("Every label column must be one-hot")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))

    @classmethod
    def from_labels(cls, labels: Sequence[Any]) -> "LabelMatrix":
        """Build from per-sample class names; classes are sorted."""
        names = [str(label) for label in labels]
        classes = sorted(set(names))
        lookup = {name: i for i, name in enumerate(classes)}
        return cls.from_indices([lookup[n] for n in names], classes)

    @classmethod
    def from_indices(cls, indices: Sequence[int], classes: Sequence[str]) -> "LabelMatrix":
        idx = np.asarray(indices, dtype=int)
        p = len(classes)
        if idx.size and (idx.min() < 0 or idx.max() >= p):
            raise DomainError(f"Class index outside [0, {p})")
        values = np.zeros((p, idx.size))
        values[idx, np.arange(idx.size)] = 1.0
        return cls(values, tuple(classes))

    @property
    def p(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    @property
    def indices(self) -> np.ndarray:
        return np.argmax(self.values, axis=0)

    def subset(self, index: Sequence[int]) -> "LabelMatrix":
        return LabelMatrix(self.values[:, np.asarray(index, dtype=int)], self.classes)

    def discriminant(self) -> np.ndarray:
        """H^T (1 - I) H: 1 where samples i and j belong to different classes."""
        off = np.ones((self.p, self.p)) - np.eye(self.p)
        return self.values.T @ off @ self.values


@dataclass(frozen=True)
class Hyperparams:
    """Training parameters.

    `alpha` weights the discriminant terms. `sparsity` is T, the cap on
    non-zeros per code and per atom. `atoms` overrides the default dictionary size p * T.
    """

    alpha: float = 0.1
    sparsity: int = 4
    atoms: Optional[int] = None
    max_outer: int = 50
    rel_tol: float = 1e-4
    seed: int = 0
    nqp_tol: float = nqp.DEFAULT_TOL
    max_inner: int = nqp.DEFAULT_MAX_INNER

    def __post_init__(self) -> None:
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.sparsity < 1:
            raise DomainError(f"sparsity must be >= 1, got {self.sparsity}")
        if self.atoms is not None and self.atoms < 1:
            raise DomainError(f"atoms must be >= 1, got {self.atoms}")
        if self.max_outer < 1:
            raise DomainError(f"max_outer must be >= 1, got {self.max_outer}")
        if not self.rel_tol > 0 or not self.nqp_tol > 0:
            raise DomainError("Tolerances must be positive")
        if self.max_inner < 1:
            raise DomainError(f"max_inner must be >= 1, got {self.max_inner}")

    def dictionary_size(self, p: int) -> int:
        return int(self.atoms) if self.atoms is not None else p * self.sparsity

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "sparsity": self.sparsity,
            "atoms": self.atoms,
            "max_outer": self.max_outer,
            "rel_tol": self.rel_tol,
            "seed": self.seed,
            "nqp_tol": self.nqp_tol,
            "max_inner": self.max_inner,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Hyperparams":
        if not isinstance(data, dict):
            raise SchemaError("hyper", "expected an object")
        kwargs: Dict[str, Any] = {}
        for name, kind in (("alpha", float), ("sparsity", int), ("max_outer", int),
                           ("rel_tol", float), ("seed", int), ("nqp_tol", float),
                           ("max_inner", int)):
            if name not in data:
                raise SchemaError(f"hyper.{name}", "missing")
            value = data[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"hyper.{name}", "expected a number")
            if kind is int and value != int(value):
                raise SchemaError(f"hyper.{name}", "expected an integer")
            kwargs[name] = kind(value)
        atoms = data.get("atoms")
        if atoms is not None and (isinstance(atoms, bool) or not isinstance(atoms, int)):
            raise SchemaError("hyper.atoms", "expected an integer or null")
        try:
            return cls(atoms=atoms, **kwargs)
        except DomainError as e:
            raise SchemaError("hyper", str(e)) from e


@dataclass(frozen=True)
class Dictionary:
    """N x k non-negative coefficient matrix A."""

    values: np.ndarray

    @property
    def k(self) -> int:
        return int(self.values.shape[1])

    def kernel_norms(self, kernel: np.ndarray) -> np.ndarray:
        """a_i^T K a_i per column."""
        return np.sum(self.values * (kernel @ self.values), axis=0)

    def check(self, kernel: np.ndarray, sparsity: int, tol: float = UNIT_NORM_TOL) -> None:
        """Raise ContractError unless A >= 0, ||a_i||_0 <= T, live atoms unit-norm."""
        A = self.values
        if np.any(A < 0):
            raise ContractError("Dictionary has negative entries")
        counts = np.count_nonzero(A, axis=0)
        if np.any(counts > sparsity):
            raise ContractError(f"Atom cardinality {int(counts.max())} exceeds T={sparsity}")
        norms = self.kernel_norms(kernel)
        live = counts > 0
        if np.any(np.abs(norms[live] - 1.0) > tol):
            worst = float(np.max(np.abs(norms[live] - 1.0)))
            raise ContractError(f"Atom kernel norm off by {worst:.3g}")


@dataclass(frozen=True)
class SparseCodes:
    """k x N non-negative code matrix X."""

    values: np.ndarray

    def check(self, sparsity: int) -> None:
        X = self.values
        if np.any(X < 0):
            raise ContractError("Codes have negative entries")
        counts = np.count_nonzero(X, axis=0)
        if counts.size and np.any(counts > sparsity):
            raise ContractError(f"Code cardinality {int(counts.max())} exceeds T={sparsity}")


@dataclass(frozen=True)
class ObjectiveTerms:
    reconstruction: float
    ridge: float
    discriminant: float

    @property
    def total(self) -> float:
        return self.reconstruction + self.ridge + self.discriminant


KernelLike = Union[KernelMatrix, np.ndarray]


def _kernel_array(kernel: KernelLike) -> np.ndarray:
    if isinstance(kernel, KernelMatrix):
        return kernel.values
    return np.asarray(kernel, dtype=np.float64)


def _min_eigenvalue(matrix: np.ndarray) -> float:
    try:
        return float(linalg.eigh(matrix, eigvals_only=True, subset_by_index=[0, 0])[0])
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"Eigensolver failed: {e}") from e


def compute_beta(kernel: KernelLike, labels: LabelMatrix, alpha: float) -> float:
    """Ridge that makes V + beta*I and K + beta*I positive semi-definite.

    V = K + alpha * H^T (1 - I) H. Both the code and dictionary sub-problems
    use K + beta*I while recall uses V + beta*I, so beta covers the smaller
    of the two minimum eigenvalues.
    """
    K = _kernel_array(kernel)
    if labels.n != K.shape[0]:
        raise DimensionError(f"{labels.n} labels for a {K.shape[0]}x{K.shape[0]} kernel")
    if not np.all(np.isfinite(K)):
        raise NumericError("Kernel contains non-finite values")
    V = K + alpha * labels.discriminant()
    lam = min(_min_eigenvalue(V), _min_eigenvalue(K))
    beta = max(0.0, -lam) + BETA_EPSILON
    logger.debug("beta=%.6g (lambda_min=%.6g)", beta, lam)
    return beta


def _check_shapes(K: np.ndarray, A: np.ndarray, labels: Optional[LabelMatrix] = None,
                  X: Optional[np.ndarray] = None) -> None:
    N = K.shape[0]
    if A.ndim != 2 or A.shape[0] != N:
        raise DimensionError(f"Dictionary shape {A.shape} does not match kernel size {N}")
    if labels is not None and labels.n != N:
        raise DimensionError(f"{labels.n} labels for kernel size {N}")
    if X is not None and X.shape != (A.shape[1], N):
        raise DimensionError(f"Codes shape {X.shape}, expected {(A.shape[1], N)}")


def code_gram(kernel: KernelLike, dictionary: np.ndarray, beta: float) -> np.ndarray:
    """A^T (K + beta*I) A, symmetrized."""
    K = _kernel_array(kernel)
    A = np.asarray(dictionary, dtype=np.float64)
    Q = A.T @ K @ A + beta * (A.T @ A)
    return (Q + Q.T) / 2.0


def build_x_subproblem(
    kernel: KernelLike,
    dictionary: np.ndarray,
    labels: LabelMatrix,
    h_i: np.ndarray,
    k_i: np.ndarray,
    alpha: float,
    beta: float,
    sparsity: int,
    gram: Optional[np.ndarray] = None,
) -> QuadProgram:
    """QP for one code column x_i with A fixed.

    Q = A^T (K + beta*I) A
    b = alpha * (1 - h_i)^T H A - 2 K(y_i, Y) A
    """
    K = _kernel_array(kernel)
    A = np.asarray(dictionary, dtype=np.float64)
    _check_shapes(K, A, labels)
    h = np.asarray(h_i, dtype=np.float64).reshape(-1)
    row = np.asarray(k_i, dtype=np.float64).reshape(-1)
    if h.shape[0] != labels.p or row.shape[0] != K.shape[0]:
        raise DimensionError("Label column or kernel row has the wrong length")
    Q = code_gram(K, A, beta) if gram is None else gram
    b = alpha * (((1.0 - h) @ labels.values) @ A) - 2.0 * (row @ A)
    return QuadProgram(Q, b, min(sparsity, A.shape[1]))


def residual_operator(dictionary: np.ndarray, codes: np.ndarray, i: int) -> np.ndarray:
    """E_i = I - sum_{j != i} a_j x^j."""
    A = np.asarray(dictionary, dtype=np.float64)
    X = np.asarray(codes, dtype=np.float64)
    if X.shape[0] != A.shape[1]:
        raise DimensionError(f"Dictionary has {A.shape[1]} atoms but codes have {X.shape[0]} rows")
    N = A.shape[0]
    return np.eye(N) - A @ X + np.outer(A[:, i], X[i])


def build_a_subproblem(
    kernel: KernelLike,
    labels: LabelMatrix,
    codes: np.ndarray,
    residual: np.ndarray,
    x_row_i: np.ndarray,
    alpha: float,
    beta: float,
    sparsity: int,
    atom: int = -1,
    discriminant: Optional[np.ndarray] = None,
) -> QuadProgram:
    """QP for one dictionary column a_i with every other column and X fixed.

    Expanding the training objective in a_i gives
    Q = ||x^i||^2 (K + beta*I)
    b = x^i [alpha (1 - H^T) H + 2 beta (I - E_i^T) - 2 E_i^T K]

    Raises:
        DeadAtomSignal: when x^i is all zero (the atom is unused).
    """
    K = _kernel_array(kernel)
    N = K.shape[0]
    X = np.asarray(codes, dtype=np.float64)
    E = np.asarray(residual, dtype=np.float64)
    xi = np.asarray(x_row_i, dtype=np.float64).reshape(-1)
    if E.shape != (N, N) or xi.shape[0] != N or X.shape[1] != N or labels.n != N:
        raise DimensionError("Residual operator, code row or labels do not match the kernel")
    weight = float(xi @ xi)
    if weight == 0.0:
        raise DeadAtomSignal(atom)

    if discriminant is None:
        discriminant = (np.ones((N, labels.p)) - labels.values.T) @ labels.values
    # v^T = x^i E_i^T
    v = E @ xi
    Q = weight * (K + beta * np.eye(N))
    b = alpha * (xi @ discriminant) + 2.0 * beta * (xi - v) - 2.0 * (K @ v)
    return QuadProgram((Q + Q.T) / 2.0, b, min(sparsity, N))


def objective_terms(
    kernel: KernelLike,
    labels: LabelMatrix,
    dictionary: np.ndarray,
    codes: np.ndarray,
    alpha: float,
    beta: float,
) -> ObjectiveTerms:
    K = _kernel_array(kernel)
    A = np.asarray(dictionary, dtype=np.float64)
    X = np.asarray(codes, dtype=np.float64)
    _check_shapes(K, A, labels, X)
    S = A @ X
    reconstruction = float(np.trace(K) + np.sum(S * (K @ S)) - 2.0 * np.einsum("ij,ji->", K, S))
    ridge = float(beta * np.sum(S * S))
    mixing = (np.ones((labels.n, labels.p)) - labels.values.T) @ labels.values
    discriminant = float(alpha * np.einsum("ij,ji->", mixing, S))
    return ObjectiveTerms(reconstruction, ridge, discriminant)


def objective(
    kernel: KernelLike,
    labels: LabelMatrix,
    dictionary: np.ndarray,
    codes: np.ndarray,
    alpha: float,
    beta: float,
) -> float:
    """Tr(K) + Tr(X^T A^T K A X) - 2 Tr(K A X) + beta ||AX||^2 + alpha Tr((1 - H^T) H A X)."""
    return objective_terms(kernel, labels, dictionary, codes, alpha, beta).total


def canonical_members(kernel: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Members ordered by their sorted kernel rows, a key that ignores sample position.

    Equal keys mean identical samples, so ties cannot change a seed atom.
    """
    keys = np.sort(kernel[members], axis=1)
    return members[np.lexsort(keys.T[::-1])]


def seed_atom(
    kernel: np.ndarray,
    labels: LabelMatrix,
    class_index: int,
    sparsity: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Random convex combination of up to T samples of one class, unit kernel norm."""
    members = np.flatnonzero(labels.indices == class_index)
    if members.size == 0:
        raise DomainError(f"Class {labels.classes[class_index]} has no samples")
    members = canonical_members(kernel, members)
    count = min(sparsity, members.size)
    chosen = rng.choice(members, size=count, replace=False)
    weights = rng.random(count) + 1e-12
    atom = np.zeros(kernel.shape[0])
    atom[chosen] = weights / weights.sum()
    norm2 = float(atom @ kernel @ atom)
    if norm2 <= NORM_FLOOR:
        raise NumericError(f"Seed atom for class {labels.classes[class_index]} has zero kernel norm")
    return atom / math.sqrt(norm2)


def initialize_dictionary(
    kernel: KernelLike,
    labels: LabelMatrix,
    sparsity: int,
    atoms: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Class-pure seeds; atoms are split into contiguous per-class blocks."""
    K = _kernel_array(kernel)
    A = np.zeros((K.shape[0], atoms))
    for j in range(atoms):
        A[:, j] = seed_atom(K, labels, j * labels.p // atoms, sparsity, rng)
    return A


@dataclass
class TrainingState:
    """Mutable state of one training run."""

    kernel: np.ndarray
    labels: LabelMatrix
    A: np.ndarray
    X: np.ndarray
    alpha: float
    beta: float
    sparsity: int
    nqp_tol: float = nqp.DEFAULT_TOL
    max_inner: int = nqp.DEFAULT_MAX_INNER
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    n_jobs: int = 1
    discriminant: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self) -> None:
        if self.discriminant.shape != self.kernel.shape:
            self.discriminant = self.labels.discriminant()

    @classmethod
    def create(cls, kernel: KernelLike, labels: LabelMatrix, hyper: Hyperparams,
               n_jobs: int = 1) -> "TrainingState":
        K = np.array(_kernel_array(kernel))
        if labels.n != K.shape[0]:
            raise DimensionError(f"{labels.n} labels for a {K.shape[0]}x{K.shape[0]} kernel")
        rng = np.random.default_rng(hyper.seed)
        beta = compute_beta(K, labels, hyper.alpha)
        A = initialize_dictionary(K, labels, hyper.sparsity, hyper.dictionary_size(labels.p), rng)
        return cls(
            kernel=K, labels=labels, A=A, X=np.zeros((A.shape[1], K.shape[0])),
            alpha=hyper.alpha, beta=beta, sparsity=hyper.sparsity,
            nqp_tol=hyper.nqp_tol, max_inner=hyper.max_inner, rng=rng, n_jobs=n_jobs,
        )

    def objective_terms(self) -> ObjectiveTerms:
        return objective_terms(self.kernel, self.labels, self.A, self.X, self.alpha, self.beta)

    def objective(self) -> float:
        return self.objective_terms().total

    def check(self) -> None:
        Dictionary(self.A).check(self.kernel, self.sparsity)
        SparseCodes(self.X).check(self.sparsity)


def update_codes(state: TrainingState) -> SparseCodes:
    """Re-solve every code column with A fixed.

    A column keeps its previous value when that value scores better on the
    new sub-problem than the fresh greedy solution.
    """
    K, A = state.kernel, state.A
    gram = code_gram(K, A, state.beta)
    B = state.alpha * (state.discriminant @ A) - 2.0 * (K @ A)
    T = min(state.sparsity, A.shape[1])
    programs = [QuadProgram(gram, B[i], T) for i in range(K.shape[0])]
    solutions = Parallel(n_jobs=state.n_jobs, prefer="threads")(
        delayed(nqp.solve)(p, state.nqp_tol, state.max_inner) for p in programs
    )
    kept = 0
    for i, (p, sol) in enumerate(zip(programs, solutions)):
        if p.value(state.X[:, i]) < sol.objective:
            kept += 1
            continue
        state.X[:, i] = sol.x
    if kept:
        logger.debug("Codes: kept %d incumbent columns", kept)
    return SparseCodes(state.X.copy())


def _classes_by_residual(state: TrainingState) -> np.ndarray:
    """Class indices ordered by their worst per-sample reconstruction residual."""
    K = state.kernel
    S = state.A @ state.X
    residual = np.diag(K) - 2.0 * np.sum(K * S, axis=0) + np.sum(S * (K @ S), axis=0)
    idx = state.labels.indices
    worst = np.array([residual[idx == q].max() for q in range(state.labels.p)])
    return np.argsort(-worst, kind="stable")


def update_dictionary(state: TrainingState) -> Dictionary:
    """Sequential column updates with the freshest columns.

    After each solve the atom is rescaled to unit kernel norm and its code
    row is scaled inversely, leaving A X unchanged. Unused atoms are
    re-seeded from the classes with the worst reconstruction, with their
    code rows cleared.
    """
    K, X, A = state.kernel, state.X, state.A
    N, k = A.shape
    AX = A @ X
    identity = np.eye(N)
    dead: List[int] = []
    for i in range(k):
        xi = X[i].copy()
        old = A[:, i].copy()
        residual = identity - AX + np.outer(old, xi)
        try:
            program = build_a_subproblem(
                K, state.labels, X, residual, xi, state.alpha, state.beta, state.sparsity,
                atom=i, discriminant=state.discriminant,
            )
        except DeadAtomSignal:
            dead.append(i)
            continue
        sol = nqp.solve(program, state.nqp_tol, state.max_inner)
        atom = sol.x if sol.objective <= program.value(old) else old
        norm2 = float(atom @ K @ atom)
        if norm2 <= NORM_FLOOR:
            dead.append(i)
            atom = np.zeros(N)
            X[i] = 0.0
        else:
            scale = math.sqrt(norm2)
            atom = atom / scale
            X[i] *= scale
        A[:, i] = atom
        AX += np.outer(atom, X[i]) - np.outer(old, xi)

    if dead:
        order = _classes_by_residual(state)
        for n, i in enumerate(dead):
            A[:, i] = seed_atom(K, state.labels, int(order[n % len(order)]), state.sparsity, state.rng)
            X[i] = 0.0
        logger.info("Re-seeded %d unused atoms", len(dead))
    return Dictionary(A.copy())


@dataclass(frozen=True)
class TrainedModel:
    """Everything recall needs: dictionary, labels, kernel, beta, hyperparameters."""

    dictionary: Dictionary
    labels: LabelMatrix
    kernel: KernelMatrix
    beta: float
    hyper: Hyperparams
    objective_trace: Tuple[float, ...]
    codes: Optional[SparseCodes] = None
    delta: Optional[float] = None
    config: Dict[str, Any] = field(default_factory=dict)
    iteration_seconds: Tuple[float, ...] = ()

    @property
    def kernel_sha256(self) -> str:
        return self.kernel.sha256()

    def to_dict(self) -> Dict[str, Any]:
        """Serializable form. Timings are left out so reruns are byte-identical."""
        return {
            "version": MODEL_VERSION,
            "config": self.config,
            "classes": list(self.labels.classes),
            "labels": [int(i) for i in self.labels.indices],
            "dictionary": [[float(v) for v in row] for row in self.dictionary.values],
            "beta": self.beta,
            "delta": self.delta,
            "hyper": self.hyper.to_dict(),
            "objective_trace": list(self.objective_trace),
            "kernel_sha256": self.kernel_sha256,
        }

    @classmethod
    def from_dict(cls, data: Any, kernel: KernelMatrix) -> "TrainedModel":
        """Validate a serialized model and bind it to its training kernel.

        Raises:
            SchemaError: a field is missing or malformed (names the field).
            IntegrityError: the kernel is not the one the model was trained on.
        """
        if not isinstance(data, dict):
            raise SchemaError("<root>", "expected an object")
        for name in ("version", "classes", "labels", "dictionary", "beta", "hyper",
                     "objective_trace", "kernel_sha256"):
            if name not in data:
                raise SchemaError(name, "missing")
        if data["version"] != MODEL_VERSION:
            raise SchemaError("version", f"unsupported version {data['version']!r}")

        classes = data["classes"]
        if not isinstance(classes, list) or not classes or not all(isinstance(c, str) for c in classes):
            raise SchemaError("classes", "expected a non-empty list of strings")
        indices = data["labels"]
        if not isinstance(indices, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) and 0 <= i < len(classes) for i in indices):
            raise SchemaError("labels", "expected class indices")

        rows = data["dictionary"]
        try:
            A = np.array(rows, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise SchemaError("dictionary", "expected a numeric matrix") from e
        if A.ndim != 2 or A.shape[0] != len(indices) or not np.all(np.isfinite(A)) or np.any(A < 0):
            raise SchemaError("dictionary", "expected N rows of non-negative finite values")

        beta = data["beta"]
        if isinstance(beta, bool) or not isinstance(beta, (int, float)) or not beta >= 0:
            raise SchemaError("beta", "expected a non-negative number")
        delta = data.get("delta")
        if delta is not None and (isinstance(delta, bool) or not isinstance(delta, (int, float)) or not delta > 0):
            raise SchemaError("delta", "expected a positive number or null")
        trace = data["objective_trace"]
        if not isinstance(trace, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in trace):
            raise SchemaError("objective_trace", "expected a list of numbers")
        if not isinstance(data["kernel_sha256"], str):
            raise SchemaError("kernel_sha256", "expected a string")
        config = data.get("config", {})
        if not isinstance(config, dict):
            raise SchemaError("config", "expected an object")
        hyper = Hyperparams.from_dict(data["hyper"])

        if kernel.n != A.shape[0] or kernel.sha256() != data["kernel_sha256"]:
            raise IntegrityError("Kernel does not match the one the model was trained on")

        return cls(
            dictionary=Dictionary(A),
            labels=LabelMatrix.from_indices(indices, classes),
            kernel=kernel,
            beta=float(beta),
            hyper=hyper,
            objective_trace=tuple(float(v) for v in trace),
            delta=None if delta is None else float(delta),
            config=config,
        )


TrainingCallback = Callable[[str, TrainingState], None]


def train(
    kernel: KernelMatrix,
    labels: LabelMatrix,
    hyper: Hyperparams,
    n_jobs: int = 1,
    callback: Optional[TrainingCallback] = None,
    check_invariants: bool = False,
    delta: Optional[float] = None,
    config: Optional[Dict[str, Any]] = None,
) -> TrainedModel:
    """Alternate code and dictionary updates until the objective settles.

    The trace holds the objective at initialization and after every
    half-step: [J_init, J_codes_1, J_dict_1, J_codes_2, ...]. Training stops
    when |J_t - J_{t-1}| / max(|J_{t-1}|, 1e-12) < rel_tol, comparing
    consecutive full iterations, or after max_outer iterations.

    Args:
        kernel: Training Gram matrix.
        labels: One-hot labels for the kernel's samples.
        hyper: Training parameters.
        n_jobs: Parallel workers for code updates (1 = sequential).
        callback: Called as callback(stage, state) after every half-step,
            with stage "codes" or "dictionary".
        check_invariants: Assert feasibility after every half-step.
        delta: Kernel bandwidth to store with the model for cross-kernels.
        config: Resolved run configuration to echo into the model.
    """
    state = TrainingState.create(kernel, labels, hyper, n_jobs=n_jobs)
    logger.info("Training: N=%d p=%d k=%d T=%d alpha=%g beta=%.6g",
                labels.n, labels.p, state.A.shape[1], hyper.sparsity, hyper.alpha, state.beta)

    trace: List[float] = [state.objective()]
    seconds: List[float] = []
    previous = trace[0]

    def record(stage: str, iteration: int) -> float:
        value = state.objective()
        if not math.isfinite(value):
            raise NumericError(f"Objective became non-finite after {stage} update",
                               {"iteration": iteration, "trace": list(trace)})
        trace.append(value)
        logger.debug("Iteration %d %s: J=%.12g", iteration, stage, value)
        if check_invariants:
            state.check()
        if callback is not None:
            callback(stage, state)
        return value

    for iteration in range(1, hyper.max_outer + 1):
        started = time.perf_counter()
        update_codes(state)
        record("codes", iteration)
        update_dictionary(state)
        current = record("dictionary", iteration)
        seconds.append(time.perf_counter() - started)

        change = abs(current - previous) / max(abs(previous), 1e-12)
        live = int(np.count_nonzero(np.any(state.X > 0, axis=1)))
        logger.info("Iteration %d: J=%.10g rel_change=%.3g live_atoms=%d (%.2fs)",
                    iteration, current, change, live, seconds[-1])
        if change < hyper.rel_tol:
            break
        previous = current

    return TrainedModel(
        dictionary=Dictionary(state.A.copy()),
        labels=labels,
        kernel=kernel,
        beta=state.beta,
        hyper=hyper,
        objective_trace=tuple(trace),
        codes=SparseCodes(state.X.copy()),
        delta=delta,
        config=dict(config or {}),
        iteration_seconds=tuple(seconds),
    )


def with_hyper(model: TrainedModel, **changes: Any) -> TrainedModel:
    """Copy of a model with some hyperparameters replaced (recall-side only)."""
    return replace(model, hyper=replace(model.hyper, **changes))
