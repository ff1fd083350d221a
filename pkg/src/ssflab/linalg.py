"""Dense Hermitian operators, their spectral decompositions and functional calculus.

Everything downstream works in the eigenbasis produced here: spectral
families, matrix functions, and the kernels of double operator integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .exceptions import ConvergenceFailure, FunctionEvaluationError
from .validation import check_hermitian, check_square

__all__ = [
    "SelfAdjointOperator",
    "SpectralDecomposition",
    "MatrixNorms",
    "make_self_adjoint",
    "as_operator",
    "eigendecompose",
    "spectral_projector",
    "apply_function",
    "norms_and_trace",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SelfAdjointOperator:
    """A validated Hermitian matrix.

    Attributes
    ----------
    entries : ndarray of complex128, shape (dim, dim)
        Exactly Hermitian (read-only).
    hermiticity_defect : float
        ``||A - A*||_2 / max(1, ||A||_2)`` of the raw input.
    """

    entries: np.ndarray
    hermiticity_defect: float = 0.0

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        """Hilbert-Schmidt norm, the natural size for relative tolerances."""
        return float(np.linalg.norm(self.entries))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __add__(self, other: "SelfAdjointOperator") -> "SelfAdjointOperator":
        return SelfAdjointOperator(_freeze(self.entries + as_operator(other).entries))

    def __sub__(self, other: "SelfAdjointOperator") -> "SelfAdjointOperator":
        return SelfAdjointOperator(_freeze(self.entries - as_operator(other).entries))

    def __mul__(self, c: float) -> "SelfAdjointOperator":
        if np.iscomplexobj(c) and np.imag(c) != 0:
            raise TypeError("only real scalars preserve self-adjointness")
        return SelfAdjointOperator(_freeze(self.entries * float(np.real(c))))

    __rmul__ = __mul__


def make_self_adjoint(raw) -> SelfAdjointOperator:
    """Validate ``raw`` and return its symmetrization ``(raw + raw*) / 2``.

    Raises
    ------
    NonSquare
        If ``raw`` is not a square matrix.
    HermiticityViolation
        If the relative defect exceeds 1e-10.
    """
    entries, defect = check_hermitian(raw, "operator")
    return SelfAdjointOperator(_freeze(entries), defect)


OperatorLike = Union[SelfAdjointOperator, np.ndarray, list]


def as_operator(A: OperatorLike) -> SelfAdjointOperator:
    if isinstance(A, SelfAdjointOperator):
        return A
    return make_self_adjoint(A)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues with an orthonormal eigenvector frame (columns)."""

    eigenvalues: np.ndarray
    frame: np.ndarray
    source_dim: int

    def reconstruct(self) -> np.ndarray:
        return (self.frame * self.eigenvalues) @ self.frame.conj().T

    def to_eigenbasis(self, X: np.ndarray) -> np.ndarray:
        """``U* X U``."""
        return self.frame.conj().T @ X @ self.frame

    def from_eigenbasis(self, Y: np.ndarray) -> np.ndarray:
        """``U Y U*``."""
        return self.frame @ Y @ self.frame.conj().T

    @property
    def spectral_range(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])


def eigendecompose(A: OperatorLike) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    op = as_operator(A)
    try:
        w, U = np.linalg.eigh(op.entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    return SpectralDecomposition(_freeze(w), _freeze(U), op.dim)


def spectral_projector(D: SpectralDecomposition, lam: float) -> np.ndarray:
    """Right-continuous spectral family ``E(lam)``: projector onto eigenvalues <= lam."""
    k = int(np.searchsorted(D.eigenvalues, lam, side="right"))
    U = D.frame[:, :k]
    return U @ U.conj().T


def _evaluate(f, x: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(x), dtype=np.complex128)
    except Exception as exc:
        raise FunctionEvaluationError(f"cannot evaluate function: {exc}") from exc
    if vals.shape != x.shape:
        vals = np.broadcast_to(vals, x.shape).astype(np.complex128)
    if not np.all(np.isfinite(vals)):
        raise FunctionEvaluationError("function is not finite on the spectrum")
    return vals


def apply_function(D: SpectralDecomposition, f: Callable) -> np.ndarray:
    """``f(A) = U diag(f(lambda_i)) U*`` for a FunctionSpec or any vectorized callable."""
    vals = _evaluate(f, D.eigenvalues)
    return (D.frame * vals) @ D.frame.conj().T


class MatrixNorms(NamedTuple):
    trace: complex
    hs_norm: float
    trace_norm: float
    op_norm: float


def norms_and_trace(M) -> MatrixNorms:
    """Trace and the operator, Hilbert-Schmidt and trace norms of a square matrix."""
    arr = check_square(M)
    sv = np.linalg.svd(arr, compute_uv=False)
    return MatrixNorms(
        trace=complex(np.trace(arr)),
        hs_norm=float(np.linalg.norm(arr)),
        trace_norm=float(sv.sum()),
        op_norm=float(sv[0]),
    )


def op_norm(A: OperatorLike) -> float:
    """Operator norm of a Hermitian operator via its spectrum."""
    w = eigendecompose(A).eigenvalues
    return float(max(abs(w[0]), abs(w[-1])))
