"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, HermiticityViolation, NonSquare

HERMITICITY_TOL = 1e-10


def check_square(raw, name: str = "matrix") -> np.ndarray:
    """Return ``raw`` as a 2-D complex128 array, raising NonSquare otherwise."""
    arr = np.asarray(raw)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise NonSquare(f"{name} must have positive dimension")
    arr = arr.astype(np.complex128, copy=True)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def hermiticity_defect(arr: np.ndarray) -> float:
    """Relative Hilbert-Schmidt distance of ``arr`` from its adjoint."""
    scale = max(1.0, float(np.linalg.norm(arr)))
    return float(np.linalg.norm(arr - arr.conj().T)) / scale


def check_hermitian(raw, name: str = "matrix", tol: float = HERMITICITY_TOL):
    """Validate and symmetrize. Returns ``(entries, defect)``."""
    arr = check_square(raw, name)
    defect = hermiticity_defect(arr)
    if defect > tol:
        raise HermiticityViolation(
            f"{name} is not Hermitian: relative defect {defect:.3g} > {tol:.1g}"
        )
    # (a_ij + conj(a_ji)) / 2 is bitwise the conjugate of its mirror entry
    sym = 0.5 * (arr + arr.conj().T)
    return sym, defect


def check_same_dim(*mats, names=None) -> int:
    dims = [np.shape(m)[0] if not hasattr(m, "dim") else m.dim for m in mats]
    if len(set(dims)) != 1:
        label = ", ".join(names) if names else "operands"
        raise DimensionMismatch(f"dimension mismatch between {label}: {dims}")
    return dims[0]
