"""Frechet derivatives of matrix functions and double operator integrals.

In the eigenbases ``A = U diag(a) U*`` and ``B = W diag(b) W*`` the double
operator integral with kernel ``k`` acts on ``X`` as ``U (K o U* X W) W*``
where ``K_ij = k(a_i, b_j)`` and ``o`` is the entrywise product. With the
divided difference of ``f`` as the kernel and ``A = B = H0`` this is the
Frechet derivative ``Df(H0) . X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionMismatch, PairMismatch
from .functions import FunctionSpec, exponential
from .linalg import (
    OperatorLike,
    SpectralDecomposition,
    apply_function,
    as_operator,
    eigendecompose,
)
from .validation import check_same_dim

__all__ = [
    "DirectionalDerivative",
    "gauss_legendre",
    "poly_matrix",
    "frechet_poly",
    "path_derivative_check",
    "doi_divided_difference",
    "frechet_exp",
    "second_order_remainder_exp",
    "frechet_schwartz",
    "doi_trace",
    "remainder_trace",
]


@dataclass(frozen=True, eq=False)
class DirectionalDerivative:
    matrix: np.ndarray
    method: str
    quadrature_nodes: int = 0


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _require_poly(p: FunctionSpec):
    if not isinstance(p, FunctionSpec) or p.kind != "polynomial":
        raise TypeError("expected a polynomial FunctionSpec")


def poly_matrix(p: FunctionSpec, A: OperatorLike) -> np.ndarray:
    """``p(A)`` by Horner's rule on matrices."""
    _require_poly(p)
    M = np.asarray(as_operator(A).entries)
    out = np.zeros_like(M)
    eye = np.eye(M.shape[0], dtype=M.dtype)
    for c in p.coeffs[::-1]:
        out = out @ M + c * eye
    return out


def frechet_poly(H0: OperatorLike, V: OperatorLike, p: FunctionSpec) -> DirectionalDerivative:
    """``Dp(H0) . V = sum_r c_r sum_{j<r} H0^{r-j-1} V H0^j``.

    Uses ``D_r = H0 D_{r-1} + V H0^{r-1}`` with ``D_1 = V``.
    """
    _require_poly(p)
    H0, V = as_operator(H0), as_operator(V)
    check_same_dim(H0, V, names=("H0", "V"))
    A, X = H0.entries, V.entries
    total = np.zeros_like(A)
    D = X.copy()
    power = np.eye(A.shape[0], dtype=A.dtype)
    for r, c in enumerate(p.coeffs[1:], start=1):
        if r > 1:
            power = power @ A
            D = A @ D + X @ power
        if c != 0:
            total = total + c * D
    return DirectionalDerivative(total, "power_sum")


def path_derivative_check(H0, V, p: FunctionSpec, s: float, h: float) -> dict:
    """Compare ``d/ds p(H0 + sV)`` with a central difference of step ``h``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if not 0.0 < h <= 1e-4:
        raise ValueError("h must lie in (0, 1e-4]")
    H0, V = as_operator(H0), as_operator(V)
    check_same_dim(H0, V, names=("H0", "V"))
    A, X = H0.entries, V.entries
    analytic = frechet_poly(A + s * X, X, p).matrix
    fd = (poly_matrix(p, A + (s + h) * X) - poly_matrix(p, A + (s - h) * X)) / (2 * h)
    return {"analytic": analytic, "finite_diff": fd, "err": float(np.linalg.norm(analytic - fd))}


def doi_divided_difference(
    DA: SpectralDecomposition, DB: SpectralDecomposition, f: FunctionSpec, X
) -> np.ndarray:
    """Double operator integral of ``X`` with the divided-difference kernel of ``f``."""
    X = np.asarray(X)
    if X.shape != (DA.source_dim, DB.source_dim):
        raise DimensionMismatch(f"X has shape {X.shape}, expected {(DA.source_dim, DB.source_dim)}")
    K = f.divided_difference(DA.eigenvalues, DB.eigenvalues)
    Y = DA.frame.conj().T @ X @ DB.frame
    return DA.frame @ (K * Y) @ DB.frame.conj().T


def frechet_exp(
    H0: OperatorLike, V: OperatorLike, t: float, method: str = "doi", nodes: int = 64
) -> DirectionalDerivative:
    """``D(e^{itH0}) . V = it integral_0^1 e^{it a H0} V e^{it (1-a) H0} da``.

    ``method="doi"`` is exact (divided differences in the eigenbasis of H0);
    ``method="duhamel_quadrature"`` applies Gauss-Legendre in ``a`` with
    matrix exponentials from ``scipy.linalg.expm``, independent of the eigenbasis.
    """
    H0, V = as_operator(H0), as_operator(V)
    check_same_dim(H0, V, names=("H0", "V"))
    if method == "doi":
        D = eigendecompose(H0)
        return DirectionalDerivative(doi_divided_difference(D, D, exponential(t), V.entries), "doi")
    if method != "duhamel_quadrature":
        raise ValueError(f"unknown method {method!r}")
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    A, X = H0.entries, V.entries
    alphas, weights = gauss_legendre(nodes)
    total = np.zeros_like(A)
    for a, w in zip(alphas, weights):
        total += w * (scipy.linalg.expm(1j * t * a * A) @ X @ scipy.linalg.expm(1j * t * (1 - a) * A))
    return DirectionalDerivative(1j * t * total, "duhamel_quadrature", nodes)


def _check_pair(H, H0, V):
    H, H0, V = as_operator(H), as_operator(H0), as_operator(V)
    check_same_dim(H, H0, V, names=("H", "H0", "V"))
    gap = np.linalg.norm(H.entries - H0.entries - V.entries)
    if gap > 1e-12 * max(1.0, H.scale, H0.scale):
        raise PairMismatch(f"H - H0 differs from V by {gap:.3g}")
    return H, H0, V


def second_order_remainder_exp(H, H0, V, t: float) -> np.ndarray:
    """``e^{itH} - e^{itH0} - D(e^{itH0}) . V`` by functional calculus."""
    H, H0, V = _check_pair(H, H0, V)
    f = exponential(t)
    return (
        apply_function(eigendecompose(H), f)
        - apply_function(eigendecompose(H0), f)
        - frechet_exp(H0, V, t, "doi").matrix
    )


def frechet_schwartz(H0: OperatorLike, V: OperatorLike, f: FunctionSpec) -> DirectionalDerivative:
    """``Df(H0) . V = integral fhat(t) [D(e^{itH0}) . V] dt`` over the Fourier samples.

    The sample sum is carried out on the kernel in the common eigenbasis of H0,
    which is the same weighted sum of exact exponential derivatives.
    """
    if f.kind != "schwartz":
        raise TypeError("expected a schwartz FunctionSpec")
    H0, V = as_operator(H0), as_operator(V)
    check_same_dim(H0, V, names=("H0", "V"))
    D = eigendecompose(H0)
    return DirectionalDerivative(doi_divided_difference(D, D, f.fourier_view(), V.entries), "doi")


def doi_trace(D0: SpectralDecomposition, f: FunctionSpec, V) -> complex:
    """``Tr[Df(H0) . V] = sum_i f'(mu_i) <u_i, V u_i>``: only the confluent diagonal survives."""
    U = D0.frame
    vdiag = np.einsum("ij,ij->j", U.conj(), np.asarray(V) @ U).real
    return complex(np.dot(f.derivative_values(D0.eigenvalues, 1), vdiag))


def remainder_trace(D: SpectralDecomposition, D0: SpectralDecomposition, f: FunctionSpec, V) -> complex:
    """``Tr{f(H) - f(H0) - Df(H0) . V}`` from the spectra of H and H0."""
    if f.kind == "polynomial":
        # constant and linear parts cancel identically
        c = f.coeffs.copy()
        c[:2] = 0
        if not np.any(c):
            return 0j
        f = FunctionSpec("polynomial", coeffs=c)
    return complex(np.sum(f(D.eigenvalues)) - np.sum(f(D0.eigenvalues))) - doi_trace(D0, f, V)
