"""scikit-learn style wrappers around the functional API.

``fit`` takes the pair ``(H0, V)`` in place of ``(X, y)``; fitted state lives
in trailing-underscore attributes and hyperparameters come back from
``get_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .functions import FunctionSpec
from .pcf import integrate_pcf
from .shift import (
    PerturbationPair,
    koplienko_eta,
    krein_xi,
    verify_exponential_formula,
    verify_polynomial_formula,
    verify_schwartz_formula,
)
from .wvn import compress, wvn_pair_projection

__all__ = ["KoplienkoShift", "WeylVonNeumannProjector"]


class KoplienkoShift(BaseEstimator):
    """Second-order (Koplienko) and first-order (Krein) shift functions of a pair.

    Parameters
    ----------
    s_nodes : int, default 32
        Gauss-Legendre nodes in the path parameter ``s``.
    compute_xi : bool, default True
        Also compute the eigenvalue-counting shift ``xi_``.

    Attributes
    ----------
    pair_ : PerturbationPair
    eta_ : PiecewiseConstantFunction
    xi_ : PiecewiseConstantFunction or None
    """

    def __init__(self, s_nodes: int = 32, compute_xi: bool = True):
        self.s_nodes = s_nodes
        self.compute_xi = compute_xi

    def fit(self, H0, V=None):
        if V is None:
            raise ValueError("fit needs both H0 and V")
        if int(self.s_nodes) < 1:
            raise ValueError("s_nodes must be >= 1")
        self.pair_ = PerturbationPair.from_operators(H0, V)
        self.eta_ = koplienko_eta(self.pair_, int(self.s_nodes))
        self.xi_ = krein_xi(self.pair_) if self.compute_xi else None
        return self

    def integrate(self, f: FunctionSpec, order: int = 2) -> complex:
        """``integral f^(order) eta``; the right side of the trace formula for ``order=2``."""
        check_is_fitted(self, "eta_")
        return integrate_pcf(self.eta_, f.derivative(order) if order else f)

    def verify(self, f):
        """Verification report for a polynomial, a Fourier-represented ``f`` or a real ``t`` (``e^{itx}``)."""
        check_is_fitted(self, "eta_")
        if isinstance(f, (int, float)):
            return verify_exponential_formula(self.pair_, float(f), self.s_nodes, eta=self.eta_)
        if f.kind == "polynomial":
            return verify_polynomial_formula(self.pair_, f, self.s_nodes, eta=self.eta_)
        if f.kind == "exponential":
            return verify_exponential_formula(self.pair_, f.t, self.s_nodes, eta=self.eta_)
        if f.kind == "schwartz":
            return verify_schwartz_formula(self.pair_, f, self.s_nodes, eta=self.eta_)
        raise TypeError(f"no trace formula check for kind {f.kind!r}")


class WeylVonNeumannProjector(TransformerMixin, BaseEstimator):
    """Finite-rank projection that almost reduces ``H0`` and nearly contains ``V``.

    Parameters
    ----------
    epsilon : float, default 1e-2
    T : float, default 10.0
        Time horizon for the ``e^{itH0}`` estimate.
    n_slices : int or None
        Override of the guaranteed slice count.
    t_grid_points : int, default 65

    Attributes
    ----------
    frame_ : ndarray, shape (dim, rank)
        Orthonormal basis of the range.
    rank_ : int
    diagnostics_ : dict
    """

    def __init__(self, epsilon: float = 1e-2, T: float = 10.0, n_slices=None, t_grid_points: int = 65):
        self.epsilon = epsilon
        self.T = T
        self.n_slices = n_slices
        self.t_grid_points = t_grid_points

    def fit(self, H0, V=None):
        if V is None:
            raise ValueError("fit needs both H0 and V")
        pair = PerturbationPair.from_operators(H0, V)
        grid = np.linspace(-self.T, self.T, int(self.t_grid_points))
        self.basis_ = wvn_pair_projection(pair, self.epsilon, self.T, n_slices=self.n_slices, t_grid=grid)
        self.frame_ = self.basis_.frame
        self.rank_ = self.basis_.rank
        self.diagnostics_ = self.basis_.diagnostics
        return self

    def transform(self, A):
        """Compression ``Q* A Q`` of a Hermitian matrix onto the range, as an array."""
        check_is_fitted(self, "basis_")
        return np.asarray(compress(A, self.basis_))

    def projector(self) -> np.ndarray:
        check_is_fitted(self, "basis_")
        return self.basis_.projector()
