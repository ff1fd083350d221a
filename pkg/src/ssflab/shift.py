"""Koplienko and Krein spectral shift functions of a Hermitian pair and trace-formula checks.

For ``H_s = H0 + sV`` the Koplienko function is

    eta(lambda) = integral_0^1 Tr{V [E_0(lambda) - E_s(lambda)]} ds

and satisfies ``Tr{f(H) - f(H0) - Df(H0).V} = integral f''(lambda) eta(lambda) d lambda``.
For fixed ``s`` the integrand is an exact step function in ``lambda`` with jumps at
the eigenvalues of H0 and H_s; the ``s`` integral uses Gauss-Legendre, so the
result is a step function on the union of all those eigenvalues.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._parallel import ordered_map
from .frechet import (
    doi_divided_difference,
    doi_trace,
    frechet_poly,
    gauss_legendre,
    poly_matrix,
    second_order_remainder_exp,
)
from .functions import FunctionSpec, exponential
from .linalg import (
    OperatorLike,
    SelfAdjointOperator,
    SpectralDecomposition,
    as_operator,
    eigendecompose,
)
from .pcf import PiecewiseConstantFunction, integrate_pcf
from .validation import check_same_dim

__all__ = [
    "PerturbationPair",
    "VerificationReport",
    "koplienko_eta",
    "krein_xi",
    "verify_polynomial_formula",
    "verify_exponential_formula",
    "verify_schwartz_formula",
    "verify_krein_formula",
    "eta_positivity_and_support",
    "eta_support_interval",
]

REL_ERR_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class PerturbationPair:
    """``(H0, V)`` with ``H = H0 + V`` formed here, never supplied."""

    H0: SelfAdjointOperator
    V: SelfAdjointOperator
    H: SelfAdjointOperator
    hs_norm_V: float
    D0: SpectralDecomposition = field(repr=False)
    DH: SpectralDecomposition = field(repr=False)

    @classmethod
    def from_operators(cls, H0: OperatorLike, V: OperatorLike) -> "PerturbationPair":
        H0, V = as_operator(H0), as_operator(V)
        check_same_dim(H0, V, names=("H0", "V"))
        H = H0 + V
        return cls(H0, V, H, V.scale, eigendecompose(H0), eigendecompose(H))

    @property
    def dim(self) -> int:
        return self.H0.dim

    @property
    def op_norm_V(self) -> float:
        w = np.linalg.eigvalsh(self.V.entries)
        return float(max(abs(w[0]), abs(w[-1])))

    def path(self, s: float) -> SelfAdjointOperator:
        return SelfAdjointOperator(self.H0.entries + s * self.V.entries)


@dataclass(frozen=True)
class VerificationReport:
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    metadata: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, lhs, rhs, **metadata) -> "VerificationReport":
        lhs, rhs = complex(lhs), complex(rhs)
        abs_err = abs(lhs - rhs)
        rel_err = abs_err / max(abs(lhs), abs(rhs), REL_ERR_FLOOR)
        return cls(lhs, rhs, abs_err, rel_err, dict(metadata))

    def passed(self, tol: float) -> bool:
        return self.rel_err <= tol


def _as_pair(pair) -> PerturbationPair:
    if isinstance(pair, PerturbationPair):
        return pair
    H0, V = pair
    return PerturbationPair.from_operators(H0, V)


def _diag_in_frame(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``<u_i, V u_i>`` for every column of ``U``."""
    return np.einsum("ij,ij->j", U.conj(), V @ U).real


def eta_support_interval(pair: PerturbationPair) -> tuple:
    """``[inf sigma(H0) - ||V||, sup sigma(H0) + ||V||]``."""
    mu = pair.D0.eigenvalues
    v = pair.op_norm_V
    return (float(mu[0] - v), float(mu[-1] + v))


def _eta_slice(pair: PerturbationPair, s: float):
    """Eigenvalues of H_s and cumulative sums of the diagonal of V in their frame."""
    if s == 0.0:
        D = pair.D0
    else:
        D = eigendecompose(pair.path(s))
    return D.eigenvalues, np.concatenate([[0.0], np.cumsum(_diag_in_frame(D.frame, pair.V.entries))])


def koplienko_eta(pair, s_nodes: int = 32) -> PiecewiseConstantFunction:
    """Step-function approximation ``eta_K`` of the Koplienko shift function.

    Parameters
    ----------
    pair : PerturbationPair or (H0, V)
    s_nodes : int
        Gauss-Legendre nodes ``K`` on ``s in [0, 1]``.

    Notes
    -----
    ``integral eta_K = ||V||_2^2 / 2`` holds for every ``K``: each slice
    integrates to ``s Tr V^2`` and Gauss rules are exact for linear integrands.
    """
    if s_nodes < 1:
        raise ValueError("s_nodes must be >= 1")
    pair = _as_pair(pair)
    nodes, weights = gauss_legendre(s_nodes)
    mu, c0 = _eta_slice(pair, 0.0)
    slices = ordered_map(lambda s: _eta_slice(pair, s), nodes)
    grid = np.unique(np.concatenate([mu] + [ev for ev, _ in slices]))
    support = eta_support_interval(pair)
    if grid.size < 2:
        return PiecewiseConstantFunction.zero((support[0], support[1]))
    left = grid[:-1]
    base = c0[np.searchsorted(mu, left, side="right")]
    values = np.zeros(left.size)
    for w, (ev, cs) in zip(weights, slices):
        values += w * (base - cs[np.searchsorted(ev, left, side="right")])
    lo = min(support[0], grid[0])
    hi = max(support[1], grid[-1])
    return PiecewiseConstantFunction(grid, values, (lo, hi))


def krein_xi(pair) -> PiecewiseConstantFunction:
    """``xi(lambda) = Tr[E_0(lambda) - E(lambda)]``: the eigenvalue counting difference."""
    pair = _as_pair(pair)
    mu, nu = pair.D0.eigenvalues, pair.DH.eigenvalues
    grid = np.unique(np.concatenate([mu, nu]))
    if grid.size < 2:
        return PiecewiseConstantFunction.zero((grid[0], grid[0]))
    left = grid[:-1]
    values = (np.searchsorted(mu, left, side="right") - np.searchsorted(nu, left, side="right")).astype(float)
    return PiecewiseConstantFunction(grid, values, (float(grid[0]), float(grid[-1])))


def _resolve_eta(pair, s_nodes, eta):
    return eta if eta is not None else koplienko_eta(pair, s_nodes)


def verify_polynomial_formula(pair, p: FunctionSpec, s_nodes: int = 32,
                              eta: Optional[PiecewiseConstantFunction] = None) -> VerificationReport:
    """``Tr{p(H) - p(H0) - Dp(H0).V}`` against ``integral p'' eta``.

    The left side uses matrix powers and the power-sum derivative. Constant and
    linear terms are dropped first since they cancel identically.
    """
    start = time.perf_counter()
    pair = _as_pair(pair)
    c = p.coeffs.copy()
    c[:2] = 0
    q = FunctionSpec("polynomial", coeffs=c)
    if np.any(c):
        M = poly_matrix(q, pair.H) - poly_matrix(q, pair.H0) - frechet_poly(pair.H0, pair.V, q).matrix
        lhs = np.trace(M)
    else:
        lhs = 0j
    eta = _resolve_eta(pair, s_nodes, eta)
    rhs = integrate_pcf(eta, p.derivative(2))
    return VerificationReport.compare(
        lhs, rhs, function=p.describe(), degree=p.degree, s_nodes=s_nodes, dim=pair.dim,
        runtime_ms=1e3 * (time.perf_counter() - start),
    )


def verify_exponential_formula(pair, t: float, s_nodes: int = 32,
                               eta: Optional[PiecewiseConstantFunction] = None) -> VerificationReport:
    """``Tr{e^{itH} - e^{itH0} - D(e^{itH0}).V}`` against ``(it)^2 integral e^{it lambda} eta``."""
    start = time.perf_counter()
    pair = _as_pair(pair)
    # e^{i0x} = 1 is constant, so the remainder vanishes identically
    lhs = np.trace(second_order_remainder_exp(pair.H, pair.H0, pair.V, t)) if t != 0 else 0j
    eta = _resolve_eta(pair, s_nodes, eta)
    rhs = (1j * t) ** 2 * integrate_pcf(eta, exponential(t))
    return VerificationReport.compare(
        lhs, rhs, function=f"exp[t={t:g}]", t=t, s_nodes=s_nodes, dim=pair.dim,
        runtime_ms=1e3 * (time.perf_counter() - start),
    )


def schwartz_lhs_fourier(pair: PerturbationPair, f: FunctionSpec) -> complex:
    """Left side by Fourier synthesis: ``sum_j c_j Tr{e^{it_j H} - e^{it_j H0} - D(e^{it_j H0}).V}``."""
    return (
        complex(np.sum(f.synthesize(pair.DH.eigenvalues)) - np.sum(f.synthesize(pair.D0.eigenvalues)))
        - doi_trace(pair.D0, f.fourier_view(), pair.V.entries)
    )


def schwartz_lhs_direct(pair: PerturbationPair, f: FunctionSpec) -> complex:
    """Left side from the closed form: ``Tr{f(H) - f(H0)} - Tr DOI_f(V)`` in the eigenbasis of H0."""
    D0 = pair.D0
    fH = complex(np.sum(f(pair.DH.eigenvalues)))
    fH0 = complex(np.sum(f(D0.eigenvalues)))
    derivative = doi_divided_difference(D0, D0, f, pair.V.entries)
    return fH - fH0 - complex(np.trace(derivative))


def verify_schwartz_formula(pair, f: FunctionSpec, s_nodes: int = 32,
                            eta: Optional[PiecewiseConstantFunction] = None) -> VerificationReport:
    """``Tr{f(H) - f(H0) - Df(H0).V}`` against ``integral f'' eta`` for Fourier-represented ``f``.

    The right side is ``sum_j c_j (it_j)^2 integral e^{it_j lambda} eta``. When
    ``f`` has a closed form the left side is taken from it, and the Fourier
    synthesis value is kept in ``metadata["lhs_fourier"]`` with the gap in
    ``metadata["dual_path_gap"]``.
    """
    start = time.perf_counter()
    if f.kind != "schwartz":
        raise TypeError("expected a schwartz FunctionSpec")
    pair = _as_pair(pair)
    lhs_f = schwartz_lhs_fourier(pair, f)
    if f.closed_form is not None:
        lhs = schwartz_lhs_direct(pair, f)
        gap = abs(lhs - lhs_f)
    else:
        lhs, gap = lhs_f, 0.0
    eta = _resolve_eta(pair, s_nodes, eta)
    rhs = integrate_pcf(eta, f.fourier_view().derivative(2))
    ts = f.fourier_samples[0]
    return VerificationReport.compare(
        lhs, rhs, function=f.describe(), s_nodes=s_nodes, dim=pair.dim,
        lhs_fourier=lhs_f, dual_path_gap=gap,
        dual_path_rel=gap / max(abs(lhs), abs(lhs_f), REL_ERR_FLOOR),
        fourier_grid=(float(ts.min()), float(ts.max()), int(ts.size)),
        runtime_ms=1e3 * (time.perf_counter() - start),
    )


def verify_krein_formula(pair, p: FunctionSpec,
                         xi: Optional[PiecewiseConstantFunction] = None) -> VerificationReport:
    """``Tr[p(H) - p(H0)]`` against ``integral p' xi``; both sides exact in finite dimension."""
    start = time.perf_counter()
    pair = _as_pair(pair)
    lhs = np.trace(poly_matrix(p, pair.H) - poly_matrix(p, pair.H0))
    xi = xi if xi is not None else krein_xi(pair)
    rhs = integrate_pcf(xi, p.derivative(1))
    return VerificationReport.compare(
        lhs, rhs, function=p.describe(), dim=pair.dim,
        runtime_ms=1e3 * (time.perf_counter() - start),
    )


def eta_positivity_and_support(eta: PiecewiseConstantFunction, pair) -> dict:
    """Minimum of ``eta`` and whether it vanishes outside ``[inf s(H0) - ||V||, sup s(H0) + ||V||]``."""
    pair = _as_pair(pair)
    lo, hi = eta_support_interval(pair)
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    nz = np.flatnonzero(eta.values)
    if nz.size == 0:
        ok = True
    else:
        ok = bool(eta.breakpoints[nz[0]] >= lo - slack and eta.breakpoints[nz[-1] + 1] <= hi + slack)
    return {"min_value": eta.min_value(), "support_ok": ok, "interval": (lo, hi)}
