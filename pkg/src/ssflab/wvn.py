"""Finite-rank projections that almost reduce a Hermitian operator (Weyl-von Neumann type).

Given unit vectors ``f_l`` and a window ``(-a, a]`` cut into ``n`` equal slices
``F_k``, the projection ``P`` onto ``span{F_k f_l}`` satisfies
``||(I-P) A P||_2 <= L a / sqrt(n)`` and a Gronwall bound for
``||(I-P) e^{itA} P||_2``. In finite dimension every ``F_k`` is a sum of
eigenprojections, so everything is computed in the eigenbasis of ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DegenerateInput, DimensionMismatch, EmptyVectorList, SliceCountOverflow
from .linalg import OperatorLike, SelfAdjointOperator, as_operator, eigendecompose, make_self_adjoint

__all__ = [
    "SliceConfig",
    "ProjectionBasis",
    "TruncatedPerturbation",
    "spectral_window",
    "choose_slice_count",
    "wvn_projection",
    "perturbation_truncation",
    "wvn_pair_projection",
    "compress",
    "default_t_grid",
    "offdiag_limit",
]

RANK_TOL = 1e-10
# slice images with norm at or below this are treated as F_k f_l = 0
ZERO_SLICE_TOL = 1e-14
WINDOW_MARGIN = 1e-9
# measured norms carry O(machine eps * ||A||) round-off; a guaranteed n can push L a / sqrt(n) far below it
ROUNDOFF_FACTOR = 64.0


@dataclass(frozen=True)
class SliceConfig:
    a: float
    n: int
    L: int
    T: float
    epsilon: float

    def __post_init__(self):
        if not (self.a > 0 and self.n >= 1 and self.L >= 1 and self.T > 0 and self.epsilon > 0):
            raise ValueError(f"invalid slice configuration {self}")

    @property
    def offdiag_bound(self) -> float:
        """``L a / sqrt(n)``."""
        return self.L * self.a / math.sqrt(self.n)

    @property
    def gronwall_bound(self) -> float:
        """``T L a e^{a sqrt(L) T} / sqrt(n)``; may be ``inf`` for extreme parameters."""
        log_b = (math.log(self.T) + math.log(self.L) + math.log(self.a)
                 + self.a * math.sqrt(self.L) * self.T - 0.5 * math.log(self.n))
        return math.exp(log_b) if log_b < 709 else math.inf

    def midpoints(self, k) -> np.ndarray:
        """Slice midpoints ``(2k - n - 1) a / n`` for 1-based ``k``."""
        k = np.asarray(k, dtype=float)
        return (2 * k - self.n - 1) * self.a / self.n


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    frame: np.ndarray
    rank: int
    diagnostics: dict = field(default_factory=dict)

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    @property
    def dim(self) -> int:
        return self.frame.shape[0]


@dataclass(frozen=True, eq=False)
class TruncatedPerturbation:
    L: int
    tail_norm: float
    vectors: np.ndarray
    weights: np.ndarray
    epsilon_prime: float

    def operator(self) -> np.ndarray:
        """``V_L = sum_l tau_l |f_l><f_l|``."""
        return (self.vectors * self.weights) @ self.vectors.conj().T


def default_t_grid(T: float, points: int = 65) -> np.ndarray:
    return np.linspace(-T, T, points)


def _unit_vectors(vectors, dim: int) -> np.ndarray:
    F = np.asarray(vectors, dtype=np.complex128)
    if F.ndim == 1:
        F = F[:, None]
    elif F.ndim == 2 and F.shape[0] != dim and F.shape[1] == dim:
        F = F.T
    if F.size == 0 or F.shape[1] == 0:
        raise EmptyVectorList("need at least one vector")
    if F.shape[0] != dim:
        raise DimensionMismatch(f"vectors have length {F.shape[0]}, operator has dim {dim}")
    norms = np.linalg.norm(F, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("vectors must be normalized within 1e-12")
    return F


def spectral_window(A: OperatorLike, vectors, eps: float) -> float:
    """Smallest ``a`` such that every ``||[I - F((-a, a])] f_l|| < eps`` (plus a small margin).

    Eigenvalue ``mu`` enters the window once ``a >= mu`` (positive side) or
    ``a > -mu`` (non-positive side); the returned half-width sits
    ``WINDOW_MARGIN * max(1, max|mu|)`` above the last threshold needed.
    """
    op = as_operator(A)
    D = eigendecompose(op)
    F = _unit_vectors(vectors, op.dim)
    mu = D.eigenvalues
    thresholds = np.abs(mu)
    order = np.argsort(thresholds, kind="stable")
    margin = WINDOW_MARGIN * max(1.0, float(thresholds.max()))
    mass = np.abs(D.frame.conj().T @ F) ** 2
    a = 0.0
    for l in range(F.shape[1]):
        m = mass[order, l]
        outside = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
        # outside[j] = mass left out when only the first j sorted eigenvalues are in
        j = int(np.flatnonzero(np.sqrt(outside) < eps)[0])
        a_l = margin if j == 0 else float(thresholds[order[j - 1]]) + margin
        a = max(a, a_l)
    return a


def choose_slice_count(a: float, L: int, T: float, eps: float) -> int:
    """``n = ceil(max((L a / eps)^2, (T L a e^{a sqrt(L) T} / eps)^2))``; ``T = 0`` drops the second term."""
    if not (a > 0 and L >= 1 and T >= 0 and eps > 0):
        raise ValueError("a, L, eps must be positive and T non-negative")
    first = (L * a / eps) ** 2
    if T == 0:
        return int(math.ceil(first))
    log_second = 2.0 * (math.log(T) + math.log(L) + math.log(a) + a * math.sqrt(L) * T - math.log(eps))
    if log_second >= math.log(np.finfo(float).max):
        raise SliceCountOverflow(
            f"slice count exp({log_second:.1f}) overflows; reduce T, a or L, or pass n explicitly"
        )
    return int(math.ceil(max(first, math.exp(log_second))))


def _orthonormalize(G: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass, dropping dependent columns."""
    basis = []
    for j in range(G.shape[1]):
        v = G[:, j].copy()
        for _ in range(2):
            for q in basis:
                v -= q * np.vdot(q, v)
        nv = np.linalg.norm(v)
        if nv > RANK_TOL:
            basis.append(v / nv)
    if not basis:
        return np.zeros((G.shape[0], 0), dtype=np.complex128)
    return np.column_stack(basis)


def _slice_index(mu: np.ndarray, a: float, n: int) -> np.ndarray:
    """1-based slice of each eigenvalue as a float (``n`` may exceed int64), 0 outside ``(-a, a]``."""
    inside = (mu > -a) & (mu <= a)
    k = np.zeros(mu.shape)
    k[inside] = np.clip(np.ceil((mu[inside] + a) / (2 * a) * float(n)), 1.0, float(n))
    return k


def _measure(frame: np.ndarray, D, A: np.ndarray, F: np.ndarray, t_grid) -> dict:
    AQ = A @ frame
    offdiag_A = float(np.linalg.norm(AQ - frame @ (frame.conj().T @ AQ)))
    W = D.frame.conj().T @ frame
    worst = 0.0
    for t in np.asarray(t_grid, dtype=float):
        EW = np.exp(1j * t * D.eigenvalues)[:, None] * W
        worst = max(worst, float(np.linalg.norm(EW - W @ (W.conj().T @ EW))))
    resid = F - frame @ (frame.conj().T @ F)
    return {
        "offdiag_A": offdiag_A,
        "offdiag_expA": worst,
        "vector_residuals": np.linalg.norm(resid, axis=0),
    }


def wvn_projection(A: OperatorLike, vectors, cfg: SliceConfig, t_grid=None) -> ProjectionBasis:
    """Projection onto ``span{F_k f_l}`` with measured diagnostics.

    ``offdiag_A`` is ``||(I-P) A P||_2``, ``offdiag_expA`` the maximum of
    ``||(I-P) e^{itA} P||_2`` over ``t_grid`` (default: 65 points on
    ``[-T, T]``), and ``vector_residuals`` the ``||(I-P) f_l||``.
    """
    op = as_operator(A)
    D = eigendecompose(op)
    F = _unit_vectors(vectors, op.dim)
    if F.shape[1] != cfg.L:
        raise ValueError(f"config says L={cfg.L} but {F.shape[1]} vectors were given")
    if t_grid is None:
        t_grid = default_t_grid(cfg.T)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.abs(t_grid) > cfg.T * (1 + 1e-12)):
        raise ValueError("t_grid must lie inside [-T, T]")
    coeffs = D.frame.conj().T @ F
    k = _slice_index(D.eigenvalues, cfg.a, cfg.n)
    blocks = []
    # slices with no eigenvalues have F_k = 0, so only occupied slices are visited
    for kk in np.unique(k[k > 0]):
        sel = np.flatnonzero(k == kk)
        C = coeffs[sel, :]
        norms = np.linalg.norm(C, axis=0)
        keep = norms > ZERO_SLICE_TOL
        if not np.any(keep):
            continue
        Q = _orthonormalize(C[:, keep] / norms[keep])
        if Q.shape[1]:
            blocks.append(D.frame[:, sel] @ Q)
    if not blocks:
        raise DegenerateInput("every slice image F_k f_l vanished")
    frame = np.concatenate(blocks, axis=1)
    diag = _measure(frame, D, op.entries, F, t_grid)
    diag.update(
        n=cfg.n, a=cfg.a, L=cfg.L, T=cfg.T, epsilon=cfg.epsilon,
        offdiag_bound=cfg.offdiag_bound, gronwall_bound=cfg.gronwall_bound,
        t_grid_points=int(t_grid.size),
    )
    frame.setflags(write=False)
    return ProjectionBasis(frame, frame.shape[1], diag)


def perturbation_truncation(V: OperatorLike, eps: float) -> TruncatedPerturbation:
    """Keep the ``L`` largest-magnitude eigenpairs of V, ``L`` minimal with ``||V - V_L||_2 < eps``."""
    op = as_operator(V)
    D = eigendecompose(op)
    order = np.argsort(-np.abs(D.eigenvalues), kind="stable")
    tau = D.eigenvalues[order]
    sq = tau**2
    # suffix[L] = sum_{l >= L} tau_l^2 (0-based), summed from the small end
    suffix = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    L = int(np.flatnonzero(np.sqrt(suffix) < eps)[0])
    weights = tau[:L]
    total = float(np.abs(weights).sum())
    eps_prime = min(eps, eps / total) if total > 0 else eps
    return TruncatedPerturbation(
        L=L,
        tail_norm=float(np.sqrt(suffix[L])),
        vectors=D.frame[:, order[:L]],
        weights=weights,
        epsilon_prime=eps_prime,
    )


def wvn_pair_projection(pair, eps: float, T: float, n_slices: Optional[int] = None,
                        t_grid=None) -> ProjectionBasis:
    """Projection for a pair ``(H0, V)``: truncate V, then slice H0 around the kept eigenvectors.

    Diagnostics add ``offdiag_V = ||(I-P) V||_2`` and ``offdiag_H = ||(I-P) H P||_2``
    to those of :func:`wvn_projection`. ``n_slices`` overrides the guaranteed
    slice count. For ``V = 0`` the projection is empty (rank 0).
    """
    if not (eps > 0 and T > 0):
        raise ValueError("eps and T must be positive")
    from .shift import _as_pair

    pair = _as_pair(pair)
    trunc = perturbation_truncation(pair.V, eps)
    if trunc.L == 0:
        empty = np.zeros((pair.dim, 0), dtype=np.complex128)
        return ProjectionBasis(empty, 0, {
            "offdiag_A": 0.0, "offdiag_expA": 0.0, "vector_residuals": np.zeros(0),
            "offdiag_V": 0.0, "offdiag_H": 0.0, "n": 0, "a": 0.0, "L": 0, "T": T,
            "epsilon": eps, "epsilon_prime": trunc.epsilon_prime, "tail_norm": 0.0,
            "offdiag_bound": 0.0, "gronwall_bound": 0.0,
        })
    eps_p = trunc.epsilon_prime
    a = spectral_window(pair.H0, trunc.vectors, eps_p)
    n = n_slices if n_slices is not None else choose_slice_count(a, trunc.L, T, eps_p)
    cfg = SliceConfig(a=a, n=n, L=trunc.L, T=T, epsilon=eps_p)
    basis = wvn_projection(pair.H0, trunc.vectors, cfg, t_grid)
    Q = basis.frame
    Vm, Hm = pair.V.entries, pair.H.entries
    HQ = Hm @ Q
    diag = dict(basis.diagnostics)
    diag.update(
        offdiag_V=float(np.linalg.norm(Vm - Q @ (Q.conj().T @ Vm))),
        offdiag_H=float(np.linalg.norm(HQ - Q @ (Q.conj().T @ HQ))),
        epsilon_prime=eps_p,
        epsilon=eps,
        tail_norm=trunc.tail_norm,
    )
    return ProjectionBasis(Q, basis.rank, diag)


def compress(A: OperatorLike, P: ProjectionBasis) -> SelfAdjointOperator:
    """``Q* A Q`` on the range of P, where Q is the orthonormal frame."""
    op = as_operator(A)
    if op.dim != P.dim:
        raise DimensionMismatch(f"operator dim {op.dim} but projection acts on {P.dim}")
    if P.rank == 0:
        raise DegenerateInput("cannot compress onto a rank-0 projection")
    Q = P.frame
    return make_self_adjoint(Q.conj().T @ op.entries @ Q)


def offdiag_limit(basis: ProjectionBasis, A_norm: float, slack: float = 0.1) -> float:
    """Acceptance limit for ``offdiag_A``: ``(1 + slack) L a / sqrt(n)`` plus a round-off floor.

    The floor is ``64 eps ||A||_2 sqrt(rank)`` with ``eps`` the double precision unit.
    """
    d = basis.diagnostics
    floor = ROUNDOFF_FACTOR * np.finfo(float).eps * A_norm * math.sqrt(max(basis.rank, 1))
    return (1.0 + slack) * d["offdiag_bound"] + floor
