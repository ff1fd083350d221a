"""Seeded convergence experiments for compressed trace formulas.

A :class:`Scenario` fixes the operators (through seeded generators) and the
parameters of every run; each ``run_*`` function returns a
:class:`ConvergenceTable` ordered by schedule step.

Random Hermitian matrices are drawn with ``numpy.random.default_rng`` (PCG64),
whose streams are reproducible across platforms for a fixed seed. H0 and V use
two independent child streams of ``SeedSequence(seed)``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._parallel import ordered_map
from .frechet import remainder_trace
from .functions import FunctionSpec, exponential, gaussian, polynomial
from .pcf import l1_distance
from .shift import (
    PerturbationPair,
    koplienko_eta,
    verify_exponential_formula,
    verify_schwartz_formula,
)
from .wvn import ProjectionBasis, compress, default_t_grid, wvn_pair_projection

__all__ = [
    "Scenario",
    "ConvergenceRow",
    "ConvergenceTable",
    "H0_DEFAULTS",
    "V_DEFAULTS",
    "SCHWARTZ_DEFAULTS",
    "build_h0",
    "build_v",
    "build_pair",
    "schwartz_functions",
    "scenario_projections",
    "compressed_pair",
    "run_polynomial_convergence",
    "run_exponential_convergence",
    "run_eta_cauchy",
    "run_unbounded_demo",
]

H0_DEFAULTS = {
    "dense-random": {"op_norm": 1.0},
    "diagonal-formula": {"c": 1.0, "p": 1.0},
    "lattice-laplacian": {"scale": 1.0},
}
V_DEFAULTS = {
    "dense-random": {"hs_norm": 1.0},
    "random-hs": {"hs_norm": 1.0, "decay": 0.1},
    "rank-r": {"hs_norm": 1.0, "rank": 1, "decay": 0.1},
}
SCHWARTZ_DEFAULTS = {"gaussian": {"sigma": 1.0, "t_max": 12.0, "n_samples": 256}}


@dataclass(frozen=True)
class Scenario:
    """Parameters of one reproducible experiment.

    ``slice_count`` overrides the guaranteed Weyl-von Neumann slice count and
    ``demo_dims`` lists the ambient dimensions of the unbounded emulation.
    """

    seed: int
    ambient_dim: int
    h0_spec: dict = field(default_factory=lambda: {"kind": "dense-random", "op_norm": 1.0})
    v_spec: dict = field(default_factory=lambda: {"kind": "dense-random", "hs_norm": 1.0})
    epsilon_schedule: Tuple[float, ...] = (1e-1, 1e-2)
    T: float = 10.0
    t_values: Tuple[float, ...] = (1.0, 5.0, 10.0)
    polynomials: Tuple[Tuple[float, ...], ...] = ((0.0, 0.0, 1.0),)
    s_nodes: int = 32
    schwartz_specs: Tuple[dict, ...] = ({"kind": "gaussian", "sigma": 1.0, "t_max": 12.0, "n_samples": 256},)
    t_grid_points: int = 65
    name: str = ""
    demo_dims: Tuple[int, ...] = ()
    slice_count: Optional[int] = None

    def polynomial_specs(self) -> List[FunctionSpec]:
        return [polynomial(c) for c in self.polynomials]

    @property
    def t_grid(self) -> np.ndarray:
        return default_t_grid(self.T, self.t_grid_points)

    def digest(self) -> str:
        from .scenario import serialize_scenario

        return hashlib.sha256(serialize_scenario(self).encode()).hexdigest()

    @property
    def scenario_id(self) -> str:
        return self.name or self.digest()[:12]


@dataclass(frozen=True)
class ConvergenceRow:
    step_index: int
    epsilon: float
    rank: int
    quantity_name: str
    value: float


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow] = field(default_factory=list)
    provenance: str = ""

    COLUMNS = ("step_index", "epsilon", "rank", "quantity_name", "value")

    def add(self, step, eps, rank, name, value):
        self.rows.append(ConvergenceRow(int(step), float(eps), int(rank), name, float(value)))

    def quantities(self) -> List[str]:
        seen = []
        for r in self.rows:
            if r.quantity_name not in seen:
                seen.append(r.quantity_name)
        return seen

    def series(self, quantity: str) -> np.ndarray:
        return np.array([r.value for r in self.rows if r.quantity_name == quantity])

    def extend(self, other: "ConvergenceTable") -> "ConvergenceTable":
        merged = sorted(self.rows + other.rows, key=lambda r: r.step_index)
        return ConvergenceTable(merged, self.provenance or other.provenance)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r.step_index, repr(r.epsilon), r.rank, r.quantity_name, repr(r.value)])
        return buf.getvalue()


# -- operator generators -------------------------------------------------------------


def _streams(seed: int):
    h_seq, v_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(h_seq), np.random.default_rng(v_seq)


def _random_hermitian(rng, n: int) -> np.ndarray:
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (G + G.conj().T)


def build_h0(spec: dict, n: int, rng) -> np.ndarray:
    kind = spec["kind"]
    if kind == "dense-random":
        A = _random_hermitian(rng, n)
        return A * (spec["op_norm"] / np.abs(np.linalg.eigvalsh(A)).max())
    if kind == "diagonal-formula":
        k = np.arange(1, n + 1, dtype=float)
        return np.diag(spec["c"] * k ** spec["p"]).astype(np.complex128)
    if kind == "lattice-laplacian":
        A = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        return (spec["scale"] * A).astype(np.complex128)
    raise ValueError(f"unknown h0 kind {kind!r}")


def build_v(spec: dict, n: int, rng) -> np.ndarray:
    kind = spec["kind"]
    if kind == "dense-random":
        V = _random_hermitian(rng, n)
    elif kind == "random-hs":
        env = np.exp(-spec["decay"] * np.arange(n))
        V = _random_hermitian(rng, n) * np.outer(env, env)
    elif kind == "rank-r":
        r = int(spec["rank"])
        env = np.exp(-spec["decay"] * np.arange(n))
        F = (rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))) * env[:, None]
        Q, _ = np.linalg.qr(F)
        tau = rng.standard_normal(r)
        V = (Q * tau) @ Q.conj().T
        V = 0.5 * (V + V.conj().T)
    else:
        raise ValueError(f"unknown v kind {kind!r}")
    if spec["hs_norm"] == 0:
        return np.zeros((n, n), dtype=np.complex128)
    return V * (spec["hs_norm"] / np.linalg.norm(V))


def build_pair(sc: Scenario, dim: Optional[int] = None) -> PerturbationPair:
    """The scenario's pair at ``ambient_dim`` (or the leading ``dim`` block of it)."""
    rng_h, rng_v = _streams(sc.seed)
    n = sc.ambient_dim
    H0 = build_h0(sc.h0_spec, n, rng_h)
    V = build_v(sc.v_spec, n, rng_v)
    if dim is not None:
        H0, V = H0[:dim, :dim], V[:dim, :dim]
    return PerturbationPair.from_operators(H0, V)


def schwartz_functions(sc: Scenario) -> List[FunctionSpec]:
    out = []
    for spec in sc.schwartz_specs:
        if spec["kind"] != "gaussian":
            raise ValueError(f"unknown schwartz kind {spec['kind']!r}")
        out.append(gaussian(spec["sigma"], spec["t_max"], int(spec["n_samples"])))
    return out


# -- compressed problems -------------------------------------------------------------


def scenario_projections(sc: Scenario, pair: PerturbationPair) -> List[ProjectionBasis]:
    """One projection per schedule entry."""
    grid = sc.t_grid
    return ordered_map(
        lambda eps: wvn_pair_projection(pair, eps, sc.T, n_slices=sc.slice_count, t_grid=grid),
        sc.epsilon_schedule,
    )


def compressed_pair(pair: PerturbationPair, basis: ProjectionBasis) -> Optional[PerturbationPair]:
    """``(Q* H0 Q, Q* V Q)`` on the range of P, or ``None`` for rank 0."""
    if basis.rank == 0:
        return None
    return PerturbationPair.from_operators(compress(pair.H0, basis), compress(pair.V, basis))


def _remainder(pair: Optional[PerturbationPair], f: FunctionSpec) -> complex:
    if pair is None:
        return 0j
    return remainder_trace(pair.DH, pair.D0, f, pair.V.entries)


def _prepare(sc, pair, projections):
    pair = pair if pair is not None else build_pair(sc)
    projections = projections if projections is not None else scenario_projections(sc, pair)
    return pair, projections


def run_polynomial_convergence(sc: Scenario, pair=None, projections=None) -> ConvergenceTable:
    """``|Tr{p(H) - p(H0) - Dp(H0).V} - Tr{same for the compressed pair}|`` per schedule step."""
    if not sc.polynomials:
        raise ValueError("scenario lists no polynomials")
    pair, projections = _prepare(sc, pair, projections)
    polys = sc.polynomial_specs()
    full = [_remainder(pair, p) for p in polys]
    table = ConvergenceTable(provenance=sc.digest())
    for step, (eps, basis) in enumerate(zip(sc.epsilon_schedule, projections)):
        cp = compressed_pair(pair, basis)
        for p, ref in zip(polys, full):
            table.add(step, eps, basis.rank, f"poly_delta[{p.describe()}]", abs(ref - _remainder(cp, p)))
    return table


def run_exponential_convergence(sc: Scenario, pair=None, projections=None) -> ConvergenceTable:
    """Same as the polynomial run for ``e^{itx}``, per ``t`` and the maximum over ``t``."""
    if any(abs(t) > sc.T for t in sc.t_values):
        raise ValueError("t_values must lie within [-T, T]")
    pair, projections = _prepare(sc, pair, projections)
    fs = [exponential(t) for t in sc.t_values]
    full = [_remainder(pair, f) for f in fs]
    table = ConvergenceTable(provenance=sc.digest())
    for step, (eps, basis) in enumerate(zip(sc.epsilon_schedule, projections)):
        cp = compressed_pair(pair, basis)
        deltas = [abs(ref - _remainder(cp, f)) for f, ref in zip(fs, full)]
        for t, d in zip(sc.t_values, deltas):
            table.add(step, eps, basis.rank, f"exp_delta[t={t:g}]", d)
        table.add(step, eps, basis.rank, "exp_delta_max", max(deltas) if deltas else 0.0)
    return table


def _offdiag(M: np.ndarray, Q: np.ndarray) -> float:
    """``||(I - P) M P||_2`` for the projection P onto the columns of Q."""
    if Q.shape[1] == 0:
        return 0.0
    MQ = M @ Q
    return float(np.linalg.norm(MQ - Q @ (Q.conj().T @ MQ)))


def _compressed_ambient(M: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return Q @ (Q.conj().T @ M @ Q) @ Q.conj().T


def cauchy_bound(pair: PerturbationPair, Qn: np.ndarray, Qm: np.ndarray) -> float:
    """``||V||_2 [2(a_n + a_m) + (b_n + b_m)/2 + c/2]`` with ``||f||_inf = 1``.

    ``a = ||P^perp H0 P||_2``, ``b = ||P^perp V P||_2`` and ``c = ||P_n V P_n - P_m V P_m||_2``.
    """
    H0, V = pair.H0.entries, pair.V.entries
    a_n, a_m = _offdiag(H0, Qn), _offdiag(H0, Qm)
    b_n, b_m = _offdiag(V, Qn), _offdiag(V, Qm)
    c = float(np.linalg.norm(_compressed_ambient(V, Qn) - _compressed_ambient(V, Qm)))
    return pair.hs_norm_V * (2.0 * (a_n + a_m) + 0.5 * (b_n + b_m) + 0.5 * c)


def run_eta_cauchy(sc: Scenario, pair=None, projections=None) -> ConvergenceTable:
    """L1 distance between consecutive compressed shift functions and its a priori bound.

    Rows per step: ``eta_l1_norm`` and ``half_hs_sq`` (``||P V P||_2^2 / 2``);
    from the second step on also ``eta_cauchy_diff`` and ``eta_cauchy_bound``.
    """
    if len(sc.epsilon_schedule) < 2:
        raise ValueError("eta Cauchy run needs at least two schedule steps")
    pair, projections = _prepare(sc, pair, projections)
    table = ConvergenceTable(provenance=sc.digest())
    etas = []
    for step, (eps, basis) in enumerate(zip(sc.epsilon_schedule, projections)):
        cp = compressed_pair(pair, basis)
        eta = koplienko_eta(cp, sc.s_nodes) if cp is not None else None
        etas.append(eta)
        table.add(step, eps, basis.rank, "eta_l1_norm", eta.l1_norm() if eta else 0.0)
        table.add(step, eps, basis.rank, "half_hs_sq", 0.5 * cp.hs_norm_V**2 if cp else 0.0)
        if step == 0:
            continue
        prev, cur = etas[step - 1], eta
        if prev is None or cur is None:
            diff = (prev.l1_norm() if prev else 0.0) + (cur.l1_norm() if cur else 0.0)
        else:
            diff = l1_distance(prev, cur)
        bound = cauchy_bound(pair, projections[step - 1].frame, basis.frame)
        table.add(step, eps, basis.rank, "eta_cauchy_diff", diff)
        table.add(step, eps, basis.rank, "eta_cauchy_bound", bound)
    return table


def run_unbounded_demo(sc: Scenario) -> ConvergenceTable:
    """Trace formulas for a diagonal H0 with growing eigenvalues at increasing dimension.

    The pair is generated once at ``max(demo_dims)`` and each step uses its
    leading block. ``step_index`` counts dimensions and ``rank`` holds the
    dimension; ``v_hs_tail`` is the Hilbert-Schmidt norm of V outside the block.
    """
    if sc.h0_spec["kind"] != "diagonal-formula":
        raise ValueError("the unbounded emulation needs a diagonal-formula H0")
    dims = sorted(sc.demo_dims) or [sc.ambient_dim]
    big = Scenario(**{**sc.__dict__, "ambient_dim": max(dims)})
    full = build_pair(big)
    V_full = full.V.entries
    table = ConvergenceTable(provenance=sc.digest())
    gaussians = schwartz_functions(sc)
    for step, d in enumerate(dims):
        pair = PerturbationPair.from_operators(full.H0.entries[:d, :d], V_full[:d, :d])
        outside = V_full.copy()
        outside[:d, :d] = 0
        tail = float(np.linalg.norm(outside))
        eta = koplienko_eta(pair, sc.s_nodes)
        half = 0.5 * pair.hs_norm_V**2
        table.add(step, math.nan, d, "v_hs_tail", tail)
        table.add(step, math.nan, d, "eta_norm_identity_err",
                  abs(eta.integral() - half) / max(half, 1e-300))
        for t in sc.t_values:
            rep = verify_exponential_formula(pair, t, sc.s_nodes, eta=eta)
            table.add(step, math.nan, d, f"exp_rel_err[t={t:g}]", rep.rel_err)
        for g in gaussians:
            rep = verify_schwartz_formula(pair, g, sc.s_nodes, eta=eta)
            table.add(step, math.nan, d, f"schwartz_rel_err[{g.describe()}]", rep.rel_err)
    return table
