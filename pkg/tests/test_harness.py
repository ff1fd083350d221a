import math
from dataclasses import replace

import numpy as np
import pytest

from ssflab import Scenario, build_pair, koplienko_eta, run_eta_cauchy, run_exponential_convergence
from ssflab import run_polynomial_convergence, run_unbounded_demo
from ssflab.harness import (
    ConvergenceTable,
    _remainder,
    build_v,
    cauchy_bound,
    compressed_pair,
    scenario_projections,
)
from ssflab.wvn import ProjectionBasis

DIAG = {"kind": "diagonal-formula", "c": 0.02, "p": 1.0}
HS = {"kind": "random-hs", "hs_norm": 1.0, "decay": 0.1}


def _scenario(**kw):
    base = dict(seed=5, ambient_dim=120, h0_spec=DIAG, v_spec=HS,
                epsilon_schedule=(1e-1, 1e-2, 1e-3), T=10.0, t_values=(0.0, 1.0, 5.0, 10.0),
                polynomials=((0.0, 1.0), (2.0,), (0.0, 0.0, 1.0), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)))
    base.update(kw)
    return Scenario(**base)


@pytest.fixture(scope="module")
def tables():
    sc = _scenario()
    pair = build_pair(sc)
    proj = scenario_projections(sc, pair)
    return sc, pair, proj, {
        "poly": run_polynomial_convergence(sc, pair, proj),
        "exp": run_exponential_convergence(sc, pair, proj),
        "cauchy": run_eta_cauchy(sc, pair, proj),
    }


def _identity(n):
    return ProjectionBasis(np.eye(n, dtype=complex), n, {})


def test_generators_deterministic_and_scaled():
    sc = _scenario(v_spec={"kind": "dense-random", "hs_norm": 2.0})
    a, b = build_pair(sc), build_pair(sc)
    assert np.array_equal(a.H0.entries, b.H0.entries) and np.array_equal(a.V.entries, b.V.entries)
    assert a.hs_norm_V == pytest.approx(2.0, rel=1e-14)
    d = build_pair(_scenario(h0_spec={"kind": "dense-random", "op_norm": 3.0}))
    assert np.abs(d.D0.eigenvalues).max() == pytest.approx(3.0, rel=1e-13)
    r = build_v({"kind": "rank-r", "hs_norm": 1.0, "rank": 3, "decay": 0.0}, 20, np.random.default_rng(0))
    assert np.linalg.matrix_rank(r, tol=1e-10) == 3
    # the V stream does not depend on the H0 spec
    e = build_pair(_scenario(h0_spec={"kind": "lattice-laplacian", "scale": 1.0}))
    assert np.array_equal(e.V.entries, build_pair(_scenario()).V.entries)


def test_low_degree_rows_vanish(tables):
    _, _, _, t = tables
    sc = tables[0]
    for p in sc.polynomial_specs()[:2]:
        s = t["poly"].series(f"poly_delta[{p.describe()}]")
        assert s.size == len(sc.epsilon_schedule) and np.all(s == 0)


def test_t_zero_rows_vanish(tables):
    s = tables[3]["exp"].series("exp_delta[t=0]")
    assert s.size == 3 and np.all(s == 0)


def test_trends_decrease(tables):
    sc, pair, _, t = tables
    for table in (t["poly"], t["exp"]):
        for q in table.quantities():
            s = table.series(q)
            assert s.size == len(sc.epsilon_schedule)
            assert s[-1] <= s[0]
    # final delta is a small fraction of the full remainder scale
    for p in sc.polynomial_specs()[2:]:
        full = abs(_remainder(pair, p))
        assert t["poly"].series(f"poly_delta[{p.describe()}]")[-1] <= 1e-2 * full
    s = t["exp"].series("exp_delta_max")
    assert np.all(np.diff(s) <= 1e-12)


def test_rows_sorted_by_step(tables):
    merged = tables[3]["poly"].extend(tables[3]["exp"]).extend(tables[3]["cauchy"])
    steps = [r.step_index for r in merged.rows]
    assert steps == sorted(steps)
    csv = merged.to_csv().splitlines()
    assert csv[0] == "step_index,epsilon,rank,quantity_name,value" and len(csv) == len(merged.rows) + 1


def test_cauchy_rows(tables):
    sc, _, _, t = tables
    c = t["cauchy"]
    diff, bound = c.series("eta_cauchy_diff"), c.series("eta_cauchy_bound")
    assert diff.size == len(sc.epsilon_schedule) - 1
    assert np.all(diff <= bound)
    l1, half = c.series("eta_l1_norm"), c.series("half_hs_sq")
    assert np.allclose(l1, half, rtol=1e-12, atol=0)


def test_identity_frame_gives_zero_delta():
    sc = _scenario(ambient_dim=30, epsilon_schedule=(1e-1, 1e-2))
    pair = build_pair(sc)
    proj = [_identity(30), _identity(30)]
    poly = run_polynomial_convergence(sc, pair, proj)
    expo = run_exponential_convergence(sc, pair, proj)
    cauchy = run_eta_cauchy(sc, pair, proj)
    assert max(r.value for r in poly.rows) <= 1e-12 * 30**6
    assert max(r.value for r in expo.rows) <= 1e-10
    assert cauchy.series("eta_cauchy_diff")[0] == 0
    assert cauchy.series("eta_cauchy_bound")[0] == 0


def test_zero_perturbation():
    sc = _scenario(ambient_dim=40, v_spec={**HS, "hs_norm": 0.0}, epsilon_schedule=(1e-1, 1e-2))
    for run in (run_polynomial_convergence, run_exponential_convergence, run_eta_cauchy):
        table = run(sc)
        assert all(r.value == 0 for r in table.rows)
        assert all(r.rank == 0 for r in table.rows)


def test_compressed_pair_of_rank_zero_is_none():
    sc = _scenario(ambient_dim=10)
    assert compressed_pair(build_pair(sc), ProjectionBasis(np.zeros((10, 0), complex), 0, {})) is None


def test_cauchy_bound_zero_for_equal_full_frames():
    pair = build_pair(_scenario(ambient_dim=12))
    assert cauchy_bound(pair, np.eye(12), np.eye(12)) == 0


def test_runs_are_deterministic(tables):
    sc = _scenario(ambient_dim=60, epsilon_schedule=(1e-1, 1e-2))
    assert run_exponential_convergence(sc).to_csv() == run_exponential_convergence(sc).to_csv()


def test_argument_errors():
    with pytest.raises(ValueError):
        run_eta_cauchy(_scenario(epsilon_schedule=(1e-1,)))
    with pytest.raises(ValueError):
        run_polynomial_convergence(_scenario(polynomials=()))
    with pytest.raises(ValueError):
        run_exponential_convergence(_scenario(t_values=(20.0,)))
    with pytest.raises(ValueError):
        run_unbounded_demo(_scenario(h0_spec={"kind": "dense-random", "op_norm": 1.0}))


def test_unbounded_demo():
    sc = _scenario(seed=3, ambient_dim=400, demo_dims=(100, 200, 400), t_values=(1.0,),
                   h0_spec={"kind": "diagonal-formula", "c": 1.0, "p": 1.0},
                   v_spec={"kind": "rank-r", "hs_norm": 1.0, "rank": 1, "decay": 0.1},
                   schwartz_specs=())
    table = run_unbounded_demo(sc)
    assert [r.rank for r in table.rows if r.quantity_name == "v_hs_tail"] == [100, 200, 400]
    tail = table.series("v_hs_tail")
    assert np.all(np.diff(tail) <= 0) and tail[-1] == 0
    rel = table.series("exp_rel_err[t=1]")
    assert np.all(rel <= 1e-7)
    assert rel.max() <= 1e-7 and rel.max() - rel.min() <= 1e-8
    assert np.all(table.series("eta_norm_identity_err") <= 1e-12)
    assert all(math.isnan(r.epsilon) for r in table.rows)


def test_unbounded_demo_zero_perturbation():
    sc = _scenario(ambient_dim=50, demo_dims=(20, 50), t_values=(1.0,),
                   v_spec={"kind": "rank-r", "hs_norm": 0.0, "rank": 1, "decay": 0.1})
    table = run_unbounded_demo(sc)
    assert all(r.value == 0 for r in table.rows)


def test_convergence_table_helpers():
    t = ConvergenceTable()
    t.add(1, 0.1, 3, "b", 2.0)
    t.add(0, 0.1, 3, "a", 1.0)
    t.add(0, 0.1, 3, "b", 4.0)
    assert t.quantities() == ["b", "a"]
    assert np.array_equal(t.series("b"), [2.0, 4.0])
    merged = t.extend(ConvergenceTable())
    assert [r.step_index for r in merged.rows] == [0, 0, 1]


def test_scenario_identity():
    a = _scenario()
    assert a.digest() == _scenario().digest()
    assert a.digest() != replace(a, seed=6).digest()
    assert a.scenario_id == a.digest()[:12]
    assert replace(a, name="x").scenario_id == "x"
