import os

import numpy as np
import pytest

from helpers import vertex_lp_minimum
from quantshape.solvers import LpProblem, solve_lp


def test_min_x_above_one():
    st = solve_lp(LpProblem(np.array([1.0]),
                            [(np.array([1.0]), ">=", 1.0)], [(None, None)]))
    assert st.is_optimal
    assert st.objective == pytest.approx(1.0, abs=1e-9)
    assert st.x[0] == pytest.approx(1.0, abs=1e-9)


def test_facet_optimum():
    st = solve_lp(LpProblem(np.array([-1.0, -1.0]),
                            [(np.array([1.0, 1.0]), "<=", 1.0)]))
    assert st.is_optimal
    assert st.objective == pytest.approx(-1.0, abs=1e-9)
    assert st.x[0] + st.x[1] == pytest.approx(1.0, abs=1e-9)


def test_infeasible_detected():
    st = solve_lp(LpProblem(np.array([1.0]),
                            [(np.array([1.0]), ">=", 2.0),
                             (np.array([1.0]), "<=", 1.0)], [(None, None)]))
    assert st.status == "infeasible"


def test_unbounded_detected():
    st = solve_lp(LpProblem(np.array([-1.0]),
                            [(np.array([1.0]), ">=", 0.0)], [(None, None)]))
    assert st.status == "unbounded"


def test_equality_and_upper_bounds():
    st = solve_lp(LpProblem(np.array([1.0, 2.0]),
                            [(np.array([1.0, 1.0]), "=", 3.0)],
                            [(0.0, 2.5), (0.0, None)]))
    assert st.is_optimal
    # x0 capped at 2.5, remainder on the costlier variable
    assert st.x[0] == pytest.approx(2.5, abs=1e-9)
    assert st.objective == pytest.approx(2.5 + 2 * 0.5, abs=1e-9)


def test_maxiter_status():
    rng = np.random.default_rng(0)
    cons = [(rng.normal(0, 1, 20), "<=", 5.0) for _ in range(40)]
    st = solve_lp(LpProblem(rng.normal(0, 1, 20), cons, [(-5.0, 5.0)] * 20),
                  max_pivots=1)
    assert st.status == "maxiter"


def test_random_lps_match_vertex_enumeration():
    # acceptance 7a lives in test_acceptance; this is the fast smoke version
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = 4
        a = rng.normal(0, 1, (6, n))
        b = rng.uniform(0.5, 2.0, 6)
        cost = rng.normal(0, 1, n)
        st = solve_lp(LpProblem(cost, [(a[i], "<=", b[i]) for i in range(6)],
                                [(-3.0, 3.0)] * n))
        ref = vertex_lp_minimum(cost, a, b, -3.0, 3.0)
        assert st.is_optimal and ref is not None
        assert st.objective == pytest.approx(ref, abs=1e-6)


def test_optimal_point_replays_feasible():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(2, 12))
        a = rng.normal(0, 1, (m, n))
        x_feas = rng.normal(0, 1, n)
        b = a @ x_feas + rng.uniform(0.1, 1.0, m)  # guaranteed feasible
        cost = rng.normal(0, 1, n)
        p = LpProblem(cost, [(a[i], "<=", b[i]) for i in range(m)],
                      [(-10.0, 10.0)] * n)
        st = solve_lp(p)
        assert st.is_optimal
        assert st.residual <= 1e-9


def test_relaxation_never_worsens_optimum():
    rng = np.random.default_rng(13)
    for _ in range(15):
        n = 4
        a = rng.normal(0, 1, (7, n))
        b = rng.uniform(0.5, 1.5, 7)
        cost = rng.normal(0, 1, n)
        bounds = [(-2.0, 2.0)] * n
        full = solve_lp(LpProblem(cost, [(a[i], "<=", b[i]) for i in range(7)],
                                  bounds))
        drop = int(rng.integers(0, 7))
        relaxed = solve_lp(LpProblem(
            cost, [(a[i], "<=", b[i]) for i in range(7) if i != drop], bounds))
        assert full.is_optimal and relaxed.is_optimal
        assert relaxed.objective <= full.objective + 1e-8


def test_degenerate_problem_terminates():
    # many redundant constraints through the same vertex
    n = 3
    cons = []
    for sign in (1.0, -1.0):
        for j in range(n):
            e = np.zeros(n)
            e[j] = sign
            cons.append((e, "<=", 0.0 if sign > 0 else 1.0))
    cons.extend([(np.ones(n), "<=", 0.0), (np.ones(n), "<=", 0.0)])
    st = solve_lp(LpProblem(-np.ones(n), cons, [(None, None)] * n))
    assert st.is_optimal
    assert st.objective == pytest.approx(0.0, abs=1e-9)


def test_debug_dump(tmp_path):
    path = os.path.join(tmp_path, "lp.json")
    p = LpProblem(np.array([1.0]), [(np.array([1.0]), ">=", 1.0)], [(None, None)])
    solve_lp(p, dump_path=path)
    import json
    obj = json.load(open(path))
    assert obj["objective"] == [1.0]
    assert obj["constraints"][0]["rel"] == ">="
    assert obj["bounds"] == [[None, None]]
