"""Shared oracles for the test suite.

Every oracle here is independent of the implementation path it checks:
vertex enumeration for LPs, dense grid search for FIR designs, direct state
iteration for filtering, numpy's LAPACK-backed eigensolvers for spectra.
"""

import itertools

import numpy as np

from quantshape.statespace import StateSpace


def random_stable_ss(rng: np.random.Generator, n: int,
                     rho_max: float = 0.9) -> StateSpace:
    """Random stable SISO system with spectral radius <= rho_max."""
    a = rng.normal(0.0, 1.0, (n, n))
    radius = max(abs(np.linalg.eigvals(a))) if n else 0.0
    if radius > 0:
        a *= rng.uniform(0.3, 1.0) * rho_max / radius
    b = rng.normal(0.0, 1.0, (n, 1))
    c = rng.normal(0.0, 1.0, (1, n))
    d = float(rng.normal(0.0, 1.0))
    return StateSpace(a, b, c, d)


def filter_sequence(s: StateSpace, u: np.ndarray) -> np.ndarray:
    """Output of the system for an input sequence, by direct state iteration."""
    x = np.zeros(s.order)
    out = np.zeros(u.size)
    for k in range(u.size):
        out[k] = (s.C[0] @ x if s.order else 0.0) + s.D * u[k]
        if s.order:
            x = s.A @ x + s.B[:, 0] * u[k]
    return out


def vertex_lp_minimum(c: np.ndarray, a_ub: np.ndarray, b_ub: np.ndarray,
                      lo: float, hi: float) -> float | None:
    """Exhaustive vertex enumeration for min c.x s.t. A x <= b, lo <= x <= hi.

    Every vertex of the (bounded) polytope is the intersection of n active
    constraints; returns the best feasible objective, or None if no vertex
    is feasible.
    """
    n = c.size
    rows = [np.concatenate([a_ub[i], [b_ub[i]]]) for i in range(a_ub.shape[0])]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append(np.concatenate([e, [hi]]))
        rows.append(np.concatenate([-e, [-lo]]))
    rows = np.array(rows)
    best = None
    for comb in itertools.combinations(range(rows.shape[0]), n):
        m = rows[list(comb), :n]
        if abs(np.linalg.det(m)) < 1e-10:
            continue
        x = np.linalg.solve(m, rows[list(comb), n])
        if np.all(rows[:, :n] @ x <= rows[:, n] + 1e-9):
            val = float(c @ x)
            if best is None or val < best:
                best = val
    return best


def grid_search_fir2(h: np.ndarray, m: int, c_eps: float, c_eta: float,
                     span: float = 2.0, coarse: float = 1e-2,
                     fine: float = 1e-3) -> tuple[float, tuple[float, float]]:
    """Brute-force 2-tap FIR design: minimize
    c_eps * sum_k |h_k + r1 h_{k-1} + r2 h_{k-2}| + c_eta * (|r1| + |r2|)
    over [-span, span]^2, coarse grid then a fine local refinement (the
    objective is convex, so the refinement window contains the optimum).
    """
    def objective_grid(r1s, r2s):
        r1g, r2g = np.meshgrid(r1s, r2s, indexing="ij")
        total = np.zeros_like(r1g)
        for k in range(1, m + 1):
            fk = h[k] + r1g * (h[k - 1] if k >= 1 else 0.0) \
                 + r2g * (h[k - 2] if k >= 2 else 0.0)
            total += np.abs(fk)
        total = c_eps * total + c_eta * (np.abs(r1g) + np.abs(r2g))
        idx = np.unravel_index(np.argmin(total), total.shape)
        return float(total[idx]), (float(r1s[idx[0]]), float(r2s[idx[1]]))

    grid = np.arange(-span, span + coarse / 2, coarse)
    best, (r1, r2) = objective_grid(grid, grid)
    win = 1.5 * coarse
    fine1 = np.arange(r1 - win, r1 + win + fine / 2, fine)
    fine2 = np.arange(r2 - win, r2 + win + fine / 2, fine)
    best_f, taps = objective_grid(fine1, fine2)
    return min(best, best_f), taps
