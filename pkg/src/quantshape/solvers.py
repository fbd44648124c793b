"""Self-contained dense optimization kernels.

Two solvers live here:

* ``solve_lp`` -- a two-phase primal simplex on a dense tableau.  General
  bounds and {<=, =, >=} rows are reduced to standard form, rows are
  equilibrated, and Bland's anti-cycling rule kicks in after a run of
  degenerate pivots.

* ``solve_sdp`` -- a log-det barrier interior-point method for problems
  ``min c.x  s.t.  F0 + sum_i x_i Fi >= 0`` over one or more symmetric
  blocks, with damped Newton steps on the central path and a phase-1
  t-shift (``F(x) + t I >= 0``) to find a strictly feasible start.

Both return a :class:`SolveStatus`; malformed inputs raise ``ValueError``.
Instances own their scratch memory, so separate solves may run concurrently.

Debug dumps: passing ``dump_path`` writes the instance as JSON before
solving.  LP schema: ``{"objective": [...], "constraints": [{"a": [...],
"rel": "<=|=|>=", "b": f}, ...], "bounds": [[lo|null, hi|null], ...]}``.
SDP schema: ``{"objective": [...], "blocks": [{"F0": [[...]], "Fi":
[[[...]], ...]}, ...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .eig import symmetric_eigenvalues

__all__ = [
    "LpProblem",
    "SdpProblem",
    "SolveStatus",
    "solve_lp",
    "solve_sdp",
    "min_eig_residual",
]

_RELATIONS = ("<=", "=", ">=")


@dataclass(frozen=True)
class SolveStatus:
    """Outcome of an LP/SDP solve.

    status is one of "optimal", "infeasible", "unbounded", "maxiter".
    residual is the primal feasibility certificate: for LPs the maximum
    constraint violation after row scaling, for SDPs the smallest LMI block
    eigenvalue (>= 0 means feasible).
    """

    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    residual: float | None = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class LpProblem:
    """min objective.x subject to rows (a, rel, b) and per-variable bounds.

    bounds entries are (lo, hi) with None meaning unbounded on that side;
    variables default to lo=0, hi=None when bounds is omitted.
    """

    objective: np.ndarray
    constraints: list[tuple[np.ndarray, str, float]] = field(default_factory=list)
    bounds: list[tuple[float | None, float | None]] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        nvar = self.objective.size
        rows = []
        for a, rel, b in self.constraints:
            a = np.asarray(a, dtype=float).ravel()
            if a.size != nvar:
                raise ValueError(f"constraint length {a.size} != {nvar} variables")
            if rel not in _RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
            b = float(b)
            if not np.isfinite(b) or not np.all(np.isfinite(a)):
                raise ValueError("constraints must be finite")
            rows.append((a, rel, b))
        self.constraints = rows
        if self.bounds is None:
            self.bounds = [(0.0, None)] * nvar
        if len(self.bounds) != nvar:
            raise ValueError("bounds length mismatch")

    @property
    def num_vars(self) -> int:
        return self.objective.size

    def violation(self, x: np.ndarray, scaled: bool = True) -> float:
        """Max constraint/bound violation of a point (row-scaled by default)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for a, rel, b in self.constraints:
            scale = max(np.max(np.abs(a)), abs(b), 1e-30) if scaled else 1.0
            ax = float(a @ x)
            if rel == "<=":
                worst = max(worst, (ax - b) / scale)
            elif rel == ">=":
                worst = max(worst, (b - ax) / scale)
            else:
                worst = max(worst, abs(ax - b) / scale)
        for xi, (lo, hi) in zip(x, self.bounds):
            if lo is not None:
                worst = max(worst, lo - xi)
            if hi is not None:
                worst = max(worst, xi - hi)
        return worst

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective.tolist(),
            "constraints": [
                {"a": a.tolist(), "rel": rel, "b": b} for a, rel, b in self.constraints
            ],
            "bounds": [[lo, hi] for lo, hi in self.bounds],
        }


@dataclass
class SdpProblem:
    """min objective.x subject to F0 + sum_i x_i Fi >= 0 per block.

    blocks is a list of (F0, Fi) pairs with F0 an (s, s) symmetric matrix and
    Fi an array of shape (num_vars, s, s) of symmetric coefficient matrices.
    """

    objective: np.ndarray
    blocks: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        k = self.objective.size
        checked = []
        for f0, fi in self.blocks:
            f0 = np.asarray(f0, dtype=float)
            fi = np.asarray(fi, dtype=float)
            s = f0.shape[0]
            if f0.shape != (s, s):
                raise ValueError("F0 must be square")
            if fi.shape != (k, s, s):
                raise ValueError(f"Fi must have shape ({k}, {s}, {s}), got {fi.shape}")
            if np.max(np.abs(f0 - f0.T)) > 1e-10 * max(1.0, np.max(np.abs(f0))):
                raise ValueError("F0 must be symmetric")
            f0 = 0.5 * (f0 + f0.T)
            fi = 0.5 * (fi + np.transpose(fi, (0, 2, 1)))
            checked.append((f0, fi))
        self.blocks = checked

    @property
    def num_vars(self) -> int:
        return self.objective.size

    def block_values(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [f0 + np.tensordot(x, fi, axes=(0, 0)) for f0, fi in self.blocks]

    def min_block_eig(self, x: np.ndarray) -> float:
        return min(min_eig_residual(f) for f in self.block_values(x))

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective.tolist(),
            "blocks": [{"F0": f0.tolist(), "Fi": fi.tolist()} for f0, fi in self.blocks],
        }


def min_eig_residual(block: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (certificate checking)."""
    block = np.asarray(block, dtype=float)
    if block.size == 0:
        return 0.0
    vals = symmetric_eigenvalues(block)  # raises on non-symmetric input
    return float(vals[0])


def _dump(problem, path: str | None):
    if path:
        with open(path, "w") as fh:
            json.dump(problem.to_json_dict(), fh, indent=1)


# ---------------------------------------------------------------------------
# linear programming: two-phase primal simplex
# ---------------------------------------------------------------------------

_PIV_TOL = 1e-9
_COST_TOL = 1e-9
_DEGEN_BLAND_TRIGGER = 50


def solve_lp(p: LpProblem, max_pivots: int = 50_000,
             dump_path: str | None = None) -> SolveStatus:
    """Two-phase dense primal simplex.

    Dantzig pricing, switching to Bland's rule after a run of degenerate
    pivots; rows are equilibrated before the tableau is formed.  On
    "optimal" the returned point replays through the original constraints
    with scaled violation <= ~1e-9.
    """
    _dump(p, dump_path)
    nvar = p.num_vars

    # --- reduce variables to x' >= 0 via shifts / flips / splits
    col_of = []           # per original variable: ("shift", lo, j) etc.
    ncols = 0
    extra_rows: list[tuple[dict, str, float]] = []  # sparse upper-bound rows
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is not None:
            col_of.append(("shift", lo, ncols))
            if hi is not None:
                extra_rows.append(({ncols: 1.0}, "<=", hi - lo))
            ncols += 1
        elif hi is not None:
            col_of.append(("flip", hi, ncols))
            ncols += 1
        else:
            col_of.append(("split", ncols, ncols + 1))
            ncols += 2

    def transform_row(a: np.ndarray, b: float) -> tuple[np.ndarray, float]:
        row = np.zeros(ncols)
        shift = 0.0
        for j, aj in enumerate(a):
            if aj == 0.0:
                continue
            kind = col_of[j]
            if kind[0] == "shift":
                row[kind[2]] += aj
                shift += aj * kind[1]
            elif kind[0] == "flip":
                row[kind[2]] -= aj
                shift += aj * kind[1]
            else:
                row[kind[1]] += aj
                row[kind[2]] -= aj
        return row, b - shift

    rows = []
    for a, rel, b in p.constraints:
        row, bb = transform_row(a, b)
        rows.append((row, rel, bb))
    for sparse, rel, bb in extra_rows:
        row = np.zeros(ncols)
        for cj, v in sparse.items():
            row[cj] = v
        rows.append((row, rel, bb))

    cost, cost_shift = transform_row(p.objective, 0.0)
    cost_shift = -cost_shift  # constant term of the objective

    m = len(rows)
    if m == 0:
        # bounded only if cost is zero on free directions; handle trivially
        x = np.zeros(ncols)
        if np.any(cost < -_COST_TOL) or np.any(cost[_split_cols(col_of)] != 0.0):
            if np.any(cost != 0.0):
                return SolveStatus("unbounded")
        return SolveStatus("optimal", cost_shift, _recover(x, col_of, nvar),
                           0.0, 0)

    # --- row equilibration, slack insertion, b >= 0
    A = np.zeros((m, ncols))
    b_vec = np.zeros(m)
    senses = []
    for i, (row, rel, bb) in enumerate(rows):
        scale = max(np.max(np.abs(row)), abs(bb))
        if scale <= 0.0:
            scale = 1.0
        A[i] = row / scale
        b_vec[i] = bb / scale
        senses.append(rel)

    nslack = sum(1 for s in senses if s != "=")
    total = ncols + nslack
    T = np.zeros((m, total + 1))
    T[:, :ncols] = A
    T[:, -1] = b_vec
    si = ncols
    slack_col = {}
    for i, s in enumerate(senses):
        if s == "<=":
            T[i, si] = 1.0
            slack_col[i] = si
            si += 1
        elif s == ">=":
            T[i, si] = -1.0
            slack_col[i] = si
            si += 1
    for i in range(m):
        if T[i, -1] < 0:
            T[i] = -T[i]

    # --- phase 1 basis: reuse +1 slacks, crash structural singleton columns,
    # add artificials elsewhere
    basis = np.full(m, -1, dtype=int)
    covered = np.zeros(m, dtype=bool)
    for i in range(m):
        j = slack_col.get(i)
        if j is not None and T[i, j] == 1.0:
            basis[i] = j
            covered[i] = True
    nonzero_count = np.sum(np.abs(T[:, :ncols]) > 0.0, axis=0)
    for j in np.where(nonzero_count == 1)[0]:
        i = int(np.argmax(np.abs(T[:, j]) > 0.0))
        if not covered[i] and T[i, j] > _PIV_TOL:
            T[i] /= T[i, j]
            basis[i] = j
            covered[i] = True
    needs_art = [i for i in range(m) if not covered[i]]
    nart = len(needs_art)
    if nart:
        T = np.hstack([T[:, :total], np.zeros((m, nart)), T[:, -1:]])
        for k, i in enumerate(needs_art):
            T[i, total + k] = 1.0
            basis[i] = total + k
    art_cols = set(range(total, total + nart))
    ncols_t = T.shape[1] - 1

    def run_simplex(cost_row: np.ndarray, pivots_left: int,
                    allowed: np.ndarray) -> tuple[str, int]:
        """Primal simplex on tableau T with the given cost row (modified in
        place).  allowed masks columns eligible to enter."""
        degen = 0
        used = 0
        while True:
            red = cost_row[:ncols_t]
            if degen <= _DEGEN_BLAND_TRIGGER:
                j = -1
                best = -_COST_TOL
                cand = np.where(allowed[:ncols_t] & (red < best))[0]
                if cand.size:
                    j = cand[np.argmin(red[cand])]
            else:  # Bland: smallest eligible index
                cand = np.where(allowed[:ncols_t] & (red < -_COST_TOL))[0]
                j = cand[0] if cand.size else -1
            if j < 0:
                return "optimal", used
            col = T[:, j]
            pos = col > _PIV_TOL
            if not np.any(pos):
                return "unbounded", used
            ratios = np.full(m, np.inf)
            ratios[pos] = T[pos, -1] / col[pos]
            i = int(np.argmin(ratios))
            if used >= pivots_left:
                return "maxiter", used
            used += 1
            degen = degen + 1 if ratios[i] < _PIV_TOL else 0
            # pivot on (i, j)
            T[i] /= T[i, j]
            fac = T[:, j].copy()
            fac[i] = 0.0
            T[:, :] -= np.outer(fac, T[i])
            cost_row -= cost_row[j] * T[i]
            basis[i] = j

    allowed = np.ones(ncols_t, dtype=bool)
    pivots_used = 0
    if nart:
        c1 = np.zeros(ncols_t + 1)
        for j in art_cols:
            c1[j] = 1.0
        for i in range(m):  # price out the initial artificial basis
            if basis[i] in art_cols:
                c1 -= T[i]
        status, used = run_simplex(c1, max_pivots, allowed)
        pivots_used += used
        if status == "maxiter":
            return SolveStatus("maxiter", iterations=pivots_used)
        phase1_val = -c1[-1]
        if phase1_val > 1e-7:
            return SolveStatus("infeasible", objective=None, x=None,
                               residual=phase1_val, iterations=pivots_used)
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] in art_cols:
                row = T[i, :total]
                j = -1
                nz = np.where(np.abs(row) > 1e-7)[0]
                if nz.size:
                    j = int(nz[0])
                if j >= 0:
                    T[i] /= T[i, j]
                    fac = T[:, j].copy()
                    fac[i] = 0.0
                    T[:, :] -= np.outer(fac, T[i])
                    basis[i] = j
                # else: redundant row; leave the zero-level artificial basic
        allowed[list(art_cols)] = False

    c2 = np.zeros(ncols_t + 1)
    c2[:ncols] = cost
    for i in range(m):  # express objective in terms of the current basis
        j = basis[i]
        if c2[j] != 0.0:
            c2 -= c2[j] * T[i]
    status, used = run_simplex(c2, max_pivots - pivots_used, allowed)
    pivots_used += used
    if status == "maxiter":
        return SolveStatus("maxiter", iterations=pivots_used)
    if status == "unbounded":
        return SolveStatus("unbounded", iterations=pivots_used)

    xs = np.zeros(ncols_t)
    xs[basis[basis >= 0]] = T[basis >= 0, -1]
    x = _recover(xs[:ncols], col_of, nvar)
    obj = float(p.objective @ x)
    return SolveStatus("optimal", obj, x, p.violation(x), pivots_used)


def _split_cols(col_of) -> list[int]:
    return [k[1] for k in col_of if k[0] == "split"]


def _recover(xs: np.ndarray, col_of, nvar: int) -> np.ndarray:
    x = np.zeros(nvar)
    for j, kind in enumerate(col_of):
        if kind[0] == "shift":
            x[j] = kind[1] + xs[kind[2]]
        elif kind[0] == "flip":
            x[j] = kind[1] - xs[kind[2]]
        else:
            x[j] = xs[kind[1]] - xs[kind[2]]
    return x


# ---------------------------------------------------------------------------
# semidefinite programming: log-det barrier with damped Newton
# ---------------------------------------------------------------------------

_BARRIER_MU_FACTOR = 10.0
_NEWTON_TOL = 1e-11
_MAX_NEWTON_PER_STAGE = 100


def _chol_pd(f: np.ndarray) -> np.ndarray | None:
    """Cholesky factor of f, or None when f is not positive definite."""
    try:
        return np.linalg.cholesky(f)
    except np.linalg.LinAlgError:
        return None


def _barrier_value(blocks, x, box: float | None) -> float | None:
    """-sum log det F_j(x) (+ box terms), or None if x is not interior."""
    total = 0.0
    if box is not None:
        if np.max(np.abs(x)) >= box:
            return None
        total -= float(np.sum(np.log(box - x) + np.log(box + x)))
    for f0, fi in blocks:
        f = f0 + np.tensordot(x, fi, axes=(0, 0))
        L = _chol_pd(f)
        if L is None:
            return None
        total -= 2.0 * np.sum(np.log(np.diag(L)))
    return total


def _newton_direction(blocks, x, tc, box: float | None):
    """Gradient, Hessian and direction of t*c.x + barrier at x."""
    k = x.size
    g = tc.copy()
    H = np.zeros((k, k))
    if box is not None:
        # -log(box - x_i) - log(box + x_i) terms keep the path bounded along
        # directions the LMI blocks leave flat
        g += 1.0 / (box - x) - 1.0 / (box + x)
        H[np.diag_indices(k)] += 1.0 / (box - x) ** 2 + 1.0 / (box + x) ** 2
    for f0, fi in blocks:
        f = f0 + np.tensordot(x, fi, axes=(0, 0))
        L = _chol_pd(f)
        if L is None:
            return None, None, None
        # G_i = F^{-1} Fi ; grad_i = -tr(G_i) ; H_ij = tr(G_i G_j)
        # solved through the Cholesky factor: LU on F itself can flag exact
        # singularity near the central-path limit even when F is PD
        s = f.shape[0]
        rhs = np.transpose(fi, (1, 0, 2)).reshape(s, k * s)
        try:
            G = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        except np.linalg.LinAlgError:
            return None, None, None
        G = G.reshape(s, k, s).transpose(1, 0, 2)
        g -= np.trace(G, axis1=1, axis2=2)
        Gv = G.reshape(k, s * s)
        GvT = np.transpose(G, (0, 2, 1)).reshape(k, s * s)
        H += Gv @ GvT.T
    H = 0.5 * (H + H.T)
    # Jacobi-preconditioned Newton solve: the decision variables span many
    # orders of magnitude, and equilibrating the Hessian keeps the Cholesky
    # accurate (the direction itself is affine-invariant)
    dscale = 1.0 / np.sqrt(np.maximum(np.diag(H), 1e-300))
    Hs = H * np.outer(dscale, dscale)
    gs = g * dscale
    try:
        Lh = np.linalg.cholesky(Hs + 1e-13 * np.eye(k))
        ys = -np.linalg.solve(Lh.T, np.linalg.solve(Lh, gs))
    except np.linalg.LinAlgError:
        ys = -np.linalg.lstsq(Hs + 1e-13 * np.eye(k), gs, rcond=None)[0]
    dx = ys * dscale
    return g, H, dx


def _centering(blocks, c, x, t_bar, box, max_steps=_MAX_NEWTON_PER_STAGE,
               stop=None):
    """Damped Newton minimization of t*c.x + barrier from an interior point.

    stop, when given, is checked after every accepted step and ends the
    stage early (used by phase 1 to bail out as soon as a strictly feasible
    point for the original problem appears).
    """
    steps = 0
    fval = _barrier_value(blocks, x, box)
    for _ in range(max_steps):
        g, H, dx = _newton_direction(blocks, x, t_bar * c, box)
        if dx is None:
            break
        lam2 = float(-g @ dx)
        if lam2 / 2.0 <= _NEWTON_TOL:
            break
        step = 1.0
        base = t_bar * float(c @ x) + fval
        gdx = float(g @ dx)
        while step > 1e-13:
            xn = x + step * dx
            fn = _barrier_value(blocks, xn, box)
            if fn is not None and t_bar * float(c @ xn) + fn <= base + 0.25 * step * gdx:
                break
            step *= 0.5
        else:
            break
        x = x + step * dx
        fval = _barrier_value(blocks, x, box)
        steps += 1
        if stop is not None and stop(x):
            break
    return x, steps


def solve_sdp(p: SdpProblem, gap_tol: float | None = None, x0: np.ndarray | None = None,
              max_stages: int = 80, box_bound: float | None = None,
              dump_path: str | None = None) -> SolveStatus:
    """Log-det barrier interior-point solve of an LMI-constrained problem.

    The central-path parameter grows by a fixed factor per stage and the
    solve stops when the duality-gap surrogate nu/t (nu = total block size,
    plus box terms) falls below gap_tol (default 1e-8 per block).  A phase-1
    shift ``F(x) + t I >= 0`` finds a strictly feasible start when needed;
    its optimum going negative is the strict feasibility certificate.

    box_bound adds |x_i| < box_bound barrier terms.  Problems whose
    feasible set is unbounded in directions of growing log det (common for
    ill-gauged LMI parameterizations) need this safeguard, otherwise the
    central path escapes to infinity; choose it orders of magnitude above
    the expected solution scale.
    """
    _dump(p, dump_path)
    k = p.num_vars
    c = p.objective
    if gap_tol is None:
        gap_tol = 1e-8 * len(p.blocks)
    nu = sum(f0.shape[0] for f0, _ in p.blocks)
    if box_bound is not None:
        nu += 2 * k
    x = np.zeros(k) if x0 is None else np.asarray(x0, dtype=float).copy()

    total_newton = 0
    if p.min_block_eig(x) <= 0.0:
        x, feasible, steps = _phase1(p, x, box_bound)
        total_newton += steps
        if not feasible:
            return SolveStatus("infeasible", iterations=total_newton)

    blocks = p.blocks
    t_bar = 1.0
    obj_scale = max(1.0, abs(float(c @ x)))
    for _ in range(max_stages):
        x, steps = _centering(blocks, c, x, t_bar, box_bound)
        total_newton += steps
        obj = float(c @ x)
        if abs(obj) > 1e14 * obj_scale:
            return SolveStatus("unbounded", objective=obj, x=x,
                               iterations=total_newton)
        if nu / t_bar < gap_tol:
            return SolveStatus("optimal", obj, x, p.min_block_eig(x),
                               total_newton)
        t_bar *= _BARRIER_MU_FACTOR
    return SolveStatus("maxiter", float(c @ x), x, p.min_block_eig(x),
                       total_newton)


def _phase1(p: SdpProblem, x: np.ndarray,
            box: float | None) -> tuple[np.ndarray, bool, int]:
    """Minimize t subject to F_j(x) + t I >= 0 until t < 0 (strict point)."""
    k = p.num_vars
    shifted_blocks = []
    for f0, fi in p.blocks:
        s = f0.shape[0]
        fi_ext = np.concatenate([fi, np.eye(s)[None, :, :]], axis=0)
        shifted_blocks.append((f0, fi_ext))
    worst = min(min_eig_residual(f) for f in p.block_values(x))
    t0 = -worst + max(1.0, abs(worst))
    z = np.concatenate([x, [t0]])
    c_ext = np.zeros(k + 1)
    c_ext[-1] = 1.0

    def strictly_feasible(z_now: np.ndarray) -> bool:
        return _barrier_value(p.blocks, z_now[:k], None) is not None

    total = 0
    t_bar = 1.0
    nu = sum(f0.shape[0] for f0, _ in p.blocks)
    if box is not None:
        nu += 2 * (k + 1)
    for _ in range(60):
        z, steps = _centering(shifted_blocks, c_ext, z, t_bar, box,
                              stop=strictly_feasible)
        total += steps
        if strictly_feasible(z) and p.min_block_eig(z[:k]) > 0.0:
            return z[:k], True, total
        if nu / t_bar < 1e-9 * max(1.0, abs(z[-1])):
            break
        t_bar *= _BARRIER_MU_FACTOR
    return z[:k], z[-1] < 0.0 and p.min_block_eig(z[:k]) > 0.0, total
