"""IIR noise-shaping filter synthesis via invariant-ellipsoid LMIs.

For a stable order-n plant H the filter R (same order, monic, D_r = 1) is
designed by minimizing an ellipsoid bound mu_eps on the squared output
error, subject to three LMI blocks in the convexified variables
{P_f, P_g, W_f, W_g, L_mat, mu_eps, mu_eta}:

* the invariant-set block (size 4n+1), parameterized by a scalar alpha that
  must be line searched over (0, 1 - rho(A_h)^2);
* a bound block tying mu_eps to the error output (size 2n+1);
* a bound block tying mu_eta to the feedback output (size 2n+1), optionally
  capped by a scalar constraint.

The bilinear form of the invariant-set condition becomes linear after the
change of variables; the filter realization is recovered from the solved
variables through S_f = P_f - P_g^{-1}.  Because the map from the ellipsoid
bounds to the actual l1 norms is loose, every report carries both the bound
values and the true truncated norms of the recovered filter, and cap sweeps
select by the post-hoc objective c*||HR|| + ||R-1||.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .solvers import SdpProblem, SolveStatus, min_eig_residual, solve_sdp
from .statespace import StateSpace, l1_norm, series, spectral_radius

__all__ = [
    "LmiVariables",
    "IirDesignReport",
    "DesignPointError",
    "assemble_lmis",
    "alpha_upper_limit",
    "solve_fixed_alpha",
    "line_search_alpha",
    "sweep_mu_eta_caps",
    "ellipsoid_error_bounds",
    "recover_filter",
]

_FEAS_MARGIN = 1e-8  # epsilon*I shift keeping the barrier strictly interior
# decision-variable box handed to the barrier solver; the LMI gauge leaves
# log-det-increasing rays unbounded and the central path needs a fence well
# above the ellipsoid-matrix scale
_VAR_BOX = 1e10


class DesignPointError(RuntimeError):
    """A single (alpha, cap) design point failed; sweeps skip such points."""


@dataclass(frozen=True)
class LmiVariables:
    """Concrete values of the convexified decision variables."""

    P_f: np.ndarray
    P_g: np.ndarray
    W_f: np.ndarray
    W_g: np.ndarray
    L_mat: np.ndarray
    mu_eps: float
    mu_eta: float

    @property
    def order(self) -> int:
        return self.P_f.shape[0]


class LmiLayout:
    """Index map between the flat SDP vector and named LMI variables.

    P_f and P_g are stored as upper-triangle (vech) entries; mu_eta is only
    present when the eta block participates in the problem.
    """

    def __init__(self, n: int, include_mu_eta: bool = True):
        self.n = n
        self.include_mu_eta = include_mu_eta
        tri = n * (n + 1) // 2
        self.mu_eps_index = 2 * tri + 2 * n + n * n
        self.size = self.mu_eps_index + 1 + (1 if include_mu_eta else 0)
        self._tri = tri

    def pack(self, v: LmiVariables) -> np.ndarray:
        n = self.n
        iu = np.triu_indices(n)
        parts = [np.asarray(v.P_f)[iu], np.asarray(v.P_g)[iu],
                 np.asarray(v.W_f).ravel(), np.asarray(v.W_g).ravel(),
                 np.asarray(v.L_mat).ravel(), [v.mu_eps]]
        if self.include_mu_eta:
            parts.append([v.mu_eta])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def unpack(self, x: np.ndarray, mu_eta: float = 0.0) -> LmiVariables:
        n, tri = self.n, self._tri
        iu = np.triu_indices(n)

        def sym(vech):
            s = np.zeros((n, n))
            s[iu] = vech
            return s + np.triu(s, 1).T

        pos = 0
        p_f = sym(x[pos:pos + tri]); pos += tri
        p_g = sym(x[pos:pos + tri]); pos += tri
        w_f = x[pos:pos + n].reshape(1, n); pos += n
        w_g = x[pos:pos + n].reshape(n, 1); pos += n
        l_mat = x[pos:pos + n * n].reshape(n, n); pos += n * n
        mu_eps = float(x[pos]); pos += 1
        if self.include_mu_eta:
            mu_eta = float(x[pos])
        return LmiVariables(p_f, p_g, w_f, w_g, l_mat, mu_eps, mu_eta)


def lmi_blocks(plant: StateSpace, v: LmiVariables, alpha: float) -> list[np.ndarray]:
    """The three LMI blocks evaluated at concrete variables (no margin shift).

    Returns [invariant-set block (4n+1), eps block (2n+1), eta block (2n+1)].
    """
    n = plant.order
    a_h, b_h, c_h, d_h = plant.A, plant.B, plant.C, plant.D
    eye = np.eye(n)
    m_a = np.block([[a_h @ v.P_f + b_h @ v.W_f, a_h], [v.L_mat, v.P_g @ a_h]])
    m_b = np.vstack([b_h, v.W_g])
    m_c = np.hstack([c_h @ v.P_f + d_h * v.W_f, c_h])
    m_p = np.block([[v.P_f, eye], [eye, v.P_g]])
    m_ct = np.hstack([v.W_f, np.zeros((1, n))])
    blk1 = np.block([
        [(1.0 - alpha) * m_p, np.zeros((2 * n, 1)), m_a.T],
        [np.zeros((1, 2 * n)), np.array([[alpha]]), m_b.T],
        [m_a, m_b, m_p],
    ])
    blk2 = np.block([[m_p, m_c.T], [m_c, np.array([[v.mu_eps]])]])
    blk3 = np.block([[m_p, m_ct.T], [m_ct, np.array([[v.mu_eta]])]])
    return [blk1, blk2, blk3]


def alpha_upper_limit(plant: StateSpace) -> float:
    """Open upper end of the alpha search interval: 1 - rho(A_h)^2."""
    return 1.0 - spectral_radius(plant.A) ** 2


def assemble_lmis(plant: StateSpace, alpha: float,
                  mu_eta_cap: float | None = None,
                  include_eta: bool = True,
                  margin: float = _FEAS_MARGIN,
                  gauge_cap: float | None = 1e6) -> tuple[SdpProblem, LmiLayout]:
    """Scalarized SDP ``min mu_eps`` over the LMI blocks at a fixed alpha.

    The blocks are shifted by -margin*I so the solved point satisfies the
    unshifted LMIs with slack.  When include_eta is false, the eta block and
    the mu_eta variable are omitted (mu_eta is then reported post hoc from
    the tight Schur-complement value).  A finite mu_eta_cap adds the 1x1
    block [cap - mu_eta].

    The filter-coordinate gauge leaves rays with P_g (and with it the block
    scale) unbounded at essentially constant mu_eps; gauge_cap appends
    gauge_cap*I - P_f >= 0 and gauge_cap*I - P_g >= 0 to pin the scale so
    interior-point certificates stay meaningful.  It costs below 1e-3
    relative on mu_eps for well-equilibrated plants.
    """
    if not plant.is_stable:
        raise ValueError("plant must be stable")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if mu_eta_cap is not None and not include_eta:
        raise ValueError("a mu_eta cap requires the eta block")
    n = plant.order
    layout = LmiLayout(n, include_mu_eta=include_eta)
    k = layout.size
    eye = np.eye(n)

    def blocks_at(x: np.ndarray) -> list[np.ndarray]:
        v = layout.unpack(x)
        blks = lmi_blocks(plant, v, alpha)
        if not include_eta:
            blks = blks[:2]
        if mu_eta_cap is not None:
            blks.append(np.array([[mu_eta_cap - v.mu_eta]]))
        if gauge_cap is not None:
            blks.append(gauge_cap * eye - v.P_f)
            blks.append(gauge_cap * eye - v.P_g)
        return blks

    base = blocks_at(np.zeros(k))
    fis = [np.zeros((k, b.shape[0], b.shape[0])) for b in base]
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        for fi, b1, b0 in zip(fis, blocks_at(e), base):
            fi[i] = b1 - b0
    blocks = [(b0 - margin * np.eye(b0.shape[0]), fi)
              for b0, fi in zip(base, fis)]
    cost = np.zeros(k)
    cost[layout.mu_eps_index] = 1.0
    return SdpProblem(cost, blocks), layout


@dataclass(frozen=True)
class IirDesignReport:
    """Solved IIR design point: recovered filter, bounds, and true norms."""

    realization: StateSpace       # R[z] with unit feedthrough
    alpha_star: float
    mu_eps: float
    mu_eta: float
    true_hr_norm: float
    true_r1_norm: float
    objective: float              # c * true_hr_norm + true_r1_norm
    bound_objective: float        # c * sqrt(mu_eps) + sqrt(mu_eta)
    certificate_residual: float   # min eigenvalue over the solved blocks
    plant_feedthrough: float
    variables: LmiVariables
    sdp_status: SolveStatus
    mu_eta_cap: float | None = None

    def min_bits(self) -> int:
        from .fir_design import min_bits_for
        return min_bits_for(self.objective)

    def to_json_dict(self) -> dict:
        return {
            "realization": self.realization.to_json_dict(),
            "alpha_star": self.alpha_star,
            "mu_eps": self.mu_eps,
            "mu_eta": self.mu_eta,
            "mu_eta_cap": self.mu_eta_cap,
            "true_hr_norm": self.true_hr_norm,
            "true_r1_norm": self.true_r1_norm,
            "objective": self.objective,
            "bound_objective": self.bound_objective,
            "certificate_residual": self.certificate_residual,
            "sdp": {"status": self.sdp_status.status,
                    "newton_steps": self.sdp_status.iterations},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True)


def recover_filter(plant: StateSpace, v: LmiVariables) -> tuple[StateSpace, np.ndarray]:
    """Filter realization (A_r, B_r, C_r, 1) from solved variables.

    S_f = P_f - P_g^{-1} must be positive definite for the ellipsoid matrix
    to exist; rejection here discards the design point.
    """
    p_g_inv = np.linalg.inv(v.P_g)
    s_f = v.P_f - p_g_inv
    if min_eig_residual(0.5 * (s_f + s_f.T)) <= 0.0:
        raise DesignPointError("recovered S_f is not positive definite")
    s_f_inv = np.linalg.inv(s_f)
    a_h, b_h = plant.A, plant.B
    a_r = (b_h @ v.W_f - p_g_inv @ (v.L_mat - v.P_g @ a_h @ v.P_f)) @ s_f_inv
    b_r = b_h - p_g_inv @ v.W_g
    c_r = v.W_f @ s_f_inv
    if spectral_radius(a_r) >= 1.0:
        raise DesignPointError("recovered filter is unstable")
    return StateSpace(a_r, b_r, c_r, 1.0), s_f


def _posthoc_mu_eta(plant: StateSpace, v: LmiVariables) -> float:
    """Tight eta bound trace(M_Ct M_P^{-1} M_Ct^T) at the solved variables."""
    n = plant.order
    m_p = np.block([[v.P_f, np.eye(n)], [np.eye(n), v.P_g]])
    m_ct = np.hstack([v.W_f, np.zeros((1, n))])
    return float(m_ct @ np.linalg.solve(m_p, m_ct.T))


def solve_fixed_alpha(plant: StateSpace, alpha: float,
                      mu_eta_cap: float | None = None,
                      weight_c: float = 1.0,
                      norm_tol: float = 1e-9) -> IirDesignReport:
    """Solve ``min mu_eps`` at one alpha and recover the filter.

    With a cap, mu_eta is a decision variable bounded by the cap; without
    one the eta block is dropped and mu_eta is reported post hoc.  Raises
    DesignPointError when alpha is outside the admissible interval, the SDP
    is infeasible, or the recovered realization is rejected.
    """
    limit = alpha_upper_limit(plant)
    if not 0.0 < alpha < limit:
        raise DesignPointError(
            f"alpha={alpha:g} outside the admissible interval (0, {limit:g})")
    include_eta = mu_eta_cap is not None
    problem, layout = assemble_lmis(plant, alpha, mu_eta_cap, include_eta)
    status = solve_sdp(problem, box_bound=_VAR_BOX)
    if status.status != "optimal":
        raise DesignPointError(f"SDP ended with status {status.status!r} "
                               f"at alpha={alpha:g}")
    v = layout.unpack(status.x)
    if not include_eta:
        v = LmiVariables(v.P_f, v.P_g, v.W_f, v.W_g, v.L_mat, v.mu_eps,
                         _posthoc_mu_eta(plant, v))
    realization, _ = recover_filter(plant, v)
    r1_norm, _ = l1_norm(StateSpace(realization.A, realization.B,
                                    realization.C, 0.0), norm_tol)
    hr_norm, _ = l1_norm(series(plant, realization, r_first=False), norm_tol)
    mu_eps = max(v.mu_eps, 0.0)
    mu_eta = max(v.mu_eta, 0.0)
    return IirDesignReport(
        realization=realization,
        alpha_star=alpha,
        mu_eps=mu_eps,
        mu_eta=mu_eta,
        true_hr_norm=hr_norm,
        true_r1_norm=r1_norm,
        objective=weight_c * hr_norm + r1_norm,
        bound_objective=weight_c * math.sqrt(mu_eps) + math.sqrt(mu_eta),
        certificate_residual=float(status.residual),
        plant_feedthrough=plant.D,
        variables=v,
        sdp_status=status,
        mu_eta_cap=mu_eta_cap,
    )


def _alpha_grid(plant: StateSpace, grid_size: int) -> np.ndarray:
    limit = alpha_upper_limit(plant)
    return limit * (np.arange(1, grid_size + 1)) / (grid_size + 1)


def line_search_alpha(plant: StateSpace, grid_size: int,
                      mu_eta_cap: float | None = None,
                      weight_c: float = 1.0,
                      select: str = "mu_eps",
                      collect: list | None = None) -> IirDesignReport:
    """Evaluate solve_fixed_alpha over an interior alpha grid and keep the best.

    select picks the comparison key: "mu_eps" (the convex surrogate) or
    "objective" (the post-hoc norm objective used by the bit-allocation
    sweep).  Infeasible or rejected grid points are skipped; if every point
    fails, the last failure is re-raised.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    if select not in ("mu_eps", "objective"):
        raise ValueError("select must be 'mu_eps' or 'objective'")
    best = None
    last_err: DesignPointError | None = None
    for alpha in _alpha_grid(plant, grid_size):
        try:
            rep = solve_fixed_alpha(plant, float(alpha), mu_eta_cap, weight_c)
        except DesignPointError as exc:
            last_err = exc
            continue
        if collect is not None:
            collect.append(rep)
        key = rep.mu_eps if select == "mu_eps" else rep.objective
        if best is None or key < best[0]:
            best = (key, rep)
    if best is None:
        raise DesignPointError(
            f"all {grid_size} alpha grid points failed; last error: {last_err}")
    return best[1]


def sweep_mu_eta_caps(plant: StateSpace, caps: list[float | None],
                      grid_size: int, weight_c: float,
                      collect: list | None = None) -> IirDesignReport:
    """Bit-allocation sweep: line search alpha for each mu_eta cap, then take
    the report with the smallest post-hoc objective c*||HR|| + ||R-1||.

    The bound objective c*sqrt(mu_eps) + sqrt(mu_eta) is not convex in the
    pair, so the sweep solves the convex mu_eps problem per cap and compares
    candidates by their recovered-filter norms.
    """
    best = None
    last_err: DesignPointError | None = None
    for cap in caps:
        try:
            rep = line_search_alpha(plant, grid_size, cap, weight_c,
                                    select="objective", collect=collect)
        except DesignPointError as exc:
            last_err = exc
            continue
        if best is None or rep.objective < best.objective:
            best = rep
    if best is None:
        raise DesignPointError(f"every cap failed; last error: {last_err}")
    return best


def ellipsoid_error_bounds(report: IirDesignReport, d: float) -> tuple[float, float]:
    """Worst-case output-error and feedback bounds for round-off |w| <= d/2.

    Both ellipsoid traces are scaled by d/2 (the bounds are derived for unit
    input amplitude); the feedthrough term adds |D_h| d/2 to the error bound.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    half = d / 2.0
    eps_bound = (abs(report.plant_feedthrough) + math.sqrt(report.mu_eps)) * half
    eta_bound = math.sqrt(report.mu_eta) * half
    return eps_bound, eta_bound
