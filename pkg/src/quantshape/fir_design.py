"""FIR noise-shaping filter synthesis by linear programming.

Three design problems are covered for a stable plant H and a monic FIR
filter R of order n:

* ``design_min_bits`` -- minimize c*||H R|| + ||R - 1|| (the bit-allocation
  objective; c = observation bound / output-error bound), then derive the
  quantization interval and the minimum bit count that certifies a
  no-overload quantizer.
* ``design_min_error`` -- minimize ||H R|| subject to ||R - 1|| <= cap (the
  fixed-bits error floor).
* ``tradeoff_sweep`` -- run ``design_min_error`` over a cap grid and convert
  the resulting curve into per-bit worst-case error bounds
  L_y * ||H R|| / (2^b - ||R - 1||).

The norm ||H R|| is handled through the truncated impulse response of the
cascade, whose samples are affine in the taps: conv([1, r_1..r_n], h).
Inside the LP the absolute values are split into nonnegative pairs
(u - v for impulse samples, r+ - r- for taps), which is equivalent to the
auxiliary-bound formulation and starts from an obvious feasible basis.
Reported norms are always recomputed from the designed taps with the
certified adaptive truncation, never read off the LP value alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .solvers import LpProblem, SolveStatus, solve_lp
from .statespace import (FirFilter, StateSpace, fir_realization,
                         impulse_response, l1_norm, series, spectral_radius)

__all__ = [
    "DesignSpec",
    "DesignReport",
    "TradeoffCurve",
    "design_min_bits",
    "design_min_error",
    "static_quantizer_bits",
    "static_norm_product",
    "tradeoff_sweep",
    "min_bits_for",
    "quantizer_interval",
]

# truncation-selection tolerance for the adaptive m policy; tight enough that
# the design objective is insensitive (<< 1e-9) to further increases of m
_TRUNC_TOL = 1e-11


class DesignError(RuntimeError):
    """A design problem could not be solved (unexpected LP failure)."""


@dataclass(frozen=True)
class DesignSpec:
    """Inputs of an FIR design problem.

    truncation None selects m adaptively from the certified l1-norm tail
    bound of the plant.  gamma_eps is the output-error bound, l_y the
    observation bound; their ratio c weighs the two norms in the objective.
    """

    plant: StateSpace
    order: int
    gamma_eps: float
    l_y: float
    truncation: int | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("filter order must be >= 1")
        if not (self.gamma_eps > 0 and np.isfinite(self.gamma_eps)):
            raise ValueError("gamma_eps must be positive and finite")
        if not (self.l_y > 0 and np.isfinite(self.l_y)):
            raise ValueError("l_y must be positive and finite")
        if not self.plant.is_stable:
            raise ValueError("plant must be stable")
        if self.truncation is not None and self.truncation < self.order:
            raise ValueError("truncation must be >= filter order")

    @property
    def c(self) -> float:
        """Objective weight: observation bound over error bound."""
        return self.l_y / self.gamma_eps

    def effective_truncation(self) -> int:
        """LP truncation length: smallest m whose certified geometric tail
        bound is below 1e-7 of the plant norm (same window-fit bound as the
        adaptive l1 norm, refined below its power-of-two overshoot)."""
        if self.truncation is not None:
            return self.truncation
        rho = spectral_radius(self.plant.A) if self.plant.order else 0.0
        if rho < 1e-14:
            return self.plant.order + 2 * self.order
        value, m_hi = l1_norm(self.plant, _TRUNC_TOL)
        h = impulse_response(self.plant, m_hi)
        q = rho + (1.0 - rho) / 64.0
        window = max(2 * self.plant.order, 16)
        logq = math.log(q)
        with np.errstate(divide="ignore"):
            logr = np.log(np.abs(h)) - np.arange(m_hi + 1) * logq
        target = math.log(1e-7 * max(value, 1e-300)) + math.log(1.0 - q)
        m_lo = max(2 * self.order, window + 1)
        for m in range(m_lo, m_hi + 1):
            logcoef = np.max(logr[m - window:m + 1])
            if logcoef == -np.inf or logcoef + (m + 1) * logq < target:
                return m + 2 * self.order
        return m_hi + 2 * self.order


@dataclass(frozen=True)
class DesignReport:
    """A designed FIR filter together with its certified figures of merit."""

    filter: FirFilter
    hr_norm: float            # ||H R||, recomputed post hoc
    feedback_norm: float      # ||R - 1|| = sum |r_k|, exact
    objective: float          # c * ||H R|| + ||R - 1||
    interval: float           # quantization interval d = 2 gamma_eps / ||H R||
    min_bits: int
    lp_status: SolveStatus
    truncation: int

    def to_json_dict(self) -> dict:
        return {
            "taps": list(self.filter.coeffs),
            "hr_norm": self.hr_norm,
            "feedback_norm": self.feedback_norm,
            "objective": self.objective,
            "interval": self.interval,
            "min_bits": self.min_bits,
            "truncation": self.truncation,
            "lp": {
                "status": self.lp_status.status,
                "objective": self.lp_status.objective,
                "residual": self.lp_status.residual,
                "pivots": self.lp_status.iterations,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True)


@dataclass
class TradeoffCurve:
    """Error-floor curve over feedback-norm caps plus per-bit error bounds."""

    caps: list[float]
    hr_norms: list[float]
    feedback_norms: list[float]
    filters: list[FirFilter]
    objectives: list[float]               # c * hr + feedback per point
    per_bit: list[tuple[int, float, int]]  # (bits, eps bound, argmin index)
    failures: list[tuple[float, str]] = field(default_factory=list)

    def points_csv(self) -> str:
        lines = ["cap,hr_norm,r_norm,objective"]
        for cap, hr, rn, obj in zip(self.caps, self.hr_norms,
                                    self.feedback_norms, self.objectives):
            lines.append(",".join(repr(float(v)) for v in (cap, hr, rn, obj)))
        return "\n".join(lines) + "\n"

    def per_bit_csv(self) -> str:
        lines = ["bits,eps_bound"]
        for bits, bound, _ in self.per_bit:
            lines.append(f"{bits},{float(bound)!r}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "points": [
                {"cap": cap, "hr_norm": hr, "r_norm": rn, "objective": obj,
                 "taps": list(f.coeffs)}
                for cap, hr, rn, obj, f in zip(self.caps, self.hr_norms,
                                               self.feedback_norms,
                                               self.objectives, self.filters)
            ],
            "per_bit": [
                {"bits": b, "eps_bound": bound, "point_index": idx}
                for b, bound, idx in self.per_bit
            ],
            "failures": [{"cap": cap, "error": msg} for cap, msg in self.failures],
        }


def quantizer_interval(gamma_eps: float, hr_norm: float) -> float:
    """Interval d that makes ||HR|| d/2 equal the output-error bound."""
    return 2.0 * gamma_eps / hr_norm


def min_bits_for(value: float) -> int:
    """Smallest b with value <= 2^b; exact powers of two resolve downward."""
    if value <= 1.0:
        return 0
    b = math.ceil(math.log2(value))
    if 2.0 ** (b - 1) >= value * (1.0 - 1e-12):
        b -= 1
    return b


def _convolution_rows(h: np.ndarray, n: int, m: int) -> np.ndarray:
    """rows[k-1, j-1] = h_{k-j}; the map taps -> impulse samples of H(R-1)."""
    rows = np.zeros((m, n))
    for k in range(1, m + 1):
        for j in range(1, min(n, k) + 1):
            rows[k - 1, j - 1] = h[k - j]
    return rows


def _solve_shaping_lp(h: np.ndarray, n: int, m: int,
                      c_eps: float, c_eta: float,
                      eta_cap: float | None,
                      dump_path: str | None = None) -> tuple[np.ndarray, SolveStatus]:
    """Shared LP core: min c_eps*sum|f_k(r)| + c_eta*sum|r_j| (+ cap on the
    latter), with the absolute values split into nonnegative pairs.

    Variables: [r+ (n), r- (n), u (m), v (m)];  f_k(r) = u_k - v_k.
    """
    nv = 2 * n + 2 * m
    cost = np.zeros(nv)
    cost[:2 * n] = c_eta
    cost[2 * n:] = c_eps
    rows = _convolution_rows(h, n, m)
    cons = []
    for k in range(m):
        coef = np.zeros(nv)
        coef[:n] = -rows[k]
        coef[n:2 * n] = rows[k]
        coef[2 * n + k] = 1.0
        coef[2 * n + m + k] = -1.0
        cons.append((coef, "=", h[k + 1]))
    if eta_cap is not None:
        coef = np.zeros(nv)
        coef[:2 * n] = 1.0
        cons.append((coef, "<=", eta_cap))
    problem = LpProblem(cost, cons, [(0.0, None)] * nv)
    status = solve_lp(problem, dump_path=dump_path)
    if status.status != "optimal":
        raise DesignError(f"shaping LP ended with status {status.status!r}; "
                          "the problem is always feasible (R = 1), so this "
                          "indicates a solver failure")
    taps = status.x[:n] - status.x[n:2 * n]
    return taps, status


def _report_from_taps(spec: DesignSpec, taps: np.ndarray,
                      status: SolveStatus, m: int) -> DesignReport:
    filt = FirFilter(tuple(taps))
    cascade = series(spec.plant, fir_realization(filt), r_first=False)
    hr, _ = l1_norm(cascade, _TRUNC_TOL)
    fb = filt.feedback_l1
    objective = spec.c * hr + fb
    return DesignReport(
        filter=filt,
        hr_norm=hr,
        feedback_norm=fb,
        objective=objective,
        interval=quantizer_interval(spec.gamma_eps, hr),
        min_bits=min_bits_for(objective),
        lp_status=status,
        truncation=m,
    )


def design_min_bits(spec: DesignSpec, dump_path: str | None = None) -> DesignReport:
    """Minimize c*||H R|| + ||R - 1|| over monic FIR filters of the given order.

    The reported norms and objective are recomputed from the optimal taps via
    the certified adaptive truncation; the bit count is the smallest b with
    objective <= 2^b and the interval follows from the output-error bound.
    """
    m = spec.effective_truncation()
    h = impulse_response(spec.plant, m)
    taps, status = _solve_shaping_lp(h, spec.order, m, spec.c, 1.0, None,
                                     dump_path)
    return _report_from_taps(spec, taps, status, m)


def design_min_error(spec: DesignSpec, feedback_cap: float,
                     dump_path: str | None = None) -> DesignReport:
    """Minimize ||H R|| subject to ||R - 1|| <= feedback_cap."""
    if feedback_cap < 0:
        raise ValueError("feedback_cap must be >= 0")
    m = spec.effective_truncation()
    h = impulse_response(spec.plant, m)
    taps, status = _solve_shaping_lp(h, spec.order, m, 1.0, 0.0, feedback_cap,
                                     dump_path)
    return _report_from_taps(spec, taps, status, m)


def static_norm_product(spec: DesignSpec) -> float:
    """c * ||H||: the bit-allocation value of the plain static quantizer."""
    norm, _ = l1_norm(spec.plant, _TRUNC_TOL)
    return spec.c * norm


def static_quantizer_bits(spec: DesignSpec) -> int:
    """Bits a static uniform quantizer needs for the same error bound (R = 1)."""
    return min_bits_for(static_norm_product(spec))


def tradeoff_sweep(spec: DesignSpec, caps: list[float],
                   bits: list[int]) -> TradeoffCurve:
    """Error-floor curve over the cap grid and per-bit minimized bounds.

    Per-point LP failures are recorded in the curve's failures list rather
    than aborting the sweep.  For every bit count the bound
    L_y*||H R||/(2^b - ||R - 1||) is minimized over the curve points with
    ||R - 1|| < 2^b; bits with no admissible point are skipped.
    """
    caps = [float(cp) for cp in caps]
    if any(b < 1 for b in bits):
        raise ValueError("bit counts must be >= 1")
    if sorted(caps) != caps:
        raise ValueError("caps must be sorted ascending")
    curve = TradeoffCurve([], [], [], [], [], [])
    for cap in caps:
        try:
            rep = design_min_error(spec, cap)
        except (DesignError, ValueError) as exc:
            curve.failures.append((cap, str(exc)))
            continue
        curve.caps.append(cap)
        curve.hr_norms.append(rep.hr_norm)
        curve.feedback_norms.append(rep.feedback_norm)
        curve.filters.append(rep.filter)
        curve.objectives.append(rep.objective)
    for b in bits:
        levels = 2.0 ** b
        best = None
        best_idx = -1
        for i, (hr, fb) in enumerate(zip(curve.hr_norms, curve.feedback_norms)):
            if fb >= levels:
                continue
            bound = spec.l_y * hr / (levels - fb)
            if best is None or bound < best:
                best, best_idx = bound, i
        if best is not None:
            curve.per_bit.append((b, best, best_idx))
    return curve
