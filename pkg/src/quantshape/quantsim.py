"""Executable quantizer semantics and closed-loop validation.

The mid-rise static quantizer, the error-feedback loop around it, and a
twin-simulation benchmark: a discrete-time rotary inverted pendulum under
LQR state feedback whose pitch-angle measurement passes through the
quantizer while an identical unquantized loop runs alongside.  The
per-step difference of the two pitch angles is the quantization-induced
output error; because both loops are linear, it equals the quantizer error
v - y filtered through the closed-loop error transfer H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statespace import (FirFilter, StateSpace, feedback_path_realization,
                         spectral_radius)

__all__ = [
    "QuantizerSpec",
    "FeedbackQuantizer",
    "SimTrace",
    "PendulumBench",
    "midrise",
    "lqr_gain",
    "closed_loop_H",
    "transfer_coefficients",
    "run_benchmark",
    "verify_no_overload",
    "pendulum_bench",
    "PENDULUM_A",
    "PENDULUM_B",
    "PENDULUM_K",
    "PENDULUM_Q_LQR",
    "PENDULUM_R_WEIGHT",
    "PENDULUM_TS",
]

# Discrete-time linearized rotary-pendulum model (sampling period 0.01 s),
# state [pitch, yaw, pitch rate, yaw rate]; all states measurable.
PENDULUM_TS = 0.01
PENDULUM_A = np.array([
    [1.0056, 0.0, 0.0100, 0.0001],
    [-0.0003, 1.0000, -0.0000, 0.0100],
    [1.1134, 0.0, 1.0056, 0.0149],
    [-0.0653, 0.0, -0.0003, 0.9926],
])
PENDULUM_B = np.array([[-0.0004], [0.0002], [-0.0864], [0.0431]])
PENDULUM_C1 = np.array([[1.0, 0.0, 0.0, 0.0]])
# published state-feedback gain of the benchmark (u = K (x - x_ref) with
# A + B K stable); the LQR weights below give a close but not identical
# gain on the rounded model matrices
PENDULUM_K = np.array([[57.2598, 6.0910, 6.2562, 3.4953]])
PENDULUM_Q_LQR = np.diag([10.0, 2.0, 0.5, 0.0])
PENDULUM_R_WEIGHT = 0.05


@dataclass(frozen=True)
class QuantizerSpec:
    """Mid-rise quantizer parameters: bits, interval, saturation level.

    The three are tied by 2L = (2^b - 1) d; construct with from_bits_interval
    to get a consistent triple.
    """

    bits: int
    interval: float
    saturation: float

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if not (self.interval > 0 and np.isfinite(self.interval)):
            raise ValueError("interval must be positive and finite")
        expected = (2 ** self.bits - 1) * self.interval / 2.0
        if abs(self.saturation - expected) > 1e-12 * max(1.0, expected):
            raise ValueError(
                f"saturation {self.saturation!r} inconsistent with bits/interval "
                f"(expected {expected!r})")

    @classmethod
    def from_bits_interval(cls, bits: int, interval: float) -> "QuantizerSpec":
        return cls(bits, interval, (2 ** bits - 1) * interval / 2.0)

    @property
    def levels(self) -> int:
        return 2 ** self.bits

    @property
    def overload_threshold(self) -> float:
        return self.saturation + self.interval / 2.0


def midrise(spec: QuantizerSpec, xi: float) -> float:
    """Mid-rise quantization: odd multiples of d/2, clamped to the level range.

    Inputs beyond the overload threshold saturate at the outermost level.
    """
    if not math.isfinite(xi):
        raise ValueError("quantizer input must be finite")
    d, sat = spec.interval, spec.saturation
    level = (math.floor(xi / d) + 0.5) * d
    return min(max(level, -sat), sat)


class FeedbackQuantizer:
    """Error-feedback quantizer: static mid-rise stage plus a strictly proper
    filter that feeds the round-off error back to the input.

    Stateful and single-owner during a run; reset() rewinds to zero state.
    """

    def __init__(self, spec: QuantizerSpec, feedback: StateSpace):
        if feedback.D != 0.0:
            raise ValueError("feedback filter must be strictly proper (D = 0)")
        self.spec = spec
        self.feedback = feedback
        self._state = np.zeros(feedback.order)

    @classmethod
    def from_fir(cls, spec: QuantizerSpec, filt: FirFilter) -> "FeedbackQuantizer":
        return cls(spec, feedback_path_realization(filt))

    @classmethod
    def static(cls, spec: QuantizerSpec) -> "FeedbackQuantizer":
        """No error feedback: the plain static uniform quantizer."""
        return cls(spec, feedback_path_realization(FirFilter(())))

    def reset(self):
        self._state = np.zeros(self.feedback.order)

    def step(self, y: float) -> tuple[float, float, float, float]:
        """One sample: returns (v, w, xi, eta).

        eta is the feedback-filter output from past round-off errors, xi the
        static quantizer input y + eta, v the quantized output, and
        w = v - xi the new round-off error that advances the filter state.
        """
        if not math.isfinite(y):
            raise ValueError("quantizer input must be finite")
        f = self.feedback
        eta = float(f.C[0] @ self._state) if f.order else 0.0
        xi = y + eta
        v = midrise(self.spec, xi)
        w = v - xi
        if f.order:
            self._state = f.A @ self._state + f.B[:, 0] * w
        return v, w, xi, eta


@dataclass
class SimTrace:
    """Time-indexed record of one closed-loop run."""

    t: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    v: np.ndarray
    w: np.ndarray
    eta: np.ndarray
    eps: np.ndarray
    overload: np.ndarray
    overload_count: int = 0
    max_abs_eps: float = 0.0
    max_abs_xi: float = 0.0

    def __post_init__(self):
        self.overload_count = int(np.sum(self.overload))
        self.max_abs_eps = float(np.max(np.abs(self.eps))) if self.eps.size else 0.0
        self.max_abs_xi = float(np.max(np.abs(self.xi))) if self.xi.size else 0.0

    def to_csv(self) -> str:
        lines = ["t,y,xi,v,w,eta,eps,overload"]
        for i in range(self.t.size):
            vals = ",".join(repr(float(column[i])) for column in
                            (self.t, self.y, self.xi, self.v, self.w,
                             self.eta, self.eps))
            lines.append(f"{vals},{int(self.overload[i])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SimTrace":
        rows = [ln.split(",") for ln in text.strip().splitlines()[1:]]
        cols = list(zip(*rows)) if rows else [[]] * 8
        arr = [np.array([float(v) for v in col]) for col in cols[:7]]
        ov = np.array([bool(int(v)) for v in cols[7]]) if rows else np.zeros(0, bool)
        return cls(*arr, ov)

    def summary(self) -> dict:
        return {
            "steps": int(self.t.size),
            "overload_count": self.overload_count,
            "max_abs_eps": self.max_abs_eps,
            "max_abs_xi": self.max_abs_xi,
        }


@dataclass(frozen=True)
class PendulumBench:
    """Reference-tracking pendulum benchmark configuration.

    The yaw-angle reference alternates between ref_amplitude and 0 every
    ref_half_period seconds; states start at zero; the control law is
    u = K (x - x_ref) with x_ref = [0, reference, 0, 0].
    """

    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    ts: float = PENDULUM_TS
    C1: np.ndarray = field(default_factory=lambda: PENDULUM_C1.copy())
    ref_amplitude: float = math.pi / 2.0
    ref_half_period: float = 5.0
    horizon_steps: int = 2000

    def reference(self, t: float) -> float:
        """Square-wave yaw target: amplitude for the first half period, 0 after."""
        return self.ref_amplitude if (t % (2.0 * self.ref_half_period)) < self.ref_half_period else 0.0

    def closed_loop_spectral_radius(self) -> float:
        return spectral_radius(self.A + self.B @ self.K)


def pendulum_bench(horizon_steps: int = 2000,
                   gain: np.ndarray | None = None) -> PendulumBench:
    """The benchmark with its published model matrices and feedback gain."""
    k = PENDULUM_K if gain is None else np.asarray(gain, dtype=float).reshape(1, -1)
    return PendulumBench(PENDULUM_A.copy(), PENDULUM_B.copy(), k.copy(),
                         horizon_steps=horizon_steps)


def lqr_gain(a: np.ndarray, b: np.ndarray, q_lqr: np.ndarray, r: float,
             tol: float = 1e-12, max_iter: int = 200_000) -> np.ndarray:
    """Infinite-horizon discrete LQR gain by Riccati fixed-point iteration.

    Returns the row vector K such that u = K x makes A + B K stable (the
    closed loop of the benchmark's tracking law).  Iterates the Riccati
    recursion until the relative change of the cost matrix drops below tol.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    q_lqr = np.asarray(q_lqr, dtype=float)
    if b.shape[1] != 1:
        raise ValueError("single-input systems only")
    if r <= 0:
        raise ValueError("control weight r must be positive")
    p = q_lqr.copy()
    for _ in range(max_iter):
        bp = b.T @ p
        denom = r + float(bp @ b)
        k_row = (bp @ a) / denom
        p_next = q_lqr + a.T @ p @ a - (a.T @ bp.T) @ k_row
        p_next = 0.5 * (p_next + p_next.T)
        delta = np.max(np.abs(p_next - p)) / max(1.0, np.max(np.abs(p_next)))
        p = p_next
        if delta < tol:
            break
    else:
        raise RuntimeError(f"Riccati iteration did not reach {tol:g} after "
                           f"{max_iter} steps")
    k = -(b.T @ p @ a) / (r + float(b.T @ p @ b))
    cl = spectral_radius(a + b @ k)
    if cl >= 1.0:
        raise RuntimeError(f"LQR closed loop not stable (spectral radius {cl:g})")
    return k


def closed_loop_H(bench: PendulumBench) -> StateSpace:
    """Error transfer of the benchmark: measurement error on the quantized
    state entry to the tracked output, realization (A+BK, B*K_1, C1, 0)."""
    acl = bench.A + bench.B @ bench.K
    if spectral_radius(acl) >= 1.0:
        raise ValueError("closed loop is unstable with the configured gain")
    return StateSpace(acl, bench.B * bench.K[0, 0], bench.C1, 0.0)


def transfer_coefficients(s: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """(numerator, denominator) of the transfer function, descending powers.

    The denominator is the characteristic polynomial via the
    Faddeev-LeVerrier recursion; the numerator follows from C adj(zI-A) B
    plus the feedthrough.
    """
    n = s.order
    den = np.zeros(n + 1)
    den[0] = 1.0
    num = np.zeros(n + 1)
    num[0] = s.D
    m = np.eye(n)
    for k in range(1, n + 1):
        num[k] = (s.C @ m @ s.B)[0, 0]
        am = s.A @ m
        den[k] = -np.trace(am) / k
        m = am + den[k] * np.eye(n)
        num[k] += s.D * den[k]
    return num, den


def run_benchmark(bench: PendulumBench, quantizer: FeedbackQuantizer | None,
                  horizon_s: float | None = None) -> SimTrace:
    """Twin closed-loop simulation.

    The quantized loop feeds the controller the quantizer's output in place
    of the measured pitch angle (the other states pass through); the ideal
    loop runs without quantization.  eps is the per-step difference of the
    two pitch angles.  With quantizer None both loops coincide and eps is
    identically zero.  Aborts when a state norm exceeds 1e6.
    """
    steps = bench.horizon_steps if horizon_s is None else int(round(horizon_s / bench.ts))
    a, b, k = bench.A, bench.B, bench.K
    x_q = np.zeros(a.shape[0])
    x_i = np.zeros(a.shape[0])
    tr = {name: np.zeros(steps) for name in ("t", "y", "xi", "v", "w", "eta", "eps")}
    overload = np.zeros(steps, dtype=bool)
    if quantizer is not None:
        quantizer.reset()
        threshold = quantizer.spec.overload_threshold
    for i in range(steps):
        t = i * bench.ts
        ref = bench.reference(t)
        x_ref = np.array([0.0, ref, 0.0, 0.0]) if a.shape[0] == 4 else \
            np.concatenate([[0.0, ref], np.zeros(a.shape[0] - 2)])
        y = x_q[0]
        if quantizer is None:
            v, w, xi, eta = y, 0.0, y, 0.0
        else:
            v, w, xi, eta = quantizer.step(y)
            overload[i] = abs(xi) > threshold * (1.0 + 1e-12) + 1e-15
        meas = x_q.copy()
        meas[0] = v
        u_q = float(k @ (meas - x_ref))
        x_q = a @ x_q + b[:, 0] * u_q
        u_i = float(k @ (x_i - x_ref))
        x_i = a @ x_i + b[:, 0] * u_i
        if max(np.max(np.abs(x_q)), np.max(np.abs(x_i))) > 1e6:
            raise RuntimeError(f"state diverged at t={t:.2f}s "
                               f"(|x| > 1e6); closed loop unstable?")
        tr["t"][i] = t
        tr["y"][i] = y
        tr["xi"][i] = xi
        tr["v"][i] = v
        tr["w"][i] = w
        tr["eta"][i] = eta
        tr["eps"][i] = x_q[0] - x_i[0]
    return SimTrace(tr["t"], tr["y"], tr["xi"], tr["v"], tr["w"], tr["eta"],
                    tr["eps"], overload)


def verify_no_overload(trace: SimTrace, spec: QuantizerSpec) -> bool:
    """True iff the trace stayed within the quantizer's no-overload region."""
    limit = spec.overload_threshold
    return trace.overload_count == 0 and trace.max_abs_xi <= limit * (1.0 + 1e-12)
