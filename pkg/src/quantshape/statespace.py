"""Discrete-time SISO state-space algebra.

A system is the quadruple (A, B, C, D) with A (n x n), B (n x 1), C (1 x n)
and scalar D, mapping an input sequence w to an output via

    x[k+1] = A x[k] + B w[k]
    y[k]   = C x[k] + D w[k]

The module provides realization construction for monic FIR filters, series
composition, impulse responses by state iteration, the induced l-infinity
norm (= l1 norm of the impulse response) with a certified adaptive
truncation, and the spectral radius via the in-repo QR eigenvalue solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .eig import eigenvalues

__all__ = [
    "StateSpace",
    "FirFilter",
    "fir_realization",
    "series",
    "impulse_response",
    "l1_norm",
    "spectral_radius",
    "equilibrate_states",
    "STABILITY_TOL",
]

# classification margin for |eigenvalue| < 1; below the eigenvalue-routine
# noise floor for the matrix sizes used here
STABILITY_TOL = 1e-9

# hard cap on adaptive truncation length
_MAX_TRUNCATION = 100_000


class TruncationError(RuntimeError):
    """l1-norm tail bound failed to certify within the sample cap."""


def spectral_radius(a: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(eigenvalues(a))))


@dataclass(frozen=True)
class StateSpace:
    """Immutable dense realization of a SISO discrete-time LTI system."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.B, dtype=float).reshape(-1, 1)
        c = np.asarray(self.C, dtype=float).reshape(1, -1)
        if a.size == 0:
            a = np.zeros((0, 0))
            b = np.zeros((0, 1))
            c = np.zeros((1, 0))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"A must be square, got {a.shape}")
        if b.shape != (n, 1):
            raise ValueError(f"B must be {n}x1, got {b.shape}")
        if c.shape != (1, n):
            raise ValueError(f"C must be 1x{n}, got {c.shape}")
        for m in (a, b, c):
            if not np.all(np.isfinite(m)):
                raise ValueError("state-space matrices must be finite")
        d = float(self.D)
        if not np.isfinite(d):
            raise ValueError("D must be finite")
        for name, m in (("A", a), ("B", b), ("C", c)):
            m.flags.writeable = False
            object.__setattr__(self, name, m)
        object.__setattr__(self, "D", d)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def is_stable(self) -> bool:
        if self.order == 0:
            return True
        return spectral_radius(self.A) < 1.0 - STABILITY_TOL

    def to_json_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(),
                "C": self.C.tolist(), "D": self.D}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StateSpace":
        return cls(np.array(obj["A"], dtype=float), np.array(obj["B"], dtype=float),
                   np.array(obj["C"], dtype=float), float(obj["D"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "StateSpace":
        return cls.from_json_dict(json.loads(text))

    @classmethod
    def identity(cls) -> "StateSpace":
        """The unit-gain system with empty state."""
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), 1.0)

    @classmethod
    def gain(cls, g: float) -> "StateSpace":
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), float(g))


@dataclass(frozen=True)
class FirFilter:
    """Monic FIR filter 1 + sum_k r_k z^-k given by its feedback taps r_1..r_n.

    The leading coefficient is implicitly 1, so the feedback path (the filter
    minus its unit feedthrough) is strictly proper.
    """

    coeffs: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        taps = tuple(float(c) for c in self.coeffs)
        if any(not np.isfinite(c) for c in taps):
            raise ValueError("filter taps must be finite")
        object.__setattr__(self, "coeffs", taps)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def feedback_l1(self) -> float:
        """Exact l1 norm of the strictly proper feedback path (sum |r_k|)."""
        return float(sum(abs(c) for c in self.coeffs))

    def full_coeffs(self) -> np.ndarray:
        """Coefficients [1, r_1, ..., r_n]."""
        return np.concatenate(([1.0], np.asarray(self.coeffs, dtype=float)))


def fir_realization(f: FirFilter) -> StateSpace:
    """Shift-register canonical realization of a monic FIR filter.

    A is the nilpotent upper shift, B the last unit vector, C the taps in
    reversed order [r_n, ..., r_1], D = 1.  Order zero gives the identity
    system.
    """
    n = f.order
    if n == 0:
        return StateSpace.identity()
    a = np.diag(np.ones(n - 1), k=1)
    b = np.zeros((n, 1))
    b[-1, 0] = 1.0
    c = np.asarray(f.coeffs[::-1], dtype=float).reshape(1, n)
    return StateSpace(a, b, c, 1.0)


def feedback_path_realization(f: FirFilter) -> StateSpace:
    """Realization of the strictly proper part (the filter minus 1)."""
    r = fir_realization(f)
    return StateSpace(r.A, r.B, r.C, 0.0)


def series(h: StateSpace, r: StateSpace, r_first: bool = True) -> StateSpace:
    """Realization of the product of two SISO systems.

    With r_first=True the state is stacked [x_r; x_h] and the composite
    matrices are block upper triangular with A_r in the leading block; with
    r_first=False the stacking is [x_h; x_r] with A_h leading.  Both orderings
    realize the same transfer function (their impulse responses agree).
    """
    nh, nr = h.order, r.order
    if r_first:
        a = np.block([[r.A, r.B @ h.C], [np.zeros((nh, nr)), h.A]])
        b = np.vstack([r.B * h.D, h.B])
        c = np.hstack([r.C, r.D * h.C])
    else:
        a = np.block([[h.A, h.B @ r.C], [np.zeros((nr, nh)), r.A]])
        b = np.vstack([h.B * r.D, r.B])
        c = np.hstack([h.C, h.D * r.C])
    return StateSpace(a, b, c, h.D * r.D)


def equilibrate_states(s: StateSpace, horizon: int = 4096,
                       max_ratio: float = 1e8) -> StateSpace:
    """Diagonal state rescaling that equalizes per-state excursion sums.

    The similarity x -> S^-1 x with S = diag of the per-state l1 excursion
    under an impulse leaves the transfer function unchanged but brings the
    realization to a scale where downstream ellipsoid computations are well
    conditioned.  States that never move keep unit scale; the spread of S is
    clipped to max_ratio.
    """
    n = s.order
    if n == 0:
        return s
    acc = np.abs(s.B[:, 0]).astype(float)
    x = s.B[:, 0].copy()
    for _ in range(horizon):
        x = s.A @ x
        acc += np.abs(x)
    top = float(np.max(acc))
    if top <= 0.0:
        return s
    scale = np.clip(acc, top / max_ratio, top)
    a = s.A * (scale[None, :] / scale[:, None])
    b = s.B / scale[:, None]
    c = s.C * scale[None, :]
    return StateSpace(a, b, c, s.D)


def impulse_response(s: StateSpace, m: int) -> np.ndarray:
    """First m+1 impulse-response samples f_0..f_m by state iteration."""
    if m < 0:
        raise ValueError("m must be >= 0")
    f = np.zeros(m + 1)
    f[0] = s.D
    if s.order == 0 or m == 0:
        return f
    x = s.B[:, 0].copy()
    a, c = s.A, s.C[0]
    for k in range(1, m + 1):
        f[k] = c @ x
        x = a @ x
    return f


def l1_norm(s: StateSpace, tol: float = 1e-9) -> tuple[float, int]:
    """Induced l-infinity norm: sum_k |f_k| with a certified truncation.

    The tail beyond the last computed sample is bounded by fitting
    |f_k| <= coef * q^k over a trailing window, with q slightly above the
    spectral radius; sampling stops once the geometric tail bound drops
    below tol.  Returns (value, number of samples m used), where the true
    norm lies in [value, value + tol].
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = s.order
    if n == 0:
        return abs(s.D), 0
    rho = spectral_radius(s.A)
    if rho >= 1.0 - STABILITY_TOL:
        raise ValueError(f"system is not stable (spectral radius {rho:.12g}); "
                         "l1 norm is unbounded")
    # nilpotent A: the response is exactly finite
    if rho < 1e-14:
        f = impulse_response(s, n)
        return float(np.sum(np.abs(f))), n
    q = rho + (1.0 - rho) / 64.0
    m = max(4 * n, 32)
    window = max(2 * n, 16)
    total = abs(s.D)
    x = s.B[:, 0].copy()
    a, c = s.A, s.C[0]
    k = 0
    recent: list[float] = []
    while True:
        # extend the iteration out to m samples
        while k < m:
            k += 1
            fk = float(c @ x)
            x = a @ x
            total += abs(fk)
            recent.append(abs(fk))
            if len(recent) > window:
                recent.pop(0)
        coef = max(fk_abs / q ** (k - len(recent) + 1 + i)
                   for i, fk_abs in enumerate(recent))
        tail = coef * q ** (k + 1) / (1.0 - q)
        if tail < tol:
            return float(total), k
        if m >= _MAX_TRUNCATION:
            raise TruncationError(
                f"l1 norm tail bound not below {tol:g} after {m} samples")
        m = min(2 * m, _MAX_TRUNCATION)
