"""Overloading-free error-feedback quantizer design for networked control.

The package designs the noise-shaping feedback filter of a quantizer so
that a prescribed worst-case output-error bound is met with the smallest
possible bit budget and a certified no-overload guarantee: FIR filters by
linear programming, IIR filters by LMI-based convex optimization, plus a
closed-loop simulation benchmark for validation.
"""

from .statespace import (FirFilter, StateSpace, equilibrate_states,
                         fir_realization, impulse_response, l1_norm, series,
                         spectral_radius)
from .solvers import LpProblem, SdpProblem, SolveStatus, solve_lp, solve_sdp
from .fir_design import (DesignReport, DesignSpec, TradeoffCurve,
                         design_min_bits, design_min_error,
                         static_quantizer_bits, tradeoff_sweep)
from .iir_design import (IirDesignReport, LmiVariables, assemble_lmis,
                         ellipsoid_error_bounds, line_search_alpha,
                         solve_fixed_alpha, sweep_mu_eta_caps)
from .quantsim import (FeedbackQuantizer, PendulumBench, QuantizerSpec,
                       SimTrace, closed_loop_H, lqr_gain, midrise,
                       pendulum_bench, run_benchmark, verify_no_overload)

__version__ = "0.1.0"
