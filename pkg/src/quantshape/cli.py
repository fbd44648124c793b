"""Batch front end: JSON config in, JSON/CSV/SVG artifacts out.

Commands: design-fir, design-iir, tradeoff, simulate, reproduce-paper.
Exit codes: 0 ok, 2 config error, 3 solver/module failure, 4 reproduction
tolerance failure.  Failures print a machine-readable JSON error object.
The environment variable QUANTSHAPE_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fir_design, iir_design, quantsim, svgplot
from .fir_design import DesignSpec
from .statespace import StateSpace, equilibrate_states

__all__ = ["main", "RunConfig", "ConfigError"]

# published reference values of the benchmark study, used by reproduce-paper
REFERENCE = {
    "fir_objective": 5.2729,
    "fir_min_bits": 3,
    "static_product": 47.788,
    "static_bits": 6,
    "iir_objective": 5.8831,
    "designed_max_eps": 0.05,
    "static_max_eps": (0.14, 0.22),
    "max_levels_window": 3,
    "lqr_gain": [57.2598, 6.0910, 6.2562, 3.4953],
}


class ConfigError(ValueError):
    """Invalid run configuration."""


def _require_keys(obj: dict, allowed: dict, where: str) -> dict:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    merged = dict(allowed)
    merged.update(obj)
    return merged


def _positive(value, name: str) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")
    return value


class RunConfig:
    """Validated run configuration (strict keys, positive/finite numerics)."""

    DEFAULTS = {
        "plant": {"preset": "pendulum"},
        "design": {"order": 4, "gamma_eps": 0.05, "l_y": math.pi / 2,
                   "truncation": None},
        "iir": {"alpha_grid": 50, "mu_eta_caps": [64.0, 128.0, 256.0]},
        "tradeoff": {"cap_min": 1e-3, "cap_max": 250.0, "cap_count": 40,
                     "bits_min": 1, "bits_max": 8},
        "simulate": {"horizon_s": 20.0, "static_bits": 3,
                     "designed_bits": None},
        "out_dir": "out",
        "seed": 0,
    }

    def __init__(self, obj: dict):
        top = _require_keys(obj, self.DEFAULTS, "config")
        plant = top["plant"]
        if "preset" in plant:
            plant = _require_keys(plant, {"preset": "pendulum"}, "plant")
            if plant["preset"] != "pendulum":
                raise ConfigError(f"unknown plant preset {plant['preset']!r}")
            self.plant_preset = True
        else:
            plant = _require_keys(plant, {"A": None, "B": None, "C": None,
                                          "D": None}, "plant")
            if any(plant[k] is None for k in "ABCD"):
                raise ConfigError("inline plant needs all of A, B, C, D")
            self.plant_preset = False
        self.plant_obj = plant

        d = _require_keys(top["design"], self.DEFAULTS["design"], "design")
        self.order = int(d["order"])
        if self.order < 1:
            raise ConfigError("design.order must be >= 1")
        self.gamma_eps = _positive(d["gamma_eps"], "design.gamma_eps")
        self.l_y = _positive(d["l_y"], "design.l_y")
        self.truncation = None if d["truncation"] is None else int(d["truncation"])
        if self.truncation is not None and self.truncation < self.order:
            raise ConfigError("design.truncation must be >= design.order")

        i = _require_keys(top["iir"], self.DEFAULTS["iir"], "iir")
        self.alpha_grid = int(i["alpha_grid"])
        if self.alpha_grid < 1:
            raise ConfigError("iir.alpha_grid must be >= 1")
        self.mu_eta_caps = [_positive(cp, "iir.mu_eta_caps[]")
                            for cp in i["mu_eta_caps"]]
        if not self.mu_eta_caps:
            raise ConfigError("iir.mu_eta_caps must not be empty")

        t = _require_keys(top["tradeoff"], self.DEFAULTS["tradeoff"], "tradeoff")
        cap_min = _positive(t["cap_min"], "tradeoff.cap_min")
        cap_max = _positive(t["cap_max"], "tradeoff.cap_max")
        if cap_max <= cap_min:
            raise ConfigError("tradeoff.cap_max must exceed cap_min")
        count = int(t["cap_count"])
        if count < 1:
            raise ConfigError("tradeoff.cap_count must be >= 1")
        self.tradeoff_caps = [float(v) for v in
                              np.geomspace(cap_min, cap_max, count)]
        self.bits = list(range(int(t["bits_min"]), int(t["bits_max"]) + 1))
        if not self.bits or self.bits[0] < 1:
            raise ConfigError("tradeoff bits range is empty or below 1")

        s = _require_keys(top["simulate"], self.DEFAULTS["simulate"], "simulate")
        self.horizon_s = float(s["horizon_s"])
        if not (self.horizon_s >= 0 and math.isfinite(self.horizon_s)):
            raise ConfigError("simulate.horizon_s must be >= 0 and finite")
        self.static_bits = int(s["static_bits"])
        if self.static_bits < 1:
            raise ConfigError("simulate.static_bits must be >= 1")
        self.designed_bits = None if s["designed_bits"] is None \
            else int(s["designed_bits"])
        if self.designed_bits is not None and self.designed_bits < 1:
            raise ConfigError("simulate.designed_bits must be >= 1")

        self.out_dir = str(top["out_dir"])
        self.seed = int(top["seed"])
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls({})
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a JSON object")
        return cls(obj)

    def bench(self) -> quantsim.PendulumBench:
        if not self.plant_preset:
            raise ConfigError("simulation commands need the pendulum preset")
        steps = int(round(self.horizon_s / quantsim.PENDULUM_TS))
        return quantsim.pendulum_bench(horizon_steps=steps)

    def plant(self) -> StateSpace:
        if self.plant_preset:
            return quantsim.closed_loop_H(quantsim.pendulum_bench())
        p = self.plant_obj
        return StateSpace(np.array(p["A"], dtype=float),
                          np.array(p["B"], dtype=float),
                          np.array(p["C"], dtype=float), float(p["D"]))

    def design_spec(self) -> DesignSpec:
        return DesignSpec(self.plant(), self.order, self.gamma_eps, self.l_y,
                          self.truncation)


def _threads() -> int:
    raw = os.environ.get("QUANTSHAPE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn, items):
    workers = _threads()
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def cmd_design_fir(cfg: RunConfig, out_dir: str, svg: bool) -> int:
    rep = fir_design.design_min_bits(cfg.design_spec())
    _write(out_dir, "fir_report.json", _json_text(rep.to_json_dict()))
    taps_csv = "k,tap\n" + "\n".join(
        f"{k + 1},{float(tap)!r}" for k, tap in enumerate(rep.filter.coeffs))
    _write(out_dir, "fir_taps.csv", taps_csv + "\n")
    print(f"objective={rep.objective:.6g} min_bits={rep.min_bits} "
          f"interval={rep.interval:.6g}")
    return 0


def cmd_design_iir(cfg: RunConfig, out_dir: str, svg: bool) -> int:
    plant = equilibrate_states(cfg.plant())
    c = cfg.l_y / cfg.gamma_eps
    collected: list[iir_design.IirDesignReport] = []

    def run_cap(cap):
        local: list[iir_design.IirDesignReport] = []
        rep = iir_design.line_search_alpha(plant, cfg.alpha_grid, cap, c,
                                           select="objective", collect=local)
        return rep, local

    results = _pmap(run_cap, list(cfg.mu_eta_caps))
    best = None
    for rep, local in results:
        collected.extend(local)
        if best is None or rep.objective < best.objective:
            best = rep
    _write(out_dir, "iir_report.json", _json_text(best.to_json_dict()))
    scan = ["cap,alpha,mu_eps,mu_eta,hr_norm,r1_norm,objective"]
    for r in collected:
        scan.append(",".join(repr(float(v)) for v in
                             (r.mu_eta_cap, r.alpha_star, r.mu_eps, r.mu_eta,
                              r.true_hr_norm, r.true_r1_norm, r.objective)))
    _write(out_dir, "iir_scan.csv", "\n".join(scan) + "\n")
    print(f"objective={best.objective:.6g} alpha*={best.alpha_star:.6g} "
          f"min_bits={best.min_bits()}")
    return 0


def cmd_tradeoff(cfg: RunConfig, out_dir: str, svg: bool) -> int:
    spec = cfg.design_spec()
    curve = fir_design.tradeoff_sweep(spec, cfg.tradeoff_caps, cfg.bits)
    _write(out_dir, "tradeoff_curve.csv", curve.points_csv())
    _write(out_dir, "bits_vs_eps.csv", curve.per_bit_csv())
    _write(out_dir, "tradeoff.json", _json_text(curve.to_json_dict()))
    if svg:
        _write(out_dir, "tradeoff_curve.svg", svgplot.line_plot_svg(
            [(curve.feedback_norms, curve.hr_norms, "")],
            title="error norm vs feedback norm",
            xlabel="feedback-path norm", ylabel="shaped error norm"))
        bits = [float(b) for b, _, _ in curve.per_bit]
        bounds = [v for _, v, _ in curve.per_bit]
        _write(out_dir, "bits_vs_eps.svg", svgplot.line_plot_svg(
            [(bits, bounds, "")], title="worst-case error vs bits",
            xlabel="bits", ylabel="log10 error bound", log_y=True))
    print(f"points={len(curve.caps)} failures={len(curve.failures)}")
    return 0


def _designed_quantizer(cfg: RunConfig):
    rep = fir_design.design_min_bits(cfg.design_spec())
    bits = rep.min_bits if cfg.designed_bits is None else cfg.designed_bits
    qspec = quantsim.QuantizerSpec.from_bits_interval(bits, rep.interval)
    return rep, qspec, quantsim.FeedbackQuantizer.from_fir(qspec, rep.filter)


def _static_quantizer(cfg: RunConfig, bits: int):
    # minimal no-overload interval for a bare static quantizer: l_y <= 2^(b-1) d
    d = cfg.l_y / 2 ** (bits - 1)
    qspec = quantsim.QuantizerSpec.from_bits_interval(bits, d)
    return qspec, quantsim.FeedbackQuantizer.static(qspec)


def cmd_simulate(cfg: RunConfig, out_dir: str, svg: bool) -> int:
    bench = cfg.bench()
    rep, qspec_d, quant_d = _designed_quantizer(cfg)
    trace_d = quantsim.run_benchmark(bench, quant_d, cfg.horizon_s)
    qspec_s, quant_s = _static_quantizer(cfg, cfg.static_bits)
    trace_s = quantsim.run_benchmark(bench, quant_s, cfg.horizon_s)
    _write(out_dir, "trace_designed.csv", trace_d.to_csv())
    _write(out_dir, "trace_static.csv", trace_s.to_csv())
    summary = {
        "designed": dict(trace_d.summary(), bits=qspec_d.bits,
                         interval=qspec_d.interval,
                         no_overload=quantsim.verify_no_overload(trace_d, qspec_d)),
        "static": dict(trace_s.summary(), bits=qspec_s.bits,
                       interval=qspec_s.interval),
        "seed": cfg.seed,
    }
    _write(out_dir, "simulate_summary.json", _json_text(summary))
    if svg and trace_d.t.size:
        _write(out_dir, "error_traces.svg", svgplot.line_plot_svg(
            [(list(trace_d.t), list(trace_d.eps), "error feedback"),
             (list(trace_s.t), list(trace_s.eps), "static")],
            title="output error", xlabel="t [s]", ylabel="error"))
    print(f"designed max|eps|={trace_d.max_abs_eps:.6g} "
          f"static max|eps|={trace_s.max_abs_eps:.6g}")
    return 0


def cmd_reproduce(cfg: RunConfig, out_dir: str, svg: bool) -> int:
    rows = []

    def row(name, computed, reference, ok, tolerance):
        rows.append((name, computed, reference, tolerance, ok))

    spec = cfg.design_spec()
    rep = fir_design.design_min_bits(spec)
    ref = REFERENCE["fir_objective"]
    row("FIR design objective", f"{rep.objective:.4f}", f"{ref}",
        abs(rep.objective - ref) <= 0.01 * ref, "1%")
    row("FIR minimum bits", str(rep.min_bits), str(REFERENCE["fir_min_bits"]),
        rep.min_bits == REFERENCE["fir_min_bits"], "exact")

    product = fir_design.static_norm_product(spec)
    ref = REFERENCE["static_product"]
    row("static quantizer norm product", f"{product:.3f}", f"{ref}",
        abs(product - ref) <= 0.005 * ref, "0.5%")
    row("static quantizer bits", str(fir_design.static_quantizer_bits(spec)),
        str(REFERENCE["static_bits"]),
        fir_design.static_quantizer_bits(spec) == REFERENCE["static_bits"],
        "exact")

    plant_eq = equilibrate_states(spec.plant)
    c = cfg.l_y / cfg.gamma_eps
    best = None
    for cap in cfg.mu_eta_caps:
        cand = iir_design.line_search_alpha(plant_eq, cfg.alpha_grid, cap, c,
                                            select="objective")
        if best is None or cand.objective < best.objective:
            best = cand
    ref = REFERENCE["iir_objective"]
    row("IIR design objective", f"{best.objective:.4f}", f"{ref}",
        abs(best.objective - ref) <= 0.05 * ref, "5%")

    bench = cfg.bench()
    qspec_d = quantsim.QuantizerSpec.from_bits_interval(rep.min_bits, rep.interval)
    trace_d = quantsim.run_benchmark(
        bench, quantsim.FeedbackQuantizer.from_fir(qspec_d, rep.filter),
        cfg.horizon_s)
    row("designed quantizer max error", f"{trace_d.max_abs_eps:.4f}",
        f"<= {REFERENCE['designed_max_eps']}",
        trace_d.max_abs_eps <= REFERENCE["designed_max_eps"], "bound")
    row("designed quantizer overloads", str(trace_d.overload_count), "0",
        trace_d.overload_count == 0, "exact")
    qspec_s, quant_s = _static_quantizer(cfg, cfg.static_bits)
    trace_s = quantsim.run_benchmark(bench, quant_s, cfg.horizon_s)
    lo, hi = REFERENCE["static_max_eps"]
    row("static quantizer max error", f"{trace_s.max_abs_eps:.4f}",
        f"[{lo}, {hi}]", lo <= trace_s.max_abs_eps <= hi, "range")

    window = (trace_d.t >= 10.0) & (trace_d.t < 12.0)
    levels = np.unique(trace_d.v[window]).size if np.any(window) else 0
    row("distinct output levels on [10,12)", str(levels),
        f"<= {REFERENCE['max_levels_window']}",
        levels <= REFERENCE["max_levels_window"], "bound")

    curve = fir_design.tradeoff_sweep(spec, cfg.tradeoff_caps, cfg.bits)
    per_bit = {b: v for b, v, _ in curve.per_bit}
    ratios = [per_bit[b + 1] / per_bit[b] for b in range(2, 8)
              if b in per_bit and b + 1 in per_bit]
    row("per-bit error decay ratio", f"max {max(ratios):.4f}" if ratios else "n/a",
        "< 0.5", bool(ratios) and max(ratios) < 0.5, "bound")

    gain = quantsim.lqr_gain(quantsim.PENDULUM_A, quantsim.PENDULUM_B,
                             quantsim.PENDULUM_Q_LQR, quantsim.PENDULUM_R_WEIGHT)
    ref_gain = np.array(REFERENCE["lqr_gain"])
    rel = float(np.max(np.abs(gain.ravel() - ref_gain) / np.abs(ref_gain)))
    row("LQR gain deviation", f"{rel:.2%}", "<= 0.1%", rel <= 0.001, "0.1%")

    lines = [
        "# Reproduction summary",
        "",
        "Computed from the published model matrices and weights as printed;",
        "rows marked FAIL are not derivable from those rounded inputs (see",
        "the repository README for details).",
        "",
        "| quantity | computed | reference | tolerance | status |",
        "|---|---|---|---|---|",
    ]
    for name, computed, reference, tolerance, ok in rows:
        lines.append(f"| {name} | {computed} | {reference} | {tolerance} | "
                     f"{'ok' if ok else 'FAIL'} |")
    _write(out_dir, "reproduction.md", "\n".join(lines) + "\n")
    failures = [r[0] for r in rows if not r[4]]
    for name, computed, reference, tolerance, ok in rows:
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {computed} (reference "
              f"{reference}, {tolerance})")
    return 4 if failures else 0


_COMMANDS = {
    "design-fir": cmd_design_fir,
    "design-iir": cmd_design_iir,
    "tradeoff": cmd_tradeoff,
    "simulate": cmd_simulate,
    "reproduce-paper": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="quantshape",
        description="design and validate overloading-free error-feedback "
                    "quantizers")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--svg", action="store_true",
                        help="also write SVG plots")
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(json.dumps({"error": {"exit_code": 2, "message": str(exc)}}))
        return 2
    out_dir = args.out if args.out else cfg.out_dir
    try:
        return _COMMANDS[args.command](cfg, out_dir, args.svg)
    except ConfigError as exc:
        print(json.dumps({"error": {"exit_code": 2, "message": str(exc)}}))
        return 2
    except Exception as exc:  # solver or module failure: machine readable
        print(json.dumps({"error": {"exit_code": 3, "message": str(exc),
                                    "type": type(exc).__name__}}))
        return 3


if __name__ == "__main__":
    sys.exit(main())
