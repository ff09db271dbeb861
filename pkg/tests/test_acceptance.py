"""Acceptance gate: the headline performance targets, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  Shared runs are computed once in module fixtures and reduced
to summaries immediately (whole multi-million-sample traces are not kept
alive); criterion 6 checks the energy ledger of every run the suite
performed.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

from flyinv.analysis import (MetricsReport, Spectrum, energy_balance_residual,
                             metrics, spectrum, thd)
from flyinv.circuit import apply_overrides, preset
from flyinv.filter_design import (design_filter, resonant_frequency,
                                  simulated_filter_gain, transfer_magnitude)
from flyinv.simulator import simulate
from flyinv.sweep import apply_axis_value

THD_LIMIT = 0.05
EFFICIENCY_BAND = (0.93, 0.99)
POWER_POINTS = (20.0, 65.0, 110.0, 155.0, 200.0)
R_ON_VALUES = (0.008, 0.04, 0.5)
BALANCE_LIMIT = 1e-3

# (name, residual) for every simulation the acceptance suite performs
_RESIDUALS: dict[str, float] = {}


def check(name, ok, detail):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _run_and_summarise(name, cfg, keep_window=False):
    """Simulate, record the energy residual, and drop the trace."""
    trace = simulate(cfg)
    _RESIDUALS[name] = energy_balance_residual(trace)
    report = metrics(trace)
    window = None
    if keep_window:
        a, b = trace.settled_bounds()
        window = trace.v_load[a:b].copy()
    summary = RunSummary(report=report, v_window=window,
                         samples_per_cycle=trace.samples_per_cycle,
                         dt=trace.dt, n_steps=len(trace.t) - 1)
    del trace
    return summary


@dataclass
class RunSummary:
    report: MetricsReport
    v_window: np.ndarray | None
    samples_per_cycle: int
    dt: float
    n_steps: int


@pytest.fixture(scope="module")
def baseline_cfg():
    return preset("baseline")


@pytest.fixture(scope="module")
def baseline_summary(baseline_cfg):
    return _run_and_summarise("baseline", baseline_cfg, keep_window=True)


@pytest.fixture(scope="module")
def hundred_watt_summary(baseline_cfg):
    cfg = apply_axis_value(baseline_cfg, "setpoint.p_out", 100.0)
    return _run_and_summarise("100W", cfg)


@pytest.fixture(scope="module")
def lossless_report(baseline_cfg):
    cfg = apply_overrides(baseline_cfg, [
        ("circuit.switches.r_on_primary", 0.0),
        ("circuit.switches.r_on_secondary", 0.0)])
    return _run_and_summarise("r_on=0", cfg).report


@pytest.fixture(scope="module")
def efficiency_grid(baseline_cfg):
    """Efficiency at five power commands for each switch resistance.

    The duty command is solved once per power point at the baseline switch,
    then the switch resistance varies alone, mirroring a study that swaps
    transistors in an otherwise fixed design.
    """
    base = apply_overrides(baseline_cfg, [("n_cycles_total", 6),
                                          ("n_cycles_settle", 4)])
    grid = {}
    for p_target in POWER_POINTS:
        at_power = apply_axis_value(base, "setpoint.p_out", p_target)
        for r_on in R_ON_VALUES:
            cfg = apply_axis_value(at_power,
                                   "circuit.switches.r_on_primary", r_on)
            summary = _run_and_summarise(
                f"grid r_on={r_on} P={p_target:g}", cfg)
            grid[(p_target, r_on)] = summary.report
    return grid


@pytest.fixture(scope="module")
def half_dt_v_rms(baseline_cfg):
    cfg = apply_overrides(baseline_cfg, [("dt", baseline_cfg.dt / 2)])
    return _run_and_summarise("dt/2", cfg).report.v_rms


def test_criterion_1_thd_bound_and_runtime(baseline_cfg, baseline_summary):
    report = baseline_summary.report
    t0 = time.perf_counter()
    simulate(baseline_cfg)
    elapsed = time.perf_counter() - t0
    check("1a load-voltage THD <= 0.05",
          report.thd <= THD_LIMIT,
          f"thd = {report.thd:.4f}, limit {THD_LIMIT}; the stricter 0.04 "
          f"figure {'also holds' if report.thd <= 0.04 else 'does not hold'}")
    check("1b runtime under 10 s",
          elapsed < 10.0,
          f"{baseline_summary.n_steps} steps integrated in {elapsed:.2f} s")


def test_criterion_2_efficiency_headline(hundred_watt_summary):
    report = hundred_watt_summary.report
    lo, hi = EFFICIENCY_BAND
    check("2 efficiency at 100 W, 8 mOhm switches",
          lo <= report.efficiency <= hi,
          f"efficiency = {report.efficiency:.4f} in [{lo}, {hi}], "
          f"p_out = {report.p_out_avg:.1f} W")


def test_criterion_3_r_on_monotonicity(efficiency_grid):
    worst_gap = math.inf
    for p_target in POWER_POINTS:
        effs = [efficiency_grid[(p_target, r)].efficiency
                for r in R_ON_VALUES]
        gaps = [a - b for a, b in zip(effs, effs[1:])]
        worst_gap = min(worst_gap, *gaps)
    detail = "; ".join(
        f"{p:g} W: " + " > ".join(
            f"{efficiency_grid[(p, r)].efficiency:.3f}" for r in R_ON_VALUES)
        for p in POWER_POINTS)
    check("3 efficiency strictly falls with r_on at every power",
          worst_gap > 0, detail)


def test_criterion_4_filter_analytics_randomised():
    rng = np.random.default_rng(1154)
    worst = 0.0
    for _ in range(100):
        f_c = 10 ** rng.uniform(1.5, 4.5)
        c = 10 ** rng.uniform(-8, -4)
        l_total = 1.0 / ((2 * math.pi * f_c) ** 2 * c)
        l_grid = rng.uniform(0.0, 0.5) * l_total
        filt = design_filter(f_c, c, l_grid)
        worst = max(worst, abs(resonant_frequency(filt) - f_c) / f_c)
        f = rng.uniform(0.1, 3.0) * f_c
        if abs(f - f_c) < 1e-3 * f_c:
            f = 1.5 * f_c
        closed_form = abs(1.0 / (1.0 - (2 * math.pi * f) ** 2
                                 * (filt.l_filt + filt.l_grid) * filt.c_filt))
        worst = max(worst, abs(transfer_magnitude(filt, f) - closed_form)
                    / closed_form)
    check("4 filter closed forms and design round-trip to 1e-9",
          worst <= 1e-9, f"worst relative deviation {worst:.2e}")


def test_criterion_5_time_domain_filter_consistency(baseline_cfg):
    filt = baseline_cfg.circuit.filter
    f_c = resonant_frequency(filt)
    worst = 0.0
    details = []
    for f in (f_c / 4, f_c / 2, 4 * f_c):
        sim = simulated_filter_gain(filt, f)
        ana = transfer_magnitude(filt, f)
        dev = abs(sim - ana) / ana
        worst = max(worst, dev)
        details.append(f"{f:.0f} Hz: {dev:.2%}")
    check("5 driven-source gain matches the analytic curve within 5 %",
          worst <= 0.05, ", ".join(details))


def test_criterion_6_energy_conservation(baseline_summary,
                                         hundred_watt_summary,
                                         lossless_report, efficiency_grid,
                                         half_dt_v_rms):
    worst_name, worst = max(_RESIDUALS.items(), key=lambda kv: kv[1])
    check("6a energy ledger closes on every acceptance run",
          worst <= BALANCE_LIMIT,
          f"worst residual {worst:.1e} of e_in ({worst_name}); "
          f"{len(_RESIDUALS)} runs checked")
    check("6b lossless switches convert everything",
          abs(lossless_report.efficiency - 1.0) <= 1e-3,
          f"efficiency = {lossless_report.efficiency:.6f}")


def test_criterion_7_thd_oracles():
    f0, periods, n_per = 50.0, 2, 512
    dt = 1.0 / (f0 * n_per)
    t = np.arange(periods * n_per) * dt
    pure = np.sin(2 * np.pi * f0 * t)
    thd_pure = thd(spectrum(pure, dt, f0, 50))
    third = pure + 0.1 * np.sin(2 * np.pi * 3 * f0 * t)
    thd_third = thd(spectrum(third, dt, f0, 50))
    series = math.sqrt(sum(1.0 / h ** 2 for h in range(3, 50, 2)))
    mags = np.zeros(50)
    mags[1::2] = 1.0 / np.arange(1, 50, 2)
    thd_square = thd(Spectrum(f0=f0, magnitudes=mags), 49)
    check("7a pure sine THD below 1e-9", thd_pure <= 1e-9,
          f"thd = {thd_pure:.2e}")
    check("7b ten-percent third harmonic", abs(thd_third - 0.1) <= 1e-6,
          f"thd = {thd_third:.9f}")
    check("7c square wave against the brute-force series oracle",
          abs(thd_square - series) <= 1e-3,
          f"thd = {thd_square:.6f}, series = {series:.6f}")


def test_criterion_8_symmetry_and_convergence(baseline_summary,
                                              half_dt_v_rms):
    v = baseline_summary.v_window
    half = baseline_summary.samples_per_cycle // 2
    deviation = np.max(np.abs(v[half:] + v[:len(v) - half]))
    peak = np.max(np.abs(v))
    spec = spectrum(v, baseline_summary.dt, 50.0, 50)
    even = math.sqrt(float(spec.magnitudes[2::2] @ spec.magnitudes[2::2]))
    even_ratio = even / spec.magnitudes[1]
    v_rms = baseline_summary.report.v_rms
    drift = abs(half_dt_v_rms - v_rms) / v_rms
    check("8a settled half-wave antisymmetry within 1 % of peak",
          deviation <= 0.01 * peak,
          f"max deviation {deviation:.3f} V of {peak:.1f} V peak")
    check("8b even harmonics below 1 % of the fundamental",
          even_ratio <= 0.01, f"ratio = {even_ratio:.2e}")
    check("8c halving dt moves the output RMS by less than 0.1 %",
          drift < 1e-3, f"relative change {drift:.2e}")
