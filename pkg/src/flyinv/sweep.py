"""Batch harness for parameter studies.

A sweep enumerates one or two axes over a base configuration and runs each
point independently from the same zero initial state; rows come back in
plan order no matter how points are scheduled, and a failing point is
recorded in its row without aborting the rest.

Besides real dotted config paths, two virtual axes express the studies this
converter is used for.  In discontinuous conduction the converter moves a
fixed magnetizing-energy packet per switching cycle, so changing the load
resistance alone barely changes the delivered power; hitting a power target
therefore adjusts the duty amplitude (open-loop, from the charge-phase
model) together with the load resistance that keeps the commanded output
voltage:

* ``setpoint.p_out``  - target average output power in watts; solves the
  duty amplitude for the target and sets ``r_load`` so the commanded output
  voltage is unchanged.
* ``setpoint.v_rms``  - output-voltage setpoint in volts rms at unchanged
  power; rescales ``r_load`` and scales the filter impedance with it so the
  resonance placement and damping ratio carry over.

``FLYINV_THREADS`` caps sweep parallelism (unset/1 = sequential, 0 = one
thread per CPU); results are identical regardless.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .analysis import MetricsReport, metrics
from .circuit import (CircuitParams, GridLoad, ResistiveLoad, SimConfig,
                      apply_overrides, validate)
from .errors import TargetUnreachable
from .simulator import simulate

VIRTUAL_AXES = ("setpoint.p_out", "setpoint.v_rms")

_GAUSS_ORDER = 64


def _peak_charge_current(u_dc: float, l_mag: float, r_on_primary: float,
                         t_on) -> np.ndarray:
    """Magnetizing current at the end of a charge interval of length t_on.

    Two switches in series give the charge path a 2 R_on resistance, so the
    current follows (U / 2R)(1 - exp(-2 R t / L)), reducing to U t / L for
    ideal switches.
    """
    t_on = np.asarray(t_on, dtype=float)
    if r_on_primary == 0.0:
        return u_dc * t_on / l_mag
    tau = l_mag / (2.0 * r_on_primary)
    return u_dc / (2.0 * r_on_primary) * -np.expm1(-t_on / tau)


def average_power(circuit: CircuitParams, duty_max: float | None = None) -> float:
    """Open-loop estimate of the average power a duty amplitude delivers.

    Discontinuous conduction transfers the full magnetizing energy
    0.5 L i_pk^2 each switching cycle, so the average power is that energy
    times the switching frequency, averaged over the duty envelope.
    Conduction loss during the charge phase is captured by the exponential
    charge model; the (much smaller) transfer-phase loss is not.
    """
    mod = circuit.modulation
    if duty_max is None:
        duty_max = mod.duty_max
    t_sw = 1.0 / mod.f_switching
    if mod.duty_law == "constant":
        duties = np.array([duty_max])
        weights = np.array([1.0])
    else:
        # <f(duty_max sin)> over the fundamental via Gauss-Legendre on [0, pi/2]
        nodes, w = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
        theta = 0.25 * math.pi * (nodes + 1.0)
        duties = duty_max * np.sin(theta)
        weights = w * 0.5
    i_pk = _peak_charge_current(circuit.source.u_dc, circuit.transformer.l_mag,
                                circuit.switches.r_on_primary, duties * t_sw)
    energy = 0.5 * circuit.transformer.l_mag * i_pk ** 2
    return float((energy * weights).sum()) * mod.f_switching


def duty_for_power(circuit: CircuitParams, p_target: float) -> float:
    """Duty amplitude whose open-loop estimate hits ``p_target`` watts."""
    if not (p_target > 0 and math.isfinite(p_target)):
        raise TargetUnreachable(f"target power must be a positive number, "
                                f"got {p_target!r}")
    top = average_power(circuit, 1.0)
    if p_target > top:
        raise TargetUnreachable(
            f"{p_target:g} W exceeds the {top:.6g} W available at full duty")
    return float(brentq(lambda d: average_power(circuit, d) - p_target,
                        0.0, 1.0, xtol=1e-15, rtol=1e-14))


def commanded_v_rms(config: SimConfig) -> float:
    """Output-voltage setpoint implied by the configuration.

    Grid mode states it directly; in resistive mode it is the voltage the
    open-loop power estimate develops across the load.
    """
    load = config.circuit.load
    if isinstance(load, GridLoad):
        return load.amplitude_rms
    return math.sqrt(average_power(config.circuit) * load.r_load)


def _require_resistive(config: SimConfig, path: str) -> ResistiveLoad:
    load = config.circuit.load
    if not isinstance(load, ResistiveLoad):
        raise TargetUnreachable(f"{path} needs a resistive load; the grid "
                                f"load fixes the output voltage")
    return load


def apply_axis_value(config: SimConfig, path: str, value) -> SimConfig:
    """Apply one axis assignment, resolving the virtual setpoint axes."""
    if path == "setpoint.p_out":
        load = _require_resistive(config, path)
        p_target = float(value)
        duty = duty_for_power(config.circuit, p_target)
        v_cmd = commanded_v_rms(config)
        r_new = v_cmd * v_cmd / p_target
        return _rescale_load(config, load, r_new, [
            ("circuit.modulation.duty_max", duty)])
    if path == "setpoint.v_rms":
        load = _require_resistive(config, path)
        v_target = float(value)
        if not (v_target > 0 and math.isfinite(v_target)):
            raise TargetUnreachable(f"voltage setpoint must be positive, "
                                    f"got {value!r}")
        p_now = average_power(config.circuit)
        return _rescale_load(config, load, v_target * v_target / p_now, [])
    return apply_overrides(config, [(path, value)])


def _rescale_load(config: SimConfig, load: ResistiveLoad, r_new: float,
                  extra) -> SimConfig:
    """Change the load resistance with the filter impedance scaled along.

    Scaling L and 1/C with the load keeps the resonance placement and the
    filter/load damping ratio the preset was designed with; the filter is
    lossless, so metrics that compare operating points are unaffected.
    """
    scale = r_new / load.r_load
    filt = config.circuit.filter
    return apply_overrides(config, [
        ("circuit.load.r_load", r_new),
        ("circuit.filter.l_filt", filt.l_filt * scale),
        ("circuit.filter.l_grid", filt.l_grid * scale),
        ("circuit.filter.c_filt", filt.c_filt / scale),
    ] + extra)


@dataclass(frozen=True)
class SweepPlan:
    """One or two named axes over a base configuration."""

    base: SimConfig
    axis1: tuple[str, tuple]
    axis2: tuple[str, tuple] | None = None

    def axis_names(self) -> tuple[str, ...]:
        names = (self.axis1[0],)
        if self.axis2 is not None:
            names += (self.axis2[0],)
        return names

    def points(self) -> list[dict]:
        """Cartesian points in deterministic axis1-major order."""
        name1, values1 = self.axis1
        if self.axis2 is None:
            return [{name1: v} for v in values1]
        name2, values2 = self.axis2
        return [{name1: v1, name2: v2} for v1 in values1 for v2 in values2]


@dataclass(frozen=True)
class SweepPoint:
    """Result of one sweep point: its axis values plus metrics or an error."""

    params: tuple[tuple[str, float], ...]
    report: MetricsReport | None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepPoint, ...]
    plan: SweepPlan
    started: str
    finished: str


def _thread_count(n_points: int) -> int:
    raw = os.environ.get("FLYINV_THREADS", "").strip()
    if raw == "":
        workers = 1
    else:
        workers = int(raw)
        if workers < 0:
            raise ValueError("FLYINV_THREADS must be >= 0")
        if workers == 0:
            workers = os.cpu_count() or 1
    return max(1, min(workers, max(n_points, 1)))


def _run_point(base: SimConfig, assignments: dict, h_max: int) -> SweepPoint:
    params = tuple(assignments.items())
    try:
        config = base
        for path, value in assignments.items():
            config = apply_axis_value(config, path, value)
        validate(config)
        report = metrics(simulate(config), h_max=h_max)
        return SweepPoint(params=params, report=report)
    except Exception as exc:  # record per-point failures, never abort the sweep
        return SweepPoint(params=params, report=None,
                          error=f"{type(exc).__name__}: {exc}")


def run_sweep(plan: SweepPlan, h_max: int = 50) -> SweepResult:
    """Run every Cartesian point of the plan; rows stay in plan order."""
    started = datetime.now(timezone.utc).isoformat()
    points = plan.points()
    workers = _thread_count(len(points))
    if workers == 1 or len(points) <= 1:
        rows = [_run_point(plan.base, p, h_max) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _run_point(plan.base, p, h_max),
                                 points))
    finished = datetime.now(timezone.utc).isoformat()
    return SweepResult(rows=tuple(rows), plan=plan, started=started,
                       finished=finished)


def power_sweep(base: SimConfig, p_targets, h_max: int = 50) -> SweepResult:
    """Sweep output-power targets on a resistive load (see ``setpoint.p_out``)."""
    _require_resistive(base, "setpoint.p_out")
    plan = SweepPlan(base=base, axis1=("setpoint.p_out", tuple(p_targets)))
    return run_sweep(plan, h_max=h_max)


_METRIC_FIELDS = ("thd", "v_rms", "p_out_avg", "p_in_avg", "efficiency")


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    """Tabular view: axis columns, metric columns, then an error column."""
    axis_names = result.plan.axis_names()
    data = {name: [] for name in axis_names}
    for field in _METRIC_FIELDS:
        data[field] = []
    data["error"] = []
    for row in result.rows:
        values = dict(row.params)
        for name in axis_names:
            data[name].append(values[name])
        for field in _METRIC_FIELDS:
            data[field].append(getattr(row.report, field)
                               if row.report is not None else math.nan)
        data["error"].append(row.error or "")
    return pd.DataFrame(data)


def save_sweep(result: SweepResult, path) -> None:
    sweep_frame(result).to_csv(path, index=False, float_format="%.12g")
