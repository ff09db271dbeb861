"""Fixed-step time-domain integration of the switched converter circuit.

The circuit is piecewise linear: within one integration step the gates are
frozen, so a classical 4-stage (RK4) step is exact enough, and the only
intra-step event is the magnetizing current reaching zero during the
transfer phase, which is clamped to exactly zero (discontinuous conduction).
Switching edges land on the grid because validation ties dt, the switching
frequency, and the fundamental together; PWM edges round to the nearest
grid point (see ``_kernels``).

Energy bookkeeping runs alongside the states: e_in integrates the power
drawn from the DC source, e_loss the conduction losses in whichever
switches carry current, and e_out the power delivered to the load, each by
trapezoidal quadrature over the constant-mode substeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import _kernels
from .circuit import CircuitParams, GridLoad, ResistiveLoad, SimConfig, validate
from .errors import MalformedTable, NumericalDivergence
from .modulator import GateState, duty_command, gates, law_flag

DEFAULT_DIVERGENCE_BOUND = 1e6

TRACE_COLUMNS = ("t", "i_mag", "v_cap", "i_ind", "v_load", "i_load",
                 "p_in", "p_out", "gates_bitmask")


@dataclass(frozen=True)
class SimState:
    """Continuous state plus accumulated energies at one instant."""

    i_mag: float   # magnetizing current, primary-referred, signed (A)
    v_cap: float   # filter capacitor voltage (V)
    i_ind: float   # filter inductor current into the load (A)
    e_in: float = 0.0
    e_out: float = 0.0
    e_loss: float = 0.0


ZERO_STATE = SimState(0.0, 0.0, 0.0)


def pack_params(circuit: CircuitParams) -> tuple:
    """Flatten a CircuitParams into the scalar tuple the kernels take.

    Carries precomputed reciprocals of the inductances and capacitance; see
    the layout table in ``_kernels``.
    """
    load = circuit.load
    if isinstance(load, ResistiveLoad):
        load_mode, r_load, v_peak, omega = 0.0, load.r_load, 0.0, 0.0
    else:
        load_mode = 1.0
        r_load = 0.0
        v_peak = np.sqrt(2.0) * load.amplitude_rms
        omega = 2.0 * np.pi * load.frequency
    n = circuit.transformer.turns_ratio
    l_mag = circuit.transformer.l_mag
    l_tot = circuit.filter.l_filt + circuit.filter.l_grid
    return (circuit.source.u_dc, circuit.switches.r_on_primary,
            circuit.switches.r_on_secondary, 1.0 / l_mag, n, 1.0 / n,
            1.0 / (n * l_mag), 1.0 / circuit.filter.c_filt, 1.0 / l_tot,
            l_tot, load_mode, r_load, v_peak, omega)


def derivatives(state: SimState, gate: GateState, params: CircuitParams,
                t: float) -> tuple[float, float, float]:
    """Time derivatives of (i_mag, v_cap, i_ind) for the active conduction state.

    The conduction state follows from the gates and the sign of the
    magnetizing current: an active primary pair charges the magnetizing
    inductance; otherwise a nonzero magnetizing current demagnetizes through
    the matching unfolding switch into the capacitor node; otherwise the
    converter is idle and only the filter states move.
    """
    mode, s = _kernels.select_mode(state.i_mag, gate.m1 and gate.m4,
                                   gate.m2 and gate.m3, gate.m5, gate.m6)
    return _kernels.state_derivs(state.i_mag, state.v_cap, state.i_ind, t,
                                 mode, s, pack_params(params))


def _grid_geometry(config: SimConfig) -> tuple[int, int, int]:
    """(steps per switching period, switching periods per cycle, total steps)."""
    mod = config.circuit.modulation
    steps_per_sw = round(1.0 / (config.dt * mod.f_switching))
    ratio = round(mod.f_switching / mod.f_fundamental)
    n_steps = config.n_cycles_total * ratio * steps_per_sw
    return steps_per_sw, ratio, n_steps


def step(state: SimState, t: float, config: SimConfig,
         divergence_bound: float = DEFAULT_DIVERGENCE_BOUND) -> SimState:
    """Advance a validated config by one dt from a grid time ``t``.

    Gate states are sampled at the step midpoint and held for the whole
    step, which places each PWM edge on its nearest grid point.
    """
    mod = config.circuit.modulation
    cmd = duty_command(t, mod)
    g = gates(t + 0.5 * config.dt, cmd, mod)
    mode, s = _kernels.select_mode(state.i_mag, g.m1 and g.m4,
                                   g.m2 and g.m3, g.m5, g.m6)
    im, vc, ii, de_in, de_loss, de_out = _kernels.advance(
        state.i_mag, state.v_cap, state.i_ind, t, config.dt, mode, s,
        pack_params(config.circuit))
    if not all(map(np.isfinite, (im, vc, ii))) or \
            max(abs(im), abs(vc), abs(ii)) > divergence_bound:
        raise NumericalDivergence(t + config.dt, divergence_bound)
    return SimState(im, vc, ii, state.e_in + de_in, state.e_out + de_out,
                    state.e_loss + de_loss)


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled record of a completed run.

    Arrays all have ``n_steps + 1`` entries, one per grid point including
    t = 0 and the final time.  ``gates_bitmask[j]`` encodes the gate state
    that governs the step starting at sample j (bit k = M(k+1)), and
    ``p_in[j]`` is the instantaneous source power under that gating.
    Treat the arrays as read-only.
    """

    meta: SimConfig
    t: np.ndarray
    i_mag: np.ndarray
    v_cap: np.ndarray
    i_ind: np.ndarray
    e_in: np.ndarray
    e_out: np.ndarray
    e_loss: np.ndarray
    v_load: np.ndarray
    i_load: np.ndarray
    p_in: np.ndarray
    p_out: np.ndarray
    gates_bitmask: np.ndarray

    @property
    def dt(self) -> float:
        return self.meta.dt

    @property
    def samples_per_cycle(self) -> int:
        steps_per_sw, ratio, _ = _grid_geometry(self.meta)
        return steps_per_sw * ratio

    def settled_bounds(self) -> tuple[int, int]:
        """Sample-index window [a, b] covering the settled whole cycles."""
        per = self.samples_per_cycle
        return self.meta.n_cycles_settle * per, self.meta.n_cycles_total * per

    def final_state(self) -> SimState:
        return SimState(self.i_mag[-1], self.v_cap[-1], self.i_ind[-1],
                        self.e_in[-1], self.e_out[-1], self.e_loss[-1])

    def stored_energy(self, index: int = -1) -> float:
        """Energy in the magnetizing inductance and filter elements at a sample."""
        c = self.meta.circuit
        l_tot = c.filter.l_filt + c.filter.l_grid
        return (0.5 * c.transformer.l_mag * self.i_mag[index] ** 2
                + 0.5 * c.filter.c_filt * self.v_cap[index] ** 2
                + 0.5 * l_tot * self.i_ind[index] ** 2)


def simulate(config: SimConfig,
             divergence_bound: float = DEFAULT_DIVERGENCE_BOUND) -> Trace:
    """Integrate ``n_cycles_total`` fundamental cycles from the all-zero state.

    Deterministic: the same config produces a bit-identical Trace.  Raises
    :class:`NumericalDivergence` (with the offending time) if any state
    exceeds ``divergence_bound``.
    """
    validate(config)
    steps_per_sw, ratio, n_steps = _grid_geometry(config)
    mod = config.circuit.modulation
    n = n_steps + 1
    arrays = [np.empty(n) for _ in range(11)]
    gate_arr = np.empty(n, dtype=np.uint8)
    status = _kernels.run_loop(
        n_steps, config.dt, steps_per_sw, ratio, mod.duty_max,
        mod.dead_time / config.dt, law_flag(mod),
        pack_params(config.circuit), divergence_bound,
        *arrays, gate_arr)
    if status != _kernels.RUN_OK:
        raise NumericalDivergence(status * config.dt, divergence_bound)
    names = ("t", "i_mag", "v_cap", "i_ind", "e_in", "e_out", "e_loss",
             "v_load", "i_load", "p_in", "p_out")
    return Trace(meta=config, **dict(zip(names, arrays)),
                 gates_bitmask=gate_arr)


def save_trace(trace: Trace, path) -> None:
    """Write the trace table: one row per sample, header included."""
    frame = pd.DataFrame({name: getattr(trace, name)
                          for name in TRACE_COLUMNS})
    frame.to_csv(path, index=False, float_format="%.12g")


def load_trace(path, config: SimConfig) -> Trace:
    """Read a trace table written by :func:`save_trace`.

    The table carries no energy accumulators (they are not part of the
    export format), so those arrays are filled with NaN; metrics are
    reconstructed from the sampled quantities instead.  ``config`` must be
    the configuration the trace was produced with.
    """
    frame = read_table(path, TRACE_COLUMNS)
    _, _, n_steps = _grid_geometry(config)
    if len(frame) != n_steps + 1:
        raise MalformedTable(path, f"expected {n_steps + 1} rows for this "
                                   f"config, found {len(frame)}")
    nan = np.full(len(frame), np.nan)
    return Trace(meta=config,
                 t=frame["t"].to_numpy(),
                 i_mag=frame["i_mag"].to_numpy(),
                 v_cap=frame["v_cap"].to_numpy(),
                 i_ind=frame["i_ind"].to_numpy(),
                 e_in=nan, e_out=nan.copy(), e_loss=nan.copy(),
                 v_load=frame["v_load"].to_numpy(),
                 i_load=frame["i_load"].to_numpy(),
                 p_in=frame["p_in"].to_numpy(),
                 p_out=frame["p_out"].to_numpy(),
                 gates_bitmask=frame["gates_bitmask"].to_numpy(np.uint8))


def read_table(path, required_columns) -> pd.DataFrame:
    """Read a CSV table, raising :class:`MalformedTable` on structural faults."""
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise MalformedTable(path, f"unreadable as CSV: {exc}") from exc
    for col in required_columns:
        if col not in frame.columns:
            raise MalformedTable(path, "missing column", column=col)
    if len(frame) == 0:
        raise MalformedTable(path, "table has no data rows")
    for col in required_columns:
        values = pd.to_numeric(frame[col], errors="coerce").to_numpy()
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise MalformedTable(path, "non-numeric or non-finite cell",
                                 row=int(bad[0]) + 2, column=col)
        frame[col] = values
    return frame
