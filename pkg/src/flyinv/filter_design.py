"""Analytic frequency-domain model of the CL output filter.

The filter couples the current-source-like converter output to the grid:
shunt capacitor at the converter node, series inductor towards the grid,
with any extra grid-side inductance lumped into the series branch.  The
voltage transfer from converter node to output is the undamped second-order
low-pass 1 / (1 - (f/f_c)^2), singular at the resonant frequency f_c; the
time-domain simulator picks up damping through the load, which this module
deliberately does not model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import _kernels
from .circuit import FilterSpec, ModulationSpec
from .errors import (InfeasibleDesign, PlacementError, ResonanceSingularity)

# How close (relative) a frequency may come to the resonance before the
# undamped gain is reported as singular.
_SINGULARITY_RTOL = 1e-12


@dataclass(frozen=True)
class FilterResponse:
    """Gain magnitude |V_out / V_converter| sampled over frequency."""

    frequencies: np.ndarray  # Hz
    magnitude: np.ndarray    # dimensionless


def _l_total(filt: FilterSpec) -> float:
    return filt.l_filt + filt.l_grid


def resonant_frequency(filt: FilterSpec) -> float:
    """Undamped resonance 1 / (2 pi sqrt(L C)) of the series L, shunt C pair."""
    return 1.0 / (2.0 * math.pi * math.sqrt(_l_total(filt) * filt.c_filt))


def transfer_magnitude(filt: FilterSpec, f: float) -> float:
    """Undamped voltage-gain magnitude |1 / (1 - (2 pi f)^2 L C)| at ``f``.

    Raises :class:`ResonanceSingularity` within one part in 1e12 of the
    resonance, where the undamped model has its pole.
    """
    if f < 0:
        raise ValueError("frequency must be >= 0")
    f_c = resonant_frequency(filt)
    if abs(f - f_c) <= _SINGULARITY_RTOL * f_c:
        raise ResonanceSingularity(
            f"{f:g} Hz sits on the undamped resonance at {f_c:.12g} Hz")
    w = 2.0 * math.pi * f
    return abs(1.0 / (1.0 - w * w * _l_total(filt) * filt.c_filt))


def design_filter(f_c_target: float, c_filt: float,
                  l_grid: float = 0.0) -> FilterSpec:
    """Choose the series inductance that puts the resonance at ``f_c_target``.

    The grid-side inductance counts toward the total, so the returned
    ``l_filt`` is the remainder; raises :class:`InfeasibleDesign` when
    ``l_grid`` alone already exceeds the required total inductance.
    """
    if f_c_target <= 0:
        raise InfeasibleDesign("target resonant frequency must be > 0")
    if c_filt <= 0:
        raise InfeasibleDesign("filter capacitance must be > 0")
    if l_grid < 0:
        raise InfeasibleDesign("grid inductance must be >= 0")
    w = 2.0 * math.pi * f_c_target
    l_total = 1.0 / (w * w * c_filt)
    l_filt = l_total - l_grid
    if l_filt <= 0:
        raise InfeasibleDesign(
            f"grid inductance {l_grid:g} H alone exceeds the {l_total:.6g} H "
            f"total needed for a {f_c_target:g} Hz resonance")
    return FilterSpec(l_filt=l_filt, c_filt=c_filt, l_grid=l_grid)


def attenuation_report(filt: FilterSpec, mod: ModulationSpec) -> FilterResponse:
    """Gain sampled at every harmonic of the fundamental up to twice f_switching.

    Requires the resonance to lie strictly between the fundamental and the
    switching frequency (:class:`PlacementError` otherwise).  A harmonic
    that lands exactly on the resonance is nudged off it by 1e-9 relative
    so the report stays finite.
    """
    f_c = resonant_frequency(filt)
    if not mod.f_fundamental < f_c < mod.f_switching:
        raise PlacementError(
            f"resonance at {f_c:.6g} Hz must lie strictly between the "
            f"fundamental ({mod.f_fundamental:g} Hz) and the switching "
            f"frequency ({mod.f_switching:g} Hz)")
    h_top = int(math.floor(2.0 * mod.f_switching / mod.f_fundamental))
    freqs = mod.f_fundamental * np.arange(h_top + 1, dtype=float)
    mags = np.empty_like(freqs)
    for i, f in enumerate(freqs):
        try:
            mags[i] = transfer_magnitude(filt, f)
        except ResonanceSingularity:
            mags[i] = transfer_magnitude(filt, f * (1.0 + 1e-9))
    return FilterResponse(frequencies=freqs, magnitude=mags)


def simulated_filter_gain(filt: FilterSpec, f: float,
                          r_load: float | None = None,
                          i_amp: float = 1.0) -> float:
    """Filter gain measured in the time domain with a sinusoidal current drive.

    The converter is replaced by an ideal current source ``i_amp sin(2 pi f
    t)`` into the capacitor node with a resistive load; the steady-state
    output amplitude is projected over whole drive cycles and normalised by
    the DC response ``i_amp * r_load``.  The default load is light
    (0.15 sqrt(L/C)) so the damped response approaches the undamped
    analytic curve this is checked against.
    """
    if f <= 0:
        raise ValueError("drive frequency must be > 0")
    l_tot = _l_total(filt)
    if r_load is None:
        r_load = 0.15 * math.sqrt(l_tot / filt.c_filt)
    f_c = resonant_frequency(filt)
    steps_per_cycle = 400 * max(1, math.ceil(f_c / f))
    dt = 1.0 / (f * steps_per_cycle)
    # transient envelope decays with 2 L / R; wait ten of those
    settle_cycles = math.ceil(10.0 * (2.0 * l_tot / r_load) * f)
    measure_cycles = 10
    n_steps = (settle_cycles + measure_cycles) * steps_per_cycle
    v = np.empty(n_steps + 1)
    _kernels.driven_filter_loop(n_steps, dt, i_amp, 2.0 * math.pi * f,
                                l_tot, filt.c_filt, r_load, v)
    window = v[settle_cycles * steps_per_cycle:
               (settle_cycles + measure_cycles) * steps_per_cycle]
    t = dt * np.arange(len(window))
    c = 2.0 * float(window @ np.cos(2.0 * np.pi * f * t)) / len(window)
    s = 2.0 * float(window @ np.sin(2.0 * np.pi * f * t)) / len(window)
    return math.hypot(c, s) / (i_amp * r_load)


def save_response(response: FilterResponse, path) -> None:
    frame = pd.DataFrame({"f_hz": response.frequencies,
                          "gain": response.magnitude})
    frame.to_csv(path, index=False, float_format="%.12g")
