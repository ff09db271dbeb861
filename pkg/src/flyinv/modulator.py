"""Gate-signal generation for the six switches.

M1/M4 run the positive-half flyback pair and M2/M3 the negative-half pair
under regular-sampled sinusoidal PWM: the duty command is latched once per
switching period at its start.  M5 and M6 unfold the rectified output, each
conducting for its whole half of the fundamental and changing state only at
zero crossings.  At an exact crossing (polarity 0) every switch is off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .circuit import ModulationSpec

# Guard against the float boundary when locating the switching period that
# contains t: a grid time an ulp short of a period edge must classify into
# the period it starts.
_PERIOD_EPS = 1e-9

_LAW_FLAGS = {
    "rectified_sine": _kernels.LAW_RECTIFIED_SINE,
    "constant": _kernels.LAW_CONSTANT,
}


@dataclass(frozen=True)
class GateState:
    """On/off state of the six switches at one instant (True = conducting)."""

    m1: bool
    m2: bool
    m3: bool
    m4: bool
    m5: bool
    m6: bool


@dataclass(frozen=True)
class DutyCommand:
    """Latched duty for one switching period.

    ``polarity`` is +1 on the positive half of the fundamental, -1 on the
    negative half, and 0 exactly at a zero crossing (where duty is 0).
    """

    duty: float
    polarity: int


ALL_OFF = GateState(False, False, False, False, False, False)


def law_flag(mod: ModulationSpec) -> int:
    return _LAW_FLAGS[mod.duty_law]


def switching_index(t: float, mod: ModulationSpec) -> tuple[int, float]:
    """Switching-period index containing ``t`` and the fraction into it."""
    x = t * mod.f_switching
    k = int(math.floor(x + _PERIOD_EPS))
    return k, x - k


def duty_command(t: float, mod: ModulationSpec) -> DutyCommand:
    """Regular-sampled duty command for the switching period containing ``t``.

    The sine envelope is evaluated at the period start, so the command is
    constant across each switching period.
    """
    k, _ = switching_index(t, mod)
    ratio = round(mod.f_switching / mod.f_fundamental)
    duty, pol = _kernels.duty_polarity(k, ratio, mod.duty_max, law_flag(mod))
    return DutyCommand(duty=duty, polarity=pol)


def gates(t: float, cmd: DutyCommand, mod: ModulationSpec) -> GateState:
    """Gate states at ``t`` for the latched command of the same period.

    The active pair conducts from the period start until ``duty`` of the
    period has elapsed, less ``dead_time`` at the trailing edge; the
    matching unfolding switch conducts for the entire half-cycle.
    """
    if cmd.polarity == 0:
        return ALL_OFF
    _, frac = switching_index(t, mod)
    on = frac < cmd.duty - mod.dead_time * mod.f_switching
    pos = cmd.polarity > 0
    return GateState(
        m1=on and pos,
        m2=on and not pos,
        m3=on and not pos,
        m4=on and pos,
        m5=pos,
        m6=not pos,
    )


def bitmask(g: GateState) -> int:
    """Pack a GateState into the trace encoding (bit k = M(k+1))."""
    return (g.m1 | g.m2 << 1 | g.m3 << 2 | g.m4 << 3 | g.m5 << 4 | g.m6 << 5)


def from_bitmask(bits: int) -> GateState:
    return GateState(*(bool(bits >> k & 1) for k in range(6)))
