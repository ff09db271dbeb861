"""Gate generation: duty law, unfolding, and the PWM invariants."""

import math

import pytest

from conftest import small_config
from flyinv import _kernels
from flyinv.circuit import ModulationSpec
from flyinv.modulator import (bitmask, duty_command, from_bitmask, gates,
                              law_flag)

MOD = ModulationSpec(f_fundamental=50.0, f_switching=3000.0, duty_max=0.8)
T0 = 1.0 / MOD.f_fundamental
T_SW = 1.0 / MOD.f_switching


class TestDutyCommand:
    def test_peak_of_positive_half(self):
        cmd = duty_command(T0 / 4, MOD)
        assert cmd.polarity == 1
        assert cmd.duty == MOD.duty_max

    def test_zero_crossing_gives_zero_duty_and_polarity(self):
        cmd = duty_command(0.0, MOD)
        assert cmd.polarity == 0
        assert cmd.duty == 0.0
        half = duty_command(T0 / 2, MOD)
        assert half.polarity == 0 and half.duty == 0.0

    def test_sine_law_at_one_twelfth_period(self):
        # sin(2 pi / 12) = 0.5 exactly, so duty = 0.8 * 0.5
        cmd = duty_command(T0 / 12, MOD)
        assert cmd.polarity == 1
        assert cmd.duty == pytest.approx(0.4, rel=1e-12)

    def test_duty_latched_within_switching_period(self):
        t0 = 7 * T_SW
        latched = duty_command(t0, MOD)
        for frac in (0.1, 0.5, 0.999):
            assert duty_command(t0 + frac * T_SW, MOD) == latched

    def test_negative_half_polarity(self):
        cmd = duty_command(3 * T0 / 4, MOD)
        assert cmd.polarity == -1
        assert cmd.duty == MOD.duty_max

    def test_envelope_has_half_period_and_is_nonnegative(self):
        ratio = round(MOD.f_switching / MOD.f_fundamental)
        for k in range(ratio):
            here = duty_command(k * T_SW, MOD)
            shifted = duty_command(k * T_SW + T0 / 2, MOD)
            assert here.duty == shifted.duty  # bit-identical by construction
            assert here.duty >= 0.0
            assert shifted.polarity == -here.polarity

    def test_constant_law(self):
        mod = ModulationSpec(f_fundamental=50.0, f_switching=3000.0,
                             duty_max=0.3, duty_law="constant")
        assert duty_command(T0 / 4, mod).duty == 0.3
        assert duty_command(T0 / 8, mod).duty == 0.3
        assert duty_command(0.0, mod).duty == 0.0  # crossings stay off


class TestGates:
    def test_positive_half_early_phase_conducts(self):
        cmd = duty_command(T0 / 4, MOD)
        g = gates(T0 / 4 + 0.1 * T_SW, cmd, MOD)
        assert (g.m1, g.m2, g.m3, g.m4, g.m5, g.m6) == \
            (True, False, False, True, True, False)

    def test_negative_half_early_phase_conducts(self):
        t = 3 * T0 / 4
        cmd = duty_command(t, MOD)
        g = gates(t + 0.1 * T_SW, cmd, MOD)
        assert (g.m1, g.m2, g.m3, g.m4, g.m5, g.m6) == \
            (False, True, True, False, False, True)

    def test_pair_off_past_duty_fraction(self):
        t = T0 / 4
        cmd = duty_command(t, MOD)  # duty 0.8
        g = gates(t + 0.9 * T_SW, cmd, MOD)
        assert not any((g.m1, g.m2, g.m3, g.m4))
        assert g.m5 and not g.m6

    def test_zero_duty_keeps_primaries_off(self):
        cmd = duty_command(0.0, MOD)
        g = gates(0.3 * T_SW, cmd, MOD)
        assert g == from_bitmask(0)

    def test_dead_time_shortens_the_trailing_edge(self):
        mod = ModulationSpec(f_fundamental=50.0, f_switching=3000.0,
                             duty_max=0.8, dead_time=0.2 * T_SW)
        t = T0 / 4
        cmd = duty_command(t, mod)
        on = gates(t + 0.55 * T_SW, cmd, mod)
        off = gates(t + 0.65 * T_SW, cmd, mod)  # 0.65 > 0.8 - 0.2
        assert on.m1 and on.m4
        assert not off.m1 and not off.m4 and off.m5

    def test_bitmask_round_trip(self):
        cmd = duty_command(T0 / 4, MOD)
        g = gates(T0 / 4, cmd, MOD)
        assert from_bitmask(bitmask(g)) == g
        assert bitmask(g) == 0b011001  # M1, M4, M5


class TestGridInvariants:
    """Exhaustive checks over one fundamental period on the dt grid."""

    def setup_method(self):
        self.cfg = small_config()
        self.mod = self.cfg.circuit.modulation
        self.dt = self.cfg.dt
        per = round(1.0 / (self.mod.f_fundamental * self.dt))
        self.grid = [j * self.dt for j in range(per)]

    def test_gate_invariants_every_grid_point(self):
        for t in self.grid:
            g = gates(t, duty_command(t, self.mod), self.mod)
            assert not ((g.m1 or g.m4) and (g.m2 or g.m3)), f"pair overlap at {t}"
            assert not (g.m5 and g.m6), f"unfolder overlap at {t}"
            assert g.m1 == g.m4 and g.m2 == g.m3, f"split pair at {t}"

    def test_half_wave_antisymmetry_on_grid(self):
        half = 1.0 / (2 * self.mod.f_fundamental)
        for t in self.grid[:len(self.grid) // 2]:
            g = gates(t, duty_command(t, self.mod), self.mod)
            h = gates(t + half, duty_command(t + half, self.mod), self.mod)
            assert (g.m1, g.m4, g.m5) == (h.m2, h.m3, h.m6), f"t = {t}"
            assert (g.m2, g.m3, g.m6) == (h.m1, h.m4, h.m5), f"t = {t}"

    def test_kernel_gating_matches_midpoint_sampled_gates(self):
        # the integer PWM logic used by the integrator must agree with the
        # public gate function sampled at the step midpoint
        mod = self.mod
        steps_per_sw = round(1.0 / (self.dt * mod.f_switching))
        ratio = round(mod.f_switching / mod.f_fundamental)
        for step, t in enumerate(self.grid):
            k, j = divmod(step, steps_per_sw)
            duty, pol = _kernels.duty_polarity(k, ratio, mod.duty_max,
                                               law_flag(mod))
            on_steps = _kernels.pair_on_steps(duty, steps_per_sw,
                                              mod.dead_time / self.dt)
            pair_on = pol != 0 and j < on_steps
            g = gates(t + 0.5 * self.dt, duty_command(t, mod), mod)
            assert (g.m1 and g.m4) == (pair_on and pol > 0), f"step {step}"
            assert (g.m2 and g.m3) == (pair_on and pol < 0), f"step {step}"
            assert g.m5 == (pol > 0) and g.m6 == (pol < 0), f"step {step}"
