"""Scalar numerical core shared by the modulator and the simulator.

Everything here works on plain numbers so the same code runs compiled under
numba (when importable) or as ordinary Python.  The simulator's per-step
algorithm lives in :func:`advance`; :func:`run_loop` just repeats it while
recording samples, so single-step and whole-run paths cannot drift apart.

PWM edges are snapped to the nearest integration grid point (the gate
comparison uses the step midpoint).  Snapping to the *following* grid point
would bias every charge pulse half a step long and the delivered power with
it, which shows up as a spurious dt-dependence of the output amplitude.

The circuit constants travel as a flat tuple (see ``pack_params`` in the
simulator) that carries the reciprocals of the inductances and capacitance;
the integrator multiplies instead of dividing, which matters at a dozen
derivative evaluations per step.
"""

from __future__ import annotations

import math

try:
    from numba import njit as _numba_njit

    def _jit(func):
        return _numba_njit(cache=True, nogil=True)(func)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    def _jit(func):
        return func

    HAVE_NUMBA = False

MODE_IDLE = 0
MODE_CHARGE = 1
MODE_TRANSFER = 2

LOAD_RESISTIVE = 0
LOAD_GRID = 1

LAW_RECTIFIED_SINE = 0
LAW_CONSTANT = 1

RUN_OK = -1

# Layout of the scalar parameter tuple.
#  0 u_dc          5 inv_n_turns       10 load_mode (0/1 as float)
#  1 r_on_p        6 inv_n_lm          11 r_load
#  2 r_on_s        7 inv_c             12 v_peak (grid)
#  3 inv_lm        8 inv_l_tot         13 omega (grid)
#  4 n_turns       9 (spare: l_tot)
N_PARAMS = 14


@_jit
def duty_polarity(k_period: int, ratio: int, duty_max: float, law: int):
    """Duty command and polarity for switching period ``k_period``.

    ``ratio`` is f_switching / f_fundamental.  The sine is evaluated on the
    folded integer phase q = 2k mod ratio so that periods half a fundamental
    apart get bit-identical duty values with flipped polarity, and exact
    zero crossings (q == 0) report polarity 0 with zero duty.
    """
    m = k_period % ratio
    q = (2 * m) % ratio
    if q == 0:
        return 0.0, 0
    pol = 1 if (2 * m) // ratio == 0 else -1
    if law == LAW_CONSTANT:
        return duty_max, pol
    return duty_max * math.sin(math.pi * q / ratio), pol


@_jit
def pair_on_steps(duty: float, steps_per_sw: int, dead_steps: float) -> int:
    """Number of grid steps the active primary pair stays on this period."""
    n = int(math.floor(duty * steps_per_sw - dead_steps + 0.5))
    if n < 0:
        n = 0
    if n > steps_per_sw:
        n = steps_per_sw
    return n


@_jit
def load_voltage(i_ind: float, t: float, p) -> float:
    if p[10] == 0.0:
        return i_ind * p[11]
    return p[12] * math.sin(p[13] * t)


@_jit
def state_derivs(i_mag, v_cap, i_ind, t, mode, s, p):
    """Time derivatives of (i_mag, v_cap, i_ind) for one conduction mode.

    ``s`` is the half-cycle polarity (+1/-1); unused in IDLE.
    """
    v_load = load_voltage(i_ind, t, p)
    d_i_ind = (v_cap - v_load) * p[8]
    if mode == MODE_CHARGE:
        # the resistive drop opposes the signed current; equals the
        # |i| * polarity form whenever current and polarity agree
        d_i_mag = (s * p[0] - 2.0 * p[1] * i_mag) * p[3]
        d_v_cap = -i_ind * p[7]
    elif mode == MODE_TRANSFER:
        i_sec = abs(i_mag) * p[5]
        d_i_mag = -s * (abs(v_cap) + i_sec * p[2]) * p[6]
        d_v_cap = (s * i_sec - i_ind) * p[7]
    else:
        d_i_mag = 0.0
        d_v_cap = -i_ind * p[7]
    return d_i_mag, d_v_cap, d_i_ind


@_jit
def stage_powers(i_mag, i_ind, t, mode, s, p):
    """Instantaneous (source, switch-loss, load) powers in one conduction mode.

    Source power carries the sign of the magnetizing current relative to
    the active polarity, so a charge phase that winds residual current of
    the opposite sign down returns its energy to the source instead of
    counting it twice.
    """
    p_out = load_voltage(i_ind, t, p) * i_ind
    if mode == MODE_CHARGE:
        # two primary switches in series carry the magnetizing current
        return p[0] * s * i_mag, 2.0 * p[1] * i_mag * i_mag, p_out
    if mode == MODE_TRANSFER:
        return 0.0, p[2] * (i_mag * p[5]) * (i_mag * p[5]), p_out
    return 0.0, 0.0, p_out


@_jit
def rk4_substep(i_mag, v_cap, i_ind, t, h, mode, s, p):
    """Classical 4-stage step of length ``h`` with the mode held fixed.

    The energy accumulators ride along as augmented quadrature states: the
    (source, loss, load) powers are evaluated at the same stage points and
    combined with the same 1-2-2-1 weights, so the bookkeeping converges at
    the integrator's order.  Returns the new state plus the three energy
    increments.
    """
    a1, b1, c1 = state_derivs(i_mag, v_cap, i_ind, t, mode, s, p)
    e1 = stage_powers(i_mag, i_ind, t, mode, s, p)
    half = 0.5 * h
    im2, vc2, ii2 = i_mag + half * a1, v_cap + half * b1, i_ind + half * c1
    a2, b2, c2 = state_derivs(im2, vc2, ii2, t + half, mode, s, p)
    e2 = stage_powers(im2, ii2, t + half, mode, s, p)
    im3, vc3, ii3 = i_mag + half * a2, v_cap + half * b2, i_ind + half * c2
    a3, b3, c3 = state_derivs(im3, vc3, ii3, t + half, mode, s, p)
    e3 = stage_powers(im3, ii3, t + half, mode, s, p)
    im4, vc4, ii4 = i_mag + h * a3, v_cap + h * b3, i_ind + h * c3
    a4, b4, c4 = state_derivs(im4, vc4, ii4, t + h, mode, s, p)
    e4 = stage_powers(im4, ii4, t + h, mode, s, p)
    sixth = h / 6.0
    return (i_mag + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            v_cap + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            i_ind + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
            sixth * (e1[0] + 2.0 * e2[0] + 2.0 * e3[0] + e4[0]),
            sixth * (e1[1] + 2.0 * e2[1] + 2.0 * e3[1] + e4[1]),
            sixth * (e1[2] + 2.0 * e2[2] + 2.0 * e3[2] + e4[2]))


@_jit
def advance(i_mag, v_cap, i_ind, t, dt, mode, s, p):
    """Advance one grid step, clamping the magnetizing-current zero crossing.

    If TRANSFER would carry ``i_mag`` through zero inside the step, the
    crossing time is located by linear interpolation, the state up to it is
    re-integrated in TRANSFER, ``i_mag`` is clamped to exactly zero, and the
    remainder of the step continues in IDLE.  Returns the new state plus the
    (e_in, e_loss, e_out) increments.
    """
    im1, vc1, ii1, de_in, de_loss, de_out = rk4_substep(
        i_mag, v_cap, i_ind, t, dt, mode, s, p)
    crossed = mode == MODE_TRANSFER and (
        (s > 0.0 and im1 <= 0.0) or (s < 0.0 and im1 >= 0.0))
    if not crossed:
        return im1, vc1, ii1, de_in, de_loss, de_out

    theta = i_mag / (i_mag - im1)
    h1 = theta * dt
    im1, vc1, ii1, de_in, de_loss, de_out = rk4_substep(
        i_mag, v_cap, i_ind, t, h1, MODE_TRANSFER, s, p)
    im1 = 0.0
    h2 = dt - h1
    if h2 > 0.0:
        im1, vc1, ii1, d2_in, d2_loss, d2_out = rk4_substep(
            im1, vc1, ii1, t + h1, h2, MODE_IDLE, 0.0, p)
        de_in += d2_in
        de_loss += d2_loss
        de_out += d2_out
    return im1, vc1, ii1, de_in, de_loss, de_out


@_jit
def select_mode(i_mag, pair_p, pair_n, m5, m6):
    """Conduction mode and polarity sign from the gate flags and state."""
    if pair_p:
        return MODE_CHARGE, 1.0
    if pair_n:
        return MODE_CHARGE, -1.0
    if i_mag > 0.0 and m5:
        return MODE_TRANSFER, 1.0
    if i_mag < 0.0 and m6:
        return MODE_TRANSFER, -1.0
    return MODE_IDLE, 0.0


@_jit
def run_loop(n_steps, dt, steps_per_sw, ratio, duty_max, dead_steps, law,
             p, bound,
             t_out, i_mag_out, v_cap_out, i_ind_out,
             e_in_out, e_out_out, e_loss_out,
             v_load_out, i_load_out, p_in_out, p_out_out, gates_out):
    """Integrate from the all-zero state, filling one record per grid point.

    Returns RUN_OK on success or the index of the first sample whose state
    exceeded ``bound`` (the caller turns that into an error).
    """
    i_mag = 0.0
    v_cap = 0.0
    i_ind = 0.0
    e_in = 0.0
    e_out = 0.0
    e_loss = 0.0
    # per-switching-period quantities, refreshed when j wraps to 0
    on_steps = 0
    pol = 0
    base_bits = 0
    for step in range(n_steps + 1):
        k = step // steps_per_sw
        j = step - k * steps_per_sw
        if j == 0 or step == 0:
            duty, pol = duty_polarity(k, ratio, duty_max, law)
            on_steps = pair_on_steps(duty, steps_per_sw, dead_steps)
            base_bits = 0b010000 if pol > 0 else (0b100000 if pol < 0 else 0)
        pair_on = pol != 0 and j < on_steps
        pair_p = pair_on and pol > 0
        pair_n = pair_on and pol < 0
        mode, s = select_mode(i_mag, pair_p, pair_n, pol > 0, pol < 0)
        t = step * dt

        t_out[step] = t
        i_mag_out[step] = i_mag
        v_cap_out[step] = v_cap
        i_ind_out[step] = i_ind
        e_in_out[step] = e_in
        e_out_out[step] = e_out
        e_loss_out[step] = e_loss
        v_l = load_voltage(i_ind, t, p)
        v_load_out[step] = v_l
        i_load_out[step] = i_ind
        p_in_out[step] = p[0] * s * i_mag if mode == MODE_CHARGE else 0.0
        p_out_out[step] = v_l * i_ind
        bits = base_bits
        if pair_p:
            bits |= 0b001001  # M1, M4
        if pair_n:
            bits |= 0b000110  # M2, M3
        gates_out[step] = bits

        if step == n_steps:
            break
        i_mag, v_cap, i_ind, de_in, de_loss, de_out = advance(
            i_mag, v_cap, i_ind, t, dt, mode, s, p)
        e_in += de_in
        e_loss += de_loss
        e_out += de_out
        if (not (math.isfinite(i_mag) and math.isfinite(v_cap)
                 and math.isfinite(i_ind))
                or abs(i_mag) > bound or abs(v_cap) > bound
                or abs(i_ind) > bound):
            return step + 1
    return RUN_OK


@_jit
def driven_filter_loop(n_steps, dt, i_amp, omega, l_tot, c_filt, r_load,
                       v_out):
    """Integrate the CL filter alone, driven by a sinusoidal current source.

    States are the capacitor voltage and inductor current; the converter is
    replaced by ``i_amp * sin(omega t)`` injected into the capacitor node.
    Fills ``v_out`` with the load voltage at every grid point.
    """
    inv_c = 1.0 / c_filt
    inv_l = 1.0 / l_tot
    vc = 0.0
    ii = 0.0
    for step in range(n_steps + 1):
        t = step * dt
        v_out[step] = ii * r_load
        if step == n_steps:
            break
        # RK4 on (vc, ii) with the time-dependent source
        b1 = (i_amp * math.sin(omega * t) - ii) * inv_c
        c1 = (vc - ii * r_load) * inv_l
        tm = t + 0.5 * dt
        src_m = i_amp * math.sin(omega * tm)
        b2 = (src_m - (ii + 0.5 * dt * c1)) * inv_c
        c2 = ((vc + 0.5 * dt * b1) - (ii + 0.5 * dt * c1) * r_load) * inv_l
        b3 = (src_m - (ii + 0.5 * dt * c2)) * inv_c
        c3 = ((vc + 0.5 * dt * b2) - (ii + 0.5 * dt * c2) * r_load) * inv_l
        te = t + dt
        b4 = (i_amp * math.sin(omega * te) - (ii + dt * c3)) * inv_c
        c4 = ((vc + dt * b3) - (ii + dt * c3) * r_load) * inv_l
        vc += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        ii += dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
    return RUN_OK
