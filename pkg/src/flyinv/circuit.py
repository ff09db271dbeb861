"""Electrical parameters of the microinverter and the simulation configuration.

All quantities are SI base units (volts, ohms, henries, farads, hertz,
seconds).  No dynamics live here: the types are immutable value objects,
``validate`` only accepts or rejects, and the config-file grammar is a flat
``dotted.key = value`` text format (see ``parse_config_text``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from importlib import resources

from .errors import ConfigError, ValidationError

DUTY_LAWS = ("rectified_sine", "constant")

# Relative tolerance for the "is an integer" frequency-ratio checks.  The
# ratios come from user-entered floats, so demand near-exact alignment.
_RATIO_RTOL = 1e-9


@dataclass(frozen=True)
class SourceSpec:
    """DC input source."""

    u_dc: float  # input voltage (V)


@dataclass(frozen=True)
class TransformerSpec:
    """Ideal transformer with a primary-referred magnetizing inductance."""

    turns_ratio: float  # n = N_secondary / N_primary
    l_mag: float        # magnetizing inductance (H), referred to primary


@dataclass(frozen=True)
class SwitchSpec:
    """On-state resistances of the power switches."""

    r_on_primary: float    # shared by M1-M4 (ohm)
    r_on_secondary: float  # shared by M5, M6 (ohm)


@dataclass(frozen=True)
class FilterSpec:
    """CL output filter: shunt capacitor, series inductor, optional grid inductance."""

    l_filt: float        # series inductor L (H)
    c_filt: float        # shunt capacitor C (F)
    l_grid: float = 0.0  # extra grid-side inductance Lg (H), lumped with L


@dataclass(frozen=True)
class ResistiveLoad:
    """Passive resistive load across the filter output."""

    r_load: float  # ohm

    kind = "resistive"


@dataclass(frozen=True)
class GridLoad:
    """Stiff sinusoidal grid voltage at the filter output."""

    amplitude_rms: float  # V rms
    frequency: float      # Hz, must equal the modulation fundamental

    kind = "grid"


@dataclass(frozen=True)
class ModulationSpec:
    """Sinusoidal PWM settings for the unfolding flyback pair."""

    f_fundamental: float       # output fundamental (Hz)
    f_switching: float         # switching frequency (Hz)
    duty_max: float            # peak duty command, in (0, 1]
    dead_time: float = 0.0     # trailing-edge blanking of the primary pair (s)
    duty_law: str = "rectified_sine"  # duty envelope: rectified_sine or constant


@dataclass(frozen=True)
class CircuitParams:
    """Every physical constant of the converter, filter, and load."""

    source: SourceSpec
    transformer: TransformerSpec
    switches: SwitchSpec
    filter: FilterSpec
    load: ResistiveLoad | GridLoad
    modulation: ModulationSpec


@dataclass(frozen=True)
class SimConfig:
    """A circuit plus the fixed-step integration setup."""

    circuit: CircuitParams
    dt: float              # integration step (s)
    n_cycles_total: int    # fundamental cycles simulated
    n_cycles_settle: int   # initial cycles excluded from metrics


def _is_integer_ratio(value: float) -> bool:
    return value > 0 and abs(value - round(value)) <= _RATIO_RTOL * value


def _check_finite(bad, path, value):
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        bad.append((path, "must be a finite number"))
        return False
    return True


def validate(config: SimConfig) -> SimConfig:
    """Return ``config`` unchanged if every invariant holds.

    Raises :class:`ValidationError` carrying the complete list of
    violations otherwise.  Never mutates numeric values, so the call is
    idempotent on accepted configs.
    """
    bad = []
    c = config.circuit

    if _check_finite(bad, "circuit.source.u_dc", c.source.u_dc):
        if c.source.u_dc <= 0:
            bad.append(("circuit.source.u_dc", "must be > 0"))

    if _check_finite(bad, "circuit.transformer.turns_ratio", c.transformer.turns_ratio):
        if c.transformer.turns_ratio <= 0:
            bad.append(("circuit.transformer.turns_ratio", "must be > 0"))
    if _check_finite(bad, "circuit.transformer.l_mag", c.transformer.l_mag):
        if c.transformer.l_mag <= 0:
            bad.append(("circuit.transformer.l_mag", "must be > 0"))

    if _check_finite(bad, "circuit.switches.r_on_primary", c.switches.r_on_primary):
        if c.switches.r_on_primary < 0:
            bad.append(("circuit.switches.r_on_primary", "must be >= 0"))
    if _check_finite(bad, "circuit.switches.r_on_secondary", c.switches.r_on_secondary):
        if c.switches.r_on_secondary < 0:
            bad.append(("circuit.switches.r_on_secondary", "must be >= 0"))

    if _check_finite(bad, "circuit.filter.l_filt", c.filter.l_filt):
        if c.filter.l_filt <= 0:
            bad.append(("circuit.filter.l_filt", "must be > 0"))
    if _check_finite(bad, "circuit.filter.c_filt", c.filter.c_filt):
        if c.filter.c_filt <= 0:
            bad.append(("circuit.filter.c_filt", "must be > 0"))
    if _check_finite(bad, "circuit.filter.l_grid", c.filter.l_grid):
        if c.filter.l_grid < 0:
            bad.append(("circuit.filter.l_grid", "must be >= 0"))

    m = c.modulation
    f0_ok = _check_finite(bad, "circuit.modulation.f_fundamental", m.f_fundamental)
    fsw_ok = _check_finite(bad, "circuit.modulation.f_switching", m.f_switching)
    if f0_ok and m.f_fundamental <= 0:
        bad.append(("circuit.modulation.f_fundamental", "must be > 0"))
        f0_ok = False
    if fsw_ok and m.f_switching <= 0:
        bad.append(("circuit.modulation.f_switching", "must be > 0"))
        fsw_ok = False
    if f0_ok and fsw_ok:
        if m.f_switching < 20 * m.f_fundamental:
            bad.append(("circuit.modulation.f_switching",
                        "must be >= 20 * f_fundamental"))
        if not _is_integer_ratio(m.f_switching / m.f_fundamental):
            bad.append(("circuit.modulation.f_switching",
                        "f_switching / f_fundamental must be an integer"))
    duty_ok = _check_finite(bad, "circuit.modulation.duty_max", m.duty_max)
    if duty_ok and not 0 < m.duty_max <= 1:
        bad.append(("circuit.modulation.duty_max", "must be in (0, 1]"))
        duty_ok = False
    if _check_finite(bad, "circuit.modulation.dead_time", m.dead_time):
        if m.dead_time < 0:
            bad.append(("circuit.modulation.dead_time", "must be >= 0"))
        elif duty_ok and fsw_ok and m.dead_time >= m.duty_max / m.f_switching:
            bad.append(("circuit.modulation.dead_time",
                        "must be < duty_max / f_switching"))
    if m.duty_law not in DUTY_LAWS:
        bad.append(("circuit.modulation.duty_law",
                    f"must be one of {DUTY_LAWS}"))

    load = c.load
    if isinstance(load, ResistiveLoad):
        if _check_finite(bad, "circuit.load.r_load", load.r_load):
            if load.r_load <= 0:
                bad.append(("circuit.load.r_load", "must be > 0"))
    elif isinstance(load, GridLoad):
        if _check_finite(bad, "circuit.load.amplitude_rms", load.amplitude_rms):
            if load.amplitude_rms <= 0:
                bad.append(("circuit.load.amplitude_rms", "must be > 0"))
        if _check_finite(bad, "circuit.load.frequency", load.frequency):
            if load.frequency <= 0:
                bad.append(("circuit.load.frequency", "must be > 0"))
            elif f0_ok and not math.isclose(load.frequency, m.f_fundamental,
                                            rel_tol=1e-12):
                bad.append(("circuit.load.frequency",
                            "must equal the modulation fundamental"))
    else:
        bad.append(("circuit.load.kind", "must be resistive or grid"))

    if _check_finite(bad, "dt", config.dt):
        if config.dt <= 0:
            bad.append(("dt", "must be > 0"))
        elif fsw_ok:
            if config.dt > 1.0 / (100.0 * m.f_switching):
                bad.append(("dt", "must be <= 1 / (100 * f_switching)"))
            if not _is_integer_ratio(1.0 / (config.dt * m.f_switching)):
                bad.append(("dt", "1/dt must be an integer multiple of f_switching"))

    if not isinstance(config.n_cycles_total, int) or config.n_cycles_total < 1:
        bad.append(("n_cycles_total", "must be an integer >= 1"))
    if not isinstance(config.n_cycles_settle, int) or config.n_cycles_settle < 0:
        bad.append(("n_cycles_settle", "must be an integer >= 0"))
    elif isinstance(config.n_cycles_total, int) and \
            config.n_cycles_settle >= config.n_cycles_total:
        bad.append(("n_cycles_settle", "must be < n_cycles_total"))

    if bad:
        raise ValidationError(bad)
    return config


# --------------------------------------------------------------------------
# Flat dotted-key config grammar
#
#   key = value          one assignment per line
#   # ...                comment (also allowed after a value)
#
# Values are numbers (int/float, '.' decimal point, e-notation) or bare
# words (load kind, duty law).  Recognised keys and defaults:
_FLOAT_KEYS = {
    "circuit.source.u_dc",
    "circuit.transformer.turns_ratio",
    "circuit.transformer.l_mag",
    "circuit.switches.r_on_primary",
    "circuit.switches.r_on_secondary",
    "circuit.filter.l_filt",
    "circuit.filter.c_filt",
    "circuit.filter.l_grid",
    "circuit.load.r_load",
    "circuit.load.amplitude_rms",
    "circuit.load.frequency",
    "circuit.modulation.f_fundamental",
    "circuit.modulation.f_switching",
    "circuit.modulation.duty_max",
    "circuit.modulation.dead_time",
    "dt",
}
_INT_KEYS = {"n_cycles_total", "n_cycles_settle"}
_STR_KEYS = {"circuit.load.kind", "circuit.modulation.duty_law"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def config_to_dict(config: SimConfig) -> dict:
    """Flatten a config into the dotted-key mapping used by files and overrides."""
    c = config.circuit
    out = {
        "circuit.source.u_dc": c.source.u_dc,
        "circuit.transformer.turns_ratio": c.transformer.turns_ratio,
        "circuit.transformer.l_mag": c.transformer.l_mag,
        "circuit.switches.r_on_primary": c.switches.r_on_primary,
        "circuit.switches.r_on_secondary": c.switches.r_on_secondary,
        "circuit.filter.l_filt": c.filter.l_filt,
        "circuit.filter.c_filt": c.filter.c_filt,
        "circuit.filter.l_grid": c.filter.l_grid,
        "circuit.load.kind": c.load.kind,
        "circuit.modulation.f_fundamental": c.modulation.f_fundamental,
        "circuit.modulation.f_switching": c.modulation.f_switching,
        "circuit.modulation.duty_max": c.modulation.duty_max,
        "circuit.modulation.dead_time": c.modulation.dead_time,
        "circuit.modulation.duty_law": c.modulation.duty_law,
        "dt": config.dt,
        "n_cycles_total": config.n_cycles_total,
        "n_cycles_settle": config.n_cycles_settle,
    }
    if isinstance(c.load, ResistiveLoad):
        out["circuit.load.r_load"] = c.load.r_load
    else:
        out["circuit.load.amplitude_rms"] = c.load.amplitude_rms
        out["circuit.load.frequency"] = c.load.frequency
    return out


def config_from_dict(values: dict) -> SimConfig:
    """Assemble a SimConfig from a dotted-key mapping.

    Applies grammar-level defaults (``l_grid`` 0, ``dead_time`` 0,
    ``r_on_secondary`` = ``r_on_primary``, sine duty law) and rejects
    unknown or missing keys.  Invariants are *not* checked here; call
    :func:`validate` on the result.
    """
    d = dict(values)
    unknown = sorted(set(d) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")

    def take_float(key, default=None):
        if key not in d:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return float(default)
        v = d.pop(key)
        try:
            return float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key!r}: expected a number, got {v!r}") from None

    def take_int(key, default=None):
        if key not in d:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return int(default)
        v = d.pop(key)
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{key!r}: expected an integer, got {v!r}")
        try:
            return int(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key!r}: expected an integer, got {v!r}") from None

    source = SourceSpec(u_dc=take_float("circuit.source.u_dc"))
    transformer = TransformerSpec(
        turns_ratio=take_float("circuit.transformer.turns_ratio"),
        l_mag=take_float("circuit.transformer.l_mag"),
    )
    r_on_primary = take_float("circuit.switches.r_on_primary")
    switches = SwitchSpec(
        r_on_primary=r_on_primary,
        r_on_secondary=take_float("circuit.switches.r_on_secondary", r_on_primary),
    )
    filt = FilterSpec(
        l_filt=take_float("circuit.filter.l_filt"),
        c_filt=take_float("circuit.filter.c_filt"),
        l_grid=take_float("circuit.filter.l_grid", 0.0),
    )
    kind = str(d.pop("circuit.load.kind", "resistive"))
    if kind == "resistive":
        load = ResistiveLoad(r_load=take_float("circuit.load.r_load"))
    elif kind == "grid":
        load = GridLoad(
            amplitude_rms=take_float("circuit.load.amplitude_rms"),
            frequency=take_float("circuit.load.frequency"),
        )
    else:
        raise ConfigError(f"circuit.load.kind: expected resistive or grid, got {kind!r}")
    modulation = ModulationSpec(
        f_fundamental=take_float("circuit.modulation.f_fundamental"),
        f_switching=take_float("circuit.modulation.f_switching"),
        duty_max=take_float("circuit.modulation.duty_max"),
        dead_time=take_float("circuit.modulation.dead_time", 0.0),
        duty_law=str(d.pop("circuit.modulation.duty_law", "rectified_sine")),
    )
    config = SimConfig(
        circuit=CircuitParams(source, transformer, switches, filt, load, modulation),
        dt=take_float("dt"),
        n_cycles_total=take_int("n_cycles_total"),
        n_cycles_settle=take_int("n_cycles_settle", 0),
    )
    leftovers = sorted(d)
    if leftovers:
        raise ConfigError(
            "keys not applicable to this load kind: " + ", ".join(leftovers))
    return config


def _parse_scalar(key, raw):
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"{key!r}: empty value")
    if key in _STR_KEYS:
        return raw
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key!r}: cannot parse {raw!r} as a number") from None


def parse_config_text(text: str) -> SimConfig:
    """Parse the flat ``dotted.key = value`` grammar into a SimConfig."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_scalar(key, raw)
    return config_from_dict(values)


def load_config(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_to_text(config: SimConfig) -> str:
    """Serialise a config back into the file grammar (round-trips exactly)."""
    lines = []
    for key, value in config_to_dict(config).items():
        if isinstance(value, float):
            lines.append(f"{key} = {value!r}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def apply_overrides(config: SimConfig, items) -> SimConfig:
    """Apply dotted-key overrides to a config, returning a new SimConfig.

    ``items`` is an iterable of ``(key, value)`` pairs; values may be strings
    (parsed with the file grammar) or already-typed numbers.  Overrides are
    applied on the flattened mapping, so switching the load kind also expects
    the matching load keys in the same batch.
    """
    values = config_to_dict(config)
    for key, value in items:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if isinstance(value, str):
            value = _parse_scalar(key, value)
        values[key] = value
    kind = values.get("circuit.load.kind")
    if kind == "resistive":
        values.pop("circuit.load.amplitude_rms", None)
        values.pop("circuit.load.frequency", None)
    elif kind == "grid":
        values.pop("circuit.load.r_load", None)
    return config_from_dict(values)


PRESET_NAMES = ("baseline",)


def preset(name: str = "baseline") -> SimConfig:
    """Load a named, shipped configuration preset."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    text = resources.files(__package__).joinpath(f"presets/{name}.cfg").read_text()
    return validate(parse_config_text(text))
