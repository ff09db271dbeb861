import pytest

from flyinv.circuit import config_from_dict, validate

# Fast configuration for mechanics tests: 40 switching periods per cycle,
# 100 steps per period, three cycles -> 12k steps per run.  The electrical
# values are deliberately rough (big currents, heavy switches); physics
# tolerances belong to the baseline preset, not to this config.
SMALL_VALUES = {
    "circuit.source.u_dc": 48.0,
    "circuit.transformer.turns_ratio": 6.0,
    "circuit.transformer.l_mag": 2.0e-5,
    "circuit.switches.r_on_primary": 0.05,
    "circuit.filter.l_filt": 4.7e-3,
    "circuit.filter.c_filt": 2.2e-6,
    "circuit.load.kind": "resistive",
    "circuit.load.r_load": 60.0,
    "circuit.modulation.f_fundamental": 50.0,
    "circuit.modulation.f_switching": 2000.0,
    "circuit.modulation.duty_max": 0.5,
    "dt": 5.0e-6,
    "n_cycles_total": 3,
    "n_cycles_settle": 1,
}


def small_config(**overrides):
    """SMALL_VALUES with dotted-key overrides, validated."""
    values = dict(SMALL_VALUES)
    values.update(overrides)
    if values.get("circuit.load.kind") == "grid":
        values.pop("circuit.load.r_load", None)
    else:
        values.pop("circuit.load.amplitude_rms", None)
        values.pop("circuit.load.frequency", None)
    return validate(config_from_dict(values))


@pytest.fixture
def small_cfg():
    return small_config()


@pytest.fixture(scope="session")
def small_trace():
    from flyinv.simulator import simulate

    return simulate(small_config())
