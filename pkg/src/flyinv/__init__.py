"""Desk-scale simulator for a single-stage flyback microinverter.

The converter pairs two two-switch flyback legs with a low-frequency
unfolding stage and a CL grid filter.  The package integrates the switched
circuit with a fixed-step RK4 scheme, computes spectra/THD/efficiency,
offers an analytic CL-filter designer, and batches parameter sweeps; the
``flyinv`` CLI fronts all of it.
"""

from .analysis import (MetricsReport, Spectrum, energy_balance_residual,
                       metrics, spectrum, thd)
from .circuit import (CircuitParams, FilterSpec, GridLoad, ModulationSpec,
                      ResistiveLoad, SimConfig, SourceSpec, SwitchSpec,
                      TransformerSpec, apply_overrides, load_config,
                      parse_config_text, preset, validate)
from .errors import (ConfigError, FlyinvError, InfeasibleDesign,
                     MalformedTable, NonIntegerSpan, NumericalDivergence,
                     PlacementError, ResonanceSingularity, TargetUnreachable,
                     ValidationError, ZeroFundamental, ZeroInputPower)
from .filter_design import (FilterResponse, attenuation_report, design_filter,
                            resonant_frequency, simulated_filter_gain,
                            transfer_magnitude)
from .modulator import DutyCommand, GateState, duty_command, gates
from .simulator import (SimState, Trace, derivatives, load_trace, simulate,
                        save_trace, step)
from .sweep import (SweepPlan, SweepPoint, SweepResult, average_power,
                    commanded_v_rms, duty_for_power, power_sweep, run_sweep)

__version__ = "0.1.0"
