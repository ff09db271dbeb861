"""Command-line front end.

Verbs: ``simulate`` runs a configuration and writes the trace, spectrum,
metrics, and plots; ``design-filter`` solves the CL filter for a target
resonance; ``analyze`` recomputes spectrum and metrics from an exported
trace; ``sweep`` batches parameter studies; ``report`` re-reads exported
tables and renders their plots.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error
(divergence, infeasible design, malformed table), 64 usage error.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, circuit, filter_design, plots, simulator, sweep
from .errors import ConfigError, FlyinvError, MalformedTable, ValidationError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse with the conventional 64 exit code for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_options(sub):
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--config", metavar="PATH",
                       help="configuration file (dotted key = value lines)")
    group.add_argument("--preset", metavar="NAME", default=None,
                       choices=circuit.PRESET_NAMES,
                       help="named shipped preset (default: baseline)")
    sub.add_argument("--set", metavar="PATH=VALUE", action="append",
                     default=[], dest="overrides",
                     help="override a config key or a setpoint.* axis; "
                          "applied after the file, before validation")


def build_parser() -> _Parser:
    parser = _Parser(prog="flyinv",
                     description="single-stage flyback microinverter "
                                 "simulator and CL filter designer")
    subs = parser.add_subparsers(dest="verb", required=True)

    sim = subs.add_parser("simulate", help="run one configuration")
    _add_config_options(sim)
    sim.add_argument("--out", metavar="DIR", default=".",
                     help="output directory (default: current)")
    sim.add_argument("--thd-cap", type=int, default=50, metavar="H",
                     help="highest harmonic included in THD (default 50)")

    des = subs.add_parser("design-filter",
                          help="solve the filter inductance for a target "
                               "resonant frequency")
    des.add_argument("--fc", type=float, required=True, metavar="HZ",
                     help="target resonant frequency")
    des.add_argument("--c", type=float, required=True, metavar="FARADS",
                     help="filter capacitance")
    des.add_argument("--lg", type=float, default=0.0, metavar="HENRIES",
                     help="grid-side inductance (default 0)")
    des.add_argument("--f0", type=float, default=50.0, metavar="HZ",
                     help="fundamental for the attenuation report")
    des.add_argument("--fsw", type=float, default=25e3, metavar="HZ",
                     help="switching frequency for the attenuation report")
    des.add_argument("--out", metavar="DIR", default=None,
                     help="also write response.csv and response.svg here")

    ana = subs.add_parser("analyze",
                          help="recompute spectrum and metrics from an "
                               "exported trace")
    _add_config_options(ana)
    ana.add_argument("--trace", metavar="FILE", required=True,
                     help="trace table written by simulate")
    ana.add_argument("--out", metavar="DIR", default=".")
    ana.add_argument("--thd-cap", type=int, default=50, metavar="H")

    swp = subs.add_parser("sweep", help="run a one- or two-axis sweep")
    _add_config_options(swp)
    swp.add_argument("--axis", metavar="PATH=V1,V2,...", action="append",
                     required=True, dest="axes",
                     help="sweep axis (repeat once for a second axis); "
                          "accepts config paths or setpoint.p_out / "
                          "setpoint.v_rms")
    swp.add_argument("--out", metavar="DIR", default=".")
    swp.add_argument("--thd-cap", type=int, default=50, metavar="H")

    rep = subs.add_parser("report",
                          help="re-read exported tables and render plots")
    rep.add_argument("--in", dest="in_dir", metavar="DIR", required=True)
    rep.add_argument("--out", metavar="DIR", default=None,
                     help="plot directory (default: same as --in)")
    return parser


def _parse_override(item: str) -> tuple[str, str]:
    path, sep, raw = item.partition("=")
    if not sep or not path.strip():
        raise ConfigError(f"override {item!r} is not of the form PATH=VALUE")
    return path.strip(), raw.strip()


def _load_base_config(args) -> circuit.SimConfig:
    if args.config:
        config = circuit.load_config(args.config)
    else:
        config = circuit.preset(args.preset or "baseline")
    for item in args.overrides:
        path, raw = _parse_override(item)
        if path.startswith("setpoint."):
            config = sweep.apply_axis_value(config, path, float(raw))
        else:
            config = circuit.apply_overrides(config, [(path, raw)])
    return circuit.validate(config)


def _outdir(path_str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_metrics(report: analysis.MetricsReport) -> None:
    for name in ("thd", "v_rms", "p_out_avg", "p_in_avg", "efficiency"):
        print(f"{name} = {getattr(report, name)!r}")


def _cmd_simulate(args) -> int:
    config = _load_base_config(args)
    out = _outdir(args.out)
    trace = simulator.simulate(config)
    report = analysis.metrics(trace, h_max=args.thd_cap)
    a, b = trace.settled_bounds()
    spec = analysis.spectrum(trace.v_load[a:b], trace.dt,
                             config.circuit.modulation.f_fundamental,
                             args.thd_cap)
    simulator.save_trace(trace, out / "trace.csv")
    analysis.save_spectrum(spec, out / "spectrum.csv")
    analysis.save_metrics(report, out / "metrics.txt")
    plots.render_waveform(out / "trace.csv", out / "waveform.svg")
    plots.render_spectrum(out / "spectrum.csv", out / "spectrum.svg")
    _print_metrics(report)
    print(f"wrote trace.csv, spectrum.csv, metrics.txt, waveform.svg, "
          f"spectrum.svg to {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_design_filter(args) -> int:
    filt = filter_design.design_filter(args.fc, args.c, args.lg)
    mod = circuit.ModulationSpec(f_fundamental=args.f0, f_switching=args.fsw,
                                 duty_max=1.0)
    response = filter_design.attenuation_report(filt, mod)
    print(f"l_filt = {filt.l_filt!r}")
    print(f"resonant_frequency = {filter_design.resonant_frequency(filt)!r}")
    print("f_hz,gain")
    for f, g in zip(response.frequencies, response.magnitude):
        print(f"{f:.12g},{g:.12g}")
    if args.out is not None:
        out = _outdir(args.out)
        filter_design.save_response(response, out / "response.csv")
        plots.render_response(out / "response.csv", out / "response.svg")
        print(f"wrote response.csv, response.svg to {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    config = _load_base_config(args)
    out = _outdir(args.out)
    trace = simulator.load_trace(args.trace, config)
    report = analysis.metrics(trace, h_max=args.thd_cap)
    a, b = trace.settled_bounds()
    spec = analysis.spectrum(trace.v_load[a:b], trace.dt,
                             config.circuit.modulation.f_fundamental,
                             args.thd_cap)
    analysis.save_spectrum(spec, out / "spectrum.csv")
    analysis.save_metrics(report, out / "metrics.txt")
    _print_metrics(report)
    return EXIT_OK


def _parse_axis(item: str) -> tuple[str, tuple[float, ...]]:
    path, raw = _parse_override(item)
    try:
        values = tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"axis {item!r}: values must be numbers") from None
    if not values:
        raise ConfigError(f"axis {item!r} has no values")
    return path, values


def _cmd_sweep(args) -> int:
    config = _load_base_config(args)
    if len(args.axes) > 2:
        raise ConfigError("at most two --axis options are supported")
    axes = [_parse_axis(item) for item in args.axes]
    plan = sweep.SweepPlan(base=config, axis1=axes[0],
                           axis2=axes[1] if len(axes) > 1 else None)
    result = sweep.run_sweep(plan, h_max=args.thd_cap)
    out = _outdir(args.out)
    sweep.save_sweep(result, out / "sweep.csv")
    plots.render_sweep(out / "sweep.csv", out / "sweep.svg")
    frame = sweep.sweep_frame(result)
    print(frame.to_csv(index=False, float_format="%.12g"), end="")
    failures = [row for row in result.rows if row.error]
    print(f"wrote sweep.csv, sweep.svg to {out} "
          f"({len(result.rows)} points, {len(failures)} failed)",
          file=sys.stderr)
    return EXIT_OK


_REPORT_RENDERERS = {
    "trace.csv": ("waveform.svg", plots.render_waveform),
    "spectrum.csv": ("spectrum.svg", plots.render_spectrum),
    "sweep.csv": ("sweep.svg", plots.render_sweep),
    "response.csv": ("response.svg", plots.render_response),
}


def _cmd_report(args) -> int:
    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        raise MalformedTable(in_dir, "not a directory")
    out = _outdir(args.out) if args.out else in_dir
    handled = []
    for name, (plot_name, renderer) in _REPORT_RENDERERS.items():
        table = in_dir / name
        if table.exists():
            renderer(table, out / plot_name)
            handled.append(f"{name} -> {plot_name}")
    metrics_file = in_dir / "metrics.txt"
    if metrics_file.exists():
        report = analysis.load_metrics(metrics_file)
        _print_metrics(report)
        handled.append("metrics.txt (parsed)")
    if not handled:
        raise MalformedTable(in_dir, "no recognised tables "
                             "(trace/spectrum/sweep/response/metrics)")
    for line in handled:
        print(line, file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "design-filter": _cmd_design_filter,
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.verb](args)
    except (ConfigError, ValidationError) as exc:
        print(f"flyinv: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FlyinvError as exc:
        print(f"flyinv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as exc:
        # a user-supplied path that points at nothing is bad input, not a
        # runtime failure of the tool
        print(f"flyinv: {exc}", file=sys.stderr)
        return EXIT_INVALID


def console_main() -> None:
    sys.exit(main())
