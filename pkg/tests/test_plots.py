"""Plot rendering from exported tables: determinism and fault reporting."""

import pytest

from conftest import SMALL_VALUES
from flyinv.cli import main
from flyinv.errors import MalformedTable
from flyinv.plots import render_spectrum, render_sweep, render_waveform


@pytest.fixture(scope="module")
def sim_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("simout")
    cfg = out / "small.cfg"
    cfg.write_text("\n".join(f"{k} = {v}" for k, v in SMALL_VALUES.items()))
    assert main(["simulate", "--config", str(cfg), "--out", str(out),
                 "--thd-cap", "15"]) == 0
    return out


def test_rendering_is_deterministic(sim_out, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_waveform(sim_out / "trace.csv", a)
    render_waveform(sim_out / "trace.csv", b)
    assert a.read_bytes() == b.read_bytes()


def test_empty_table_is_malformed(tmp_path):
    empty = tmp_path / "spectrum.csv"
    empty.write_text("h,f_hz,v_rms\n")
    with pytest.raises(MalformedTable):
        render_spectrum(empty, tmp_path / "out.svg")


def test_missing_column_is_malformed(tmp_path):
    bad = tmp_path / "spectrum.csv"
    bad.write_text("h,frequency\n1,50\n")
    with pytest.raises(MalformedTable) as err:
        render_spectrum(bad, tmp_path / "out.svg")
    assert err.value.column == "f_hz"


def test_sweep_plot_renders_one_curve_per_series(sim_out, tmp_path):
    table = tmp_path / "sweep.csv"
    table.write_text(
        "setpoint.p_out,circuit.switches.r_on_primary,thd,v_rms,"
        "p_out_avg,p_in_avg,efficiency,error\n"
        "20,0.008,0.01,118,20,21,0.97,\n"
        "20,0.5,0.2,60,6,14,0.43,\n"
        "100,0.008,0.01,118,99,103,0.96,\n"
        "100,0.5,0.3,62,10,49,0.21,\n")
    render_sweep(table, tmp_path / "sweep.svg")
    svg = (tmp_path / "sweep.svg").read_text()
    assert "r_on_primary = 0.008" in svg
    assert "r_on_primary = 0.5" in svg


def test_sweep_rows_with_errors_may_be_blank(tmp_path):
    table = tmp_path / "sweep.csv"
    table.write_text(
        "circuit.load.r_load,thd,v_rms,p_out_avg,p_in_avg,efficiency,error\n"
        "50,0.01,100,50,52,0.96,\n"
        "-1,,,,,,ValidationError: bad\n")
    render_sweep(table, tmp_path / "sweep.svg")
    assert (tmp_path / "sweep.svg").exists()


def test_report_round_trips_design_filter_output(tmp_path):
    out = tmp_path / "resp"
    assert main(["design-filter", "--fc", "2000", "--c", "4.7e-6",
                 "--out", str(out)]) == 0
    plots_dir = tmp_path / "plots"
    assert main(["report", "--in", str(out), "--out", str(plots_dir)]) == 0
    assert (plots_dir / "response.svg").exists()


def test_report_round_trips_sweep_output(sim_out, tmp_path):
    cfg = sim_out / "small.cfg"
    out = tmp_path / "swp"
    assert main(["sweep", "--config", str(cfg), "--out", str(out),
                 "--thd-cap", "15",
                 "--axis", "circuit.load.r_load=40,80"]) == 0
    assert main(["report", "--in", str(out)]) == 0
    assert (out / "sweep.svg").exists()
