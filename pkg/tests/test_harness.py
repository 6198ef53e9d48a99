import csv
import io
from dataclasses import replace

import pytest

from iptsim.config import ScriptStep, build_config
from iptsim.harness import (NoFeasibleRateError, SweepResult, TraceRecord,
                            ber_sweep, emit_csv, max_data_rate, run_scenario,
                            session_airtime_s)


@pytest.fixture(scope="module")
def short_cfg():
    return build_config({"sim.duration_s": 2.0})


# ---- scenario runner --------------------------------------------------------

def test_scenario_noiseless_full_delivery(short_cfg):
    cfg = replace(short_cfg, link=replace(short_cfg.link, noise_rms=0.0))
    report, traces = run_scenario(cfg)
    assert report.sessions == 2
    assert report.frames_sent == 4            # poll + reply per session
    assert report.frames_delivered == 4
    assert report.bit_errors == 0
    assert report.display_line1 == "  25.0C  1450RPM"
    assert any(r.stage == "temp" for r in traces)


def test_scenario_fault_alarm_and_display():
    cfg = build_config({"sim.duration_s": 4.0},
                       script=[ScriptStep(0.0, 25.0, 1450, 230.0, 1.5),
                               ScriptStep(2.0, 95.0, 1450, 230.0, 1.5)])
    report, traces = run_scenario(cfg)
    assert report.fault_events == [(2.0, 1)]
    assert "FLT:01" in report.display_line2
    alarm = [r for r in traces if r.stage == "reply_type" and r.value == 3.0]
    assert len(alarm) == 1 and alarm[0].time_s == 2.0


def test_scenario_deterministic(short_cfg):
    a = run_scenario(short_cfg)
    b = run_scenario(short_cfg)
    assert emit_csv(a[1]) == emit_csv(b[1])
    assert a[0] == b[0]


def test_session_airtime(short_cfg):
    # 66 poll bits + 156 reply bits at 250 bit/s
    assert session_airtime_s(short_cfg) == pytest.approx(222 / 250)


# ---- sweeps -----------------------------------------------------------------

def test_sweep_noiseless_gap_points(baseline_cfg):
    cfg = replace(baseline_cfg, link=replace(baseline_cfg.link, noise_rms=0.0))
    results = ber_sweep(cfg, "gap", [0.0, 0.05, 0.10], bits_per_point=1000)
    for r in results:
        assert r.ber == 0.0
        assert r.frames_delivered == r.frames_sent
        assert r.bits_sent >= 1000


def test_sweep_deterministic(baseline_cfg):
    a = ber_sweep(baseline_cfg, "noise_rms", [0.05, 0.2], bits_per_point=1000)
    b = ber_sweep(baseline_cfg, "noise_rms", [0.05, 0.2], bits_per_point=1000)
    assert a == b


def test_sweep_ber_rises_with_heavy_noise(baseline_cfg):
    heavy = baseline_cfg.link.noise_rms * 40
    results = ber_sweep(baseline_cfg, "noise_rms", [0.0, heavy], bits_per_point=1000)
    assert results[0].ber == 0.0
    assert results[1].ber > results[0].ber


def test_sweep_ber_non_decreasing_in_noise(baseline_cfg):
    # The cliff is sharp: once the rectified noise floor crosses the
    # comparator band the output latches and BER saturates, so probe the
    # clean side, the operating point, and the far side.
    base = baseline_cfg.link.noise_rms
    results = ber_sweep(baseline_cfg, "noise_rms", [0.0, base, 5 * base],
                        bits_per_point=1000)
    bers = [r.ber for r in results]
    assert bers == sorted(bers)
    assert bers[0] == 0.0 and bers[-1] > 0


def test_sweep_ber_non_decreasing_in_gap(baseline_cfg):
    results = ber_sweep(baseline_cfg, "gap", [0.0, 0.10, 0.16, 0.25],
                        bits_per_point=1000)
    bers = [r.ber for r in results]
    assert bers == sorted(bers)
    assert bers[0] == 0.0 and bers[-1] > 0


def test_nine_bit_mode_end_to_end():
    cfg = build_config({"usart.nine_bit": True, "sim.duration_s": 2.0})
    report, _ = run_scenario(cfg)
    assert report.frames_delivered == report.frames_sent == 4
    assert report.bit_errors == 0


def test_sweep_validates_arguments(baseline_cfg):
    with pytest.raises(ValueError):
        ber_sweep(baseline_cfg, "coupling", [0.1])
    with pytest.raises(ValueError):
        ber_sweep(baseline_cfg, "gap", [])
    with pytest.raises(ValueError):
        ber_sweep(baseline_cfg, "gap", [0.0], bits_per_point=10)


# ---- max data rate ----------------------------------------------------------

def test_max_data_rate_infeasible_link(baseline_cfg):
    # At half a meter the received envelope sits far below the calibrated
    # threshold, so even the minimum rate fails.
    dead = replace(baseline_cfg, link=replace(baseline_cfg.link, gap=0.5))
    with pytest.raises(NoFeasibleRateError):
        max_data_rate(dead, 1e-3, bits_per_probe=200)


def test_max_data_rate_validates_ceiling(baseline_cfg):
    with pytest.raises(ValueError):
        max_data_rate(baseline_cfg, 0.0)


# ---- CSV emission -----------------------------------------------------------

def test_emit_csv_empty_trace():
    assert emit_csv([]) == "time_s,stage,value,unit\n"


def test_emit_csv_single_record():
    text = emit_csv([TraceRecord(1.25, "temp", 25.0, "degC")])
    assert text == "time_s,stage,value,unit\n1.25,temp,25,degC\n"


def test_emit_csv_sweep_layout():
    text = emit_csv([SweepResult(0.05, 1000, 2, 0.002, 8, 7)])
    lines = text.splitlines()
    assert lines[0] == "var,bits,errors,ber,frames_sent,frames_delivered"
    assert lines[1] == "0.05,1000,2,0.002,8,7"


def test_emit_csv_round_trip_parse():
    records = [TraceRecord(0.0, "speed", 1450.123456789, "RPM"),
               TraceRecord(1.0, "voltage", 229.987654321, "V")]
    text = emit_csv(records)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 2
    for row, rec in zip(rows, records):
        assert row["stage"] == rec.stage
        assert row["unit"] == rec.unit
        assert float(row["time_s"]) == pytest.approx(rec.time_s, rel=1e-8)
        assert float(row["value"]) == pytest.approx(rec.value, rel=1e-8)


def test_emit_csv_nine_significant_digits():
    text = emit_csv([TraceRecord(0.123456789123, "x", 0.987654321987, "u")])
    assert "0.123456789," in text
    assert ",0.987654322," in text


def test_emit_csv_rejects_unknown_kind():
    with pytest.raises(ValueError):
        emit_csv([], kind="table")
