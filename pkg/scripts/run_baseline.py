#!/usr/bin/env python3
"""Run the baseline scenario and dump its report and trace CSV."""

import sys
from pathlib import Path

from iptsim.config import load_config
from iptsim.harness import emit_csv, run_scenario

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    cfg_path = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "configs" / "baseline.cfg")
    cfg = load_config(cfg_path)
    report, traces = run_scenario(cfg)

    out_dir = ROOT / "results"
    out_dir.mkdir(exist_ok=True)
    trace_path = out_dir / "baseline_trace.csv"
    trace_path.write_text(emit_csv(traces), encoding="utf-8", newline="\n")

    print(f"config:   {cfg_path}")
    print(f"sessions: {report.sessions}")
    print(f"frames:   {report.frames_delivered}/{report.frames_sent} delivered")
    print(f"ber:      {report.ber:.3g} over {report.bits_sent} line bits")
    print(f"usart:    SPBRG={report.spbrg} actual={report.actual_baud:.3f} baud "
          f"({report.baud_error_pct:+.3f}%)")
    print(f"display:  |{report.display_line1}|")
    print(f"          |{report.display_line2}|")
    print(f"trace:    {trace_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
