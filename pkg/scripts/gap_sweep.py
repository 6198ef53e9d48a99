#!/usr/bin/env python3
"""Air-gap tolerance study: BER and frame delivery from 0 to 16 cm at 250 bit/s."""

import sys
from pathlib import Path

from iptsim.config import load_config
from iptsim.harness import ber_sweep, emit_csv

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    cfg = load_config(str(ROOT / "configs" / "baseline.cfg"))
    gaps = [round(0.01 * i, 2) for i in range(17)]  # well past the calibration gap
    results = ber_sweep(cfg, "gap", gaps, bits_per_point=10_000)

    out_dir = ROOT / "results"
    out_dir.mkdir(exist_ok=True)
    csv_path = out_dir / "gap_sweep.csv"
    csv_path.write_text(emit_csv(results), encoding="utf-8", newline="\n")

    print(f"{'gap_m':>6}  {'ber':>9}  {'frames':>9}")
    for r in results:
        print(f"{r.var:6.2f}  {r.ber:9.3g}  {r.frames_delivered:4d}/{r.frames_sent}")
    print(f"\nwritten: {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
