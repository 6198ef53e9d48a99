"""Scenario runner, BER/data-rate sweeps, and CSV emission.

Everything here is a pure function of (configuration, seeds): per-point and
per-frame random streams derive from the master seed through the splitmix
mixer, so repeated runs produce byte-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import ScenarioConfig
from .seeds import derive_seed
from .simulate import IDLE_PREAMBLE_BITS, IDLE_TAIL_BITS, run_line
from .telemetry import (FaultSet, MotorState, POLL_FRAME_LEN, READING_FRAME_LEN,
                        classify_faults, encode_frame, encode_poll,
                        render_display, scan_frames,
                        MSG_FAULT_ALARM, MSG_POLL, MSG_READING)
from .usart import UsartRx, frame_encode, nearest_spbrg


class NoFeasibleRateError(RuntimeError):
    """Even the minimum probed bit rate missed the BER ceiling."""


@dataclass(frozen=True)
class TraceRecord:
    """One row of the scenario trace CSV."""

    time_s: float
    stage: str
    value: float
    unit: str


@dataclass(frozen=True)
class SweepResult:
    """Measured link quality at one sweep point."""

    var: float
    bits_sent: int
    bit_errors: int
    ber: float
    frames_sent: int
    frames_delivered: int


@dataclass(frozen=True)
class MaxRateResult:
    rate_bps: int
    resolution_bps: int


@dataclass
class ScenarioReport:
    """Summary of one scenario run."""

    duration_s: float
    sessions: int
    frames_sent: int
    frames_delivered: int
    bits_sent: int
    bit_errors: int
    ber: float
    fault_events: list[tuple[float, int]]
    display_line1: str
    display_line2: str
    spbrg: int
    actual_baud: float
    baud_error_pct: float


def frame_line_bits(frame_bytes: bytes, cfg: ScenarioConfig) -> np.ndarray:
    """USART line bits for a frame, padded with idle so the receiver settles."""
    ninth = 0 if cfg.usart.nine_bit else None
    bits: list[int] = [1] * IDLE_PREAMBLE_BITS
    for b in frame_bytes:
        bits.extend(frame_encode(b, ninth, cfg.usart))
    bits.extend([1] * IDLE_TAIL_BITS)
    return np.array(bits, dtype=np.uint8)


def session_airtime_s(cfg: ScenarioConfig) -> float:
    """Wire time of one poll/reply exchange including idle padding."""
    pad = IDLE_PREAMBLE_BITS + IDLE_TAIL_BITS
    poll_bits = POLL_FRAME_LEN * cfg.usart.frame_bits + pad
    reply_bits = READING_FRAME_LEN * cfg.usart.frame_bits + pad
    return (poll_bits + reply_bits) / cfg.tx.bit_rate


def _transmit(cfg: ScenarioConfig, frame_bytes: bytes,
              noise_seed: int) -> tuple[list, int, int]:
    """Send one frame through the full stack.

    Returns (decoded frames found in the received byte stream, payload line
    bits sent, payload bit errors at the modem decision points).
    """
    line_bits = frame_line_bits(frame_bytes, cfg)
    link = replace(cfg.link, rng_seed=noise_seed)
    rx_machine = UsartRx(cfg.usart)
    mids, received = run_line(line_bits, link, cfg.tx, cfg.rx, cfg.q_factor,
                              noise_seed, usart_rx=rx_machine)
    span = slice(IDLE_PREAMBLE_BITS, line_bits.size - IDLE_TAIL_BITS)
    errors = int(np.count_nonzero(mids[span] != line_bits[span]))
    payload = bytes(word & 0xFF for word, _ in received)
    return scan_frames(payload), span.stop - span.start, errors


def _script_lookup(cfg: ScenarioConfig, t: float) -> MotorState:
    current = cfg.script[0]
    for step in cfg.script:
        if step.time_s <= t:
            current = step
        else:
            break
    return MotorState(current.temp_c, current.speed_rpm,
                      current.voltage_v, current.current_a)


def run_scenario(cfg: ScenarioConfig) -> tuple[ScenarioReport, list[TraceRecord]]:
    """Simulate poll/reply sessions for the configured duration.

    The monitor polls on every poll interval; the acquisition side answers
    with a reading frame, or a fault-alarm frame whenever new fault bits
    appeared since the previous session.  The report carries delivery and
    bit-error totals plus the final rendered display.
    """
    traces: list[TraceRecord] = []
    frames_sent = frames_delivered = 0
    bits_sent = bit_errors = 0
    fault_events: list[tuple[float, int]] = []
    prev_faults = FaultSet(0)
    shown_state: MotorState | None = None
    shown_faults = FaultSet(0)
    sessions = 0

    t = 0.0
    while t < cfg.duration_s:
        state = _script_lookup(cfg, t)
        faults = classify_faults(state, cfg.thresholds, prev_faults)
        new_bits = faults.mask & ~prev_faults.mask
        if faults.mask != prev_faults.mask:
            fault_events.append((t, faults.mask))
        traces.extend([
            TraceRecord(t, "temp", state.temp_c, "degC"),
            TraceRecord(t, "speed", state.speed_rpm, "RPM"),
            TraceRecord(t, "voltage", state.voltage_v, "V"),
            TraceRecord(t, "current", state.current_a, "A"),
            TraceRecord(t, "fault_mask", float(faults.mask), "bitmask"),
        ])

        frames_sent += 1
        found, nbits, nerr = _transmit(cfg, encode_poll(),
                                       derive_seed(cfg.master_seed, 2 * sessions))
        bits_sent += nbits
        bit_errors += nerr
        poll_ok = any(f.msg_type == MSG_POLL for f in found)
        traces.append(TraceRecord(t, "poll_delivered", float(poll_ok), "flag"))

        if poll_ok:
            msg_type = MSG_FAULT_ALARM if new_bits else MSG_READING
            reply = encode_frame(state, faults, msg_type)
            frames_sent += 1
            found, nbits, nerr = _transmit(cfg, reply,
                                           derive_seed(cfg.master_seed, 2 * sessions + 1))
            bits_sent += nbits
            bit_errors += nerr
            decoded = next((f for f in found if f.msg_type == msg_type), None)
            traces.append(TraceRecord(t, "reply_type", float(msg_type), "msg"))
            traces.append(TraceRecord(t, "reply_delivered",
                                      float(decoded is not None), "flag"))
            frames_delivered += 1  # the poll made it across
            if decoded is not None:
                frames_delivered += 1
                shown_state = decoded.state
                shown_faults = decoded.faults

        prev_faults = faults
        sessions += 1
        t = sessions * cfg.poll_interval_s

    if shown_state is None:
        line1 = line2 = " " * 16
    else:
        line1, line2 = render_display(shown_state, shown_faults)
    brg = nearest_spbrg(cfg.usart.fosc, cfg.tx.bit_rate, brgh=cfg.usart.brgh)
    report = ScenarioReport(
        duration_s=cfg.duration_s,
        sessions=sessions,
        frames_sent=frames_sent,
        frames_delivered=frames_delivered,
        bits_sent=bits_sent,
        bit_errors=bit_errors,
        ber=bit_errors / bits_sent if bits_sent else 0.0,
        fault_events=fault_events,
        display_line1=line1,
        display_line2=line2,
        spbrg=brg.spbrg,
        actual_baud=brg.actual,
        baud_error_pct=brg.error_pct,
    )
    return report, traces


_SWEEP_VARIABLES = ("gap", "noise_rms", "bit_rate")


def _point_config(cfg: ScenarioConfig, variable: str, value: float) -> ScenarioConfig:
    if variable == "gap":
        return replace(cfg, link=replace(cfg.link, gap=value))
    if variable == "noise_rms":
        return replace(cfg, link=replace(cfg.link, noise_rms=value))
    if variable == "bit_rate":
        return replace(cfg, tx=replace(cfg.tx, bit_rate=value))
    raise ValueError(f"sweep variable must be one of {_SWEEP_VARIABLES}, got {variable!r}")


def _random_reading_frames(n_frames: int, seed: int) -> bytes:
    rng = np.random.default_rng(seed)
    out = bytearray()
    for _ in range(n_frames):
        state = MotorState(
            temp_c=int(rng.integers(-2000, 12001)) / 100.0,
            speed_rpm=float(rng.integers(0, 5001)),
            voltage_v=int(rng.integers(15000, 26001)) / 100.0,
            current_a=int(rng.integers(0, 6001)) / 1000.0,
        )
        out += encode_frame(state, FaultSet(0))
    return bytes(out)


def _framed_point(cfg: ScenarioConfig, bits_per_point: int,
                  seed: int) -> tuple[int, int, int, int]:
    """Run one sweep point as back-to-back framed USART traffic.

    Returns (bits sent, bit errors, frames sent, frames delivered).  Bit
    errors are counted at the modem's mid-bit decisions over the framed
    span; deliveries come from the x16 receiver plus frame decoding.
    """
    bits_per_frame = READING_FRAME_LEN * cfg.usart.frame_bits
    n_frames = max(1, math.ceil(bits_per_point / bits_per_frame))
    payload = _random_reading_frames(n_frames, derive_seed(seed, 1))
    line_bits = frame_line_bits(payload, cfg)
    link = replace(cfg.link, rng_seed=derive_seed(seed, 2))
    rx_machine = UsartRx(cfg.usart)
    mids, received = run_line(line_bits, link, cfg.tx, cfg.rx, cfg.q_factor,
                              derive_seed(seed, 2), usart_rx=rx_machine)
    span = slice(IDLE_PREAMBLE_BITS, line_bits.size - IDLE_TAIL_BITS)
    errors = int(np.count_nonzero(mids[span] != line_bits[span]))
    stream = bytes(word & 0xFF for word, _ in received)
    delivered = sum(1 for f in scan_frames(stream)
                    if f.msg_type in (MSG_READING, MSG_FAULT_ALARM))
    return span.stop - span.start, errors, n_frames, min(delivered, n_frames)


def ber_sweep(cfg: ScenarioConfig, variable: str, values,
              bits_per_point: int = 10_000) -> list[SweepResult]:
    """Measure BER and frame delivery across a parameter sweep.

    Each point gets its own derived seed, so results are reproducible and
    independent of evaluation order.
    """
    if variable not in _SWEEP_VARIABLES:
        raise ValueError(f"sweep variable must be one of {_SWEEP_VARIABLES}, got {variable!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if bits_per_point < 1000:
        raise ValueError("bits_per_point must be at least 1000")
    results = []
    for index, value in enumerate(values):
        pcfg = _point_config(cfg, variable, value)
        bits, errors, sent, delivered = _framed_point(
            pcfg, bits_per_point, derive_seed(cfg.master_seed, index))
        results.append(SweepResult(
            var=float(value), bits_sent=bits, bit_errors=errors,
            ber=errors / bits, frames_sent=sent, frames_delivered=delivered))
    return results


def _probe_ber(cfg: ScenarioConfig, rate: int, bits_per_probe: int) -> float:
    """Random-bit modem loopback through the link at one bit rate."""
    seed = derive_seed(cfg.master_seed, rate)
    rng = np.random.default_rng(derive_seed(seed, 1))
    line_bits = rng.integers(0, 2, bits_per_probe).astype(np.uint8)
    pcfg = _point_config(cfg, "bit_rate", float(rate))
    link = replace(pcfg.link, rng_seed=derive_seed(seed, 2))
    mids, _ = run_line(line_bits, link, pcfg.tx, pcfg.rx, pcfg.q_factor,
                       derive_seed(seed, 2))
    return int(np.count_nonzero(mids != line_bits)) / bits_per_probe


def max_data_rate(cfg: ScenarioConfig, ber_ceiling: float,
                  bits_per_probe: int = 2000, min_rate: int = 50) -> MaxRateResult:
    """Largest bit rate whose measured BER stays at or below the ceiling.

    Binary search over integer bit rates between min_rate and the carrier
    limit (carrier must stay at least 10x the bit rate).  The reported
    resolution is the unexplored interval left when the search stopped.
    """
    if not 0 < ber_ceiling < 1:
        raise ValueError("ber_ceiling must be in (0, 1)")
    hi = int(cfg.tx.carrier_freq // 10)
    lo = int(min_rate)
    if lo > hi:
        raise NoFeasibleRateError(f"minimum rate {lo} exceeds the carrier limit {hi}")
    if _probe_ber(cfg, lo, bits_per_probe) > ber_ceiling:
        raise NoFeasibleRateError(
            f"BER exceeds {ber_ceiling} even at the minimum rate {lo} bit/s")
    if _probe_ber(cfg, hi, bits_per_probe) <= ber_ceiling:
        return MaxRateResult(hi, 0)
    # invariant: lo feasible, hi infeasible
    while hi - lo > max(1, int(0.02 * lo)):
        mid = (lo + hi) // 2
        if _probe_ber(cfg, mid, bits_per_probe) <= ber_ceiling:
            lo = mid
        else:
            hi = mid
    return MaxRateResult(lo, hi - lo)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


TRACE_HEADER = "time_s,stage,value,unit"
SWEEP_HEADER = "var,bits,errors,ber,frames_sent,frames_delivered"


def emit_csv(records, kind: str | None = None) -> str:
    """Render trace records or sweep results as CSV text.

    Column order is fixed; floats use nine significant digits; lines end
    with LF.  An empty record list emits a header-only table (trace layout
    unless kind says otherwise).
    """
    records = list(records)
    if kind is None:
        if not records:
            kind = "trace"
        elif isinstance(records[0], TraceRecord):
            kind = "trace"
        elif isinstance(records[0], SweepResult):
            kind = "sweep"
        else:
            raise TypeError(f"cannot infer CSV layout for {type(records[0]).__name__}")
    if kind == "trace":
        lines = [TRACE_HEADER]
        for r in records:
            lines.append(f"{_fmt(r.time_s)},{r.stage},{_fmt(r.value)},{r.unit}")
    elif kind == "sweep":
        lines = [SWEEP_HEADER]
        for r in records:
            lines.append(f"{_fmt(r.var)},{r.bits_sent},{r.bit_errors},"
                         f"{_fmt(r.ber)},{r.frames_sent},{r.frames_delivered}")
    else:
        raise ValueError(f"kind must be 'trace' or 'sweep', got {kind!r}")
    return "\n".join(lines) + "\n"
