"""Motor telemetry application layer.

Frame codec with a byte-exact wire format, threshold-based fault classifier
with hysteresis, an eddy-current proximity sensor model feeding a tooth
counting tachometer, and a 2x16 character display renderer.

Wire format:
    [0] 0xAA start of frame
    [1] 0x01 protocol version
    [2] message type (0x01 reading, 0x02 poll, 0x03 fault alarm)
    [3] payload length N
    [4..4+N) payload
    [4+N] checksum, chosen so the sum of every frame byte is 0 mod 256

Reading and fault-alarm payloads are 9 bytes, little-endian fixed point:
temp int16 (centi-degC), speed uint16 (RPM), voltage uint16 (centi-V),
current uint16 (milli-A), fault bitmask uint8.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .waveform import Waveform

SOF = 0xAA
VERSION = 0x01

MSG_READING = 0x01
MSG_POLL = 0x02
MSG_FAULT_ALARM = 0x03

READING_PAYLOAD_LEN = 9
READING_FRAME_LEN = 5 + READING_PAYLOAD_LEN
POLL_FRAME_LEN = 5

_PAYLOAD_STRUCT = struct.Struct("<hHHHB")


class FrameError(ValueError):
    """Base class for telemetry frame decode failures."""


class BadSofError(FrameError):
    pass


class BadVersionError(FrameError):
    pass


class BadLengthError(FrameError):
    pass


class BadChecksumError(FrameError):
    pass


class FrameFieldError(FrameError):
    """Structurally valid frame carrying an out-of-range field."""


class FrameRangeError(ValueError):
    """Reading exceeds its fixed-point wire field."""


@dataclass(frozen=True)
class MotorState:
    """Sensor readings for one acquisition instant.

    teeth is the rotor target count used by the tachometer; it never
    travels on the wire, so decoded states carry the default.
    """

    temp_c: float
    speed_rpm: float
    voltage_v: float
    current_a: float
    teeth: int = 1

    def __post_init__(self):
        if self.speed_rpm < 0:
            raise ValueError("speed_rpm must be non-negative")
        if self.teeth < 1:
            raise ValueError("teeth must be at least 1")
        for name in ("temp_c", "speed_rpm", "voltage_v", "current_a"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class FaultSet:
    """Bitmask of active motor faults; the top two bits are reserved."""

    mask: int = 0

    OVERTEMP = 0x01
    OVERSPEED = 0x02
    UNDERSPEED = 0x04
    OVERVOLT = 0x08
    UNDERVOLT = 0x10
    OVERCURRENT = 0x20

    _NAMES = (
        (0x01, "overtemp"),
        (0x02, "overspeed"),
        (0x04, "underspeed"),
        (0x08, "overvolt"),
        (0x10, "undervolt"),
        (0x20, "overcurrent"),
    )

    def __post_init__(self):
        if not 0 <= self.mask <= 0xFF:
            raise ValueError(f"mask must fit one byte, got {self.mask}")
        if self.mask & 0xC0:
            raise ValueError("reserved fault bits 6-7 must be zero")

    def __bool__(self) -> bool:
        return self.mask != 0

    def names(self) -> list[str]:
        return [name for bit, name in self._NAMES if self.mask & bit]


@dataclass(frozen=True)
class Thresholds:
    """Fault limits plus the relative hysteresis applied when clearing."""

    temp_max_c: float
    speed_max_rpm: float
    speed_min_rpm: float
    volt_max_v: float
    volt_min_v: float
    curr_max_a: float
    hysteresis_fraction: float = 0.05

    def __post_init__(self):
        if self.speed_max_rpm <= self.speed_min_rpm:
            raise ValueError("speed_max_rpm must exceed speed_min_rpm")
        if self.volt_max_v <= self.volt_min_v:
            raise ValueError("volt_max_v must exceed volt_min_v")
        if not 0 < self.hysteresis_fraction < 0.5:
            raise ValueError("hysteresis_fraction must be in (0, 0.5)")


@dataclass(frozen=True)
class ProximityParams:
    """Inductive proximity switch of the eddy-current-killed-oscillator kind."""

    sensing_range: float         # m
    hysteresis: float            # m, width of the switching band
    repeatability_sigma: float   # m, per-crossing jitter of the switch point
    rng_seed: int = 0

    def __post_init__(self):
        if self.sensing_range <= 0:
            raise ValueError("sensing_range must be positive")
        if not 0.03e-3 <= self.hysteresis <= 3e-3:
            raise ValueError("inductive sensor hysteresis must be 0.03mm..3mm")
        if not 0 <= self.repeatability_sigma <= 0.01e-3:
            raise ValueError("repeatability_sigma must be 0..0.01mm")


@dataclass(frozen=True)
class DecodedFrame:
    """Result of decode_frame: message type plus parsed payload, if any."""

    msg_type: int
    state: MotorState | None = None
    faults: FaultSet | None = None


def _checksum(body: bytes) -> int:
    """Byte that makes the total frame sum 0 mod 256."""
    return (-sum(body)) & 0xFF


def _pack_reading(state: MotorState, faults: FaultSet) -> bytes:
    temp = round(state.temp_c * 100)
    speed = round(state.speed_rpm)
    volt = round(state.voltage_v * 100)
    curr = round(state.current_a * 1000)
    if not -32768 <= temp <= 32767:
        raise FrameRangeError(f"temp_c {state.temp_c} exceeds int16 centi-degC")
    if not 0 <= speed <= 65535:
        raise FrameRangeError(f"speed_rpm {state.speed_rpm} exceeds uint16 RPM")
    if not 0 <= volt <= 65535:
        raise FrameRangeError(f"voltage_v {state.voltage_v} exceeds uint16 centi-V")
    if not 0 <= curr <= 65535:
        raise FrameRangeError(f"current_a {state.current_a} exceeds uint16 milli-A")
    return _PAYLOAD_STRUCT.pack(temp, speed, volt, curr, faults.mask)


def build_frame(msg_type: int, payload: bytes = b"") -> bytes:
    """Assemble header, payload, and self-cancelling checksum."""
    if len(payload) > 255:
        raise FrameRangeError("payload exceeds one length byte")
    body = bytes([SOF, VERSION, msg_type, len(payload)]) + payload
    return body + bytes([_checksum(body)])


def encode_frame(state: MotorState, faults: FaultSet,
                 msg_type: int = MSG_READING) -> bytes:
    """Encode readings plus fault mask as a reading or fault-alarm frame."""
    if msg_type not in (MSG_READING, MSG_FAULT_ALARM):
        raise ValueError("reading payloads only fit reading/alarm frames")
    return build_frame(msg_type, _pack_reading(state, faults))


def encode_poll() -> bytes:
    """Empty-payload poll frame sent by the monitor side."""
    return build_frame(MSG_POLL)


def decode_frame(data: bytes) -> DecodedFrame:
    """Validate and parse one frame.

    Raises BadLengthError, BadSofError, BadVersionError, BadChecksumError,
    or FrameFieldError; each failure mode is a distinct class.
    """
    data = bytes(data)
    if len(data) < POLL_FRAME_LEN:
        raise BadLengthError(f"frame of {len(data)} bytes is shorter than the header")
    if data[0] != SOF:
        raise BadSofError(f"bad start byte 0x{data[0]:02X}")
    if data[1] != VERSION:
        raise BadVersionError(f"unsupported version 0x{data[1]:02X}")
    n = data[3]
    if len(data) != 5 + n:
        raise BadLengthError(f"length byte says {n} payload bytes, frame has {len(data) - 5}")
    if sum(data) % 256 != 0:
        raise BadChecksumError("frame bytes do not sum to 0 mod 256")
    msg_type = data[2]
    payload = data[4:4 + n]
    if msg_type in (MSG_READING, MSG_FAULT_ALARM):
        if n != READING_PAYLOAD_LEN:
            raise BadLengthError(f"reading payload must be {READING_PAYLOAD_LEN} bytes, got {n}")
        temp, speed, volt, curr, mask = _PAYLOAD_STRUCT.unpack(payload)
        try:
            faults = FaultSet(mask)
        except ValueError as exc:
            raise FrameFieldError(str(exc)) from exc
        state = MotorState(temp / 100.0, float(speed), volt / 100.0, curr / 1000.0)
        return DecodedFrame(msg_type, state, faults)
    if msg_type == MSG_POLL:
        if n != 0:
            raise BadLengthError(f"poll frames carry no payload, got {n} bytes")
        return DecodedFrame(MSG_POLL)
    raise FrameFieldError(f"unknown message type 0x{msg_type:02X}")


def scan_frames(data: bytes) -> list[DecodedFrame]:
    """Greedy scan of a byte stream for valid frames.

    Used to count delivered frames after a lossy transfer: resynchronizes
    on the next start byte whenever a candidate fails to decode.
    """
    frames: list[DecodedFrame] = []
    i = 0
    while i + POLL_FRAME_LEN <= len(data):
        if data[i] == SOF:
            end = i + 5 + data[i + 3] if i + 4 <= len(data) else len(data) + 1
            if end <= len(data):
                try:
                    frames.append(decode_frame(data[i:end]))
                    i = end
                    continue
                except FrameError:
                    pass
        i += 1
    return frames


def classify_faults(state: MotorState, th: Thresholds, prev: FaultSet) -> FaultSet:
    """Threshold comparison with hysteresis on the clearing side.

    A bit sets as soon as its reading crosses the limit, regardless of the
    previous mask.  It clears only once the reading retreats past
    limit*(1 -/+ hysteresis_fraction); in between it holds its prior value.
    """
    h = th.hysteresis_fraction
    rules = (
        (FaultSet.OVERTEMP, state.temp_c, th.temp_max_c, True),
        (FaultSet.OVERSPEED, state.speed_rpm, th.speed_max_rpm, True),
        (FaultSet.UNDERSPEED, state.speed_rpm, th.speed_min_rpm, False),
        (FaultSet.OVERVOLT, state.voltage_v, th.volt_max_v, True),
        (FaultSet.UNDERVOLT, state.voltage_v, th.volt_min_v, False),
        (FaultSet.OVERCURRENT, state.current_a, th.curr_max_a, True),
    )
    mask = 0
    for bit, value, limit, is_upper in rules:
        if is_upper:
            if value > limit:
                active = True
            elif value < limit * (1.0 - h):
                active = False
            else:
                active = bool(prev.mask & bit)
        else:
            if value < limit:
                active = True
            elif value > limit * (1.0 + h):
                active = False
            else:
                active = bool(prev.mask & bit)
        if active:
            mask |= bit
    return FaultSet(mask)


def proximity_pulses(distance_signal: Waveform, p: ProximityParams) -> np.ndarray:
    """Switch output of the proximity sensor against a target distance trace.

    The input waveform carries target distance in meters.  Output is 1
    while the target sits inside the sensing range (oscillator killed).
    Switching uses a hysteresis band of width p.hysteresis centred on the
    range, and every completed switch re-draws a Gaussian offset of the
    effective switch distance (seeded, sigma = repeatability_sigma).
    """
    d = distance_signal.samples
    if d.size == 0:
        raise ValueError("proximity_pulses requires a non-empty distance signal")
    rng = np.random.default_rng(p.rng_seed)
    half = p.hysteresis / 2.0
    out = np.zeros(d.size, dtype=np.uint8)
    detected = False
    offset = rng.normal(0.0, p.repeatability_sigma)
    for i in range(d.size):
        if detected:
            if d[i] > p.sensing_range + half + offset:
                detected = False
                offset = rng.normal(0.0, p.repeatability_sigma)
        else:
            if d[i] < p.sensing_range - half + offset:
                detected = True
                offset = rng.normal(0.0, p.repeatability_sigma)
        out[i] = 1 if detected else 0
    return out


def speed_from_pulses(pulses, sample_rate: float, teeth: int,
                      window_s: float) -> float:
    """Tooth-counting tachometer: RPM from rising edges in a time window.

    RPM = (rising edges in the last window_s) / teeth * 60 / window_s.
    """
    if teeth < 1:
        raise ValueError("teeth must be at least 1")
    if window_s * sample_rate < 1:
        raise ValueError("window must cover at least one sample")
    pulses = np.asarray(pulses)
    n = int(round(window_s * sample_rate))
    seg = pulses[-n:]
    edges = int(np.count_nonzero((seg[1:] == 1) & (seg[:-1] == 0)))
    return edges / teeth * 60.0 / window_s


def render_display(state: MotorState, faults: FaultSet) -> tuple[str, str]:
    """Two 16-character lines for the status display.

    Line 1 carries temperature and speed, line 2 voltage, current, and
    either "OK" or the fault mask as "FLT:xx".  Lines are space-padded
    (and clipped) to exactly 16 characters.
    """
    line1 = f"{state.temp_c:6.1f}C {state.speed_rpm:5.0f}RPM"
    status = f"FLT:{faults.mask:02X}" if faults else "OK"
    line2 = f"{state.voltage_v:3.0f}V {state.current_a:3.1f}A {status}"
    return line1[:16].ljust(16), line2[:16].ljust(16)
