"""Streamed end-to-end line simulation shared by the scenario runner and sweeps.

One call to run_line() pushes a sequence of NRZ bit-period levels through

    gated carrier -> switching transistor -> inductive link (+ noise)
    -> two-stage noise filter -> envelope detector -> level converter

and returns the logic level sampled at every bit midpoint.  Optionally the
logic waveform is decimated onto the USART's x16 grid (nearest sample) and
fed to a receiver instance whose delivered words are collected.

The static collector rail carries no flux, so the link input is the switch
output minus vcc: zero during 0-bits, a unipolar square at the carrier rate
during 1-bits.  Processing is chunked with filter/comparator/noise state
carried across chunks, so arbitrarily long streams run in constant memory,
bit-exactly matching the whole-waveform operators.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import lfilter

from .channel import LinkParams, voltage_gain
from .modem import (HYSTERESIS_FRACTION, RxParams, TxParams, hysteresis_compare,
                    lowpass_coeffs, smoothing_coeffs)
from .usart import UsartRx
from .waveform import as_bits

# Receiver derivation rules.  The envelope smoother must knock the
# carrier-rate ripple of the rectified drive down by about RIPPLE_REJECTION;
# cascaded identical sections share that requirement, so each section needs
# tau = RIPPLE_REJECTION**(1/order) / (2*pi*carrier).  For a single section
# this is exactly four carrier periods.
RIPPLE_REJECTION = 8.0 * math.pi
HF_CUTOFF_CARRIER_RATIO = 2.0
THRESHOLD_ENVELOPE_FRACTION = 0.3

IDLE_PREAMBLE_BITS = 12
IDLE_TAIL_BITS = 4
_CHUNK_BITS = 256


def derived_hf_cutoff(carrier_freq: float) -> float:
    """Noise-filter corner placed above the carrier so it passes cleanly."""
    return HF_CUTOFF_CARRIER_RATIO * carrier_freq


def derived_envelope_tau(carrier_freq: float, order: int) -> float:
    """Per-section smoothing time constant for a given cascade order."""
    return RIPPLE_REJECTION ** (1.0 / order) / (2.0 * math.pi * carrier_freq)


def mark_envelope(link: LinkParams, tx: TxParams, q_factor: float) -> float:
    """Settled envelope level while the carrier is on.

    The rectified drive is a unipolar square of swing ic_on*rc_load at 50%
    duty, so after the unity-DC-gain filters the envelope sits at half the
    received swing.
    """
    return 0.5 * tx.ic_on * tx.rc_load * voltage_gain(link, tx.carrier_freq, q_factor)


def calibrate_threshold(link: LinkParams, tx: TxParams, q_factor: float,
                        calibration_gap: float) -> float:
    """Comparator threshold sized for the worst-case (largest) air gap."""
    worst = dataclasses.replace(link, gap=calibration_gap)
    return THRESHOLD_ENVELOPE_FRACTION * mark_envelope(worst, tx, q_factor)


def noise_rms_for_snr(link: LinkParams, tx: TxParams, q_factor: float,
                      snr_db: float) -> float:
    """Channel noise RMS giving the stated SNR at the receiver input.

    SNR is referenced to the mark-state signal power: the received square
    of swing A at 50% duty has RMS A/sqrt(2).
    """
    swing = tx.ic_on * tx.rc_load * voltage_gain(link, tx.carrier_freq, q_factor)
    return (swing / math.sqrt(2.0)) / (10.0 ** (snr_db / 20.0))


class _LineChain:
    """Per-run filter, comparator, noise, and grid state."""

    def __init__(self, link: LinkParams, tx: TxParams, rx: RxParams,
                 q_factor: float, noise_seed: int):
        self.tx = tx
        self.rx = rx
        self.spb = tx.sample_rate / tx.bit_rate
        self.sub_stride = self.spb / 16.0
        self.gain = voltage_gain(link, tx.carrier_freq, q_factor)
        self.noise_rms = link.noise_rms
        self.on_level = -(tx.ic_on * tx.rc_load)  # drive minus the static rail
        self.omega = 2.0 * np.pi * tx.carrier_freq / tx.sample_rate
        self.hf = lowpass_coeffs(rx.hf_cutoff, tx.sample_rate)
        self.env = smoothing_coeffs(rx.envelope_tau, tx.sample_rate)
        self.z_hf = [np.zeros(1), np.zeros(1)]
        self.z_env = [np.zeros(1) for _ in range(rx.envelope_order)]
        self.cmp_state = False
        self.cmp_high = rx.threshold * (1.0 + HYSTERESIS_FRACTION)
        self.cmp_low = rx.threshold * (1.0 - HYSTERESIS_FRACTION)
        self.rng = np.random.default_rng(noise_seed)
        self.sub_index = 0  # next x16 grid point to emit

    def process(self, bits: np.ndarray, k0: int) -> tuple[np.ndarray, int, int]:
        """Run bits [k0, k0+len) through the chain.

        Returns (logic levels as bool array, first global sample index of
        the chunk, last global sample index).
        """
        edges = np.rint((np.arange(bits.size + 1) + k0) * self.spb).astype(np.int64)
        n0, n1 = int(edges[0]), int(edges[-1])
        idx = np.arange(n0, n1)
        carrier = np.sin(self.omega * idx)
        on = np.repeat(bits.astype(bool), np.diff(edges))
        x = np.where(on & (carrier > 0.0), self.on_level, 0.0)
        y = self.gain * x
        if self.noise_rms > 0:
            y = y + self.rng.normal(0.0, self.noise_rms, y.size)
        for i in range(2):
            y, self.z_hf[i] = lfilter(*self.hf, y, zi=self.z_hf[i])
        y = np.abs(y)
        for i in range(len(self.z_env)):
            y, self.z_env[i] = lfilter(*self.env, y, zi=self.z_env[i])
        logic, self.cmp_state = hysteresis_compare(
            y, self.cmp_high, self.cmp_low, self.cmp_state)
        return logic, n0, n1


def run_line(line_bits, link: LinkParams, tx: TxParams, rx: RxParams,
             q_factor: float, noise_seed: int,
             usart_rx: UsartRx | None = None) -> tuple[np.ndarray, list[tuple[int, bool]]]:
    """Transmit bit-period levels across the link and demodulate them.

    Returns the logic level at each bit midpoint (uint8 array, one entry
    per input bit) and the words delivered by the optional USART receiver,
    which is driven from the x16 decimation of the logic waveform and
    drained after every sub-sample.
    """
    bits = as_bits(line_bits)
    if bits.size == 0:
        raise ValueError("run_line requires a non-empty bit stream")
    chain = _LineChain(link, tx, rx, q_factor, noise_seed)
    mids = np.empty(bits.size, dtype=np.uint8)
    received: list[tuple[int, bool]] = []
    for k0 in range(0, bits.size, _CHUNK_BITS):
        chunk = bits[k0:k0 + _CHUNK_BITS]
        logic, n0, n1 = chain.process(chunk, k0)
        mid_idx = np.rint((np.arange(k0, k0 + chunk.size) + 0.5) * chain.spb).astype(np.int64)
        mids[k0:k0 + chunk.size] = logic[np.minimum(mid_idx, n1 - 1) - n0]
        if usart_rx is not None:
            j = chain.sub_index
            sub_idx = []
            while True:
                s = int(round(j * chain.sub_stride))
                if s >= n1:
                    break
                sub_idx.append(s - n0)
                j += 1
            chain.sub_index = j
            for level in logic[sub_idx]:
                usart_rx.sample(int(level))
                if usart_rx.rcif:
                    received.append(usart_rx.read())
    return mids, received
