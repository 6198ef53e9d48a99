"""Inductively coupled link: coupling vs. air gap, resonant pickup, additive noise.

The link between the drive coil and the pickup coil is reduced to a scalar
voltage gain (coupling times the tank's magnitude response at the carrier)
plus white Gaussian noise.  Good enough for a narrowband OOK modem; no
circuit-level integration is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waveform import Waveform


@dataclass(frozen=True)
class CoilPair:
    """Drive/pickup coil pair with its tuning capacitor and coupling model.

    Coupling falls off exponentially with the air gap:
    k(gap) = k0 * exp(-gap / decay_length).
    """

    l_primary: float     # H
    l_secondary: float   # H
    c_tank: float        # F, resonates the pickup coil
    k0: float            # coupling coefficient at zero gap
    decay_length: float  # m

    def __post_init__(self):
        if self.l_primary <= 0 or self.l_secondary <= 0:
            raise ValueError("coil inductances must be positive")
        if self.c_tank <= 0:
            raise ValueError("c_tank must be positive")
        if not 0 < self.k0 <= 1:
            raise ValueError(f"k0 must be in (0, 1], got {self.k0}")
        if self.decay_length <= 0:
            raise ValueError("decay_length must be positive")


@dataclass(frozen=True)
class LinkParams:
    """Physical channel: coil pair, operating air gap, and noise level."""

    coils: CoilPair
    gap: float = 0.0        # m
    noise_rms: float = 0.0  # V
    rng_seed: int = 0

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError("gap must be non-negative")
        if self.noise_rms < 0:
            raise ValueError("noise_rms must be non-negative")


def coupling_coefficient(gap: float, coils: CoilPair) -> float:
    """Coupling coefficient at an air gap, k0 * exp(-gap / decay_length)."""
    if gap < 0:
        raise ValueError("gap must be non-negative")
    return coils.k0 * math.exp(-gap / coils.decay_length)


def mutual_inductance(k: float, coils: CoilPair) -> float:
    """Mutual inductance M = k * sqrt(L1 * L2)."""
    if not 0 <= k <= 1:
        raise ValueError(f"coupling must be in [0, 1], got {k}")
    return k * math.sqrt(coils.l_primary * coils.l_secondary)


def resonant_frequency(coils: CoilPair) -> float:
    """Resonant frequency of the pickup tank, 1 / (2*pi*sqrt(L2 * C))."""
    return 1.0 / (2.0 * math.pi * math.sqrt(coils.l_secondary * coils.c_tank))


def tank_gain(freq: float, coils: CoilPair, q_factor: float) -> float:
    """Normalized magnitude response of the resonant pickup at `freq`.

    Second-order series-resonant shape: unity at resonance, half-power
    points separated by f_res / Q.
    """
    if freq <= 0:
        raise ValueError("freq must be positive")
    if q_factor <= 0:
        raise ValueError("q_factor must be positive")
    f0 = resonant_frequency(coils)
    detune = freq / f0 - f0 / freq
    return 1.0 / math.sqrt(1.0 + (q_factor * detune) ** 2)


def voltage_gain(link: LinkParams, carrier_freq: float, q_factor: float) -> float:
    """Scalar drive-to-pickup voltage gain at the carrier frequency.

    Transformer-style transfer M / L1 scaled by the tank response.
    """
    k = coupling_coefficient(link.gap, link.coils)
    m = mutual_inductance(k, link.coils)
    return (m / link.coils.l_primary) * tank_gain(carrier_freq, link.coils, q_factor)


def estimate_carrier(wave: Waveform) -> float | None:
    """Dominant non-DC frequency of a waveform, or None if it is silent."""
    x = wave.samples
    if x.size == 0 or not np.any(x):
        return None
    n = min(x.size, 1 << 18)
    spectrum = np.abs(np.fft.rfft(x[:n]))
    spectrum[0] = 0.0
    peak = int(np.argmax(spectrum))
    if spectrum[peak] == 0.0:
        return None
    return peak * wave.sample_rate / n


def propagate(tx: Waveform, link: LinkParams, q_factor: float,
              carrier_freq: float | None = None) -> Waveform:
    """Pass a drive waveform across the link.

    Output = tx scaled by the coupling-derived gain at the carrier, plus
    seeded zero-mean Gaussian noise of RMS link.noise_rms.  Deterministic
    for a fixed seed.  When carrier_freq is not given it is estimated from
    the spectrum of tx.
    """
    if len(tx) == 0:
        raise ValueError("propagate requires a non-empty waveform")
    if carrier_freq is None:
        carrier_freq = estimate_carrier(tx)
    if carrier_freq is None:
        # Silent input: tank response is irrelevant, keep the coupling term.
        k = coupling_coefficient(link.gap, link.coils)
        gain = mutual_inductance(k, link.coils) / link.coils.l_primary
    else:
        gain = voltage_gain(link, carrier_freq, q_factor)
    out = gain * tx.samples
    if link.noise_rms > 0:
        rng = np.random.default_rng(link.rng_seed)
        out = out + rng.normal(0.0, link.noise_rms, out.size)
    return Waveform(tx.sample_rate, out)
