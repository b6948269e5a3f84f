"""Reference waveforms: uniform in-phase, matched filter, strongest tone."""

from __future__ import annotations

import numpy as np

from .channel import FrequencyGrid, FrequencyResponse
from .waveform import MultisineWaveform

__all__ = ["matched_filter_waveform", "strongest_sinewave_waveform", "uniform_waveform"]


def uniform_waveform(
    num_tones: int, num_antennas: int, power: float, grid: FrequencyGrid | None = None
) -> MultisineWaveform:
    """In-phase multisine with equal amplitude ``sqrt(2P / NM)`` everywhere.

    Needs no channel knowledge.
    """
    if num_tones < 1 or num_antennas < 1:
        raise ValueError("need at least one tone and one antenna")
    s = np.full((num_tones, num_antennas), np.sqrt(2.0 * power / (num_tones * num_antennas)))
    return MultisineWaveform(s, np.zeros_like(s), grid)


def matched_filter_waveform(h: FrequencyResponse, power: float) -> MultisineWaveform:
    """Amplitudes proportional to ``|h|`` and conjugate channel phases.

    The proportionality constant is global across tones and antennas.
    """
    a = h.magnitude
    norm = np.linalg.norm(a)
    if norm == 0:
        raise ValueError("matched filter undefined for an all-zero channel")
    return MultisineWaveform(np.sqrt(2.0 * power) * a / norm, -h.phase, h.grid)


def strongest_sinewave_waveform(h: FrequencyResponse, power: float) -> MultisineWaveform:
    """All power on the tone with the largest ``sum_m |h_nm|^2``, spatially matched.

    Ties go to the lowest tone index. This is the optimum of the linear
    harvester model.
    """
    a = h.magnitude
    strength = np.sum(a**2, axis=1)
    if not strength.max() > 0:
        raise ValueError("strongest tone undefined for an all-zero channel")
    best = int(np.argmax(strength))
    s = np.zeros_like(a)
    s[best] = np.sqrt(2.0 * power) * a[best] / np.sqrt(strength[best])
    return MultisineWaveform(s, -h.phase, h.grid)
