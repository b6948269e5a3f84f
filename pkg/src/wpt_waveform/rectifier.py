"""Time-domain simulation of a single-diode rectifier with an RC load.

The received signal drives the diode as the ideal matched source
``v_in = y * sqrt(R_ant)``; the diode charges a capacitor ``C`` in parallel
with the load ``R_L``:

    C dv_out/dt = i_s (exp((v_in - v_out) / (n v_t)) - 1) - v_out / R_L

Stepping is second-order backward differentiation (BDF2, one backward
Euler start-up step), which stays stable while the diode conducts hard.
Each step solves the diode balance with Newton's method; the residual is
monotone in ``v_out`` so the iteration converges.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import FrequencyGrid
from .harvester import ANTENNA_RESISTANCE, DiodeParameters
from .waveform import ReceivedSpectrum, synthesize_received

__all__ = [
    "RectifierCircuit",
    "RectifierResult",
    "dc_power",
    "downshift_grid",
    "integrate_rectifier",
    "simulate_rectifier",
]

LOAD_RESISTANCE = 5786.0
DOWNSHIFTED_CARRIER_HZ = 100e6
SAMPLES_PER_CARRIER = 16


def dc_power(v_out: float, load_resistance: float) -> float:
    return v_out * v_out / load_resistance


@dataclass(frozen=True)
class RectifierCircuit:
    diode: DiodeParameters = DiodeParameters()
    load_resistance: float = LOAD_RESISTANCE
    capacitance: float = 1e-9
    antenna_resistance: float = ANTENNA_RESISTANCE

    def __post_init__(self):
        for name in ("load_resistance", "capacitance", "antenna_resistance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_tone_spacing(cls, spacing_hz: float, decades: float = 2.0, **kwargs) -> "RectifierCircuit":
        """Circuit whose RC corner ``1/(2 pi R_L C)`` sits ``decades`` below the tone spacing."""
        r_load = kwargs.get("load_resistance", LOAD_RESISTANCE)
        corner = spacing_hz / 10.0**decades
        return cls(capacitance=1.0 / (2 * math.pi * r_load * corner), **kwargs)

    @property
    def time_constant(self) -> float:
        return self.load_resistance * self.capacitance


def integrate_rectifier(
    v_in, dt: float, circuit: RectifierCircuit, v_out0: float = 0.0, tol: float = 1e-12, max_newton: int = 100
):
    """Integrate the rectifier for an input voltage sampled every ``dt``.

    Returns ``(v_out, i_d)`` aligned with ``v_in``: ``v_out[0] = v_out0`` and
    sample ``k`` is the state after stepping from ``k - 1`` to ``k``.
    """
    v_in = np.asarray(v_in, dtype=float)
    i_s = circuit.diode.saturation_current
    inv_nvt = 1.0 / circuit.diode.slope_voltage
    c_dt = circuit.capacitance / dt
    g_load = 1.0 / circuit.load_resistance
    exp = math.exp
    out = np.empty_like(v_in)
    if v_in.size == 0:
        return out, np.empty_like(v_in)
    samples = v_in.tolist()
    v_prev = v = float(v_out0)
    out[0] = v
    for k in range(1, len(samples)):
        vin = samples[k]
        # solve a*x - i_d(x) = b for the new output voltage x
        if k == 1:
            a, b = c_dt + g_load, c_dt * v
        else:
            a, b = 1.5 * c_dt + g_load, c_dt * (2.0 * v - 0.5 * v_prev)
        x = v
        for _ in range(max_newton):
            e = i_s * exp((vin - x) * inv_nvt)
            step = (a * x - (e - i_s) - b) / (a + e * inv_nvt)
            x -= step
            if abs(step) <= tol * (1.0 + abs(x)):
                break
        v_prev, v = v, x
        out[k] = v
    cur = i_s * np.expm1((v_in - out) * inv_nvt)
    return out, cur


@dataclass
class RectifierResult:
    t: np.ndarray
    v_in: np.ndarray
    v_out: np.ndarray
    i_d: np.ndarray
    dc_power: float
    v_out_dc: float
    drift: float
    converged: bool

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "v_in", "v_out", "i_d"])
            for row in zip(self.t.tolist(), self.v_in.tolist(), self.v_out.tolist(), self.i_d.tolist()):
                writer.writerow([repr(v) for v in row])

    def summary(self) -> str:
        return f"dc_power={self.dc_power!r} W converged={self.converged} drift={self.drift:.3e}"


def downshift_grid(grid: FrequencyGrid, carrier_hz: float = DOWNSHIFTED_CARRIER_HZ) -> FrequencyGrid:
    """Same tone spacing, tones centred near ``carrier_hz`` with an integer base index."""
    df = grid.spacing_hz
    first = round(carrier_hz / df - 0.5 * (grid.count - 1))
    if first < grid.count:
        raise ValueError(f"carrier {carrier_hz} Hz too low for {grid.count} tones spaced {df} Hz")
    return FrequencyGrid.harmonic(first, df, grid.count)


def simulate_rectifier(
    spec: ReceivedSpectrum,
    circuit: RectifierCircuit,
    duration: float | None = None,
    dt: float | None = None,
    carrier_hz: float | None = DOWNSHIFTED_CARRIER_HZ,
    samples_per_carrier: int = SAMPLES_PER_CARRIER,
    drift_tol: float = 1e-3,
) -> RectifierResult:
    """Drive the rectifier with the received multisine until steady state.

    Parameters
    ----------
    spec : ReceivedSpectrum
        Received tone amplitudes/phases with their grid.
    circuit : RectifierCircuit
    duration : float, optional
        Simulated time; defaults to ``8 R_L C`` (at least ``5 R_L C`` and two
        beat periods are required).
    dt : float, optional
        Step; defaults to ``samples_per_carrier`` steps per period of the
        highest tone, rounded so one beat period holds an integer number of
        steps.
    carrier_hz : float or None
        Centre frequency used for the simulation. ``None`` keeps the grid
        of ``spec`` unchanged (full RF).

    The DC power is ``mean(v_out^2) / R_L`` over the final beat period
    ``1/delta_f``; ``converged`` means the mean output voltage moved by less
    than ``drift_tol`` (relative) between the last two beat periods.
    """
    if spec.grid is None:
        raise ValueError("spectrum has no frequency grid")
    grid = spec.grid if carrier_hz is None else downshift_grid(spec.grid, carrier_hz)
    spec = spec.on_grid(grid)
    f_max = grid.frequencies_hz[-1]
    beat = 1.0 / grid.spacing_hz
    min_per_beat = samples_per_carrier * f_max * beat
    if dt is None:
        dt = beat / math.ceil(min_per_beat - 1e-9)
    elif dt * f_max > 1.0 / samples_per_carrier * (1 + 1e-9):
        raise ValueError(
            f"dt={dt} too coarse: need at least {samples_per_carrier} samples per period of {f_max} Hz"
        )
    if duration is None:
        duration = max(8.0 * circuit.time_constant, 2 * beat)
    elif duration < 5.0 * circuit.time_constant * (1 - 1e-12) or duration < 2 * beat:
        raise ValueError(
            f"duration {duration} s shorter than 5 R_L C = {5 * circuit.time_constant} s or two beat periods"
        )
    steps = int(math.ceil(duration / dt))
    per_beat = int(round(beat / dt))
    t = np.arange(steps + 1) * dt
    v_in = synthesize_received(spec, t) * math.sqrt(circuit.antenna_resistance)
    v_out, i_d = integrate_rectifier(v_in, dt, circuit)

    last = v_out[-per_beat:]
    prev = v_out[-2 * per_beat:-per_beat]
    mean_last, mean_prev = float(np.mean(last)), float(np.mean(prev))
    scale = max(abs(mean_last), abs(mean_prev))
    drift = abs(mean_last - mean_prev) / scale if scale > 0 else 0.0
    power = float(np.mean(last * last)) / circuit.load_resistance
    return RectifierResult(t, v_in, v_out, i_d, power, mean_last, drift, drift < drift_tol)
