"""Rectenna model: diode Taylor coefficients and the DC-current metric z_DC.

The antenna is a lossless 50 ohm source perfectly matched to the rectifier, so
the rectifier input voltage is ``v_in(t) = y(t) * sqrt(R_ant)``. Expanding the
Shockley diode current around an operating voltage ``a`` and keeping orders 2
and 4 gives

    z_DC = k2 * R_ant * E{y^2} + k4 * R_ant^2 * E{y^4}

which is evaluated here both in closed form over the tone/antenna indices and,
as an independent check, by averaging a synthesized ``y(t)`` over one period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import FrequencyResponse
from .waveform import ReceivedSpectrum, synthesize_received

__all__ = [
    "DiodeParameters",
    "HarvesterModel",
    "linear_model_power",
    "taylor_coefficients",
    "time_moments",
    "z_dc_analytic",
    "z_dc_brackets",
    "z_dc_time_domain",
]

# n * v_t = sqrt(k2 / (12 k4)) and i_s = 2 k2 (n v_t)^2 for k2=0.0034, k4=0.3829 at a=0
DEFAULT_SATURATION_CURRENT = 5.03e-6
DEFAULT_THERMAL_VOLTAGE = 0.0272
ANTENNA_RESISTANCE = 50.0


@dataclass(frozen=True)
class DiodeParameters:
    saturation_current: float = DEFAULT_SATURATION_CURRENT
    ideality: float = 1.0
    thermal_voltage: float = DEFAULT_THERMAL_VOLTAGE

    def __post_init__(self):
        if not self.saturation_current > 0:
            raise ValueError("saturation current must be positive")
        if not self.ideality >= 1:
            raise ValueError("ideality factor must be >= 1")
        if not self.thermal_voltage > 0:
            raise ValueError("thermal voltage must be positive")

    @property
    def slope_voltage(self) -> float:
        """``n * v_t``."""
        return self.ideality * self.thermal_voltage

    def current(self, v):
        return self.saturation_current * np.expm1(np.asarray(v) / self.slope_voltage)


def taylor_coefficients(diode: DiodeParameters, a: float = 0.0, max_order: int = 4) -> np.ndarray:
    """Coefficients ``k_0..k_max_order`` of the diode current expanded around ``a``.

    ``k_0 = i_s (e^{a/nv_t} - 1)`` and ``k_i = i_s e^{a/nv_t} / (i! (n v_t)^i)``.
    """
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    nvt = diode.slope_voltage
    scale = diode.saturation_current * math.exp(a / nvt)
    k = [diode.saturation_current * math.expm1(a / nvt)]
    k += [scale / (math.factorial(i) * nvt**i) for i in range(1, max_order + 1)]
    return np.array(k)


@dataclass(frozen=True)
class HarvesterModel:
    """Fourth-order rectenna model.

    Build it from a diode with :meth:`from_diode` or inject ``k2``/``k4``
    directly. Only ``k2``, ``k4`` and ``antenna_resistance`` enter z_DC.
    """

    k2: float
    k4: float
    antenna_resistance: float = ANTENNA_RESISTANCE
    k0: float = 0.0
    diode: DiodeParameters | None = None
    operating_point: float | None = None
    coefficients: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not self.antenna_resistance > 0:
            raise ValueError("antenna resistance must be positive")
        if not (self.k2 > 0 and self.k4 > 0):
            raise ValueError("k2 and k4 must be positive")

    @classmethod
    def from_diode(
        cls,
        diode: DiodeParameters | None = None,
        operating_point: float = 0.0,
        antenna_resistance: float = ANTENNA_RESISTANCE,
    ) -> "HarvesterModel":
        diode = diode or DiodeParameters()
        k = taylor_coefficients(diode, operating_point, 4)
        return cls(
            k2=float(k[2]),
            k4=float(k[4]),
            antenna_resistance=antenna_resistance,
            k0=float(k[0]),
            diode=diode,
            operating_point=operating_point,
            coefficients=tuple(float(v) for v in k),
        )

    @classmethod
    def from_config(cls, cfg: dict | None) -> "HarvesterModel":
        """Keys: ``i_s``, ``n``, ``v_t``, ``a``, ``r_ant`` or an explicit ``k2``/``k4`` pair."""
        cfg = dict(cfg or {})
        r_ant = float(cfg.pop("r_ant", ANTENNA_RESISTANCE))
        if "k2" in cfg or "k4" in cfg:
            if not ("k2" in cfg and "k4" in cfg):
                raise ValueError("k2 and k4 must be given together")
            return cls(float(cfg["k2"]), float(cfg["k4"]), r_ant, float(cfg.get("k0", 0.0)))
        diode = DiodeParameters(
            float(cfg.get("i_s", DEFAULT_SATURATION_CURRENT)),
            float(cfg.get("n", 1.0)),
            float(cfg.get("v_t", DEFAULT_THERMAL_VOLTAGE)),
        )
        return cls.from_diode(diode, float(cfg.get("a", 0.0)), r_ant)

    @property
    def second_order_weight(self) -> float:
        """Multiplier of E{y^2} in z_DC."""
        return self.k2 * self.antenna_resistance

    @property
    def fourth_order_weight(self) -> float:
        """Multiplier of E{y^4} in z_DC."""
        return self.k4 * self.antenna_resistance**2

    def from_moments(self, m2: float, m4: float) -> float:
        return self.second_order_weight * m2 + self.fourth_order_weight * m4


@lru_cache(maxsize=64)
def quadruples(n: int) -> np.ndarray:
    """All ``(n0, n1, n2, n3)`` in ``range(n)^4`` with ``n0 + n1 == n2 + n3``."""
    i0, i1, i2 = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i3 = i0 + i1 - i2
    ok = (i3 >= 0) & (i3 < n)
    q = np.stack([i0[ok], i1[ok], i2[ok], i3[ok]], axis=1)
    q.setflags(write=False)
    return q


def _combined(amplitudes, phases, h: FrequencyResponse) -> np.ndarray:
    s = np.asarray(amplitudes, dtype=float)
    phi = np.asarray(phases, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    phi = np.broadcast_to(phi.reshape(s.shape) if phi.size == s.size else phi, s.shape)
    if s.shape != h.shape:
        raise ValueError(f"amplitude shape {s.shape} does not match channel shape {h.shape}")
    return np.sum(s * np.exp(1j * phi) * h.h, axis=1)


def expected_square(z: np.ndarray) -> float:
    """E{y^2} for received phasors ``z_n = X_n e^{j delta_n}``."""
    return 0.5 * float(np.sum(np.abs(z) ** 2))


def expected_fourth(z: np.ndarray) -> float:
    """E{y^4} = 3/8 * sum over n0+n1=n2+n3 of z_n0 z_n1 conj(z_n2 z_n3)."""
    q = quadruples(z.size)
    prod = z[q[:, 0]] * z[q[:, 1]] * np.conj(z[q[:, 2]] * z[q[:, 3]])
    return 0.375 * float(np.sum(prod.real))


def z_dc_brackets(amplitudes, phases, h: FrequencyResponse, model: HarvesterModel) -> tuple[float, float]:
    """Second- and fourth-order contributions to z_DC, returned separately."""
    z = _combined(amplitudes, phases, h)
    return (
        model.second_order_weight * expected_square(z),
        model.fourth_order_weight * expected_fourth(z),
    )


def z_dc_analytic(amplitudes, phases, h: FrequencyResponse, model: HarvesterModel) -> float:
    """Closed-form z_DC of a multisine with amplitudes ``S`` and phases ``Phi``.

    Summing over antennas first turns the (m0..m3) cosine sums into the
    received phasors ``X_n e^{j delta_n}``; the tone quadruples are then
    enumerated exactly.
    """
    second, fourth = z_dc_brackets(amplitudes, phases, h, model)
    return second + fourth


def time_moments(spec: ReceivedSpectrum, samples_per_period: int = 16) -> tuple[float, float, float]:
    """Time averages of ``y^2``, ``y^3`` and ``y^4`` over one signal period.

    ``samples_per_period`` counts samples per period of the highest tone; with
    at least 5 the uniform average of ``y^4`` is free of aliasing and exact.
    """
    grid = spec.grid
    if grid is None:
        raise ValueError("spectrum has no frequency grid")
    if not grid.is_commensurate():
        raise ValueError(
            "base frequency must be an integer multiple of the tone spacing "
            f"(ratio {grid.harmonic_index})"
        )
    k = int(round(grid.harmonic_index))
    if k < grid.count:
        raise ValueError(f"grid is not bandpass: need base index >= N={grid.count}, got {k}")
    if samples_per_period < 5:
        raise ValueError("need at least 5 samples per period of the highest tone")
    top = k + grid.count - 1
    num = samples_per_period * top
    t = np.arange(num) * (grid.period / num)
    y = synthesize_received(spec, t)
    y2 = y * y
    return float(np.mean(y2)), float(np.mean(y2 * y)), float(np.mean(y2 * y2))


def z_dc_time_domain(
    amplitudes, phases, h: FrequencyResponse, model: HarvesterModel, samples_per_period: int = 16
) -> float:
    """z_DC from a synthesized received signal averaged over exactly one period."""
    if h.grid is None:
        raise ValueError("frequency response carries no grid")
    z = _combined(amplitudes, phases, h)
    spec = ReceivedSpectrum(np.abs(z), np.angle(z), h.grid)
    m2, _, m4 = time_moments(spec, samples_per_period)
    return model.from_moments(m2, m4)


def linear_model_power(amplitudes, phases, h: FrequencyResponse, zeta: float = 1.0) -> float:
    """Harvested power under the linear model ``zeta * E{y^2}``."""
    return zeta * expected_square(_combined(amplitudes, phases, h))
