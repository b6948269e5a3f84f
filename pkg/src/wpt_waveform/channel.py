"""Multipath channel generation and per-tone frequency responses.

Taps are shared by all transmit antennas (narrowband balanced array); only the
array phase shift differs between antennas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml
from scipy.constants import speed_of_light

__all__ = [
    "ArrayGeometry",
    "FrequencyGrid",
    "FrequencyResponse",
    "MultipathChannel",
    "MultipathTap",
    "PowerDelayProfile",
    "frequency_response",
    "generate_channel",
    "ula_phase_shift",
]

CENTER_FREQUENCY_HZ = 5.18e9
BANDWIDTH_HZ = 20e6
EIRP_DBM = 36.0
RX_POWER_DBM = -12.0
# decay of the default 18-tap profile; ~48 ns rms delay spread
DEFAULT_DECAY_NS = 100.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear transmit array."""

    num_antennas: int = 1
    element_spacing: float = 0.5 * speed_of_light / CENTER_FREQUENCY_HZ
    array_type: str = "uniform-linear"

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.element_spacing > 0:
            raise ValueError(f"element_spacing must be positive, got {self.element_spacing}")
        if self.array_type != "uniform-linear":
            raise ValueError(f"unsupported array type {self.array_type!r}")


@dataclass(frozen=True)
class MultipathTap:
    gain: float
    delay: float
    phase: float
    departure_angle: float

    def __post_init__(self):
        if self.gain < 0:
            raise ValueError(f"tap gain must be non-negative, got {self.gain}")
        if self.delay < 0:
            raise ValueError(f"tap delay must be non-negative, got {self.delay}")


@dataclass(frozen=True)
class PowerDelayProfile:
    """Average tap powers (linear, already path-loss scaled) at given delays.

    ``departure_angles`` optionally pins the departure angle of individual
    taps; ``None`` entries (or no tuple at all) mean uniform on [0, 2*pi).
    """

    delays: tuple[float, ...]
    powers: tuple[float, ...]
    label: str = ""
    departure_angles: tuple[float | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if not self.delays:
            raise ValueError("power delay profile must contain at least one tap")
        if len(self.delays) != len(self.powers):
            raise ValueError(
                f"delays and powers differ in length ({len(self.delays)} vs {len(self.powers)})"
            )
        if any(b <= a for a, b in zip(self.delays, self.delays[1:])):
            raise ValueError("delays must be strictly increasing")
        if self.delays[0] < 0:
            raise ValueError("delays must be non-negative")
        if any(p < 0 for p in self.powers):
            raise ValueError("tap powers must be non-negative")
        if self.departure_angles is not None:
            angles = tuple(None if a is None else float(a) for a in self.departure_angles)
            if len(angles) != len(self.delays):
                raise ValueError("departure_angles must have one entry per tap")
            object.__setattr__(self, "departure_angles", angles)

    def __len__(self):
        return len(self.delays)

    @property
    def total_power(self) -> float:
        return math.fsum(self.powers)

    @classmethod
    def from_db(
        cls,
        delays_ns,
        powers_db,
        rx_power_dbm: float = RX_POWER_DBM,
        tx_power_dbm: float = EIRP_DBM,
        label: str = "",
        departure_angles=None,
    ) -> "PowerDelayProfile":
        """Build a profile whose powers sum to the link gain rx/tx.

        With a transmit power of ``tx_power_dbm`` spent on a single antenna the
        mean received power is then ``rx_power_dbm``.
        """
        if len(powers_db) == 0:
            raise ValueError("power delay profile must contain at least one tap")
        relative = 10.0 ** (np.asarray(powers_db, dtype=float) / 10.0)
        gain = 10.0 ** ((rx_power_dbm - tx_power_dbm) / 10.0)
        powers = relative * (gain / relative.sum())
        delays = np.asarray(delays_ns, dtype=float) * 1e-9
        return cls(tuple(delays), tuple(powers), label, departure_angles)

    @classmethod
    def default(cls, rx_power_dbm: float = RX_POWER_DBM, tx_power_dbm: float = EIRP_DBM):
        """18 taps, 10 ns apart, exponentially decaying (model-B substitute)."""
        delays_ns = np.arange(18) * 10.0
        powers_db = -delays_ns / DEFAULT_DECAY_NS * (10.0 / math.log(10.0))
        return cls.from_db(delays_ns, powers_db, rx_power_dbm, tx_power_dbm, "model-B-substitute")

    @classmethod
    def from_mapping(cls, data: dict) -> "PowerDelayProfile":
        missing = {"delays_ns", "powers_db"} - set(data)
        if missing:
            raise ValueError(f"PDP config lacks field(s): {', '.join(sorted(missing))}")
        return cls.from_db(
            data["delays_ns"],
            data["powers_db"],
            float(data.get("rx_power_dbm", RX_POWER_DBM)),
            float(data.get("tx_power_dbm", EIRP_DBM)),
            str(data.get("label", "")),
            data.get("departure_angles"),
        )

    @classmethod
    def load(cls, path) -> "PowerDelayProfile":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping with delays_ns/powers_db")
        return cls.from_mapping(data)


@dataclass(frozen=True)
class MultipathChannel:
    taps: tuple[MultipathTap, ...]
    seed: int | None = None

    def __post_init__(self):
        if not self.taps:
            raise ValueError("channel needs at least one tap")
        object.__setattr__(self, "taps", tuple(self.taps))

    def __len__(self):
        return len(self.taps)

    @property
    def gains(self) -> np.ndarray:
        return np.array([t.gain for t in self.taps])

    @property
    def delays(self) -> np.ndarray:
        return np.array([t.delay for t in self.taps])

    @property
    def phases(self) -> np.ndarray:
        return np.array([t.phase for t in self.taps])

    @property
    def departure_angles(self) -> np.ndarray:
        return np.array([t.departure_angle for t in self.taps])

    def dumps(self) -> str:
        lines = [f"# seed {self.seed}", "# alpha tau xi theta"]
        for t in self.taps:
            lines.append(f"{t.gain:.17e} {t.delay:.17e} {t.phase:.17e} {t.departure_angle:.17e}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "MultipathChannel":
        seed = None
        taps = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "seed" and parts[1] != "None":
                    seed = int(parts[1])
                continue
            alpha, tau, xi, theta = (float(v) for v in line.split())
            taps.append(MultipathTap(alpha, tau, xi, theta))
        return cls(tuple(taps), seed)


def _rng(seed: int) -> np.random.Generator:
    # negative seeds wrap so every integer is accepted
    return np.random.default_rng(int(seed) % 2**64)


def generate_channel(pdp: PowerDelayProfile, seed: int) -> MultipathChannel:
    """Draw one channel realization with i.i.d. circularly symmetric Gaussian taps."""
    if len(pdp) == 0:
        raise ValueError("power delay profile is empty")
    rng = _rng(seed)
    num = len(pdp)
    powers = np.asarray(pdp.powers)
    draws = rng.standard_normal((num, 2))
    angles = rng.uniform(0.0, 2.0 * np.pi, num)
    coeff = np.sqrt(powers / 2.0) * (draws[:, 0] + 1j * draws[:, 1])
    if pdp.departure_angles is not None:
        angles = np.array(
            [a if fixed is None else fixed for a, fixed in zip(angles, pdp.departure_angles)]
        )
    taps = tuple(
        MultipathTap(float(abs(c)), d, float(np.angle(c)), float(th))
        for c, d, th in zip(coeff, pdp.delays, angles)
    )
    return MultipathChannel(taps, int(seed))


@dataclass(frozen=True)
class FrequencyGrid:
    """Evenly spaced tones ``w_n = base_frequency + n * spacing`` (rad/s)."""

    base_frequency: float
    spacing: float
    count: int

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"tone spacing must be positive, got {self.spacing}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"tone count must be a positive integer, got {self.count}")
        if self.base_frequency < 0:
            raise ValueError("base frequency must be non-negative")

    @classmethod
    def centered(cls, center_hz: float, bandwidth_hz: float, count: int) -> "FrequencyGrid":
        """``count`` tones spaced ``bandwidth_hz / count`` apart around ``center_hz``."""
        df = bandwidth_hz / count
        f0 = center_hz - 0.5 * (count - 1) * df
        return cls(2 * np.pi * f0, 2 * np.pi * df, count)

    @classmethod
    def harmonic(cls, first_index: int, spacing_hz: float, count: int) -> "FrequencyGrid":
        """Grid whose base frequency is ``first_index`` times the spacing."""
        dw = 2 * np.pi * spacing_hz
        return cls(first_index * dw, dw, count)

    @property
    def frequencies(self) -> np.ndarray:
        return self.base_frequency + self.spacing * np.arange(self.count)

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.frequencies / (2 * np.pi)

    @property
    def spacing_hz(self) -> float:
        return self.spacing / (2 * np.pi)

    @property
    def wavelengths(self) -> np.ndarray:
        return 2 * np.pi * speed_of_light / self.frequencies

    @property
    def period(self) -> float:
        """Period of a multisine on this grid (exact only when commensurate)."""
        return 2 * np.pi / self.spacing

    @property
    def harmonic_index(self) -> float:
        return self.base_frequency / self.spacing

    def is_commensurate(self, rtol: float = 1e-9) -> bool:
        k = self.harmonic_index
        return abs(k - round(k)) <= rtol * max(1.0, k)


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """Complex gains ``h[n, m]`` of every (tone, antenna) pair."""

    h: np.ndarray
    grid: FrequencyGrid | None = None

    def __post_init__(self):
        h = np.array(self.h, dtype=complex)
        if h.ndim == 1:
            h = h[:, None]
        if h.ndim != 2:
            raise ValueError(f"frequency response must be N x M, got shape {h.shape}")
        if self.grid is not None and self.grid.count != h.shape[0]:
            raise ValueError(f"grid has {self.grid.count} tones but response has {h.shape[0]}")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def shape(self) -> tuple[int, int]:
        return self.h.shape

    @property
    def num_tones(self) -> int:
        return self.h.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.h.shape[1]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.h)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.h)


def ula_phase_shift(antenna_index, wavelength, departure_angle, spacing):
    """Phase of antenna ``antenna_index`` (1-based) relative to the first one."""
    m = np.asarray(antenna_index)
    if np.any(m < 1):
        raise ValueError("antenna index is 1-based")
    return 2 * np.pi * (m - 1) * (spacing / np.asarray(wavelength)) * np.cos(departure_angle)


def frequency_response(
    channel: MultipathChannel, grid: FrequencyGrid, array: ArrayGeometry | None = None
) -> FrequencyResponse:
    """Evaluate ``h[n, m] = sum_l alpha_l exp(j(-w_n tau_l + shift_{n,m,l} + xi_l))``."""
    array = array or ArrayGeometry()
    w = grid.frequencies[:, None, None]
    m = np.arange(1, array.num_antennas + 1)[None, :, None]
    wavelength = grid.wavelengths[:, None, None]
    shift = ula_phase_shift(m, wavelength, channel.departure_angles[None, None, :], array.element_spacing)
    phase = -w * channel.delays[None, None, :] + shift + channel.phases[None, None, :]
    h = np.sum(channel.gains[None, None, :] * np.exp(1j * phase), axis=2)
    return FrequencyResponse(h, grid)
