"""Multisine transmit waveforms and the signal they produce at the receiver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FrequencyGrid, FrequencyResponse

__all__ = [
    "MultisineWaveform",
    "ReceivedSpectrum",
    "received_spectrum",
    "synthesize_received",
    "transmit_power",
]


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MultisineWaveform:
    """Amplitudes ``S`` and phases ``Phi`` (both N x M) of a multi-antenna multisine."""

    amplitudes: np.ndarray
    phases: np.ndarray
    grid: FrequencyGrid | None = None

    def __post_init__(self):
        s = np.array(self.amplitudes, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        phi = np.array(self.phases, dtype=float)
        if phi.ndim == 0:
            phi = np.full(s.shape, float(phi))
        elif phi.size == s.size:
            phi = phi.reshape(s.shape)
        else:
            raise ValueError(f"phases {phi.shape} do not match amplitudes {s.shape}")
        if np.any(s < 0):
            raise ValueError("amplitudes must be non-negative")
        if self.grid is not None and self.grid.count != s.shape[0]:
            raise ValueError(f"grid has {self.grid.count} tones, amplitudes have {s.shape[0]}")
        object.__setattr__(self, "amplitudes", _frozen(s))
        object.__setattr__(self, "phases", _frozen(phi))

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitudes.shape

    @property
    def weights(self) -> np.ndarray:
        """Complex baseband weights ``s * exp(j phi)``."""
        return self.amplitudes * np.exp(1j * self.phases)

    def transmit_signal(self, t) -> np.ndarray:
        """Per-antenna signals ``x_m(t)``, shape ``t.shape + (M,)``."""
        if self.grid is None:
            raise ValueError("waveform has no frequency grid")
        t = np.asarray(t, dtype=float)
        arg = t[..., None, None] * self.grid.frequencies[:, None] + self.phases
        return np.sum(self.amplitudes * np.cos(arg), axis=-2)

    def dumps(self) -> str:
        """Text dump with grid header and S/Phi blocks; :meth:`loads` inverts it."""
        n, m = self.shape
        g = self.grid
        head = f"# multisine N={n} M={m}"
        if g is not None:
            head += f" w0={g.base_frequency!r} dw={g.spacing!r}"
        lines = [head, "[S]"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.amplitudes]
        lines.append("[PHI]")
        lines += [" ".join(repr(float(v)) for v in row) for row in self.phases]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "MultisineWaveform":
        header = {}
        blocks: dict[str, list[list[float]]] = {}
        current = None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for field in line[1:].split():
                    if "=" in field:
                        key, value = field.split("=", 1)
                        header[key] = value
            elif line.startswith("["):
                current = line.strip("[]")
                blocks[current] = []
            elif current is None:
                raise ValueError("matrix row before any [S]/[PHI] block")
            else:
                blocks[current].append([float(v) for v in line.split()])
        n, m = int(header["N"]), int(header["M"])
        grid = None
        if "w0" in header:
            grid = FrequencyGrid(float(header["w0"]), float(header["dw"]), n)
        s = np.array(blocks["S"]).reshape(n, m)
        phi = np.array(blocks["PHI"]).reshape(n, m)
        return cls(s, phi, grid)


def transmit_power(w: MultisineWaveform) -> float:
    """Average transmit power ``0.5 * ||S||_F^2``."""
    return 0.5 * float(np.sum(w.amplitudes**2))


@dataclass(frozen=True, eq=False)
class ReceivedSpectrum:
    """Per-tone amplitude ``X_n`` and phase ``delta_n`` of the received multisine."""

    amplitudes: np.ndarray
    phases: np.ndarray
    grid: FrequencyGrid | None = None

    def __post_init__(self):
        x = np.atleast_1d(np.array(self.amplitudes, dtype=float))
        d = np.atleast_1d(np.array(self.phases, dtype=float))
        if x.shape != d.shape or x.ndim != 1:
            raise ValueError("amplitudes and phases must be equal-length vectors")
        if np.any(x < 0):
            raise ValueError("received amplitudes must be non-negative")
        if self.grid is not None and self.grid.count != x.size:
            raise ValueError(f"grid has {self.grid.count} tones, spectrum has {x.size}")
        object.__setattr__(self, "amplitudes", _frozen(x))
        object.__setattr__(self, "phases", _frozen(d))

    @property
    def phasors(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    @property
    def average_power(self) -> float:
        """Time average of ``y(t)^2``."""
        return 0.5 * float(np.sum(self.amplitudes**2))

    def scaled(self, factor: float) -> "ReceivedSpectrum":
        return ReceivedSpectrum(self.amplitudes * factor, self.phases, self.grid)

    def on_grid(self, grid: FrequencyGrid) -> "ReceivedSpectrum":
        return ReceivedSpectrum(self.amplitudes, self.phases, grid)


def received_spectrum(w: MultisineWaveform, h: FrequencyResponse) -> ReceivedSpectrum:
    """Combine all antennas: ``X_n exp(j delta_n) = sum_m s_nm h_nm exp(j phi_nm)``."""
    if w.shape != h.shape:
        raise ValueError(f"waveform shape {w.shape} does not match channel shape {h.shape}")
    z = np.sum(w.weights * h.h, axis=1)
    return ReceivedSpectrum(np.abs(z), np.angle(z), w.grid if w.grid is not None else h.grid)


def synthesize_received(spec: ReceivedSpectrum, t):
    """Sample ``y(t) = sum_n X_n cos(w_n t + delta_n)``; ``t`` may be an array."""
    if spec.grid is None:
        raise ValueError("spectrum has no frequency grid")
    t = np.asarray(t, dtype=float)
    arg = t[..., None] * spec.grid.frequencies + spec.phases
    y = np.sum(spec.amplitudes * np.cos(arg), axis=-1)
    return float(y) if y.ndim == 0 else y
