"""Monte-Carlo (N, M) sweeps over random multipath channels.

Realization ``r`` always uses channel seed ``base_seed + r`` so that every
waveform, tone count and antenna count sees the same taps; gains can then be
compared pairwise.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .baselines import matched_filter_waveform, strongest_sinewave_waveform, uniform_waveform
from .channel import (
    BANDWIDTH_HZ,
    CENTER_FREQUENCY_HZ,
    EIRP_DBM,
    ArrayGeometry,
    FrequencyGrid,
    FrequencyResponse,
    PowerDelayProfile,
    dbm_to_watts,
    frequency_response,
    generate_channel,
)
from .harvester import HarvesterModel, z_dc_analytic
from .optimizer import optimal_phases, optimize_amplitudes_multistart
from .rectifier import DOWNSHIFTED_CARRIER_HZ, RectifierCircuit, simulate_rectifier
from .waveform import MultisineWaveform, received_spectrum

__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "TrialResult",
    "build_waveform",
    "emit_csv",
    "load_config",
    "run_sweep",
    "summarize",
]

log = logging.getLogger(__name__)

WAVEFORMS = ("uniform", "mf", "opt", "strongest")
CSV_COLUMNS = ["N", "M", "waveform", "realization", "seed", "z_dc", "dc_power_sim", "iterations", "converged"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])
    m: list[int] = field(default_factory=lambda: [1, 2, 4])
    waveforms: list[str] = field(default_factory=lambda: ["uniform", "mf", "opt"])
    trials: int = 100
    seed: int = 42
    power_dbm: float = EIRP_DBM
    bandwidth_hz: float = BANDWIDTH_HZ
    center_hz: float = CENTER_FREQUENCY_HZ
    harvester: dict = field(default_factory=dict)
    pdp: str | dict | None = None
    out: str | None = None
    circuit_sim: bool = False
    full_rf: bool = False
    tol: float = 1e-6
    max_iter: int = 100
    starts: int = 1
    init: str = "mf"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        problems = []
        if not self.n or any(int(v) != v or v < 1 for v in self.n):
            problems.append(f"n: tone counts must be positive integers, got {self.n}")
        if not self.m or any(int(v) != v or v < 1 for v in self.m):
            problems.append(f"m: antenna counts must be positive integers, got {self.m}")
        bad = [w for w in self.waveforms if w not in WAVEFORMS]
        if not self.waveforms or bad:
            problems.append(f"waveforms: unknown selector(s) {bad}; choose from {', '.join(WAVEFORMS)}")
        if int(self.trials) != self.trials or self.trials < 1:
            problems.append(f"trials: must be a positive integer, got {self.trials}")
        if not self.bandwidth_hz > 0:
            problems.append("bandwidth_hz: must be positive")
        if not self.center_hz > 0:
            problems.append("center_hz: must be positive")
        if not self.tol > 0 or self.max_iter < 1 or self.starts < 1 or self.workers < 1:
            problems.append("tol, max_iter, starts and workers must be positive")
        if self.init not in ("mf", "uniform"):
            problems.append(f"init: must be mf or uniform, got {self.init!r}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def power(self) -> float:
        return dbm_to_watts(self.power_dbm)

    def profile(self) -> PowerDelayProfile:
        if self.pdp is None:
            return PowerDelayProfile.default()
        if isinstance(self.pdp, dict):
            return PowerDelayProfile.from_mapping(self.pdp)
        return PowerDelayProfile.load(self.pdp)

    def model(self) -> HarvesterModel:
        return HarvesterModel.from_config(self.harvester)


_FIELD_TYPES = {
    "n": "intlist", "m": "intlist", "waveforms": "strlist", "trials": int, "seed": int,
    "power_dbm": float, "bandwidth_hz": float, "center_hz": float, "harvester": dict,
    "pdp": "pdp", "out": str, "circuit_sim": bool, "full_rf": bool, "tol": float,
    "max_iter": int, "starts": int, "init": str, "workers": int,
}


def _coerce(kind, value):
    if kind == "intlist":
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        if not isinstance(value, list):
            value = [value]
        return [_coerce(int, v) for v in value]
    if kind == "strlist":
        if isinstance(value, str):
            value = value.split(",")
        return [str(v).strip() for v in value]
    if kind == "pdp":
        if not isinstance(value, (str, dict)):
            raise TypeError("expected a file path or a mapping")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise TypeError("expected a mapping")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise TypeError("expected true or false")
        return value
    if kind is int:
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise TypeError(f"expected an integer, got {value!r}")
        return int(float(value))
    return kind(value)


def load_config(path) -> dict:
    """Read a YAML experiment file into validated field overrides.

    Errors name the offending line.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if root is None:
        return {}
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{path}:{root.start_mark.line + 1}: top level must be a mapping")
    data = yaml.safe_load(text)
    overrides = {}
    errors = []
    for key_node, _ in root.value:
        key = key_node.value
        line = key_node.start_mark.line + 1
        if key not in _FIELD_TYPES:
            errors.append(f"{path}:{line}: unknown field {key!r}")
            continue
        try:
            overrides[key] = _coerce(_FIELD_TYPES[key], data[key])
        except (TypeError, ValueError) as exc:
            errors.append(f"{path}:{line}: {key}: {exc}")
            continue
        try:
            ExperimentConfig(**{key: overrides[key]})
        except ConfigError as exc:
            errors.append(f"{path}:{line}: {exc}")
    if errors:
        raise ConfigError("\n".join(errors))
    return overrides


@dataclass(frozen=True)
class TrialResult:
    N: int
    M: int
    waveform: str
    realization: int
    seed: int
    z_dc: float
    dc_power_sim: float | None = None
    iterations: int = 0
    converged: bool = True


def build_waveform(selector: str, h: FrequencyResponse, model: HarvesterModel, power: float, **opt_kwargs):
    """Waveform for a CLI selector plus ``(iterations, converged)`` of the design."""
    n, m = h.shape
    if selector == "uniform":
        return uniform_waveform(n, m, power, h.grid), 0, True
    if selector == "mf":
        return matched_filter_waveform(h, power), 0, True
    if selector == "strongest":
        return strongest_sinewave_waveform(h, power), 0, True
    if selector == "opt":
        s, trace = optimize_amplitudes_multistart(h, model, power, **opt_kwargs)
        return MultisineWaveform(s, optimal_phases(h), h.grid), trace.iterations, trace.converged
    raise ValueError(f"unknown waveform selector {selector!r}")


def _run_realization(config: ExperimentConfig, realization: int) -> list[TrialResult]:
    seed = config.seed + realization
    channel = generate_channel(config.profile(), seed)
    model = config.model()
    diode = model.diode
    power = config.power
    rows = []
    for n in config.n:
        grid = FrequencyGrid.centered(config.center_hz, config.bandwidth_hz, n)
        circuit = None
        if config.circuit_sim:
            kw = {"antenna_resistance": model.antenna_resistance}
            if diode is not None:
                kw["diode"] = diode
            circuit = RectifierCircuit.for_tone_spacing(grid.spacing_hz, **kw)
        for m in config.m:
            h = frequency_response(channel, grid, ArrayGeometry(m))
            for name in config.waveforms:
                w, iters, conv = build_waveform(
                    name, h, model, power,
                    tol=config.tol, max_iter=config.max_iter, starts=config.starts, seed=seed,
                    init=config.init,
                )
                z = z_dc_analytic(w.amplitudes, w.phases, h, model)
                p_sim = None
                if circuit is not None:
                    carrier = None if config.full_rf else DOWNSHIFTED_CARRIER_HZ
                    res = simulate_rectifier(received_spectrum(w, h), circuit, carrier_hz=carrier)
                    if not res.converged:
                        log.warning("rectifier not settled: N=%d M=%d %s seed=%d", n, m, name, seed)
                    p_sim = res.dc_power
                rows.append(TrialResult(n, m, name, realization, seed, z, p_sim, iters, conv))
    return rows


def _ordered(config: ExperimentConfig, rows: list[TrialResult]) -> list[TrialResult]:
    order = {w: i for i, w in enumerate(config.waveforms)}
    return sorted(rows, key=lambda r: (r.N, r.M, order[r.waveform], r.realization))


def run_sweep(config: ExperimentConfig) -> list[TrialResult]:
    """Evaluate every (N, M, waveform, realization) cell of the sweep."""
    config.validate()
    realizations = range(config.trials)
    rows: list[TrialResult] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for chunk in pool.map(_run_realization, [config] * config.trials, realizations):
                rows.extend(chunk)
    else:
        for r in realizations:
            rows.extend(_run_realization(config, r))
    return _ordered(config, rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(results, path=None) -> str:
    """Write per-trial rows (header first) and return the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in results:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> list[TrialResult]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                TrialResult(
                    int(row["N"]), int(row["M"]), row["waveform"], int(row["realization"]),
                    int(row["seed"]), float(row["z_dc"]),
                    float(row["dc_power_sim"]) if row["dc_power_sim"] else None,
                    int(row["iterations"]), row["converged"] == "true",
                )
            )
    return out


@dataclass(frozen=True)
class CellSummary:
    N: int
    M: int
    waveform: str
    trials: int
    mean_z_dc: float
    mean_dc_power_sim: float | None
    mean_gain_over_mf: float | None


def summarize(results) -> list[CellSummary]:
    """Per-(N, M, waveform) means; the gain column is the mean paired ratio to ``mf``."""
    cells: dict[tuple, list[TrialResult]] = defaultdict(list)
    order = []
    for r in results:
        key = (r.N, r.M, r.waveform)
        if key not in cells:
            order.append(key)
        cells[key].append(r)
    out = []
    for key in order:
        rows = cells[key]
        mf = {r.realization: r.z_dc for r in cells.get((key[0], key[1], "mf"), [])}
        gains = [r.z_dc / mf[r.realization] for r in rows if r.realization in mf]
        sims = [r.dc_power_sim for r in rows if r.dc_power_sim is not None]
        out.append(
            CellSummary(
                *key,
                trials=len(rows),
                mean_z_dc=math.fsum(r.z_dc for r in rows) / len(rows),
                mean_dc_power_sim=math.fsum(sims) / len(sims) if sims else None,
                mean_gain_over_mf=float(np.mean(gains)) if len(gains) == len(rows) else None,
            )
        )
    return out


def format_summary(summary) -> str:
    cols = [f.name for f in fields(CellSummary)]
    lines = [",".join(cols)]
    for s in summary:
        lines.append(",".join(_fmt(getattr(s, c)) for c in cols))
    return "\n".join(lines) + "\n"
