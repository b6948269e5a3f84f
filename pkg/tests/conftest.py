import functools

import numpy as np
import pytest

import wpt_waveform
from wpt_waveform import optimizer as _optimizer
from wpt_waveform.channel import FrequencyGrid, FrequencyResponse

MONOTONE_RTOL = 1e-12
POWER_RTOL = 1e-9

# every optimizer call made by any test is checked and logged here
OPTIMIZER_RUNS: list[dict] = []
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def _checked(func):
    @functools.wraps(func)
    def wrapper(h, model, power, *args, **kwargs):
        s, trace = func(h, model, power, *args, **kwargs)
        z = trace.objective
        steps_ok = bool(np.all(z[1:] >= z[:-1] * (1 - MONOTONE_RTOL)))
        power_ok = abs(0.5 * np.sum(s**2) - power) <= POWER_RTOL * power
        OPTIMIZER_RUNS.append({"monotone": steps_ok, "power": power_ok, "iterations": trace.iterations})
        assert steps_ok, f"z_DC decreased along the trace: {np.diff(z).min()}"
        assert power_ok, f"power constraint not active: {0.5 * np.sum(s**2)} vs {power}"
        return s, trace

    return wrapper


_optimizer.optimize_amplitudes = _checked(_optimizer.optimize_amplitudes)
wpt_waveform.optimize_amplitudes = _optimizer.optimize_amplitudes


def record_acceptance(label, passed: bool, detail: str):
    ACCEPTANCE[str(label)] = (bool(passed), detail)
    print(f"[acceptance {label}] {'PASS' if passed else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{label}. {'PASS' if passed else 'FAIL'}  {detail}")
    bad = sum(not (r["monotone"] and r["power"]) for r in OPTIMIZER_RUNS)
    terminalreporter.write_line(
        f"optimizer runs checked for monotone z_DC and active budget this session: {len(OPTIMIZER_RUNS)}, "
        f"violations: {bad}"
    )


def random_response(rng, n, m, first_index=None, spacing_hz=1e6):
    """Complex Gaussian channel on a commensurate bandpass grid."""
    k = first_index if first_index is not None else n + int(rng.integers(0, 5))
    grid = FrequencyGrid.harmonic(k, spacing_hz, n)
    h = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)
    return FrequencyResponse(h, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
