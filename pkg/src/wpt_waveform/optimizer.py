"""Waveform optimization: closed-form phases and iterative amplitude design.

With every received component phase-aligned, z_DC becomes a posynomial in the
amplitudes. Maximizing it under the power budget is a reverse geometric
program; each iteration replaces the posynomial by its AM-GM monomial lower
bound, tight at the current point, and maximizes that monomial. A single
monomial under ``0.5 * ||S||^2 <= P`` has the analytic maximizer

    s_i = sqrt(2 P a_i / sum_j a_j)

so no generic GP solver is needed. Each step maximizes a lower bound that
touches z_DC at the previous iterate, hence z_DC never decreases.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .channel import FrequencyResponse
from .harvester import HarvesterModel, quadruples

__all__ = [
    "IterationRecord",
    "IterationTrace",
    "Monomial",
    "PosynomialObjective",
    "amgm_lower_bound",
    "build_posynomial",
    "evaluate_posynomial",
    "maximize_monomial_under_power",
    "optimal_phases",
    "optimize_amplitudes",
    "optimize_amplitudes_multistart",
]

log = logging.getLogger(__name__)


def optimal_phases(h: FrequencyResponse) -> np.ndarray:
    """Phases ``-arg(h)`` that align every received component at zero phase."""
    return -np.angle(h.h)


@dataclass(frozen=True, eq=False)
class Monomial:
    """``coefficient * prod(S ** exponents)`` with exponents laid out like ``S``."""

    coefficient: float
    exponents: np.ndarray

    def __post_init__(self):
        if not self.coefficient > 0:
            raise ValueError(f"monomial coefficient must be positive, got {self.coefficient}")
        object.__setattr__(self, "exponents", np.asarray(self.exponents, dtype=float))

    def __call__(self, amplitudes) -> float:
        s = np.asarray(amplitudes, dtype=float).reshape(self.exponents.shape)
        used = self.exponents != 0
        return float(self.coefficient * np.prod(s[used] ** self.exponents[used]))

    @property
    def degree(self) -> float:
        return float(self.exponents.sum())


@dataclass(frozen=True, eq=False)
class PosynomialObjective:
    """Sum of monomials over the amplitude variables, stored row-wise.

    ``exponents`` is a sparse ``K x (N*M)`` matrix; variable ``(n, m)`` is
    column ``n * M + m``.
    """

    coefficients: np.ndarray
    exponents: sparse.csr_matrix
    shape: tuple[int, int]
    raw_term_count: int = 0

    def __post_init__(self):
        if self.coefficients.size < 1:
            raise ValueError("posynomial needs at least one term")
        if np.any(self.coefficients <= 0):
            raise ValueError("posynomial coefficients must be positive")

    def __len__(self):
        return self.coefficients.size

    @property
    def num_terms(self) -> int:
        return self.coefficients.size

    def term(self, k: int) -> Monomial:
        row = self.exponents.getrow(k).toarray().reshape(self.shape)
        return Monomial(float(self.coefficients[k]), row)

    def terms(self, amplitudes) -> np.ndarray:
        """Values ``g_k(S)`` of every term."""
        s = np.asarray(amplitudes, dtype=float).reshape(-1)
        with np.errstate(divide="ignore"):
            logs = np.log(s)
        return self.coefficients * np.exp(self.exponents @ logs)

    def __call__(self, amplitudes) -> float:
        return float(np.sum(self.terms(amplitudes)))

    @property
    def variables(self) -> np.ndarray:
        """Boolean ``N x M`` mask of variables that appear in some term."""
        used = np.zeros(self.exponents.shape[1], dtype=bool)
        used[np.unique(self.exponents.indices)] = True
        return used.reshape(self.shape)


def evaluate_posynomial(p: PosynomialObjective, amplitudes) -> float:
    return p(amplitudes)


def _term_rows(n_tones: int, n_ant: int, included: np.ndarray):
    """Variable-index rows of all raw terms; second-order rows padded with -1."""
    var = np.arange(n_tones * n_ant).reshape(n_tones, n_ant)
    m = np.arange(n_ant)
    # second order: (n, m0, m1)
    n2, m0, m1 = np.meshgrid(np.arange(n_tones), m, m, indexing="ij")
    pairs = np.stack([var[n2, m0].ravel(), var[n2, m1].ravel()], axis=1)
    # fourth order: tone quadruple x antenna quadruple
    q = quadruples(n_tones)
    mq = np.stack(np.meshgrid(m, m, m, m, indexing="ij"), axis=-1).reshape(-1, 4)
    quads = (var[q[:, None, :], mq[None, :, :]]).reshape(-1, 4)
    flat = included.ravel()
    pairs = pairs[flat[pairs].all(axis=1)]
    quads = quads[flat[quads].all(axis=1)]
    return pairs, quads


def build_posynomial(magnitude, model: HarvesterModel, merge: bool = True) -> PosynomialObjective:
    """z_DC at optimal phases as a posynomial in the amplitudes.

    ``magnitude`` is the ``N x M`` matrix ``|h|``. Every (n, m0, m1) pair
    contributes ``k2/2 R A A s s``; every tone quadruple with
    ``n0+n1 = n2+n3`` and antenna quadruple contributes
    ``3 k4/8 R^2 prod(A s)``. Variables with zero channel gain are left out.
    Terms with identical exponents are merged unless ``merge`` is false.
    """
    a = np.asarray(magnitude, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if np.any(a < 0):
        raise ValueError("channel magnitudes must be non-negative")
    included = a > 0
    if not included.any():
        raise ValueError("channel is identically zero")
    n_tones, n_ant = a.shape
    nvar = a.size
    pairs, quads = _term_rows(n_tones, n_ant, included)
    af = a.ravel()
    c2 = 0.5 * model.second_order_weight * af[pairs].prod(axis=1)
    c4 = 0.375 * model.fourth_order_weight * af[quads].prod(axis=1)
    rows = np.full((pairs.shape[0] + quads.shape[0], 4), -1, dtype=np.int64)
    rows[: pairs.shape[0], :2] = pairs
    rows[pairs.shape[0]:] = quads
    coeff = np.concatenate([c2, c4])
    raw = rows.shape[0]
    if merge:
        rows = np.sort(rows, axis=1)
        base = nvar + 1
        key = (((rows[:, 0] + 1) * base + rows[:, 1] + 1) * base + rows[:, 2] + 1) * base + rows[:, 3] + 1
        key_u, first, inverse = np.unique(key, return_index=True, return_inverse=True)
        coeff = np.bincount(inverse.ravel(), weights=coeff, minlength=key_u.size)
        rows = rows[first]
    k_idx = np.repeat(np.arange(rows.shape[0]), 4)
    cols = rows.ravel()
    keep = cols >= 0
    exps = sparse.coo_matrix(
        (np.ones(keep.sum()), (k_idx[keep], cols[keep])), shape=(rows.shape[0], nvar)
    ).tocsr()
    exps.sum_duplicates()
    return PosynomialObjective(coeff, exps, (n_tones, n_ant), raw)


def amgm_lower_bound(p: PosynomialObjective, gamma) -> Monomial:
    """Monomial ``prod_k (g_k / gamma_k) ** gamma_k`` bounding ``p`` from below.

    Terms with zero weight drop out of the product.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (p.num_terms,):
        raise ValueError(f"expected {p.num_terms} weights, got shape {gamma.shape}")
    if np.any(gamma < 0) or not np.isfinite(gamma).all():
        raise ValueError("weights must be finite and non-negative")
    if abs(gamma.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to one, got {gamma.sum()!r}")
    used = gamma > 0
    g = gamma[used]
    log_c = np.sum(g * (np.log(p.coefficients[used]) - np.log(g)))
    exps = p.exponents.T @ gamma
    return Monomial(float(np.exp(log_c)), exps.reshape(p.shape))


def maximize_monomial_under_power(m: Monomial, power: float) -> np.ndarray:
    """Maximizer of a monomial with non-negative exponents on ``0.5*||S||^2 <= P``."""
    a = m.exponents
    if np.any(a < 0):
        raise ValueError("exponents must be non-negative")
    total = a.sum()
    if not total > 0:
        raise ValueError("monomial has no positive exponent")
    if not power > 0:
        raise ValueError("power budget must be positive")
    return np.sqrt(2.0 * power * a / total)


@dataclass
class IterationRecord:
    iteration: int
    amplitudes: np.ndarray
    z_dc: float
    power: float
    max_gamma: float
    gammas: np.ndarray | None = None


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self) -> int:
        """Number of bound-maximization steps taken."""
        return max(len(self.records) - 1, 0)

    @property
    def objective(self) -> np.ndarray:
        return np.array([r.z_dc for r in self.records])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "z_dc", "power", "max_gamma"])
        for r in self.records:
            writer.writerow([r.iteration, repr(r.z_dc), repr(r.power), repr(r.max_gamma)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _scaled_to_power(s: np.ndarray, power: float) -> np.ndarray:
    return s * np.sqrt(2.0 * power / np.sum(s**2))


def optimize_amplitudes(
    h: FrequencyResponse,
    model: HarvesterModel,
    power: float,
    init=None,
    tol: float = 1e-6,
    max_iter: int = 100,
    keep_gammas: bool = False,
    posynomial: PosynomialObjective | None = None,
) -> tuple[np.ndarray, IterationTrace]:
    """Locally optimal amplitudes for the phase-aligned waveform.

    Parameters
    ----------
    h : FrequencyResponse
        Channel state known at the transmitter.
    model : HarvesterModel
        Supplies ``k2``, ``k4`` and the antenna resistance.
    power : float
        Budget on ``0.5 * ||S||_F^2``.
    init : array, optional
        Feasible starting amplitudes, strictly positive wherever the channel
        is nonzero. Defaults to matched-filter amplitudes.
    tol : float
        Stop once the relative change of z_DC drops below this.
    max_iter : int
        Iteration cap; hitting it leaves ``trace.converged`` false.
    keep_gammas : bool
        Store the full weight vector in every trace record (memory heavy).

    Returns
    -------
    amplitudes, trace
        Final ``N x M`` amplitudes (power constraint active) and the
        per-iteration history.
    """
    if not power > 0:
        raise ValueError("power budget must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    a = h.magnitude
    p = posynomial if posynomial is not None else build_posynomial(a, model)
    included = p.variables
    if init is None:
        s = _scaled_to_power(a, power)
    else:
        s = np.array(init, dtype=float).reshape(a.shape)
        if np.any(s < 0):
            raise ValueError("initial amplitudes must be non-negative")
        if 0.5 * np.sum(s**2) > power * (1 + 1e-12):
            raise ValueError(f"initial amplitudes exceed the power budget {power}")
        if np.any(s[included] <= 0):
            raise ValueError("initial amplitudes must be positive on every nonzero channel")
        s = np.where(included, s, 0.0)

    g = p.terms(s)
    z = float(g.sum())
    trace = IterationTrace()
    trace.records.append(
        IterationRecord(0, s.copy(), z, 0.5 * float(np.sum(s**2)), float(g.max() / z),
                        g / z if keep_gammas else None)
    )
    for i in range(1, max_iter + 1):
        gamma = g / z
        bound = amgm_lower_bound(p, gamma)
        s = maximize_monomial_under_power(bound, power)
        g = p.terms(s)
        z_new = float(g.sum())
        trace.records.append(
            IterationRecord(i, s.copy(), z_new, 0.5 * float(np.sum(s**2)), float(g.max() / z_new),
                            g / z_new if keep_gammas else None)
        )
        change = abs(z_new - z) / z
        z = z_new
        if change < tol:
            trace.converged = True
            break
    else:
        log.debug("amplitude optimization stopped after %d iterations without converging", max_iter)
    return s, trace


def optimize_amplitudes_multistart(
    h: FrequencyResponse,
    model: HarvesterModel,
    power: float,
    starts: int = 1,
    seed: int = 0,
    init="mf",
    **kwargs,
) -> tuple[np.ndarray, IterationTrace]:
    """Best of one deterministic start and ``starts - 1`` random positive starts.

    ``init`` picks the deterministic start: ``"mf"`` (matched filter),
    ``"uniform"`` (equal amplitude on every nonzero channel) or an explicit
    amplitude matrix.
    """
    p = build_posynomial(h.magnitude, model)
    if isinstance(init, str):
        if init == "mf":
            init = None
        elif init == "uniform":
            init = _scaled_to_power(p.variables.astype(float), power)
        else:
            raise ValueError(f"unknown initialization {init!r}; use 'mf' or 'uniform'")
    best = optimize_amplitudes(h, model, power, init=init, posynomial=p, **kwargs)
    rng = np.random.default_rng(seed)
    for _ in range(starts - 1):
        start = _scaled_to_power(rng.uniform(0.05, 1.0, h.shape), power)
        cand = optimize_amplitudes(h, model, power, init=start, posynomial=p, **kwargs)
        if cand[1].records[-1].z_dc > best[1].records[-1].z_dc:
            best = cand
    return best
