"""Fidelity, success-probability and parity analyses of the generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from . import branched as br
from . import coherent as ca
from . import fock
from . import protocols as pr
from .branched import COHERENT, LABEL, BranchedState
from .circuit import auto_cutoff, run_coherent, run_fock
from .coherent import SuperposedState
from .errors import ConvergenceError, DegenerateState, NotSingleMode, WindowExceedsDomain

P_MAX = 8.0
GL_ORDER = 64


@dataclass(frozen=True)
class SweepRecord:
    parameter: float
    fidelity: float
    probability: float | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ParitySpectrum:
    even_weight: float
    odd_weight: float
    weights: tuple[float, ...]


# -- quadrature -------------------------------------------------------------

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, rtol: float = 1e-10,
                   atol: float = 1e-300, max_panels: int = 4096) -> tuple[float, int]:
    """Composite Gauss-Legendre integral of a vectorized ``f`` on ``[a, b]``.

    Panels double until two successive estimates agree to ``rtol``.
    Returns ``(value, panels)``.
    """
    if b == a:
        return 0.0, 0

    def estimate(panels: int) -> float:
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        y = np.asarray(f(x), dtype=float).reshape(panels, GL_ORDER)
        return float(np.sum(half * (y @ _WEIGHTS)))

    panels = 1
    prev = estimate(panels)
    while panels < max_panels:
        panels *= 2
        cur = estimate(panels)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return cur, panels
        prev = cur
    raise ConvergenceError(f"quadrature on [{a}, {b}] did not converge with {max_panels} panels")


# -- fidelities versus amplitude --------------------------------------------

def single_photon_fidelity(alpha: float, method: str = "formula") -> float:
    """Overlap of the normalized odd cat with ``|1>``.

    ``method="projection"`` evaluates it as the photon-number-1 probability
    through the coherent engine instead of the closed form.
    """
    if alpha == 0:
        raise DegenerateState("odd cat undefined at alpha=0")
    if method == "formula":
        a2 = alpha * alpha
        return 4 * a2 * math.exp(-a2) / (2 * -math.expm1(-2 * a2))
    if method == "projection":
        return ca.project_fock(ca.make_cat(abs(alpha), "odd"), 0, 1).density_amplitude_norm2
    raise ValueError(f"unknown method {method!r}")


# Norms and overlaps of the closed form as sums  sum_k w_k exp(-r_k x)  in
# x = alpha^2, each divided by its leading power of x.  Small x would lose
# every digit to cancellation, so there the Taylor series is summed instead.
_SERIES_BELOW = 0.25
_SERIES_TERMS = 40
_N0 = ((6, 0), (-8, 1), (2, 4))
_N1 = ((2, 0), (-2, 1))
_NPR = ((4, 0), (-4, 1), (-4, 3), (2, 6), (2, 2))
_CROSS = ((2, 0.75), (-2, 2.75))
_N0_DAMPED = ((6, 0.5), (-8, 1.5), (2, 4.5))


def _exp_sum(terms, x: np.ndarray, order: int) -> np.ndarray:
    w, r = (np.array(v, dtype=float) for v in zip(*terms))
    exact = (w * np.exp(-np.multiply.outer(x, r))).sum(axis=-1) / np.where(x > 0, x, 1.0) ** order
    k = np.arange(order, order + _SERIES_TERMS)
    coeffs = (w * (-r[None, :]) ** k[:, None]).sum(axis=1) / np.array([math.factorial(int(j)) for j in k], float)
    series = np.polynomial.polynomial.polyval(x, coeffs)
    return np.where(x < _SERIES_BELOW, series, exact)


def closed_form_fidelity(alpha):
    """Fidelity of the exact p=0 output with the ideal two-branch target (vectorized)."""
    a = np.asarray(alpha, dtype=float)
    x = a * a
    n0, n1, npr = _exp_sum(_N0, x, 2), _exp_sum(_N1, x, 1), _exp_sum(_NPR, x, 2)
    overlap = _exp_sum(_CROSS, x, 1) + a * _exp_sum(_N0_DAMPED, x, 2)
    out = overlap ** 2 / ((x * n0 + n1) * npr)
    return float(out) if out.ndim == 0 else out


def numeric_fidelity(alpha: float, engine: str = "coherent", cutoff: int | None = None) -> float:
    """Same fidelity obtained by running the exact circuit on an engine."""
    target = pr.hybrid_target(alpha)
    circuit = pr.hybrid_circuit(alpha, 0.0, approximate_ancilla=False)
    if engine == "coherent":
        out = run_coherent(circuit).state
        as_labels = br.labels_from_coherent(out, 1, (0, 1))
        return abs(br.inner_product(target, as_labels)) ** 2 / (target.norm2() * out.norm2())
    if engine == "fock":
        cutoff = cutoff or auto_cutoff(circuit)
        out = run_fock(circuit, cutoff).state
        return fock.fidelity(br.to_fock(target, out.cutoffs), out)
    raise ValueError(f"unknown engine {engine!r}")


def fidelity_sweep(alphas: Iterable[float]) -> list[SweepRecord]:
    return [SweepRecord(float(a), closed_form_fidelity(a), None, {"method": "closed_form"}) for a in alphas]


def optimal_alpha(interval: tuple[float, float] = (0.05, 1.5), step: float = 1e-3,
                  xtol: float = 1e-6) -> tuple[float, float]:
    """Grid scan followed by golden-section refinement of the closed-form fidelity."""
    lo, hi = interval
    if not 0 < lo <= hi <= 2:
        raise ValueError(f"interval must lie in (0, 2], got {interval}")
    grid = np.arange(lo, hi + step / 2, step)
    grid = grid[grid <= hi + 1e-12]
    values = closed_form_fidelity(grid)
    i = int(np.argmax(np.atleast_1d(values)))
    if len(grid) < 3 or i in (0, len(grid) - 1):
        a = float(grid[i])
        return a, closed_form_fidelity(a)
    res = minimize_scalar(lambda a: -closed_form_fidelity(a), bracket=(grid[i - 1], grid[i], grid[i + 1]),
                          method="golden", options={"xtol": xtol / grid[i]})
    return float(res.x), -float(res.fun)


# -- trade-off --------------------------------------------------------------

class TradeoffModel:
    """Homodyne-window statistics of the generator at fixed ``alpha``.

    The target is the normalized p=0 output.  Densities keep the full
    Gaussian envelope so probabilities integrate to one over the domain.
    """

    def __init__(self, alpha: float, p_max: float = P_MAX, approximate_ancilla: bool = True,
                 rtol: float = 1e-10, engine: str = "coherent", cutoff: int | None = None):
        pr._check_alpha(alpha)
        self.alpha = float(alpha)
        self.p_max = float(p_max)
        self.approximate_ancilla = approximate_ancilla
        self.rtol = rtol
        self.engine = engine
        circuit = pr.hybrid_circuit(alpha, 0.0, approximate_ancilla=approximate_ancilla)
        target = pr.hybrid_generate(None, alpha, 0.0, approximate_ancilla).state.normalized()
        if engine == "coherent":
            self._pre = run_coherent(circuit, stop_before=-1).state
            self._target = target
            self.cutoff = None
        elif engine == "fock":
            self.cutoff = cutoff or auto_cutoff(circuit)
            self._pre = run_fock(circuit, self.cutoff, stop_before=-1).state
            self._target = br.to_fock(target, [self.cutoff] * 2)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        self.panels: dict[str, int] = {}

    def density(self, p) -> np.ndarray:
        mod = br if self.engine == "coherent" else fock
        return mod.homodyne_density(self._pre, 1, p)

    def overlap2(self, p) -> np.ndarray:
        mod = br if self.engine == "coherent" else fock
        return np.abs(mod.homodyne_overlap(self._target, self._pre, 1, p)) ** 2

    def conditional_fidelity(self, p) -> np.ndarray:
        return self.overlap2(p) / self.density(p)

    def _integral(self, f, v: float, key: str) -> float:
        val, panels = gauss_legendre(f, -v, v, rtol=self.rtol)
        self.panels[key] = panels
        return val

    @cached_property
    def total(self) -> float:
        return self._integral(self.density, self.p_max, "total")

    def probability(self, v_up: float) -> float:
        self._check_window(v_up)
        return self._integral(self.density, v_up, "density") / self.total

    def fidelity(self, v_up: float) -> float:
        self._check_window(v_up)
        num = self._integral(self.overlap2, v_up, "overlap")
        den = self._integral(self.density, v_up, "density")
        return num / den

    def fidelity_weighted(self, v_up: float) -> float:
        """Window fidelity as the density-weighted mean of the conditional fidelity."""
        self._check_window(v_up)
        num = self._integral(lambda p: self.density(p) * self.conditional_fidelity(p), v_up, "weighted")
        return num / self._integral(self.density, v_up, "density")

    def _check_window(self, v_up: float) -> None:
        if v_up > self.p_max:
            raise WindowExceedsDomain(f"v_up={v_up} exceeds the integration domain p_max={self.p_max}")
        if not v_up > 0:
            raise ValueError(f"v_up must be positive, got {v_up}")

    def record(self, v_up: float) -> SweepRecord:
        f, p = self.fidelity(v_up), self.probability(v_up)
        diag = {"alpha": self.alpha, "p_max": self.p_max, "approximate_ancilla": self.approximate_ancilla,
                "engine": self.engine, "cutoff": self.cutoff,
                "panels_density": self.panels.get("density"), "panels_overlap": self.panels.get("overlap"),
                "panels_total": self.panels.get("total"), "rtol": self.rtol}
        return SweepRecord(float(v_up), f, p, diag)

    def window_for_fidelity(self, target: float, lo: float = 1e-6, hi: float | None = None) -> float:
        return self._invert(lambda v: self.fidelity(v) - target, lo, hi)

    def window_for_probability(self, target: float, lo: float = 1e-6, hi: float | None = None) -> float:
        return self._invert(lambda v: self.probability(v) - target, lo, hi)

    def _invert(self, g, lo, hi) -> float:
        hi = self.p_max if hi is None else hi
        if g(lo) * g(hi) > 0:
            raise ConvergenceError("target is not bracketed on the requested window range")
        return float(bisect(g, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200))


def tradeoff(alpha: float, v_up: float, p_max: float = P_MAX, approximate_ancilla: bool = True,
             engine: str = "coherent") -> SweepRecord:
    return TradeoffModel(alpha, p_max, approximate_ancilla, engine=engine).record(v_up)


def tradeoff_sweep(alpha: float, v_values: Sequence[float], p_max: float = P_MAX,
                   approximate_ancilla: bool = True, engine: str = "coherent") -> list[SweepRecord]:
    model = TradeoffModel(alpha, p_max, approximate_ancilla, engine=engine)
    return [model.record(v) for v in v_values]


def operating_points(alpha: float, p_max: float = P_MAX, approximate_ancilla: bool = True,
                     fidelity_target: float = 0.99, probability_target: float = 0.10,
                     window: float = 0.5, engine: str = "coherent") -> dict[str, dict[str, float]]:
    """Windows at a target fidelity and at a target probability, plus one fixed width."""
    model = TradeoffModel(alpha, p_max, approximate_ancilla, engine=engine)
    v_f = model.window_for_fidelity(fidelity_target)
    v_p = model.window_for_probability(probability_target)
    return {
        "fidelity_target": {"v_up": v_f, "fidelity": model.fidelity(v_f), "probability": model.probability(v_f)},
        "probability_target": {"v_up": v_p, "fidelity": model.fidelity(v_p), "probability": model.probability(v_p)},
        "fixed_window": {"v_up": window, "fidelity": model.fidelity(window), "probability": model.probability(window)},
    }


# -- approximation validity -------------------------------------------------

def _split_cat(alpha: float) -> SuperposedState:
    """Normalized ``|a, a> - |-a, -a>``: an odd cat of amplitude ``sqrt2 a`` after the splitter."""
    return ca.SuperposedState.from_terms(2, [(1, [alpha, alpha]), (-1, [-alpha, -alpha])]).normalized()


def _approx_split_cat(alpha: float) -> BranchedState:
    return BranchedState((COHERENT, LABEL), {(0,): ca.make_cat(alpha, "odd").scaled(1 / math.sqrt(2)),
                                             (1,): ca.vacuum(1).scaled(1 / math.sqrt(2))})


def approximation_validity(alpha: float, engine: str = "coherent", cutoff: int | None = None) -> float:
    """Fidelity of the split odd cat with its single-photon approximation."""
    if alpha == 0:
        raise DegenerateState("odd cat undefined at alpha=0")
    exact = BranchedState.from_coherent(_split_cat(alpha))
    approx = _approx_split_cat(alpha)
    if engine == "coherent":
        labelled = br.labels_from_coherent(exact, 1, (0, 1))
        return abs(br.inner_product(approx, labelled)) ** 2 / (approx.norm2() * exact.norm2())
    if engine == "fock":
        cutoff = cutoff or fock.default_cutoff(abs(alpha))
        return fock.fidelity(br.to_fock(exact, cutoff), br.to_fock(approx, cutoff))
    raise ValueError(f"unknown engine {engine!r}")


NEGLECTED = ((1, 2), (2, 1), (0, 3))


def neglected_population(alpha: float, normalized: bool = True, cutoff: int = 8) -> float:
    """Weight of ``|1,2>, |2,1>, |0,3>`` in the split odd cat.

    ``normalized=False`` uses the bare ``|a,a> - |-a,-a>`` without the cat
    normalization.
    """
    state = ca.SuperposedState.from_terms(2, [(1, [alpha, alpha]), (-1, [-alpha, -alpha])])
    if normalized:
        state = state.normalized()
    amps = ca.to_fock(state, cutoff).amplitudes
    return float(sum(abs(amps[i]) ** 2 for i in NEGLECTED))


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# -- parity -----------------------------------------------------------------

def parity_spectrum(state: Union[SuperposedState, fock.FockState], frame_displacement: complex = 0.0,
                    cutoff: int | None = None) -> ParitySpectrum:
    """Even/odd photon-number weights after displacing by ``frame_displacement``."""
    if isinstance(state, fock.FockState):
        if state.mode_count != 1:
            raise NotSingleMode("parity spectrum needs a single-mode state")
        vec = fock.apply_displacement(state, 0, frame_displacement) if frame_displacement else state
    else:
        if state.mode_count != 1:
            raise NotSingleMode("parity spectrum needs a single-mode state")
        shifted = ca.displace(state, 0, frame_displacement)
        cutoff = cutoff or fock.default_cutoff(shifted.max_amplitude())
        vec = ca.to_fock(shifted, cutoff)
    w = np.abs(vec.amplitudes) ** 2
    w = w / w.sum()
    return ParitySpectrum(float(w[0::2].sum()), float(w[1::2].sum()), tuple(float(x) for x in w))
