"""Exact algebra on finite superpositions of multimode coherent states.

A :class:`SuperposedState` is ``sum_k w_k |g_k1> |g_k2> ... |g_kM>``.  Every
linear-optical element used here (displacements, beam splitters) maps such a
sum to another one, and homodyne / photon-number projections only rescale the
weights, so the whole protocol stays closed-form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import fock
from .errors import CutoffTooSmall, DegenerateState, InvalidMode, InvalidTransmittance, ModeMismatch

MERGE_TOL = 1e-12
PRUNE_TOL = 1e-12
SQRT2 = math.sqrt(2.0)


class CoherentTerm(NamedTuple):
    weight: complex
    amplitudes: tuple[complex, ...]


@dataclass(frozen=True, eq=False)
class SuperposedState:
    """Weighted sum of coherent-state product terms over ``mode_count`` modes."""

    mode_count: int
    weights: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).reshape(-1)
        a = np.asarray(self.amplitudes, dtype=complex).reshape(len(w), self.mode_count)
        if not np.all(np.isfinite(w)):
            raise ValueError("term weights must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_terms(cls, mode_count: int, terms: Iterable[tuple[complex, Sequence[complex]]]) -> "SuperposedState":
        terms = list(terms)
        if any(len(t[1]) != mode_count for t in terms):
            raise ModeMismatch("every term needs one amplitude per mode")
        w = [t[0] for t in terms]
        a = [list(t[1]) for t in terms]
        return cls(mode_count, np.array(w, dtype=complex), np.array(a, dtype=complex).reshape(len(w), mode_count))

    @property
    def terms(self) -> list[CoherentTerm]:
        return [CoherentTerm(complex(w), tuple(complex(x) for x in a)) for w, a in zip(self.weights, self.amplitudes)]

    def __len__(self):
        return len(self.weights)

    def __add__(self, other: "SuperposedState") -> "SuperposedState":
        if other.mode_count != self.mode_count:
            raise ModeMismatch("cannot add states with different mode counts")
        return SuperposedState(self.mode_count, np.concatenate([self.weights, other.weights]),
                               np.concatenate([self.amplitudes, other.amplitudes]))

    def __sub__(self, other: "SuperposedState") -> "SuperposedState":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "SuperposedState":
        return SuperposedState(self.mode_count, self.weights * factor, self.amplitudes)

    def norm2(self) -> float:
        return squared_norm(self)

    def normalized(self) -> "SuperposedState":
        n2 = squared_norm(self)
        if n2 <= 0:
            raise DegenerateState("cannot normalize a zero-norm state")
        return self.scaled(1.0 / math.sqrt(n2))

    def max_amplitude(self) -> float:
        return float(np.abs(self.amplitudes).max()) if self.amplitudes.size else 0.0

    def __repr__(self):
        body = " + ".join(f"({complex(w):.4g})|{', '.join(f'{complex(x):.4g}' for x in a)}>"
                          for w, a in zip(self.weights, self.amplitudes))
        return f"SuperposedState[{self.mode_count}]({body or '0'})"


@dataclass(frozen=True, eq=False)
class ConditionalOutput:
    """Unnormalized post-measurement state and its squared norm (density)."""

    state: SuperposedState
    density_amplitude_norm2: float


def _check_mode(state: SuperposedState, mode: int) -> None:
    if not 0 <= mode < state.mode_count:
        raise InvalidMode(f"mode {mode} out of range for {state.mode_count}-mode state")


# -- constructors -----------------------------------------------------------

def vacuum(mode_count: int = 1) -> SuperposedState:
    return SuperposedState(mode_count, np.ones(1), np.zeros((1, mode_count)))


def coherent(amplitudes: complex | Sequence[complex], weight: complex = 1.0) -> SuperposedState:
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
    return SuperposedState(len(amps), np.array([weight]), amps.reshape(1, -1))


def cat_normalization(alpha: float, parity: str) -> float:
    sign = _parity_sign(parity)
    return math.sqrt(2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2)))


def _parity_sign(parity: str) -> int:
    if parity in ("even", "+", 1, "plus"):
        return 1
    if parity in ("odd", "-", -1, "minus"):
        return -1
    raise ValueError(f"unknown parity {parity!r}")


def make_cat(alpha: float, parity: str = "odd", mode_count: int = 1, mode: int = 0,
             normalized: bool = True) -> SuperposedState:
    """``(|alpha> +/- |-alpha>) / N`` on ``mode``, vacuum elsewhere.

    With ``normalized=False`` the bare sum ``|alpha> +/- |-alpha>`` is returned,
    which is the form used when an odd cat stands in for a single photon.
    """
    if not 0 <= mode < mode_count:
        raise InvalidMode(f"mode {mode} out of range for {mode_count}-mode state")
    sign = _parity_sign(parity)
    norm = cat_normalization(alpha, parity)
    if norm < 1e-300:
        raise DegenerateState(f"odd cat undefined at alpha={alpha}")
    amps = np.zeros((2, mode_count), dtype=complex)
    amps[0, mode] = alpha
    amps[1, mode] = -alpha
    w = np.array([1.0, sign], dtype=complex)
    if normalized:
        w = w / norm
    return canonicalize(SuperposedState(mode_count, w, amps), prune_tol=0.0)


def tensor(*states: SuperposedState) -> SuperposedState:
    """Tensor product; term count is the product of the factors' term counts."""
    out = states[0]
    for s in states[1:]:
        k1, k2 = len(out), len(s)
        w = np.outer(out.weights, s.weights).reshape(-1)
        a = np.concatenate([np.repeat(out.amplitudes, k2, axis=0), np.tile(s.amplitudes, (k1, 1))], axis=1)
        out = SuperposedState(out.mode_count + s.mode_count, w, a)
    return out


def permute(state: SuperposedState, order: Sequence[int]) -> SuperposedState:
    """Reorder modes so that new mode ``i`` is old mode ``order[i]``."""
    return SuperposedState(state.mode_count, state.weights, state.amplitudes[:, list(order)])


# -- linear optics ----------------------------------------------------------

def displace(state: SuperposedState, mode: int, alpha: complex) -> SuperposedState:
    """``D(alpha)`` on ``mode``, including the exact phase ``exp((alpha g* - alpha* g)/2)``."""
    _check_mode(state, mode)
    g = state.amplitudes[:, mode]
    phase = np.exp(0.5 * (alpha * np.conj(g) - np.conj(alpha) * g))
    amps = state.amplitudes.copy()
    amps[:, mode] = g + alpha
    return SuperposedState(state.mode_count, state.weights * phase, amps)


def beam_split(state: SuperposedState, mode_i: int, mode_j: int, transmittance: float = 0.5) -> SuperposedState:
    """Beam splitter with ``(u, v) -> (sqrt(T) u + sqrt(R) v, -sqrt(R) u + sqrt(T) v)``.

    ``u`` is the amplitude on ``mode_i`` and ``v`` on ``mode_j``.  At T = 1/2
    this is ``((u + v)/sqrt2, (v - u)/sqrt2)``; an input on the ``v`` port with
    vacuum on ``u`` therefore exits with equal-sign halves on both modes.
    """
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    if mode_i == mode_j:
        raise InvalidMode("beam splitter needs two distinct modes")
    if not 0.0 < transmittance < 1.0:
        raise InvalidTransmittance(f"T={transmittance} not in (0, 1)")
    t = math.sqrt(transmittance)
    r = math.sqrt(1.0 - transmittance)
    u = state.amplitudes[:, mode_i]
    v = state.amplitudes[:, mode_j]
    amps = state.amplitudes.copy()
    amps[:, mode_i] = t * u + r * v
    amps[:, mode_j] = -r * u + t * v
    return SuperposedState(state.mode_count, state.weights, amps)


# -- overlaps ---------------------------------------------------------------

def gram(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``G[j, k] = prod_m <left_jm | right_km>`` for amplitude arrays (K1, M), (K2, M)."""
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    expo = (-0.5 * (np.abs(left) ** 2).sum(axis=1)[:, None]
            - 0.5 * (np.abs(right) ** 2).sum(axis=1)[None, :]
            + np.conj(left) @ right.T)
    return np.exp(expo)


def inner_product(a: SuperposedState, b: SuperposedState) -> complex:
    if a.mode_count != b.mode_count:
        raise ModeMismatch(f"mode counts differ: {a.mode_count} vs {b.mode_count}")
    if len(a) == 0 or len(b) == 0:
        return 0j
    return complex(np.conj(a.weights) @ gram(a.amplitudes, b.amplitudes) @ b.weights)


def squared_norm(state: SuperposedState) -> float:
    val = inner_product(state, state).real
    if val < -1e-12 * max(1.0, float(np.sum(np.abs(state.weights)) ** 2)):
        raise ArithmeticError(f"Gram matrix produced a negative squared norm {val}")
    return max(val, 0.0)


def fidelity(a: SuperposedState, b: SuperposedState) -> float:
    """Phase-insensitive ``|<a|b>|^2 / (|a|^2 |b|^2)``."""
    den = squared_norm(a) * squared_norm(b)
    if den <= 0:
        return 0.0
    return float(min(abs(inner_product(a, b)) ** 2 / den, 1.0))


# -- measurements -----------------------------------------------------------

def quadrature_overlap(p, gamma) -> np.ndarray:
    """``<p|gamma>`` including the ``pi**-0.25 exp(-p^2/2)`` envelope; broadcasts."""
    p = np.asarray(p, dtype=float)
    gamma = np.asarray(gamma, dtype=complex)
    re, im = gamma.real, gamma.imag
    return np.pi ** -0.25 * np.exp(-0.5 * (p - SQRT2 * im) ** 2 - 1j * SQRT2 * p * re + 1j * re * im)


def _drop_mode(state: SuperposedState, mode: int, factors: np.ndarray) -> SuperposedState:
    amps = np.delete(state.amplitudes, mode, axis=1)
    out = SuperposedState(state.mode_count - 1, state.weights * factors, amps)
    return canonicalize(out, prune_tol=0.0)


def homodyne_project(state: SuperposedState, mode: int, p: float) -> ConditionalOutput:
    """Project ``mode`` onto the momentum eigenstate ``<p|``."""
    _check_mode(state, mode)
    out = _drop_mode(state, mode, quadrature_overlap(p, state.amplitudes[:, mode]))
    return ConditionalOutput(out, squared_norm(out))


def project_fock(state: SuperposedState, mode: int, n: int) -> ConditionalOutput:
    """Project ``mode`` onto ``<n|``: each term picks up ``exp(-|g|^2/2) g^n / sqrt(n!)``."""
    _check_mode(state, mode)
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    g = state.amplitudes[:, mode]
    factors = np.exp(-0.5 * np.abs(g) ** 2) * g ** n / math.sqrt(math.factorial(n))
    out = _drop_mode(state, mode, factors)
    return ConditionalOutput(out, squared_norm(out))


def homodyne_density(state: SuperposedState, mode: int, p_values) -> np.ndarray:
    """Vectorized ``|| <p|_mode state ||^2`` over an array of outcomes."""
    _check_mode(state, mode)
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    rest = np.delete(state.amplitudes, mode, axis=1)
    g = gram(rest, rest)
    wk = state.weights[None, :] * quadrature_overlap(p_values[:, None], state.amplitudes[None, :, mode])
    return np.einsum("pj,jk,pk->p", np.conj(wk), g, wk).real


def homodyne_overlap(target: SuperposedState, state: SuperposedState, mode: int, p_values) -> np.ndarray:
    """Vectorized ``<target| (<p|_mode state)>`` over an array of outcomes."""
    _check_mode(state, mode)
    if target.mode_count != state.mode_count - 1:
        raise ModeMismatch("target must live on the unmeasured modes")
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    rest = np.delete(state.amplitudes, mode, axis=1)
    g = gram(target.amplitudes, rest)
    wk = state.weights[None, :] * quadrature_overlap(p_values[:, None], state.amplitudes[None, :, mode])
    return (np.conj(target.weights) @ g) @ wk.T


# -- bookkeeping ------------------------------------------------------------

def canonicalize(state: SuperposedState, merge_tol: float = MERGE_TOL,
                 prune_tol: float = PRUNE_TOL) -> SuperposedState:
    """Merge terms with (componentwise) equal amplitudes and drop tiny weights.

    Merged terms keep the position of their first occurrence, so the result is
    deterministic.
    """
    amps = state.amplitudes
    weights: list[complex] = []
    kept: list[np.ndarray] = []
    for w, a in zip(state.weights, amps):
        for idx, b in enumerate(kept):
            if np.all(np.abs(a - b) <= merge_tol):
                weights[idx] += w
                break
        else:
            kept.append(a)
            weights.append(complex(w))
    keep = [i for i, w in enumerate(weights) if abs(w) > prune_tol]
    w = np.array([weights[i] for i in keep], dtype=complex)
    a = np.array([kept[i] for i in keep], dtype=complex).reshape(len(keep), state.mode_count)
    return SuperposedState(state.mode_count, w, a)


def termwise_equal(a: SuperposedState, b: SuperposedState, atol: float = 1e-12,
                   up_to_scale: bool = True) -> bool:
    """True if ``a`` and ``b`` have the same coherent amplitudes with proportional weights.

    Weights are compared after dividing by the largest weight of each state
    (when ``up_to_scale``), so an overall complex factor is ignored.
    """
    if a.mode_count != b.mode_count:
        return False
    ca = canonicalize(a, prune_tol=0.0)
    cb = canonicalize(b, prune_tol=0.0)
    if len(ca) != len(cb):
        return False
    if len(ca) == 0:
        return True
    wa, wb = ca.weights, cb.weights
    if up_to_scale:
        ia = int(np.argmax(np.abs(wa)))
        match = [_find(cb.amplitudes, ca.amplitudes[ia], atol)]
        if match[0] is None:
            return False
        wa = wa / wa[ia]
        wb = wb / wb[match[0]]
    used = set()
    for w, amp in zip(wa, ca.amplitudes):
        j = _find(cb.amplitudes, amp, atol, exclude=used)
        if j is None or abs(w - wb[j]) > atol * max(1.0, abs(w)):
            return False
        used.add(j)
    return True


def _find(amps: np.ndarray, target: np.ndarray, atol: float, exclude=()) -> int | None:
    for j, a in enumerate(amps):
        if j not in exclude and np.all(np.abs(a - target) <= atol):
            return j
    return None


def to_fock(state: SuperposedState, cutoffs: int | Sequence[int],
            max_truncation: float | None = None) -> fock.FockState:
    """Dense Fock tensor of the state, with ``truncation_error`` filled in."""
    if isinstance(cutoffs, (int, np.integer)):
        cutoffs = [int(cutoffs)] * state.mode_count
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) != state.mode_count:
        raise ModeMismatch(f"need {state.mode_count} cutoffs, got {len(cutoffs)}")
    amps = np.zeros(tuple(cutoffs), dtype=complex)
    for w, row in zip(state.weights, state.amplitudes):
        factors = [fock.coherent_coefficients(g, c) for g, c in zip(row, cutoffs)]
        term = factors[0] if factors else np.ones(())
        for f in factors[1:]:
            term = np.multiply.outer(term, f)
        amps += w * term
    exact = squared_norm(state)
    trunc = float(np.vdot(amps, amps).real)
    err = 0.0 if exact <= 0 else max(0.0, 1.0 - math.sqrt(trunc / exact))
    if max_truncation is not None and err > max_truncation:
        raise CutoffTooSmall(f"truncation error {err:.3g} exceeds {max_truncation:.3g} at cutoffs {cutoffs}")
    return fock.FockState(amps, err)
