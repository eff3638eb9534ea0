"""Truncated Fock-space engine.

States are dense complex tensors with one axis per mode.  The engine is used
as an independent oracle for the coherent-state algebra and as the backend for
Wigner functions and photon-number spectra.

Quadratures follow ``x = (a + a^dag)/sqrt(2)``, ``p = (a - a^dag)/(i sqrt(2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import CutoffTooSmall, InvalidMode, InvalidTransmittance, ModeMismatch, NotSingleMode

DEFAULT_GRID = (-6.0, 6.0, 201)


@dataclass(frozen=True, eq=False)
class FockState:
    """Pure state as a dense amplitude tensor of shape ``cutoffs``.

    ``truncation_error`` is ``1 - |truncated| / |exact|`` when the state was
    built from an analytic (coherent-state) description, else 0.
    """

    amplitudes: np.ndarray
    truncation_error: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim == 0:
            amps = amps.reshape(())
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(self.amplitudes.shape)

    @property
    def mode_count(self) -> int:
        return self.amplitudes.ndim

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "FockState":
        n2 = self.norm2()
        if n2 <= 0:
            return self
        return FockState(self.amplitudes / math.sqrt(n2), self.truncation_error)

    def __repr__(self):
        return f"FockState(cutoffs={self.cutoffs}, norm2={self.norm2():.6g})"


def _check_mode(state: FockState, mode: int) -> None:
    if not 0 <= mode < state.mode_count:
        raise InvalidMode(f"mode {mode} out of range for {state.mode_count}-mode state")


def default_cutoff(gamma_max: float) -> int:
    """Cutoff keeping coherent truncation error below ~1e-10 for |gamma| <= 1.5."""
    g = abs(gamma_max)
    return int(math.ceil(g * g + 6 * g + 10))


def basis(cutoffs: Sequence[int], index: Sequence[int]) -> FockState:
    amps = np.zeros(tuple(cutoffs), dtype=complex)
    amps[tuple(index)] = 1.0
    return FockState(amps)


def vacuum(cutoffs: Sequence[int]) -> FockState:
    return basis(cutoffs, [0] * len(cutoffs))


def coherent_coefficients(gamma, cutoff: int) -> np.ndarray:
    """``<n|gamma>`` for n < cutoff; broadcasts over ``gamma`` (last axis is n)."""
    gamma = np.asarray(gamma, dtype=complex)
    out = np.empty(gamma.shape + (cutoff,), dtype=complex)
    out[..., 0] = np.exp(-0.5 * np.abs(gamma) ** 2)
    for n in range(1, cutoff):
        out[..., n] = out[..., n - 1] * gamma / math.sqrt(n)
    return out


def coherent(gamma: complex, cutoff: int) -> FockState:
    return FockState(coherent_coefficients(gamma, cutoff))


def tensor(*states: FockState) -> FockState:
    amps = reduce(np.multiply.outer, [s.amplitudes for s in states])
    err = max(s.truncation_error for s in states)
    return FockState(amps, err)


def permute(state: FockState, order: Sequence[int]) -> FockState:
    return FockState(np.transpose(state.amplitudes, tuple(order)), state.truncation_error)


def inner_product(a: FockState, b: FockState) -> complex:
    if a.cutoffs != b.cutoffs:
        raise ModeMismatch(f"cutoffs differ: {a.cutoffs} vs {b.cutoffs}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: FockState, b: FockState) -> float:
    """|<a|b>|^2 / (|a|^2 |b|^2) for pure states with identical cutoffs."""
    ov = inner_product(a, b)
    den = a.norm2() * b.norm2()
    if den <= 0:
        return 0.0
    return float(min(abs(ov) ** 2 / den, 1.0))


def _apply_local(state: FockState, mode: int, matrix: np.ndarray) -> FockState:
    amps = np.tensordot(matrix, state.amplitudes, axes=([1], [mode]))
    return FockState(np.moveaxis(amps, 0, mode), state.truncation_error)


@lru_cache(maxsize=256)
def displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    """Upper-left ``cutoff`` block of ``exp(alpha a^dag - alpha* a)``.

    The exponential is taken on a space padded to twice the cutoff, so the
    returned block is not exactly unitary: its norm loss measures leakage out
    of the truncated space.
    """
    big = 2 * cutoff + 10
    a = np.diag(np.sqrt(np.arange(1, big)), 1).astype(complex)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    mat = expm(gen)[:cutoff, :cutoff]
    mat.setflags(write=False)
    return mat


def apply_displacement(state: FockState, mode: int, alpha: complex,
                       max_norm_loss: float | None = None) -> FockState:
    _check_mode(state, mode)
    cutoff = state.cutoffs[mode]
    if cutoff < 2:
        raise CutoffTooSmall("displacement needs a cutoff of at least 2")
    before = state.norm2()
    out = _apply_local(state, mode, displacement_matrix(complex(alpha), cutoff))
    if max_norm_loss is not None and before > 0:
        loss = 1.0 - out.norm2() / before
        if loss > max_norm_loss:
            raise CutoffTooSmall(f"displacement lost {loss:.3g} of the norm (cutoff {cutoff})")
    return out


@lru_cache(maxsize=64)
def beam_splitter_tensor(cutoff: int, transmittance: float) -> np.ndarray:
    """``U[m_i, m_j, n_i, n_j]`` for ``exp(theta (a^dag b - a b^dag))``, cos(theta) = sqrt(T).

    Built block by block in total photon number, so elements coupling
    different totals are structural zeros.
    """
    theta = math.acos(math.sqrt(transmittance))
    u = np.zeros((cutoff,) * 4, dtype=complex)
    for total in range(2 * cutoff - 1):
        ks = [k for k in range(cutoff) if 0 <= total - k < cutoff]
        dim = len(ks)
        gen = np.zeros((dim, dim))
        # a^dag b : |k, total-k> -> sqrt(k+1) sqrt(total-k) |k+1, total-k-1>
        for idx in range(dim - 1):
            k = ks[idx]
            amp = math.sqrt(k + 1) * math.sqrt(total - k)
            gen[idx + 1, idx] += theta * amp
            gen[idx, idx + 1] -= theta * amp
        block = expm(gen)
        for r, kr in enumerate(ks):
            for c, kc in enumerate(ks):
                u[kr, total - kr, kc, total - kc] = block[r, c]
    u.setflags(write=False)
    return u


def apply_beam_splitter(state: FockState, mode_i: int, mode_j: int, transmittance: float) -> FockState:
    """Two-mode beam splitter; ``mode_i`` is the ``a`` port, ``mode_j`` the ``b`` port.

    With this convention ``|1,0> -> sqrt(T)|1,0> - sqrt(1-T)|0,1>`` and coherent
    amplitudes map as ``(u, v) -> (sqrt(T) u + sqrt(R) v, -sqrt(R) u + sqrt(T) v)``.
    """
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    if mode_i == mode_j:
        raise ModeMismatch("beam splitter needs two distinct modes")
    if not 0.0 < transmittance < 1.0:
        raise InvalidTransmittance(f"T={transmittance} not in (0, 1)")
    n = state.cutoffs[mode_i]
    if state.cutoffs[mode_j] != n:
        raise ModeMismatch(f"beam splitter needs equal cutoffs, got {n} and {state.cutoffs[mode_j]}")
    u = beam_splitter_tensor(n, float(transmittance))
    amps = np.tensordot(u, state.amplitudes, axes=([2, 3], [mode_i, mode_j]))
    amps = np.moveaxis(amps, [0, 1], [mode_i, mode_j])
    return FockState(amps, state.truncation_error)


def hermite_functions(x, cutoff: int) -> np.ndarray:
    """Normalized Hermite functions ``psi_n(x)``, shape ``(cutoff,) + x.shape``.

    Uses the three-term recurrence on the normalized functions, which stays
    bounded by pi**-0.25 for any order.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((cutoff,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if cutoff > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(2, cutoff):
        out[n] = math.sqrt(2.0 / n) * x * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def homodyne_kernel(p, cutoff: int) -> np.ndarray:
    """Momentum-basis overlaps ``<p|n> = (-i)^n psi_n(p)``."""
    phases = (-1j) ** np.arange(cutoff)
    psi = hermite_functions(p, cutoff)
    return phases.reshape((cutoff,) + (1,) * (psi.ndim - 1)) * psi


def project_quadrature(state: FockState, mode: int, p: float) -> tuple[FockState, float]:
    """Contract ``mode`` with ``<p|``; returns the reduced state and its squared norm."""
    _check_mode(state, mode)
    kernel = homodyne_kernel(float(p), state.cutoffs[mode])
    amps = np.tensordot(state.amplitudes, kernel, axes=([mode], [0]))
    out = FockState(amps, state.truncation_error)
    return out, out.norm2()


def _projected(state: FockState, mode: int, p_values) -> np.ndarray:
    # axis 0 runs over outcomes
    _check_mode(state, mode)
    kernel = homodyne_kernel(np.atleast_1d(np.asarray(p_values, dtype=float)), state.cutoffs[mode])
    return np.moveaxis(np.tensordot(state.amplitudes, kernel, axes=([mode], [0])), -1, 0)


def homodyne_density(state: FockState, mode: int, p_values) -> np.ndarray:
    proj = _projected(state, mode, p_values)
    return np.sum(np.abs(proj.reshape(len(proj), -1)) ** 2, axis=1)


def homodyne_overlap(target: FockState, state: FockState, mode: int, p_values) -> np.ndarray:
    """``<target | (<p|_mode state)>`` for each outcome."""
    proj = _projected(state, mode, p_values)
    if proj.shape[1:] != target.amplitudes.shape:
        raise ModeMismatch("target must match the unmeasured modes")
    return proj.reshape(len(proj), -1) @ np.conj(target.amplitudes.ravel())


def project_number(state: FockState, mode: int, n: int) -> tuple[FockState, float]:
    _check_mode(state, mode)
    if not 0 <= n < state.cutoffs[mode]:
        raise CutoffTooSmall(f"cannot project mode {mode} onto |{n}> with cutoff {state.cutoffs[mode]}")
    amps = np.take(state.amplitudes, n, axis=mode)
    out = FockState(amps, state.truncation_error)
    return out, out.norm2()


def photon_distribution(state: FockState) -> np.ndarray:
    if state.mode_count != 1:
        raise NotSingleMode("photon distribution needs a single-mode state")
    return np.abs(state.amplitudes) ** 2


def position_wavefunction(state: FockState, x) -> np.ndarray:
    if state.mode_count != 1:
        raise NotSingleMode("position wavefunction needs a single-mode state")
    return np.tensordot(state.amplitudes, hermite_functions(x, state.cutoffs[0]), axes=(0, 0))


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # values[i, j] = W(x_i, p_j)

    def integral(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(self.values.sum() * dx * dp)

    def min(self) -> float:
        return float(self.values.min())

    def x_marginal(self) -> np.ndarray:
        dp = self.p_axis[1] - self.p_axis[0]
        return self.values.sum(axis=1) * dp


def wigner(state: FockState, x_axis=None, p_axis=None, normalize: bool = True) -> WignerGrid:
    """Wigner function by displaced parity.

    ``W(x, p) = <D(g) P D(g)^dag> / pi`` with ``g = (x + i p)/sqrt(2)``.  The
    displaced parity equals ``D(2g) P``, whose matrix elements between states
    inside the cutoff are evaluated exactly with the ladder recursion
    ``<m|D|n> = (sqrt(m) <m-1|D|n-1> - conj(d) <m|D|n-1>) / sqrt(n)``.
    """
    if state.mode_count != 1:
        raise NotSingleMode(f"Wigner function needs a single-mode state, got {state.mode_count} modes")
    lo, hi, npts = DEFAULT_GRID
    x_axis = np.linspace(lo, hi, npts) if x_axis is None else np.asarray(x_axis, dtype=float)
    p_axis = np.linspace(lo, hi, npts) if p_axis is None else np.asarray(p_axis, dtype=float)
    psi = state.normalized().amplitudes if normalize else state.amplitudes
    cutoff = psi.shape[0]

    xx, pp = np.meshgrid(x_axis, p_axis, indexing="ij")
    d = (2.0 * (xx + 1j * pp) / math.sqrt(2.0)).ravel()
    sqrt_m = np.sqrt(np.arange(cutoff))[:, None]

    col = coherent_coefficients(d, cutoff).T  # <m|D(d)|0>, shape (cutoff, G)
    acc = np.conj(psi) @ col * psi[0]
    for n in range(1, cutoff):
        shifted = np.zeros_like(col)
        shifted[1:] = sqrt_m[1:] * col[:-1]
        col = (shifted - np.conj(d)[None, :] * col) / math.sqrt(n)
        acc += (np.conj(psi) @ col) * ((-1) ** n * psi[n])
    values = (acc.real / np.pi).reshape(xx.shape)
    return WignerGrid(x_axis, p_axis, values)
