"""States mixing coherent-superposition modes with photon-number label modes.

Some protocol steps hold a mode in a definite small photon number (the
ancilla of an approximated single photon, a path-entangled photon).  Those
modes are carried as discrete labels: the state is a map from a label tuple to
a :class:`SuperposedState` over the remaining (coherent) modes.  Linear optics
on label modes uses exact Fock matrix elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import coherent as ca
from . import fock
from .coherent import SuperposedState
from .errors import InvalidMode, InvalidTransmittance, ModeMismatch, UnsupportedOperation

COHERENT = "c"
LABEL = "n"


@dataclass(frozen=True, eq=False)
class BranchedState:
    """``sum_labels |coherent part(label)> |label>``.

    ``kinds[i]`` is ``"c"`` for a coherent mode or ``"n"`` for a label mode.
    Label tuples list photon numbers of the label modes in mode order.
    """

    kinds: tuple[str, ...]
    branches: Mapping[tuple[int, ...], SuperposedState] = field(default_factory=dict)

    def __post_init__(self):
        kinds = tuple(self.kinds)
        ncoh = kinds.count(COHERENT)
        nlab = kinds.count(LABEL)
        if ncoh + nlab != len(kinds):
            raise ValueError(f"bad mode kinds {kinds}")
        branches = {}
        for lab, st in self.branches.items():
            lab = tuple(int(x) for x in lab)
            if len(lab) != nlab or st.mode_count != ncoh:
                raise ModeMismatch("branch shape does not match mode kinds")
            branches[lab] = st
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "branches", dict(sorted(branches.items())))

    @classmethod
    def from_coherent(cls, state: SuperposedState) -> "BranchedState":
        return cls((COHERENT,) * state.mode_count, {(): state})

    @classmethod
    def fock_label(cls, n: int) -> "BranchedState":
        return cls((LABEL,), {(n,): ca.SuperposedState(0, [1.0], np.zeros((1, 0)))})

    @property
    def mode_count(self) -> int:
        return len(self.kinds)

    def coherent_index(self, mode: int) -> int:
        self._check(mode, COHERENT)
        return self.kinds[:mode].count(COHERENT)

    def label_index(self, mode: int) -> int:
        self._check(mode, LABEL)
        return self.kinds[:mode].count(LABEL)

    def _check(self, mode: int, kind: str | None = None) -> None:
        if not 0 <= mode < self.mode_count:
            raise InvalidMode(f"mode {mode} out of range for {self.mode_count}-mode state")
        if kind is not None and self.kinds[mode] != kind:
            raise UnsupportedOperation(f"mode {mode} is a {'label' if kind == COHERENT else 'coherent'} mode")

    def map(self, fn) -> "BranchedState":
        return BranchedState(self.kinds, {k: fn(v) for k, v in self.branches.items()})

    def scaled(self, factor: complex) -> "BranchedState":
        return self.map(lambda s: s.scaled(factor))

    def norm2(self) -> float:
        return sum(ca.squared_norm(s) for s in self.branches.values())

    def normalized(self) -> "BranchedState":
        n2 = self.norm2()
        return self.scaled(1.0 / math.sqrt(n2)) if n2 > 0 else self

    def max_amplitude(self) -> float:
        return max((s.max_amplitude() for s in self.branches.values()), default=0.0)

    def max_label(self) -> int:
        return max((max(k) for k in self.branches if k), default=0)

    def __repr__(self):
        parts = ", ".join(f"{k}: {v!r}" for k, v in self.branches.items())
        return f"BranchedState(kinds={''.join(self.kinds)}, {{{parts}}})"


def _merge(into: dict, label, state: SuperposedState) -> None:
    if label in into:
        into[label] = into[label] + state
    else:
        into[label] = state


def tensor(*states: BranchedState) -> BranchedState:
    out = states[0]
    for s in states[1:]:
        kinds = out.kinds + s.kinds
        branches = {}
        for la, sa in out.branches.items():
            for lb, sb in s.branches.items():
                branches[la + lb] = ca.tensor(sa, sb)
        out = BranchedState(kinds, branches)
    return out


def permute(state: BranchedState, order: Sequence[int]) -> BranchedState:
    """New mode ``i`` is old mode ``order[i]``."""
    order = list(order)
    kinds = tuple(state.kinds[o] for o in order)
    coh_old = [o for o in order if state.kinds[o] == COHERENT]
    lab_old = [o for o in order if state.kinds[o] == LABEL]
    coh_perm = [state.kinds[:o].count(COHERENT) for o in coh_old]
    lab_perm = [state.kinds[:o].count(LABEL) for o in lab_old]
    branches = {tuple(lab[i] for i in lab_perm): ca.permute(s, coh_perm) for lab, s in state.branches.items()}
    return BranchedState(kinds, branches)


def inner_product(a: BranchedState, b: BranchedState) -> complex:
    if a.kinds != b.kinds:
        raise ModeMismatch(f"mode kinds differ: {a.kinds} vs {b.kinds}")
    return sum((ca.inner_product(s, b.branches[k]) for k, s in a.branches.items() if k in b.branches), 0j)


def fidelity(a: BranchedState, b: BranchedState) -> float:
    den = a.norm2() * b.norm2()
    if den <= 0:
        return 0.0
    return float(min(abs(inner_product(a, b)) ** 2 / den, 1.0))


def displace(state: BranchedState, mode: int, alpha: complex) -> BranchedState:
    idx = state.coherent_index(mode)
    return state.map(lambda s: ca.displace(s, idx, alpha))


def beam_split(state: BranchedState, mode_i: int, mode_j: int, transmittance: float = 0.5) -> BranchedState:
    state._check(mode_i)
    state._check(mode_j)
    ki, kj = state.kinds[mode_i], state.kinds[mode_j]
    if ki == COHERENT and kj == COHERENT:
        i, j = state.coherent_index(mode_i), state.coherent_index(mode_j)
        return state.map(lambda s: ca.beam_split(s, i, j, transmittance))
    if ki == LABEL and kj == LABEL:
        return _label_beam_split(state, mode_i, mode_j, transmittance)
    raise UnsupportedOperation("beam splitter between a coherent mode and a photon-number label "
                               "needs the Fock engine")


def _label_beam_split(state, mode_i, mode_j, transmittance):
    if not 0.0 < transmittance < 1.0:
        raise InvalidTransmittance(f"T={transmittance} not in (0, 1)")
    li, lj = state.label_index(mode_i), state.label_index(mode_j)
    cutoff = 2 * state.max_label() + 1
    u = fock.beam_splitter_tensor(cutoff, float(transmittance))
    out: dict = {}
    for lab, s in state.branches.items():
        ni, nj = lab[li], lab[lj]
        total = ni + nj
        for mi in range(total + 1):
            amp = u[mi, total - mi, ni, nj]
            if amp == 0:
                continue
            new = list(lab)
            new[li], new[lj] = mi, total - mi
            _merge(out, tuple(new), s.scaled(amp))
    return BranchedState(state.kinds, {k: ca.canonicalize(v, prune_tol=0.0) for k, v in out.items()})


def _remove_kind(kinds, mode):
    return kinds[:mode] + kinds[mode + 1:]


def homodyne_project(state: BranchedState, mode: int, p: float) -> tuple[BranchedState, float]:
    """Project ``mode`` onto ``<p|``; returns the reduced state and its squared norm."""
    state._check(mode)
    kinds = _remove_kind(state.kinds, mode)
    if state.kinds[mode] == COHERENT:
        idx = state.coherent_index(mode)
        out = BranchedState(kinds, {k: ca.homodyne_project(s, idx, p).state for k, s in state.branches.items()})
    else:
        li = state.label_index(mode)
        kernel = fock.homodyne_kernel(float(p), state.max_label() + 1)
        branches: dict = {}
        for lab, s in state.branches.items():
            _merge(branches, lab[:li] + lab[li + 1:], s.scaled(kernel[lab[li]]))
        out = BranchedState(kinds, {k: ca.canonicalize(v, prune_tol=0.0) for k, v in branches.items()})
    return out, out.norm2()


def project_fock(state: BranchedState, mode: int, n: int) -> tuple[BranchedState, float]:
    state._check(mode)
    kinds = _remove_kind(state.kinds, mode)
    if state.kinds[mode] == COHERENT:
        idx = state.coherent_index(mode)
        out = BranchedState(kinds, {k: ca.project_fock(s, idx, n).state for k, s in state.branches.items()})
    else:
        li = state.label_index(mode)
        out = BranchedState(kinds, {lab[:li] + lab[li + 1:]: s for lab, s in state.branches.items() if lab[li] == n})
    return out, out.norm2()


def homodyne_density(state: BranchedState, mode: int, p_values) -> np.ndarray:
    idx = state.coherent_index(mode)
    return sum(ca.homodyne_density(s, idx, p_values) for s in state.branches.values())


def homodyne_overlap(target: BranchedState, state: BranchedState, mode: int, p_values) -> np.ndarray:
    """``<target | (<p|_mode state)>`` over an array of outcomes (label modes matched)."""
    idx = state.coherent_index(mode)
    li_kinds = _remove_kind(state.kinds, mode)
    if target.kinds != li_kinds:
        raise ModeMismatch("target must match the unmeasured modes")
    p_values = np.atleast_1d(np.asarray(p_values, dtype=float))
    total = np.zeros(len(p_values), dtype=complex)
    for lab, s in state.branches.items():
        if lab in target.branches:
            total += ca.homodyne_overlap(target.branches[lab], s, idx, p_values)
    return total


def labels_from_coherent(state: BranchedState, mode: int, n_values: Sequence[int]) -> BranchedState:
    """Re-express a coherent mode in photon-number labels, keeping only ``n_values``.

    Exact for overlaps against any state whose labels on that mode lie in
    ``n_values``; the squared norm is truncated accordingly.
    """
    idx = state.coherent_index(mode)
    kinds = state.kinds[:mode] + (LABEL,) + state.kinds[mode + 1:]
    li = kinds[:mode].count(LABEL)
    branches: dict = {}
    for lab, s in state.branches.items():
        for n in n_values:
            proj = ca.project_fock(s, idx, n).state
            branches[lab[:li] + (n,) + lab[li:]] = proj
    return BranchedState(kinds, branches)


def to_fock(state: BranchedState, cutoffs: int | Sequence[int]) -> fock.FockState:
    """Dense Fock tensor; label modes become one-hot axes."""
    if isinstance(cutoffs, (int, np.integer)):
        cutoffs = [int(cutoffs)] * state.mode_count
    cutoffs = list(cutoffs)
    coh_modes = [m for m, k in enumerate(state.kinds) if k == COHERENT]
    lab_modes = [m for m, k in enumerate(state.kinds) if k == LABEL]
    amps = np.zeros(tuple(cutoffs), dtype=complex)
    err = 0.0
    for lab, s in state.branches.items():
        part = ca.to_fock(s, [cutoffs[m] for m in coh_modes])
        err = max(err, part.truncation_error)
        index = [slice(None)] * state.mode_count
        for m, n in zip(lab_modes, lab):
            if n >= cutoffs[m]:
                raise ModeMismatch(f"label {n} does not fit cutoff {cutoffs[m]} on mode {m}")
            index[m] = n
        amps[tuple(index)] += part.amplitudes
    return fock.FockState(amps, err)
