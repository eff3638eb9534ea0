"""Linear-optical generators of hybrid GKP / photon-number entanglement.

Mode numbering is 0-based: the logical output is mode 0, the homodyne mode
is 1 and the photon-number ancilla is 2 (3 for the qutrit path photon).

Port roles are fixed here.  ``BeamSplit((u, v))`` sends a coherent pair to
``(sqrt(T) u + sqrt(R) v, -sqrt(R) u + sqrt(T) v)``, so the splitter that
divides the ancilla cat takes the vacuum on ``u`` and the cat on ``v``, which
yields ``|g>|0> -> |g/sqrt2>|g/sqrt2>``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from . import branched as br
from . import coherent as ca
from . import fock
from .branched import COHERENT, LABEL, BranchedState
from .circuit import (BeamSplit, Cat, Circuit, Displace, FockProject, Homodyne, PathPhoton, StateInput,
                      Vacuum, run_coherent, run_fock)
from .coherent import SuperposedState
from .errors import DegenerateState, ZeroDensity

ZERO_DENSITY = 1e-14
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class HybridOutput:
    """Post-selected output: logical mode entangled with a photon-number mode.

    ``branches[n]`` is the unnormalized logical-mode state paired with ``|n>``
    on the ancilla.  ``density`` is the squared norm of ``state``.
    """

    state: Union[BranchedState, fock.FockState]
    branches: Mapping[int, Union[SuperposedState, fock.FockState]]
    density: float
    circuit: Circuit

    def normalized_branches(self) -> dict:
        return {n: b.normalized() for n, b in self.branches.items() if b.norm2() > 0}

    def reassembled(self) -> BranchedState:
        """Sum of ``branches[n] (x) |n>`` as a (coherent, label) state."""
        return BranchedState((COHERENT, LABEL), {(n,): s for n, s in self.branches.items()})


def _check_alpha(alpha: float, name: str = "alpha") -> None:
    if not alpha > 0:
        raise DegenerateState(f"{name} must be positive, got {alpha}")


def _check_density(density: float, where: str) -> None:
    if density < ZERO_DENSITY:
        raise ZeroDensity(f"{where}: post-selected density {density:.3g} is below {ZERO_DENSITY:g}")


# -- reference states -------------------------------------------------------

def _single(terms) -> SuperposedState:
    return ca.SuperposedState.from_terms(1, [(w, [a]) for w, a in terms])


def logical_zero(beta: float) -> SuperposedState:
    """``|3b> - 2|b> + |-b>`` (unnormalized)."""
    return _single([(1, 3 * beta), (-2, beta), (1, -beta)])


def logical_one(beta: float) -> SuperposedState:
    """``|2b> - |0>`` (unnormalized)."""
    return _single([(1, 2 * beta), (-1, 0.0)])


def hybrid_target(alpha: float) -> BranchedState:
    """Ideal p=0 output ``|0~_L>|0> + |1~_L>|1>`` at ``beta = alpha/sqrt2``."""
    beta = alpha / SQRT2
    return BranchedState((COHERENT, LABEL), {(0,): logical_zero(beta), (1,): logical_one(beta)})


def exact_target(alpha: float) -> SuperposedState:
    """Two-mode p=0 output without the single-photon approximation."""
    b = alpha / SQRT2
    return ca.SuperposedState.from_terms(2, [(1, [3 * b, alpha]), (-1, [b, alpha]),
                                             (-1, [b, -alpha]), (1, [-b, -alpha])])


def conditional_target(alpha: float, p: float) -> BranchedState:
    """Analytic output at homodyne outcome ``p`` (approximate ancilla), up to scale.

    The middle coefficient of the zero branch is ``-2 cos(2 alpha p)`` and the
    one branch carries the relative phase ``exp(2i alpha p)``.
    """
    b = alpha / SQRT2
    zero = _single([(1, 3 * b), (-2 * math.cos(2 * alpha * p), b), (1, -b)])
    one = _single([(np.exp(1j * alpha * p), 2 * b), (-np.exp(-1j * alpha * p), 0.0)])
    return BranchedState((COHERENT, LABEL), {(0,): zero, (1,): one})


def bred_zero(alpha: float) -> SuperposedState:
    """Six-term logical zero after one breeding round."""
    h, s = alpha / 2, alpha / SQRT2
    return _single([(1, 3 * h + s), (-1, 3 * h - s), (-2, h + s), (2, h - s), (1, -h + s), (-1, -h - s)])


def bred_one(alpha: float) -> SuperposedState:
    return logical_zero(alpha / 2)


def qutrit_one(alpha: float) -> SuperposedState:
    s = alpha / SQRT2
    return _single([(1, alpha + s), (-1, alpha - s), (-1, s), (1, -s)])


def qutrit_two(alpha: float) -> SuperposedState:
    return _single([(1, alpha), (-1, 0.0)])


# -- qubit generator --------------------------------------------------------

def hybrid_circuit(alpha: float, p: float = 0.0, input1: SuperposedState | None = None,
                   approximate_ancilla: bool = True, displacement: float | None = None) -> Circuit:
    """Three-mode generator circuit.

    ``displacement`` on the logical mode defaults to ``alpha`` for the default
    odd-cat input and to zero for a supplied (bred) input.
    """
    _check_alpha(alpha)
    if displacement is None:
        displacement = alpha if input1 is None else 0.0
    first = Cat(0, alpha) if input1 is None else StateInput((0,), input1)
    if approximate_ancilla:
        inputs = [first, PathPhoton((1, 2), photon_cat=alpha)]
        elements = []
    else:
        inputs = [first, Cat(1, SQRT2 * alpha), Vacuum(2)]
        elements = [BeamSplit((2, 1))]
    if displacement:
        elements.append(Displace(0, displacement))
    elements += [BeamSplit((0, 1)), Homodyne(1, p)]
    return Circuit(3, inputs, elements)


def _branches(state: BranchedState, ancilla: int, n_values) -> dict[int, SuperposedState]:
    if state.kinds[ancilla] == LABEL:
        li = state.label_index(ancilla)
        out = {}
        for lab, s in state.branches.items():
            out[lab[li]] = s
        return {n: out.get(n, ca.SuperposedState(1, [], np.zeros((0, 1)))) for n in n_values}
    return {n: next(iter(br.project_fock(state, ancilla, n)[0].branches.values())) for n in n_values}


def hybrid_generate(input1: SuperposedState | None = None, alpha: float = 0.455, p: float = 0.0,
                    approximate_ancilla: bool = True, displacement: float | None = None) -> HybridOutput:
    """Run the qubit generator and post-select homodyne outcome ``p``.

    With ``approximate_ancilla`` the split ancilla cat is replaced by
    ``(|a> - |-a>)|0> + |0>|1>`` and the ancilla is an exact photon-number
    label (branches ``{0, 1}``).  Otherwise the ancilla stays a coherent mode
    and branches ``{0, 1, 2}`` are its Fock projections.
    """
    circuit = hybrid_circuit(alpha, p, input1, approximate_ancilla, displacement)
    res = run_coherent(circuit)
    _check_density(res.density, "hybrid_generate")
    n_values = (0, 1) if approximate_ancilla else (0, 1, 2)
    return HybridOutput(res.state, _branches(res.state, 1, n_values), res.density, circuit)


def bred_input(j: int, alpha: float) -> SuperposedState:
    """Normalized level-``j`` logical zero: ``j - 1`` breeding rounds on ``|0~_L>``."""
    _check_alpha(alpha)
    if j < 1:
        raise ValueError("breeding depth starts at 1")
    if j == 1:
        return logical_zero(alpha / SQRT2).normalized()
    out = bred_generate(j, alpha, 0.0)
    return ca.canonicalize(out.branches[0]).normalized()


def bred_generate(j: int, alpha: float, p: float = 0.0) -> HybridOutput:
    """Level-``j`` hybrid output; at p=0 its branches are the level-``j`` logical pair.

    Level 1 is the plain generator.  Level ``j > 1`` feeds ``bred_input(j - 1)``
    without the logical-mode displacement.  Depths above 2 are an
    extrapolation of the recursion and emit a warning.
    """
    _check_alpha(alpha)
    if j < 1:
        raise ValueError("breeding depth starts at 1")
    if j > 2:
        warnings.warn(f"breeding depth j={j} extrapolates the recursion beyond j=2", stacklevel=2)
    if j == 1:
        return hybrid_generate(None, alpha, p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prev = bred_input(j - 1, alpha)
    return hybrid_generate(prev, alpha, p, displacement=0.0)


# -- qutrit -----------------------------------------------------------------

def qutrit_circuit(alpha: float, p: float = 0.0, true_photon: bool = False) -> Circuit:
    """Four-mode qutrit circuit: logical 0, photon 1, path photon on (2, 3)."""
    _check_alpha(alpha)
    path = PathPhoton((2, 3)) if true_photon else PathPhoton((2, 3), photon_cat=alpha)
    inputs = [StateInput((0, 1), hybrid_target(alpha)), path]
    elements = [BeamSplit((0, 2)), Homodyne(2, p), BeamSplit((3, 1)), FockProject(1, 0)]
    return Circuit(4, inputs, elements)


def qutrit_generate(alpha: float, p: float = 0.0, true_photon: bool = False,
                    cutoff: int | None = None) -> HybridOutput:
    """Hybrid qutrit: branches over the remaining photon mode, ``n in {0, 1, 2}``.

    The default keeps the path photon as the small cat ``|a> - |-a>`` so the
    run stays in the coherent engine.  ``true_photon`` uses a Fock photon and
    the Fock engine; branches are then single-mode Fock vectors.
    """
    circuit = qutrit_circuit(alpha, p, true_photon)
    if true_photon:
        res = run_fock(circuit, cutoff)
        _check_density(res.density, "qutrit_generate")
        amps = res.state.amplitudes
        branches = {n: fock.FockState(amps[:, n].copy()) for n in range(min(3, amps.shape[1]))}
        return HybridOutput(res.state, branches, res.density, circuit)
    res = run_coherent(circuit)
    _check_density(res.density, "qutrit_generate")
    return HybridOutput(res.state, _branches(res.state, 1, (0, 1, 2)), res.density, circuit)


# -- equal-amplitude variant ------------------------------------------------

EQUAL_AMP_T = 1.0 / 3.0


def equal_amplitude_circuit(amplitude: float, p: float = 0.0, approximate_ancilla: bool = True) -> Circuit:
    _check_alpha(amplitude, "A")
    if approximate_ancilla:
        inputs = [Cat(0, amplitude), PathPhoton((1, 2), photon_cat=amplitude / SQRT2)]
        elements = []
    else:
        inputs = [Cat(0, amplitude), Cat(1, amplitude), Vacuum(2)]
        elements = [BeamSplit((2, 1))]
    elements += [Displace(0, amplitude), BeamSplit((0, 1), EQUAL_AMP_T), Homodyne(1, p)]
    return Circuit(3, inputs, elements)


def equal_amplitude_generate(amplitude: float, p: float = 0.0, approximate_ancilla: bool = True) -> HybridOutput:
    """Equal-amplitude cat inputs with a ``T = 1/3`` splitter before homodyne."""
    circuit = equal_amplitude_circuit(amplitude, p, approximate_ancilla)
    res = run_coherent(circuit)
    _check_density(res.density, "equal_amplitude_generate")
    n_values = (0, 1) if approximate_ancilla else (0, 1, 2)
    return HybridOutput(res.state, _branches(res.state, 1, n_values), res.density, circuit)


def equal_amplitude_target(amplitude: float) -> BranchedState:
    r3 = math.sqrt(3.0)
    zero = _single([(1, r3 * amplitude), (-2, amplitude / r3), (1, -amplitude / r3)])
    one = _single([(1, 2 * amplitude / r3), (-1, 0.0)])
    return BranchedState((COHERENT, LABEL), {(0,): zero, (1,): one})
