"""Circuit descriptions and their execution on either engine.

A :class:`Circuit` is an immutable list of input preparations and an ordered
list of elements acting on integer modes ``0 .. mode_count-1``.  Measured
modes are removed from the state; later elements keep referring to the
original indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np
import yaml

from . import branched as br
from . import coherent as ca
from . import fock
from .branched import COHERENT, LABEL, BranchedState
from .coherent import SuperposedState
from .errors import HybridGKPError, InvalidMode, UnsupportedOperation


class CircuitError(HybridGKPError, ValueError):
    """Malformed circuit description."""


# -- inputs -----------------------------------------------------------------

@dataclass(frozen=True)
class Vacuum:
    mode: int


@dataclass(frozen=True)
class Coherent:
    mode: int
    alpha: complex


@dataclass(frozen=True)
class Cat:
    mode: int
    alpha: float
    parity: str = "odd"
    normalized: bool = True


@dataclass(frozen=True)
class Fock:
    """Photon-number state; carried as a label mode by the coherent engine."""

    mode: int
    n: int


@dataclass(frozen=True)
class PathPhoton:
    """``|1>_i |0>_j + |0>_i |1>_j`` over ``modes = (i, j)``.

    With ``photon_cat`` set, the photon on mode ``i`` is replaced by the odd cat
    ``|c> - |-c>`` (unnormalized unless ``normalize_cat``), which keeps mode
    ``i`` inside the coherent algebra.  No overall normalization is applied.
    """

    modes: tuple[int, int]
    photon_cat: float | None = None
    normalize_cat: bool = False


@dataclass(frozen=True)
class StateInput:
    """An explicit state on ``modes`` (coherent superposition or branched state)."""

    modes: tuple[int, ...]
    state: Union[SuperposedState, BranchedState]


Input = Union[Vacuum, Coherent, Cat, Fock, PathPhoton, StateInput]


def _input_modes(inp) -> tuple[int, ...]:
    if isinstance(inp, (PathPhoton, StateInput)):
        return tuple(inp.modes)
    return (inp.mode,)


# -- elements ---------------------------------------------------------------

@dataclass(frozen=True)
class BeamSplit:
    """Beam splitter; ``modes[0]`` is the u port, ``modes[1]`` the v port."""

    modes: tuple[int, int]
    transmittance: float = 0.5


@dataclass(frozen=True)
class Displace:
    mode: int
    alpha: complex


@dataclass(frozen=True)
class Homodyne:
    mode: int
    p: float


@dataclass(frozen=True)
class FockProject:
    mode: int
    n: int


Element = Union[BeamSplit, Displace, Homodyne, FockProject]
MEASUREMENTS = (Homodyne, FockProject)


def _element_modes(el) -> tuple[int, ...]:
    return tuple(el.modes) if isinstance(el, BeamSplit) else (el.mode,)


@dataclass(frozen=True)
class Circuit:
    mode_count: int
    inputs: tuple = ()
    elements: tuple = ()
    mode_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.mode_count < 1:
            raise CircuitError("a circuit needs at least one mode")
        seen: set[int] = set()
        for inp in self.inputs:
            for m in _input_modes(inp):
                self._valid(m)
                if m in seen:
                    raise CircuitError(f"mode {m} prepared twice")
                seen.add(m)
        measured: set[int] = set()
        for el in self.elements:
            modes = _element_modes(el)
            for m in modes:
                self._valid(m)
                if m in measured:
                    raise CircuitError(f"mode {m} used after being measured")
            if isinstance(el, BeamSplit) and modes[0] == modes[1]:
                raise CircuitError("beam splitter needs two distinct modes")
            if isinstance(el, MEASUREMENTS):
                measured.add(el.mode)

    def _valid(self, m: int) -> None:
        if not 0 <= m < self.mode_count:
            raise CircuitError(f"mode {m} out of range (mode_count={self.mode_count})")

    @property
    def measured_modes(self) -> list[int]:
        return [el.mode for el in self.elements if isinstance(el, MEASUREMENTS)]

    @property
    def output_modes(self) -> list[int]:
        gone = set(self.measured_modes)
        return [m for m in range(self.mode_count) if m not in gone]

    def with_elements(self, elements) -> "Circuit":
        return Circuit(self.mode_count, self.inputs, tuple(elements), self.mode_names)


# -- execution --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RunResult:
    """Unnormalized output state; ``density`` is its squared norm."""

    engine: str
    state: Union[BranchedState, fock.FockState]
    density: float
    modes: tuple[int, ...]
    cutoffs: tuple[int, ...] | None = None
    gamma_max: float = 0.0


def _input_branched(inp) -> tuple[tuple[int, ...], BranchedState]:
    if isinstance(inp, Vacuum):
        return (inp.mode,), BranchedState.from_coherent(ca.vacuum(1))
    if isinstance(inp, Coherent):
        return (inp.mode,), BranchedState.from_coherent(ca.coherent(inp.alpha))
    if isinstance(inp, Cat):
        return (inp.mode,), BranchedState.from_coherent(ca.make_cat(inp.alpha, inp.parity, normalized=inp.normalized))
    if isinstance(inp, Fock):
        return (inp.mode,), BranchedState.fock_label(inp.n)
    if isinstance(inp, PathPhoton):
        if inp.photon_cat is None:
            lab = BranchedState((LABEL, LABEL), {(1, 0): ca.SuperposedState(0, [1.0], np.zeros((1, 0))),
                                                 (0, 1): ca.SuperposedState(0, [1.0], np.zeros((1, 0)))})
            return tuple(inp.modes), lab
        cat = ca.make_cat(inp.photon_cat, "odd", normalized=inp.normalize_cat)
        state = BranchedState((COHERENT, LABEL), {(0,): cat, (1,): ca.vacuum(1)})
        return tuple(inp.modes), state
    if isinstance(inp, StateInput):
        st = inp.state
        if isinstance(st, SuperposedState):
            st = BranchedState.from_coherent(st)
        if st.mode_count != len(inp.modes):
            raise CircuitError("state input mode count does not match its modes")
        return tuple(inp.modes), st
    raise CircuitError(f"unknown input {inp!r}")


def initial_branched(circuit: Circuit) -> BranchedState:
    parts = [_input_branched(inp) for inp in circuit.inputs]
    covered = {m for modes, _ in parts for m in modes}
    parts += [((m,), BranchedState.from_coherent(ca.vacuum(1))) for m in range(circuit.mode_count) if m not in covered]
    order = [m for modes, _ in parts for m in modes]
    state = br.tensor(*[s for _, s in parts])
    return br.permute(state, [order.index(m) for m in range(circuit.mode_count)])


def run_coherent(circuit: Circuit, stop_before: int | None = None) -> RunResult:
    """Execute on the coherent engine (label modes for photon-number states)."""
    state = initial_branched(circuit)
    live = list(range(circuit.mode_count))
    gamma_max = state.max_amplitude()
    for el in circuit.elements[:stop_before]:
        if isinstance(el, BeamSplit):
            state = br.beam_split(state, live.index(el.modes[0]), live.index(el.modes[1]), el.transmittance)
        elif isinstance(el, Displace):
            state = br.displace(state, live.index(el.mode), el.alpha)
        elif isinstance(el, Homodyne):
            state, _ = br.homodyne_project(state, live.index(el.mode), el.p)
            live.remove(el.mode)
        elif isinstance(el, FockProject):
            state, _ = br.project_fock(state, live.index(el.mode), el.n)
            live.remove(el.mode)
        gamma_max = max(gamma_max, state.max_amplitude())
    return RunResult("coherent", state, state.norm2(), tuple(live), gamma_max=gamma_max)


def _input_fock(inp, cutoff: int) -> tuple[tuple[int, ...], fock.FockState]:
    modes, state = _input_branched(inp)
    return modes, br.to_fock(state, [cutoff] * len(modes))


def estimate_gamma_max(circuit: Circuit) -> float:
    """Largest coherent amplitude in the analytic trace, or a bound if untraceable."""
    try:
        return run_coherent(circuit).gamma_max
    except UnsupportedOperation:
        pass
    total = 0.0
    for inp in circuit.inputs:
        if isinstance(inp, (Coherent, Cat)):
            total += abs(inp.alpha)
        elif isinstance(inp, PathPhoton) and inp.photon_cat is not None:
            total += abs(inp.photon_cat)
        elif isinstance(inp, StateInput):
            st = inp.state
            total += st.max_amplitude()
        elif isinstance(inp, Fock):
            total += math.sqrt(inp.n)
        elif isinstance(inp, PathPhoton):
            total += 1.0
    total += sum(abs(el.alpha) for el in circuit.elements if isinstance(el, Displace))
    return total


def max_photon_label(circuit: Circuit) -> int:
    n = 0
    for inp in circuit.inputs:
        if isinstance(inp, Fock):
            n += inp.n
        elif isinstance(inp, PathPhoton):
            n += 1
        elif isinstance(inp, StateInput) and isinstance(inp.state, BranchedState):
            n += inp.state.max_label()
    return n


def auto_cutoff(circuit: Circuit) -> int:
    return max(fock.default_cutoff(estimate_gamma_max(circuit)), max_photon_label(circuit) + 1)


def run_fock(circuit: Circuit, cutoff: int | None = None, max_norm_loss: float | None = None,
             stop_before: int | None = None) -> RunResult:
    """Execute on the Fock engine with a uniform per-mode cutoff."""
    cutoff = cutoff or auto_cutoff(circuit)
    parts = [_input_fock(inp, cutoff) for inp in circuit.inputs]
    covered = {m for modes, _ in parts for m in modes}
    parts += [((m,), fock.vacuum([cutoff])) for m in range(circuit.mode_count) if m not in covered]
    order = [m for modes, _ in parts for m in modes]
    state = fock.tensor(*[s for _, s in parts])
    state = fock.permute(state, [order.index(m) for m in range(circuit.mode_count)])
    live = list(range(circuit.mode_count))
    for el in circuit.elements[:stop_before]:
        if isinstance(el, BeamSplit):
            state = fock.apply_beam_splitter(state, live.index(el.modes[0]), live.index(el.modes[1]), el.transmittance)
        elif isinstance(el, Displace):
            state = fock.apply_displacement(state, live.index(el.mode), el.alpha, max_norm_loss)
        elif isinstance(el, Homodyne):
            state, _ = fock.project_quadrature(state, live.index(el.mode), el.p)
            live.remove(el.mode)
        elif isinstance(el, FockProject):
            state, _ = fock.project_number(state, live.index(el.mode), el.n)
            live.remove(el.mode)
    return RunResult("fock", state, state.norm2(), tuple(live), cutoffs=state.cutoffs)


def run(circuit: Circuit, engine: str = "coherent", cutoff: int | None = None) -> RunResult:
    if engine == "coherent":
        return run_coherent(circuit)
    if engine == "fock":
        return run_fock(circuit, cutoff)
    raise ValueError(f"unknown engine {engine!r}")


# Homodyne densities sum Fock amplitudes, so their error follows the square
# root of the truncated tail; the default cutoff only bounds the norm loss.
ORACLE_MARGIN = 10


def cross_check(circuit: Circuit, cutoff: int | None = None) -> dict[str, float]:
    """Run both engines and compare norms and state fidelity."""
    c = run_coherent(circuit)
    f = run_fock(circuit, cutoff or auto_cutoff(circuit) + ORACLE_MARGIN)
    as_fock = br.to_fock(c.state, f.state.cutoffs)
    fid = fock.fidelity(as_fock, f.state) if c.density > 0 and f.density > 0 else 1.0
    return {
        "density_coherent": c.density,
        "density_fock": f.density,
        "density_gap": abs(c.density - f.density),
        "fidelity": fid,
        "cutoff": f.state.cutoffs[0] if f.state.cutoffs else 0,
        "truncation_error": as_fock.truncation_error,
    }


def random_circuit(rng: np.random.Generator, max_modes: int = 3, max_terms: int = 6,
                   max_amplitude: float = 1.5, max_elements: int = 4) -> Circuit:
    """Small random circuit: a random superposition input, linear optics, one measurement."""
    modes = int(rng.integers(2, max_modes + 1))
    terms = int(rng.integers(1, max_terms + 1))
    radius = max_amplitude * np.sqrt(rng.uniform(size=(terms, modes)))
    amps = radius * np.exp(2j * np.pi * rng.uniform(size=(terms, modes)))
    weights = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    state = ca.SuperposedState(modes, weights, amps)
    elements = []
    for _ in range(int(rng.integers(1, max_elements + 1))):
        if rng.uniform() < 0.6:
            i, j = rng.choice(modes, size=2, replace=False)
            elements.append(BeamSplit((int(i), int(j)), float(rng.uniform(0.1, 0.9))))
        else:
            d = 0.5 * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
            elements.append(Displace(int(rng.integers(modes)), complex(d)))
    m = int(rng.integers(modes))
    if rng.uniform() < 0.5:
        elements.append(Homodyne(m, float(rng.uniform(-2, 2))))
    else:
        elements.append(FockProject(m, int(rng.integers(0, 3))))
    return Circuit(modes, [StateInput(tuple(range(modes)), state)], elements)


# -- text format ------------------------------------------------------------

_INPUT_KEYS = {"mode", "modes", "kind", "params"}
_ELEMENT_KEYS = {"op", "modes", "mode", "params"}
_TOP_KEYS = {"modes", "inputs", "elements", "measurements"}


def _num(x) -> float:
    if isinstance(x, bool):
        raise CircuitError(f"expected a number, got {x!r}")
    try:
        return float(x)
    except (TypeError, ValueError):
        raise CircuitError(f"expected a decimal number, got {x!r}") from None


def _cnum(x) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(_num(x[0]), _num(x[1]))
    if isinstance(x, str) and "j" in x:
        try:
            return complex(x.replace(" ", ""))
        except ValueError:
            raise CircuitError(f"bad complex number {x!r}") from None
    return complex(_num(x))


def _check_keys(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise CircuitError(f"{where} must be a mapping")
    extra = set(d) - allowed
    if extra:
        raise CircuitError(f"unknown keys in {where}: {sorted(extra)}")


def _params(d: dict, allowed: set, where: str) -> dict:
    p = d.get("params", {}) or {}
    _check_keys(p, allowed, f"{where} params")
    return p


def circuit_from_dict(doc: dict) -> Circuit:
    """Build a circuit from the structured document used by ``simulate``.

    ``modes`` is a count or a list of names; mode references may use either
    integers or names.  Unknown keys are rejected.
    """
    _check_keys(doc, _TOP_KEYS, "circuit")
    modes = doc.get("modes")
    if isinstance(modes, list):
        names = tuple(str(m) for m in modes)
        count = len(names)
    elif isinstance(modes, (int, str)) and not isinstance(modes, bool):
        count, names = int(_num(modes)), None
    else:
        raise CircuitError("'modes' must be a count or a list of names")

    def ref(m) -> int:
        if names is not None and isinstance(m, str) and m in names:
            return names.index(m)
        try:
            return int(_num(m))
        except CircuitError:
            raise CircuitError(f"unknown mode {m!r}") from None

    inputs = []
    for i, d in enumerate(doc.get("inputs", []) or []):
        where = f"inputs[{i}]"
        _check_keys(d, _INPUT_KEYS, where)
        kind = d.get("kind")
        if kind == "vacuum":
            _params(d, set(), where)
            inputs.append(Vacuum(ref(d["mode"])))
        elif kind == "coherent":
            p = _params(d, {"alpha"}, where)
            inputs.append(Coherent(ref(d["mode"]), _cnum(p["alpha"])))
        elif kind == "cat":
            p = _params(d, {"alpha", "parity", "normalized"}, where)
            inputs.append(Cat(ref(d["mode"]), _num(p["alpha"]), p.get("parity", "odd"), bool(p.get("normalized", True))))
        elif kind == "fock":
            p = _params(d, {"n"}, where)
            inputs.append(Fock(ref(d["mode"]), int(_num(p["n"]))))
        elif kind == "path_photon":
            p = _params(d, {"photon_cat", "normalize_cat"}, where)
            cat = p.get("photon_cat")
            inputs.append(PathPhoton(tuple(ref(m) for m in d["modes"]), None if cat is None else _num(cat),
                                     bool(p.get("normalize_cat", False))))
        elif kind == "superposition":
            p = _params(d, {"terms"}, where)
            ms = tuple(ref(m) for m in (d.get("modes") or [d.get("mode")]))
            terms = []
            for t in p["terms"]:
                _check_keys(t, {"weight", "amplitudes"}, f"{where} term")
                terms.append((_cnum(t["weight"]), [_cnum(a) for a in t["amplitudes"]]))
            inputs.append(StateInput(ms, ca.SuperposedState.from_terms(len(ms), terms)))
        else:
            raise CircuitError(f"{where}: unknown input kind {kind!r}")

    def element(d: dict, where: str):
        _check_keys(d, _ELEMENT_KEYS, where)
        op = d.get("op")
        ms = d.get("modes", [d["mode"]] if "mode" in d else [])
        ms = [ref(m) for m in (ms if isinstance(ms, list) else [ms])]
        if op in ("beam_split", "bs"):
            p = _params(d, {"T", "transmittance"}, where)
            t = _num(p.get("T", p.get("transmittance", 0.5)))
            if len(ms) != 2:
                raise CircuitError(f"{where}: beam splitter needs two modes")
            return BeamSplit((ms[0], ms[1]), t)
        if len(ms) != 1:
            raise CircuitError(f"{where}: {op} acts on one mode")
        if op == "displace":
            return Displace(ms[0], _cnum(_params(d, {"alpha"}, where)["alpha"]))
        if op == "homodyne":
            return Homodyne(ms[0], _num(_params(d, {"p"}, where).get("p", 0.0)))
        if op in ("fock_project", "photon_count"):
            return FockProject(ms[0], int(_num(_params(d, {"n"}, where).get("n", 0))))
        raise CircuitError(f"{where}: unknown op {op!r}")

    elements = [element(d, f"elements[{i}]") for i, d in enumerate(doc.get("elements", []) or [])]
    measurements = [element(d, f"measurements[{i}]") for i, d in enumerate(doc.get("measurements", []) or [])]
    if any(not isinstance(m, MEASUREMENTS) for m in measurements):
        raise CircuitError("'measurements' may only hold homodyne or fock_project entries")
    try:
        return Circuit(count, inputs, elements + measurements, names)
    except InvalidMode as exc:
        raise CircuitError(str(exc)) from None


def load_circuit(path: str | Path) -> Circuit:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise CircuitError(f"cannot parse {path}: {exc}") from None
    return circuit_from_dict(doc)
