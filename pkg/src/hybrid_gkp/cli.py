"""Command-line front end.

Every command writes a CSV table (header row, floats at 17 significant
digits) and, when ``--out`` names a file, a JSON sidecar next to it holding
the resolved configuration and engine diagnostics.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 disagreement between the coherent and Fock engines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import __version__
from . import analysis as an
from . import branched as br
from . import coherent as ca
from . import fock
from . import protocols as pr
from .branched import BranchedState
from .circuit import CircuitError, auto_cutoff, cross_check, load_circuit, run_coherent, run_fock
from .errors import ConvergenceError, EngineDisagreement, HybridGKPError, UnsupportedOperation

ENGINE_TOL = 1e-6

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ENGINE = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- output -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, Path):
        return str(x)
    return x


def write_table(header: Sequence[str], rows: Sequence[Sequence[Any]], out: Path | None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[_fmt(v) for v in row] for row in rows])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    return text


def write_sidecar(out: Path | None, command: str, config: dict, diagnostics: dict) -> None:
    if out is None:
        return
    doc = {"command": command, "version": __version__, "config": config, "diagnostics": diagnostics}
    out.with_suffix(".json").write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _term_rows(state, label_prefix: Sequence = ()) -> tuple[list[str], list[list]]:
    if isinstance(state, BranchedState):
        items = list(state.branches.items())
        ncoh = state.kinds.count(br.COHERENT)
    else:
        items = [((), state)]
        ncoh = state.mode_count
    header = ["branch", "weight_re", "weight_im"]
    for m in range(ncoh):
        header += [f"amp{m}_re", f"amp{m}_im"]
    rows = []
    for lab, s in items:
        name = "-".join(str(x) for x in (*label_prefix, *lab))
        for w, amps in zip(s.weights, s.amplitudes):
            row = [name, w.real, w.imag]
            for a in amps:
                row += [a.real, a.imag]
            rows.append(row)
    return header, rows


def _branch_rows(branches: dict) -> tuple[list[str], list[list]]:
    header = ["branch", "weight_re", "weight_im", "amp_re", "amp_im"]
    rows = []
    for n, s in sorted(branches.items()):
        for w, amps in zip(s.weights, s.amplitudes):
            rows.append([n, w.real, w.imag, amps[0].real, amps[0].imag])
    return header, rows


def _engines(args) -> list[str]:
    return ["coherent", "fock"] if args.engine == "both" else [args.engine]


def _require_agreement(name: str, a: float, b: float, tol: float = ENGINE_TOL) -> None:
    if not abs(a - b) <= tol:
        raise EngineDisagreement(f"{name}: coherent={a!r} fock={b!r} differ by {abs(a - b):.3g} > {tol:g}")


def _alpha(value) -> float:
    if value in (None, "auto"):
        return an.optimal_alpha()[0]
    return float(value)


def _positive(value: float, name: str) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")


# -- commands ---------------------------------------------------------------

def cmd_simulate(args) -> dict:
    circuit = load_circuit(args.circuit)
    diag: dict = {"modes": circuit.mode_count, "output_modes": circuit.output_modes}
    engines = _engines(args)
    coherent_res = None
    if "coherent" in engines:
        try:
            coherent_res = run_coherent(circuit)
        except UnsupportedOperation as exc:
            if args.engine == "coherent":
                raise
            diag["coherent"] = f"unsupported: {exc}"
            engines = ["fock"]
    if coherent_res is not None:
        diag["density_coherent"] = coherent_res.density
    if "fock" in engines:
        res = run_fock(circuit, args.cutoff)
        diag["density_fock"] = res.density
        diag["cutoff"] = res.state.cutoffs[0] if res.state.cutoffs else None
        if coherent_res is not None:
            check = cross_check(circuit, args.cutoff)
            diag["cross_check"] = check
            _require_agreement("fidelity", check["fidelity"], 1.0)
            _require_agreement("density", check["density_coherent"], check["density_fock"])
    if coherent_res is not None:
        header, rows = _term_rows(coherent_res.state)
    else:
        amps = res.state.amplitudes
        header = [f"n{m}" for m in range(amps.ndim)] + ["amp_re", "amp_im"]
        rows = [[*idx, amps[idx].real, amps[idx].imag] for idx in zip(*np.nonzero(np.abs(amps) > 1e-15))]
    write_table(header, rows, args.out)
    return diag


def cmd_sweep_fidelity(args) -> dict:
    _positive(args.step, "--step")
    if not 0 < args.alpha_min <= args.alpha_max:
        raise ConfigError("need 0 < alpha-min <= alpha-max")
    count = int(round((args.alpha_max - args.alpha_min) / args.step)) + 1
    alphas = args.alpha_min + args.step * np.arange(count)
    fids = an.closed_form_fidelity(alphas)
    header, rows = ["alpha", "fidelity"], [[a, f] for a, f in zip(alphas, fids)]
    diag: dict = {"points": count, "method": "closed_form"}
    if "fock" in _engines(args):
        header.append("fidelity_fock")
        numeric = [an.numeric_fidelity(a, "fock", args.cutoff) for a in alphas]
        for row, f in zip(rows, numeric):
            row.append(f)
        gap = max(abs(f - g) for f, g in zip(fids, numeric))
        diag["max_engine_gap"] = gap
        _require_agreement("fidelity", gap, 0.0)
    i = int(np.argmax(fids))
    diag["grid_max"] = {"alpha": alphas[i], "fidelity": fids[i]}
    if alphas[0] < alphas[-1]:
        a_star, f_star = an.optimal_alpha((alphas[0], alphas[-1]))
        diag["optimum"] = {"alpha": a_star, "fidelity": f_star}
    write_table(header, rows, args.out)
    return diag


def cmd_tradeoff(args) -> dict:
    alpha = _alpha(args.alpha)
    if args.points < 1:
        raise ConfigError("--points must be at least 1")
    _positive(args.vup_max, "--vup-max")
    grid = [args.vup_max * k / args.points for k in range(1, args.points + 1)]
    approx = not args.exact_ancilla
    models = {e: an.TradeoffModel(alpha, args.p_max, approx, engine=e, cutoff=args.cutoff) for e in _engines(args)}
    primary = models.get("coherent") or models["fock"]
    records = [primary.record(v) for v in grid]
    if len(models) == 2:
        other = models["fock"]
        for rec in records:
            _require_agreement(f"fidelity at v_up={rec.parameter}", rec.fidelity, other.fidelity(rec.parameter))
            _require_agreement(f"probability at v_up={rec.parameter}", rec.probability,
                               other.probability(rec.parameter))
    ops = an.operating_points(alpha, args.p_max, approx, engine=primary.engine)
    write_table(["v_up", "avg_fidelity", "success_prob"],
                [[r.parameter, r.fidelity, r.probability] for r in records], args.out)
    return {"alpha": alpha, "operating_points": ops, "records": [r.diagnostics for r in records[:1]],
            "engines": list(models)}


def _branch_fock(output: pr.HybridOutput, n: int, args) -> fock.FockState:
    """Branch ``n`` as a normalized single-mode Fock vector on the chosen engine(s)."""
    cands = {}
    engines = _engines(args)
    state = output.branches[n]
    cutoff = args.cutoff or max(auto_cutoff(output.circuit), fock.default_cutoff(state.max_amplitude()))
    if "coherent" in engines:
        cands["coherent"] = ca.to_fock(state, cutoff)
    if "fock" in engines:
        res = run_fock(output.circuit, cutoff)
        cands["fock"] = fock.FockState(np.take(res.state.amplitudes, n, axis=1))
    if len(cands) == 2:
        f = fock.fidelity(cands["coherent"], cands["fock"])
        _require_agreement(f"branch {n} fidelity", f, 1.0)
    return next(iter(cands.values())).normalized()


def _protocol_output(args) -> pr.HybridOutput:
    alpha = _alpha(args.alpha)
    if args.protocol == "hybrid":
        return pr.hybrid_generate(None, alpha, args.p)
    if args.protocol == "breed":
        return pr.bred_generate(args.j, alpha, args.p)
    if args.protocol == "qutrit":
        return pr.qutrit_generate(alpha, args.p)
    if args.protocol == "equal-amp":
        return pr.equal_amplitude_generate(alpha, args.p)
    raise ConfigError(f"unknown protocol {args.protocol!r}")


def _overlaps(branches: dict) -> dict:
    out = {}
    keys = sorted(k for k, s in branches.items() if s.norm2() > 0)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            sa, sb = branches[a], branches[b]
            out[f"{a}-{b}"] = abs(ca.inner_product(sa, sb)) / math.sqrt(sa.norm2() * sb.norm2())
    return out


def _protocol_diag(output: pr.HybridOutput, args) -> dict:
    diag = {"density": output.density,
            "branch_norm2": {n: s.norm2() for n, s in output.branches.items()},
            "normalized_overlaps": _overlaps(output.branches)}
    if "fock" in _engines(args):
        check = cross_check(output.circuit, args.cutoff)
        diag["cross_check"] = check
        _require_agreement("fidelity", check["fidelity"], 1.0)
        _require_agreement("density", check["density_coherent"], check["density_fock"])
    return diag


def cmd_breed(args) -> dict:
    alpha = _alpha(args.alpha)
    if args.j < 1:
        raise ConfigError("--j must be at least 1")
    out = pr.bred_generate(args.j, alpha, args.p)
    diag = _protocol_diag(out, args)
    diag["alpha"] = alpha
    diag["extrapolated"] = args.j > 2
    write_table(*_branch_rows(out.branches), args.out)
    return diag


def cmd_qutrit(args) -> dict:
    alpha = _alpha(args.alpha)
    out = pr.qutrit_generate(alpha, args.p)
    diag = _protocol_diag(out, args)
    diag["alpha"] = alpha
    write_table(*_branch_rows(out.branches), args.out)
    return diag


def cmd_equal_amp(args) -> dict:
    _positive(args.amplitude, "--amplitude")
    out = pr.equal_amplitude_generate(args.amplitude, args.p, not args.exact_ancilla)
    diag = _protocol_diag(out, args)
    write_table(*_branch_rows(out.branches), args.out)
    return diag


_PARITY_STATES = {
    "zero": lambda a: pr.logical_zero(a / math.sqrt(2)),
    "one": lambda a: pr.logical_one(a / math.sqrt(2)),
    "bred-zero": pr.bred_zero,
    "bred-one": pr.bred_one,
    "cat": lambda a: ca.make_cat(a, "odd"),
}


def cmd_parity(args) -> dict:
    alpha = _alpha(args.alpha)
    state = _PARITY_STATES[args.state](alpha)
    frame = complex(args.frame) if args.frame is not None else -alpha / math.sqrt(2)
    diag: dict = {"alpha": alpha, "frame": frame}
    spec = an.parity_spectrum(state, frame, args.cutoff)
    if "fock" in _engines(args):
        cutoff = args.cutoff or fock.default_cutoff(state.max_amplitude() + abs(frame)) + 10
        spec_f = an.parity_spectrum(ca.to_fock(state, cutoff), frame)
        diag["odd_weight_fock"] = spec_f.odd_weight
        if args.engine == "both":
            _require_agreement("odd weight", spec.odd_weight, spec_f.odd_weight)
        else:
            spec = spec_f
    diag.update(even_weight=spec.even_weight, odd_weight=spec.odd_weight)
    write_table(["n", "weight"], list(enumerate(spec.weights)), args.out)
    return diag


def cmd_wigner(args) -> dict:
    lo, hi, n = args.grid_min, args.grid_max, args.grid_points
    if not (hi > lo and n >= 2):
        raise ConfigError("need grid-max > grid-min and at least two grid points")
    output = _protocol_output(args)
    if args.branch not in output.branches:
        raise ConfigError(f"branch {args.branch} not produced by {args.protocol}")
    psi = _branch_fock(output, args.branch, args)
    axis = np.linspace(lo, hi, n)
    grid = fock.wigner(psi, axis, axis)
    rows = [[x, p, grid.values[i, j]] for i, x in enumerate(axis) for j, p in enumerate(axis)]
    write_table(["x", "p", "W"], rows, args.out)
    return {"protocol": args.protocol, "cutoff": psi.cutoffs[0], "integral": grid.integral(),
            "min_W": grid.min(), "max_W": float(grid.values.max())}


def cmd_validate_approx(args) -> dict:
    if not 0 < args.alpha_min <= args.alpha_max or args.points < 1:
        raise ConfigError("need 0 < alpha-min <= alpha-max and points >= 1")
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.points)
    rows, gap = [], 0.0
    for a in alphas:
        f = an.approximation_validity(a)
        if "fock" in _engines(args):
            g = an.approximation_validity(a, "fock", args.cutoff)
            gap = max(gap, abs(f - g))
            if args.engine == "fock":
                f = g
        rows.append([a, f, an.neglected_population(a), an.neglected_population(a, normalized=False)])
    if args.engine == "both":
        _require_agreement("approximation fidelity", gap, 0.0)
    write_table(["alpha", "fidelity", "neglected_population", "neglected_population_unnormalized"], rows, args.out)
    small = alphas[alphas <= 0.3]
    diag = {"max_engine_gap": gap}
    if len(small) >= 2:
        diag["loglog_slope"] = an.loglog_slope(small, [an.neglected_population(a) for a in small])
        diag["loglog_slope_unnormalized"] = an.loglog_slope(
            small, [an.neglected_population(a, normalized=False) for a in small])
    return diag


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-fidelity": cmd_sweep_fidelity,
    "tradeoff": cmd_tradeoff,
    "breed": cmd_breed,
    "qutrit": cmd_qutrit,
    "equal-amp": cmd_equal_amp,
    "parity": cmd_parity,
    "wigner": cmd_wigner,
    "validate-approx": cmd_validate_approx,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = _Parser(add_help=False)
    common.add_argument("--engine", choices=("coherent", "fock", "both"), default="coherent")
    common.add_argument("--out", type=Path, default=None, help="CSV path; a .json sidecar is written next to it")
    common.add_argument("--config", type=Path, default=None, help="YAML/JSON file of option defaults")
    common.add_argument("--cutoff", type=int, default=None, help="Fock cutoff per mode (default: automatic)")

    parser = _Parser(prog="hybrid-gkp", description="Hybrid GKP / photon-number entanglement simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    def add(name, help):
        subs[name] = sub.add_parser(name, help=help, parents=[common])
        return subs[name]

    p = add("simulate", "run a circuit file")
    p.add_argument("circuit", type=Path)

    p = add("sweep-fidelity", "closed-form fidelity versus cat amplitude")
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=1.5)
    p.add_argument("--step", type=float, default=0.005)

    p = add("tradeoff", "window fidelity and success probability versus v_up")
    p.add_argument("--alpha", default="auto")
    p.add_argument("--vup-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--p-max", type=float, default=an.P_MAX)
    p.add_argument("--exact-ancilla", action="store_true", help="skip the single-photon approximation")

    for name, help in (("breed", "bred hybrid state"), ("qutrit", "hybrid qutrit state")):
        p = add(name, help)
        p.add_argument("--alpha", default="auto")
        p.add_argument("--p", type=float, default=0.0)
    subs["breed"].add_argument("--j", type=int, default=2)

    p = add("equal-amp", "equal-amplitude variant with a T=1/3 splitter")
    p.add_argument("--amplitude", type=float, default=math.sqrt(1.5) * 0.455)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--exact-ancilla", action="store_true")

    p = add("parity", "photon-number parity in a displaced frame")
    p.add_argument("--state", choices=sorted(_PARITY_STATES), default="one")
    p.add_argument("--alpha", default="auto")
    p.add_argument("--frame", default=None, help="frame displacement (default: -alpha/sqrt2)")

    p = add("wigner", "Wigner function of a protocol branch on a grid")
    p.add_argument("--protocol", choices=("hybrid", "breed", "qutrit", "equal-amp"), default="breed")
    p.add_argument("--alpha", default="auto")
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--branch", type=int, default=0)
    p.add_argument("--grid-min", type=float, default=fock.DEFAULT_GRID[0])
    p.add_argument("--grid-max", type=float, default=fock.DEFAULT_GRID[1])
    p.add_argument("--grid-points", type=int, default=fock.DEFAULT_GRID[2])

    p = add("validate-approx", "accuracy of the single-photon approximation")
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=1.5)
    p.add_argument("--points", type=int, default=30)
    return parser, subs


def _load_config(path: Path) -> dict:
    try:
        doc = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a mapping of option names to values")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    cfg = _load_config(args.config)
    sp = subs[args.command]
    known = {a.dest for a in sp._actions} - {"help", "config"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown keys in {args.config}: {sorted(unknown)}")
    for action in sp._actions:
        if action.dest in cfg and action.type is not None and cfg[action.dest] is not None:
            cfg[action.dest] = action.type(cfg[action.dest])
    sp.set_defaults(**cfg)
    args = parser.parse_args(argv)
    for a in sp._actions:
        if a.choices is not None and getattr(args, a.dest, None) not in a.choices and a.dest in cfg:
            raise ConfigError(f"{a.dest}={getattr(args, a.dest)!r} not one of {sorted(a.choices)}")
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        diag = COMMANDS[args.command](args)
        config = {k: v for k, v in vars(args).items()}
        write_sidecar(args.out, args.command, config, diag)
    except (ConfigError, CircuitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineDisagreement as exc:
        print(f"engine disagreement: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HybridGKPError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
