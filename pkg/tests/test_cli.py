import csv
import json

import numpy as np
import pytest

from hybrid_gkp.cli import EXIT_CONFIG, EXIT_ENGINE, EXIT_OK, main


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_sweep_fidelity(tmp_path):
    code, out = run(tmp_path, "sweep-fidelity")
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["alpha", "fidelity"]
    f = np.array([float(r[1]) for r in rows])
    assert f.max() == pytest.approx(0.964, abs=0.002)
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["command"] == "sweep-fidelity"
    assert side["diagnostics"]["optimum"]["alpha"] == pytest.approx(0.455, abs=0.01)


def test_sweep_fidelity_both_engines(tmp_path):
    code, out = run(tmp_path, "sweep-fidelity", "--alpha-min", "0.3", "--alpha-max", "0.5", "--step", "0.1",
                    "--engine", "both", "--cutoff", "40")
    assert code == EXIT_OK
    header, _ = read_csv(out)
    assert header[-1] == "fidelity_fock"


def test_tradeoff(tmp_path):
    code, out = run(tmp_path, "tradeoff", "--points", "10")
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["v_up", "avg_fidelity", "success_prob"]
    assert len(rows) == 10 and float(rows[-1][0]) == pytest.approx(3.0)
    ops = json.loads(out.with_suffix(".json").read_text())["diagnostics"]["operating_points"]
    assert ops["fidelity_target"]["fidelity"] == pytest.approx(0.99, abs=1e-9)


def test_tradeoff_window_exceeds_domain(tmp_path):
    code, _ = run(tmp_path, "tradeoff", "--vup-max", "9", "--points", "3")
    assert code == EXIT_CONFIG


@pytest.mark.parametrize("cmd", ["breed", "qutrit", "equal-amp"])
def test_protocols(tmp_path, cmd):
    code, out = run(tmp_path, cmd)
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["branch", "weight_re", "weight_im", "amp_re", "amp_im"]
    assert rows


def test_breed_both_engines(tmp_path):
    code, out = run(tmp_path, "breed", "--alpha", "0.6", "--engine", "both")
    assert code == EXIT_OK
    diag = json.loads(out.with_suffix(".json").read_text())["diagnostics"]
    assert diag["cross_check"]["fidelity"] == pytest.approx(1.0, abs=1e-8)


def test_parity(tmp_path):
    code, out = run(tmp_path, "parity", "--state", "one", "--alpha", "0.5", "--engine", "both")
    assert code == EXIT_OK
    diag = json.loads(out.with_suffix(".json").read_text())["diagnostics"]
    assert diag["even_weight"] < 1e-10


def test_wigner(tmp_path):
    code, out = run(tmp_path, "wigner", "--alpha", "0.6", "--grid-points", "41")
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["x", "p", "W"] and len(rows) == 41 * 41
    assert min(float(r[2]) for r in rows) < -0.01


def test_wigner_deterministic(tmp_path):
    args = ("wigner", "--alpha", "0.5", "--grid-points", "21")
    _, a = run(tmp_path, *args)
    first = a.read_bytes(), a.with_suffix(".json").read_bytes()
    _, b = run(tmp_path, *args)
    assert (b.read_bytes(), b.with_suffix(".json").read_bytes()) == first


def test_validate_approx(tmp_path):
    code, out = run(tmp_path, "validate-approx", "--points", "10", "--alpha-max", "0.3", "--engine", "both")
    assert code == EXIT_OK
    diag = json.loads(out.with_suffix(".json").read_text())["diagnostics"]
    assert diag["loglog_slope"] == pytest.approx(4.0, abs=0.1)


def test_simulate(tmp_path):
    doc = {"modes": 2,
           "inputs": [{"kind": "cat", "mode": 0, "params": {"alpha": 0.7}}, {"kind": "vacuum", "mode": 1}],
           "elements": [{"op": "bs", "modes": [1, 0]}],
           "measurements": [{"op": "homodyne", "mode": 1, "params": {"p": 0.2}}]}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    code, out = run(tmp_path, "simulate", str(path), "--engine", "both")
    assert code == EXIT_OK
    diag = json.loads(out.with_suffix(".json").read_text())["diagnostics"]
    assert diag["density_coherent"] == pytest.approx(diag["density_fock"], rel=1e-8)


def test_simulate_bad_circuit(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("modes: 1\nbogus: 2\n")
    assert run(tmp_path, "simulate", str(path))[0] == EXIT_CONFIG


def test_engine_disagreement(tmp_path):
    # a starved cutoff makes the Fock engine miss the coherent result
    doc = {"modes": 1, "inputs": [{"kind": "coherent", "mode": 0, "params": {"alpha": 1.5}}],
           "measurements": [{"op": "homodyne", "mode": 0, "params": {"p": 0.0}}]}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    assert run(tmp_path, "simulate", str(path), "--engine", "both", "--cutoff", "3")[0] == EXIT_ENGINE


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("alpha-min: 0.4\nalpha-max: 0.5\nstep: 0.05\n")
    code, out = run(tmp_path, "sweep-fidelity", "--config", str(cfg))
    assert code == EXIT_OK
    _, rows = read_csv(out)
    assert [float(r[0]) for r in rows] == pytest.approx([0.4, 0.45, 0.5])


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("alpha-min: 0.4\ncolour: blue\n")
    assert run(tmp_path, "sweep-fidelity", "--config", str(cfg))[0] == EXIT_CONFIG


def test_unknown_flag(tmp_path):
    assert run(tmp_path, "sweep-fidelity", "--bogus")[0] == EXIT_CONFIG


def test_bad_values(tmp_path):
    assert run(tmp_path, "sweep-fidelity", "--step", "-1")[0] == EXIT_CONFIG
    assert run(tmp_path, "breed", "--j", "0")[0] == EXIT_CONFIG
    assert run(tmp_path, "wigner", "--grid-min", "2", "--grid-max", "1")[0] == EXIT_CONFIG


def test_stdout(capsys):
    assert main(["sweep-fidelity", "--alpha-min", "0.4", "--alpha-max", "0.4"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "alpha,fidelity" and len(lines) == 2
