import json
import subprocess
import sys

import numpy as np
import pytest

from exdiff.cli import main
from exdiff.network import generate_random_network, save_network
from exdiff.solver import read_trajectory_csv
from exdiff.stability import EXAMPLE_1_A


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_policy_averaging_ok(tmp_path, capsys):
    save_network(generate_random_network(10, 0.3, 2), tmp_path / "net.json")
    code, out, _ = run_cli(capsys, "policy", "--net", str(tmp_path / "net.json"),
                           "--rule", "averaging", "--check")
    rep = json.loads(out)
    assert code == 0
    assert rep["validation"]["balanced"] and rep["lemmas"]["ok"]


def test_policy_example1_fails(tmp_path, capsys):
    path = tmp_path / "example1.json"
    path.write_text(json.dumps({"A": EXAMPLE_1_A.tolist()}))
    code, out, _ = run_cli(capsys, "policy", "--matrix", str(path), "--check")
    assert code == 1
    assert json.loads(out)["validation"]["balanced"] is False


def test_policy_unknown_rule_exit_2():
    res = subprocess.run([sys.executable, "-m", "exdiff", "policy", "--rule", "unknown"],
                         capture_output=True, text=True)
    assert res.returncode == 2


def test_policy_bad_matrix_file_exit_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "policy", "--matrix", str(tmp_path / "missing.json"))
    assert code == 2 and "error" in err


def test_policy_generators(capsys):
    code, out, _ = run_cli(capsys, "policy", "--unbalanced", "2", "18", "--rule", "metropolis",
                           "--show-matrix")
    rep = json.loads(out)
    assert code == 0 and len(rep["A"]) == 20
    np.testing.assert_allclose(rep["perron"], np.full(20, 0.05))


def test_solve_ls(tmp_path, capsys):
    prefix = tmp_path / "fig4"
    code, out, _ = run_cli(capsys, "solve", "--random", "20", "0.3", "7", "--mu-o", "0.01",
                           "--max-iters", "2000", "--out", str(prefix))
    assert code == 0
    rows = {r["algorithm"]: r for r in json.loads(out)}
    ex, _ = read_trajectory_csv(rows["exact_diffusion"]["csv"])
    di, _ = read_trajectory_csv(rows["diffusion"]["csv"])
    assert ex[-1] < 1e-10
    assert rows["diffusion"]["plateau"] > 1e6 * rows["exact_diffusion"]["plateau"]
    assert (tmp_path / "fig4_diffusion_mu0.01.csv").exists()
    assert di.size == 2000


def test_solve_config_file_with_override(tmp_path, capsys):
    cfg = {"network": {"kind": "random", "n": 6, "edge_prob": 0.5, "seed": 1},
           "cost": "logistic", "dim": 3, "samples": 10, "mu_o": [0.05, 0.1],
           "algorithms": ["exact_diffusion"], "max_iters": 50, "out": str(tmp_path / "c")}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    code, out, _ = run_cli(capsys, "solve", "--config", str(tmp_path / "cfg.json"),
                           "--max-iters", "20")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 2
    assert all(r["iterations"] == 20 for r in rows)


def test_solve_deterministic(tmp_path, capsys):
    args = ["solve", "--random", "6", "0.5", "3", "--dim", "3", "--samples", "8",
            "--max-iters", "40", "--algorithms", "exact_diffusion"]
    run_cli(capsys, *args, "--out", str(tmp_path / "a"))
    run_cli(capsys, *args, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a_exact_diffusion_mu0.01.csv").read_text()
    assert a == (tmp_path / "b_exact_diffusion_mu0.01.csv").read_text()


def test_solve_divergence_is_exit_0(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "solve", "--example", "1", "--mu-o", "0.01",
                           "--algorithms", "exact_diffusion", "diffusion",
                           "--max-iters", "5000", "--out", str(tmp_path / "e1"))
    rows = {r["algorithm"]: r for r in json.loads(out)}
    assert code == 0
    assert rows["exact_diffusion"]["diverged"] and not rows["diffusion"]["diverged"]
    _, trailer = read_trajectory_csv(rows["exact_diffusion"]["csv"])
    assert trailer.startswith("diverged at iteration")


def test_solve_unknown_algorithm(capsys):
    code, _, _ = run_cli(capsys, "solve", "--algorithms", "nope")
    assert code == 2


def test_solve_bad_config_key(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(json.dumps({"bogus": 1}))
    code, _, _ = run_cli(capsys, "solve", "--config", str(tmp_path / "cfg.json"))
    assert code == 2


def read_sweep(text):
    lines = text.strip().splitlines()
    assert lines[0] == "mu,rho,stable"
    rows = [line.split(",") for line in lines[1:]]
    return np.array([[float(m), float(r)] for m, r, _ in rows]), [s for _, _, s in rows]


def test_stability_example1(capsys):
    code, out, _ = run_cli(capsys, "stability", "--example", "1", "--mu-min", "1e-6",
                           "--mu-max", "3", "--points", "300")
    vals, flags = read_sweep(out)
    assert code == 0 and len(vals) == 300
    assert np.all(vals[:, 1] > 1) and set(flags) == {"false"}


def test_stability_example2(tmp_path, capsys):
    out_path = tmp_path / "s.csv"
    code, _, _ = run_cli(capsys, "stability", "--example", "2", "--mu-max", "0.3",
                         "--out", str(out_path))
    vals, _ = read_sweep(out_path.read_text())
    assert code == 0
    assert np.all(vals[vals[:, 0] < 0.2, 1] < 1)
    assert np.any(vals[vals[:, 0] >= 0.2, 1] >= 1)


def test_stability_jury(capsys):
    code, out, _ = run_cli(capsys, "stability", "--jury", "--mu", "0.05")
    assert code == 0 and json.loads(out)["stable"] is False


def test_stability_custom_matrix(tmp_path, capsys):
    path = tmp_path / "a.json"
    path.write_text(json.dumps({"A": EXAMPLE_1_A.tolist()}))
    code, out, _ = run_cli(capsys, "stability", "--matrix", str(path), "--h-diag",
                           "20", "1", "1", "1", "--points", "5")
    assert code == 0 and len(out.strip().splitlines()) == 6
    code, _, _ = run_cli(capsys, "stability", "--matrix", str(path))
    assert code == 2
    code, _, _ = run_cli(capsys, "stability", "--jury")
    assert code == 2


def test_net_gen(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "net", "gen", "--kind", "unbalanced", "--hubs", "2",
                           "--leaves", "3")
    assert code == 0 and json.loads(out)["n"] == 5
    path = tmp_path / "n.json"
    run_cli(capsys, "net", "gen", "--n", "8", "--seed", "1", "--out", str(path))
    code, out, _ = run_cli(capsys, "policy", "--net", str(path), "--check")
    assert code == 0
