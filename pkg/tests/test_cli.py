import csv
import io
import json

import numpy as np
import pytest

from aga.almostrep import dump_rep, random_commuting_rep, voiculescu_matrices
from aga.cli import main
from aga.numerics import matrix_to_json, random_unitary
from aga.homotopy import su_geodesic_to_identity
from aga.invariants import commutator
from aga.presentation import free_abelian


def write_matrix(path, m):
    path.write_text(json.dumps(matrix_to_json(m)))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sweep_csv_rows(capsys):
    code, out, _ = run(capsys, "sweep-voiculescu", "--n-min", "2", "--n-max", "64", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["winding"] == "undefined (branch cut)"
    r4 = rows[2]
    assert int(r4["n"]) == 4 and r4["winding"] == "1"
    assert float(r4["defect"]) == pytest.approx(1.414213562, abs=1e-9)
    assert float(r4["lacuna"]) == pytest.approx(np.pi / 2, abs=1e-12)
    defects = [float(r["defect"]) for r in rows]
    assert all(x > y for x, y in zip(defects, defects[1:]))
    for r in rows:
        n = int(r["n"])
        assert float(r["defect"]) == pytest.approx(2 * np.sin(np.pi / n), abs=1e-10)
        if n >= 3:
            assert r["winding"] == "1"


def test_sweep_range_is_usage_error(capsys):
    code, _, err = run(capsys, "sweep-voiculescu", "--n-min", "1", "--n-max", "4")
    assert code == 2 and "usage" in err


def test_parse_file_and_errors(tmp_path, capsys):
    f = tmp_path / "g.txt"
    f.write_text("group G\ngens a b\nrel a^2 b^-1\n")
    code, out, _ = run(capsys, "parse", str(f))
    assert code == 0 and out == "group G\ngens a b\nrel a a b^-1\n"
    f.write_text("group G\ngens a\nrel a b\n")
    code, _, err = run(capsys, "parse", str(f))
    assert code == 1 and "line 3" in err
    assert run(capsys, "parse", str(tmp_path / "missing.txt"))[0] == 1


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["winding", "--bogus"])
    assert exc.value.code == 2


def test_winding_commuting_files(tmp_path, capsys, rng):
    u = np.diag(np.exp(1j * rng.uniform(0, 6, 4)))
    v = np.diag(np.exp(1j * rng.uniform(0, 6, 4)))
    code, out, _ = run(capsys, "winding", write_matrix(tmp_path / "u.json", u), write_matrix(tmp_path / "v.json", v))
    assert code == 0 and out.strip() == "0"


def test_winding_voiculescu_json(tmp_path, capsys):
    a, _, c = voiculescu_matrices(10)
    code, out, _ = run(capsys, "winding", write_matrix(tmp_path / "a.json", a),
                       write_matrix(tmp_path / "c.json", c), "--format", "json")
    assert code == 0 and json.loads(out)["value"] == 1


def test_winding_branch_cut_fails(tmp_path, capsys):
    a, _, c = voiculescu_matrices(2)
    code, _, err = run(capsys, "winding", write_matrix(tmp_path / "a.json", a), write_matrix(tmp_path / "c.json", c))
    assert code == 1 and "undefined" in err


def test_obstruction_synthetic_witness(tmp_path, capsys):
    a = np.diag(np.exp(1j * np.r_[np.full(90, np.pi / 2), np.zeros(12)]))
    b = np.diag(np.r_[np.ones(100), -np.ones(2)]).astype(complex)
    args = ["obstruction", "--a", write_matrix(tmp_path / "a.json", a), "--b", write_matrix(tmp_path / "b.json", b),
            "--n-small", "2", "--m-pad", "100", "--eps-prime", "0.01"]
    code, out, _ = run(capsys, *args)
    assert code == 0 and "contradiction=true" in out
    code, out, _ = run(capsys, *args, "--format", "json")
    rep = json.loads(out)
    assert rep["N_count"] == 90 and rep["upper_bound"] == 79.5 and rep["contradiction"] is True


def test_flow_builtin_z2(tmp_path, capsys):
    code, out, _ = run(capsys, "flow", "--builtin", "z2-perturbed", "--n", "8", "--seed", "7",
                       "--stride", "50", "--out", str(tmp_path), "--format", "json")
    summary = json.loads(out)
    assert code == 0 and summary["status"] == "converged" and summary["final_defect"] <= 1e-8
    assert (tmp_path / "trace.csv").exists() and (tmp_path / "trace.jsonl").exists()


def test_flow_builtin_voiculescu(tmp_path, capsys):
    code, out, _ = run(capsys, "flow", "--builtin", "voiculescu", "--n", "8", "--out", str(tmp_path), "--format", "json")
    summary = json.loads(out)
    assert summary["status"] == "plateaued" and summary["final_defect"] > 0.05
    assert summary["winding_a_c"] == 1


def test_flow_zero_budget(tmp_path, capsys):
    code, out, _ = run(capsys, "flow", "--builtin", "voiculescu", "--n", "5", "--budget", "0",
                       "--out", str(tmp_path), "--format", "json")
    summary = json.loads(out)
    assert summary["status"] == "budget_exhausted" and summary["samples"] == 1


def test_flow_requires_seed_for_random_builtin(capsys):
    code, _, err = run(capsys, "flow", "--builtin", "z2-perturbed")
    assert code == 2 and "--seed" in err


def test_flow_rep_file(tmp_path, capsys, rng):
    rep = random_commuting_rep(free_abelian(2), 3, rng)
    f = tmp_path / "rep.json"
    f.write_text(dump_rep(rep))
    code, out, _ = run(capsys, "flow", "--rep", str(f), "--out", str(tmp_path / "o"), "--format", "json")
    assert code == 0 and json.loads(out)["status"] == "converged"


def test_csv_outputs_byte_identical(tmp_path, capsys):
    for d in ("r1", "r2"):
        assert run(capsys, "flow", "--builtin", "z2-perturbed", "--n", "4", "--seed", "3",
                   "--out", str(tmp_path / d), "--format", "csv")[0] == 0
    assert (tmp_path / "r1" / "trace.csv").read_bytes() == (tmp_path / "r2" / "trace.csv").read_bytes()
    outs = [run(capsys, "sweep-voiculescu", "--n-max", "40", "--format", "csv")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_surface_reduce_builtin(tmp_path, capsys):
    code, out, _ = run(capsys, "surface-reduce", "--builtin", "surface-perturbed", "--genus", "2", "--n", "3",
                       "--eps", "0.05", "--seed", "2", "--out", str(tmp_path), "--format", "json")
    s = json.loads(out)
    assert code == 0
    assert s["reduced_handles_deviation"] <= 1e-8
    assert s["max_trace_defect"] <= 2 * s["initial_defect"] + 1e-6


def test_lift_geodesic_and_density_error(tmp_path, capsys):
    rng = np.random.default_rng(2)
    u, v = random_unitary(3, rng), random_unitary(3, rng)
    fu, fv = write_matrix(tmp_path / "u.json", u), write_matrix(tmp_path / "v.json", v)
    code, out, _ = run(capsys, "lift", "--u", fu, "--v", fv, "--geodesic", "200", "--out", str(tmp_path / "o"),
                       "--format", "json")
    assert code == 0 and json.loads(out)["status"] == "success"

    coarse = su_geodesic_to_identity(commutator(u, v), 4)
    (tmp_path / "c.json").write_text(json.dumps({"samples": [matrix_to_json(c) for c in coarse]}))
    code, _, err = run(capsys, "lift", "--u", fu, "--v", fv, "--c-path", str(tmp_path / "c.json"))
    assert code == 1 and "gap between samples 0 and 1" in err


@pytest.mark.parametrize("argv", [
    ["sweep-voiculescu", "--dry-run"],
    ["flow", "--builtin", "voiculescu", "--dry-run"],
    ["parse", "--builtin", "gamma_no_aga", "--dry-run"],
])
def test_dry_run(argv, capsys):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["dry_run"] is True
