"""Acceptance criteria AC1..AC11, one pass/fail line each in the terminal summary."""

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import ACCEPTANCE_LINES

from aga.almostrep import (
    AlmostRep,
    max_defect,
    perturb,
    perturb_to_defect,
    random_commuting_rep,
    random_rep,
    random_surface_rep,
    voiculescu_family,
    voiculescu_matrices,
)
from aga.cli import main
from aga.homotopy import (
    CONVERGED,
    PLATEAUED,
    FlowConfig,
    check_path_invariants,
    defect_objective,
    flow_minimize,
    gamma_commutator,
    lift_commutator_path,
    objective_gradient,
    su_geodesic_to_identity,
    surface_reduce,
)
from aga.invariants import trace_obstruction, winding_number
from aga.numerics import direct_sum, operator_norm, random_skew, random_unitary
from aga.presentation import (
    builtin_presentation,
    free_abelian,
    parse_presentation,
    serialize_presentation,
)


def record(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    assert ok, f"{label}: {detail}"


def test_ac01_voiculescu_exactness():
    worst = 0.0
    for n in range(2, 257):
        a, b, c = voiculescu_matrices(n)
        w = np.exp(2j * np.pi / n) * np.eye(n)
        eye = np.eye(n)
        worst = max(
            worst,
            operator_norm(a @ c @ a.conj().T @ c.conj().T - w),
            operator_norm(b @ b - eye),
            operator_norm(a @ b @ a @ b - w),
        )
    record("AC1 Voiculescu exactness", worst <= 1e-12, f"max identity residual {worst:.2e} over n=2..256")


def test_ac02_defect_law():
    defects = np.array([max_defect(voiculescu_family(n)) for n in range(2, 257)])
    law = 2 * np.sin(np.pi / np.arange(2, 257))
    err = float(np.max(np.abs(defects - law)))
    decreasing = bool(np.all(np.diff(defects) < 0))
    record("AC2 defect law", err <= 1e-10 and decreasing,
           f"max |defect - 2 sin(pi/n)| = {err:.2e}, strictly decreasing={decreasing}")


def test_ac03_winding_and_additivity():
    bad = [n for n in range(3, 257) if winding_number(*voiculescu_matrices(n)[::2]).value != 1]
    rng = np.random.default_rng(303)
    add_fail = 0
    for _ in range(50):
        blocks = []
        for _ in range(2):
            if rng.random() < 0.5:
                n = int(rng.integers(3, 17))
                a, _, c = voiculescu_matrices(n)
                blocks.append((a, c) if rng.random() < 0.5 else (a.conj().T, c))
            else:
                r = random_commuting_rep(free_abelian(2), int(rng.integers(1, 9)), rng)
                blocks.append((r["x1"], r["x2"]))
        (u1, v1), (u2, v2) = blocks
        total = winding_number(direct_sum(u1, u2), direct_sum(v1, v2)).value
        if total != winding_number(u1, v1).value + winding_number(u2, v2).value:
            add_fail += 1
    record("AC3 winding", not bad and add_fail == 0,
           f"{254 - len(bad)}/254 Voiculescu pairs give 1, additivity failures {add_fail}/50")


def test_ac04_winding_stability():
    rng = np.random.default_rng(404)
    fail_v = fail_c = 0
    max_dist = 0.0
    for seed in range(100):
        n = int(rng.integers(4, 17))
        mag = float(rng.uniform(0.01, 0.1))
        p = perturb(voiculescu_family(n), mag, seed)
        rep = winding_number(p["a"], p["c"])
        max_dist = max(max_dist, rep.commutator_distance)
        fail_v += rep.value != 1 or not rep.reliable
        base = random_commuting_rep(free_abelian(2), n, np.random.default_rng(seed))
        q = perturb(base, mag, seed)
        fail_c += winding_number(q["x1"], q["x2"]).value != 0
    record("AC4 winding stability", fail_v == 0 and fail_c == 0,
           f"Voiculescu failures {fail_v}/100, commuting failures {fail_c}/100, "
           f"max commutator distance {max_dist:.3f}")


BUILTIN_CASES = [("surface", 2), ("gamma_no_aga", None), ("h_infinite_dihedral", None),
                 ("free_abelian", 3), ("free", 2)]


def test_ac05_gradient_check():
    rng = np.random.default_rng(505)
    worst = 0.0
    checks = 0
    h = 1e-5
    for key, param in BUILTIN_CASES:
        p = builtin_presentation(key, param)
        for _ in range(10):
            n = int(rng.integers(1, 7))
            rep = random_rep(p, n, rng)
            grad = objective_gradient(rep)
            for _ in range(20):
                z = {g: random_skew(n, rng) for g in p.generators}
                plus = AlmostRep(p, {g: rep[g] @ sla.expm(h * z[g]) for g in z})
                minus = AlmostRep(p, {g: rep[g] @ sla.expm(-h * z[g]) for g in z})
                fd = (defect_objective(plus) - defect_objective(minus)) / (2 * h)
                an = sum(np.real(np.vdot(grad[g], z[g])) for g in z)
                scale = max(abs(fd), abs(an))
                # relator-free presentations have F identically 0
                rel = abs(fd - an) / scale if scale > 1e-12 else abs(fd - an)
                worst = max(worst, rel)
                checks += 1
    record("AC5 gradient check", worst < 1e-5, f"max relative error {worst:.2e} over {checks} directions")


@pytest.mark.slow
def test_ac06_aga_for_z2():
    results = {}
    for n in (4, 8):
        ok = 0
        for seed in range(100):
            base = random_commuting_rep(free_abelian(2), n, np.random.default_rng(10_000 + seed))
            tr = flow_minimize(perturb(base, 0.2, seed), FlowConfig(budget=10_000, tolerance=1e-8, stride=1000))
            ok += tr.status == CONVERGED and tr.final.defect <= 1e-8 and tr.steps <= 10_000
        results[n] = ok
    record("AC6 AGA empirics for Z^2", all(v >= 95 for v in results.values()),
           ", ".join(f"n={n}: {v}/100 converged" for n, v in results.items()))


@pytest.mark.slow
def test_ac07_no_aga_for_gamma():
    parts = []
    ok = True
    for n in (8, 16):
        cfg = FlowConfig(budget=10_000, tolerance=1e-8, stride=1, track_invariants=True)
        tr = flow_minimize(voiculescu_family(n), cfg)
        windings = {s.invariants.get("winding_a_c") for s in tr.samples}
        halfplanes = {s.invariants.get("halfplane_b") for s in tr.samples}
        report = check_path_invariants(tr, ("a", "c"), "b")
        good = (tr.status == PLATEAUED and tr.final.defect > 0.05 and windings == {1}
                and len(halfplanes) == 1 and report.constant)
        ok &= good
        parts.append(f"n={n}: {tr.status}, defect {tr.final.defect:.4f}, winding {sorted(windings)}, "
                     f"halfplane {sorted(halfplanes)}")
    record("AC7 no-AGA empirics for Gamma", ok, "; ".join(parts))


def _brute_force(a, b, n_small, m_pad, eps):
    n_count = 0
    for w in np.linalg.eig(a)[0]:
        if abs(w.imag) > 2 * eps:
            n_count += 1
    tr = 0j
    for i in range(b.shape[0]):
        tr += b[i, i]
    return abs(tr), m_pad - n_small, n_count, n_small + m_pad - n_count / 4


def test_ac08_trace_obstruction():
    r1 = trace_obstruction(np.eye(6), np.eye(6), 2, 4, 0.01)
    ex1 = r1.N_count == 0 and r1.upper_bound == 6 and not r1.contradiction
    a, b, _ = voiculescu_matrices(64)
    r2 = trace_obstruction(a, b, 64, 0, 0.01)
    ex2 = r2.N_count == 62 and r2.upper_bound == 48.5 and r2.lower_bound == -64 and not r2.contradiction
    aw = np.diag(np.exp(1j * np.r_[np.full(90, np.pi / 2), np.zeros(12)]))
    bw = np.diag(np.r_[np.ones(100), -np.ones(2)])
    r3 = trace_obstruction(aw, bw, 2, 100, 0.01)
    ex3 = r3.N_count == 90 and r3.lower_bound == 98 and r3.upper_bound == 79.5 and r3.contradiction

    rng = np.random.default_rng(808)
    worst = 0.0
    count_mismatch = 0
    for _ in range(20):
        dim = int(rng.integers(2, 33))
        n_small = int(rng.integers(0, dim + 1))
        eps = float(rng.uniform(0.001, 0.3))
        a = random_unitary(dim, rng)
        w = random_unitary(dim, rng)
        b = (w * np.where(np.arange(dim) < rng.integers(0, dim + 1), -1.0, 1.0)) @ w.conj().T
        rep = trace_obstruction(a, b, n_small, dim - n_small, eps)
        tr, lo, nc, up = _brute_force(a, b, n_small, dim - n_small, eps)
        count_mismatch += rep.N_count != nc or rep.contradiction != (lo > up)
        worst = max(worst, abs(rep.trace_abs - tr), abs(rep.lower_bound - lo), abs(rep.upper_bound - up))
    record("AC8 trace obstruction", ex1 and ex2 and ex3 and worst <= 1e-10 and count_mismatch == 0,
           f"examples {[ex1, ex2, ex3]}, brute force max diff {worst:.2e}, count mismatches {count_mismatch}/20")


@pytest.mark.slow
def test_ac09_path_lifting():
    ok = 0
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(900 + seed)
        u, v = random_unitary(3, rng), random_unitary(3, rng)
        path = su_geodesic_to_identity(gamma_commutator(u, v), 200)
        res = lift_commutator_path(u, v, path, 1e-3)
        worst = max(worst, res.max_residual)
        ok += res.success and res.max_residual < 1e-3
    record("AC9 path lifting", ok >= 9, f"{ok}/10 lifts succeeded, max residual {worst:.2e}")


@pytest.mark.slow
def test_ac10_surface_reduction():
    ok = 0
    worst_ratio = 0.0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        rep = perturb_to_defect(random_surface_rep(2, 4, rng), 0.05, seed)
        eps = max_defect(rep)
        try:
            tr = surface_reduce(rep)
        except Exception:
            continue
        end = tr.final.rep
        endpoint = max(operator_norm(end["a2"] - np.eye(4)), operator_norm(end["b2"] - np.eye(4)))
        peak = float(tr.defects().max())
        worst_ratio = max(worst_ratio, peak / eps)
        ok += endpoint <= 1e-8 and peak <= 2 * eps + 1e-6
    record("AC10 surface reduction", ok >= 9,
           f"{ok}/10 reductions succeeded, worst max-defect/eps {worst_ratio:.3f}")


def test_ac11_roundtrip_and_determinism(tmp_path, capsys):
    cases = BUILTIN_CASES + [("surface", 1), ("surface", 5), ("free_abelian", 1), ("free", 1)]
    rt_ok = True
    for key, param in cases:
        p = builtin_presentation(key, param)
        text = serialize_presentation(p)
        rt_ok &= parse_presentation(text) == p and serialize_presentation(parse_presentation(text)) == text
    csvs = []
    for run in ("r1", "r2"):
        assert main(["flow", "--builtin", "z2-perturbed", "--n", "4", "--seed", "11",
                     "--out", str(tmp_path / run), "--format", "csv"]) == 0
        csvs.append((tmp_path / run / "trace.csv").read_bytes())
    capsys.readouterr()
    sweeps = []
    for _ in range(2):
        assert main(["sweep-voiculescu", "--n-max", "64", "--format", "csv"]) == 0
        sweeps.append(capsys.readouterr().out)
    det = csvs[0] == csvs[1] and sweeps[0] == sweeps[1]
    record("AC11 round-trip and determinism", rt_ok and det,
           f"{len(cases)} builtins round-trip={rt_ok}, CLI csv byte-identical={det}")
