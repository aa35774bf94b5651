"""Deformations of almost representations.

``flow_minimize`` runs retracted gradient descent on a product of unitary
groups against the Frobenius relator objective.  ``lift_commutator_path``
follows a path of special unitaries through the commutator map with a
predictor/corrector scheme, and ``surface_reduce`` uses it to push all but
the first handle of a surface-group almost representation to the identity.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .almostrep import AlmostRep, max_defect, rep_to_json
from .invariants import commutator, halfplane_count, try_winding
from .numerics import (
    NumericsError,
    as_matrix,
    check_unitary,
    identity,
    nearest_unitary,
    operator_norm,
    random_skew,
    unitary_eigensystem,
)
from .presentation import GroupPresentation, PresentationError, free_abelian, surface_group

gamma_commutator = commutator

CONVERGED = "converged"
PLATEAUED = "plateaued"
BUDGET_EXHAUSTED = "budget_exhausted"
DIVERGED = "diverged"


# --------------------------------------------------------------------------
# objective and gradient


class _Compiled:
    """Relators as index/exponent arrays over a stacked generator tensor."""

    def __init__(self, p: GroupPresentation):
        self.gens = p.generators
        pos = {g: i for i, g in enumerate(self.gens)}
        self.relators = [[(pos[g], e) for g, e in r.letters] for r in p.relators]

    def stack(self, rep: AlmostRep) -> np.ndarray:
        return np.stack([rep[g] for g in self.gens]) if self.gens else np.zeros((0, 0, 0), complex)

    def unstack(self, p: GroupPresentation, us: np.ndarray) -> AlmostRep:
        return AlmostRep(p, {g: us[i] for i, g in enumerate(self.gens)})

    def relator_values(self, us: np.ndarray) -> list[np.ndarray]:
        n = us.shape[1]
        out = []
        for rel in self.relators:
            w = np.eye(n, dtype=complex)
            for i, e in rel:
                w = w @ (us[i] if e == 1 else us[i].conj().T)
            out.append(w)
        return out

    def objective(self, us: np.ndarray) -> float:
        n = us.shape[1]
        eye = np.eye(n)
        return float(sum(np.sum(np.abs(w - eye) ** 2) for w in self.relator_values(us)))

    def euclidean_gradient(self, us: np.ndarray) -> np.ndarray:
        n = us.shape[1]
        grad = np.zeros_like(us)
        eye = np.eye(n, dtype=complex)
        for rel in self.relators:
            mats = [us[i] if e == 1 else us[i].conj().T for i, e in rel]
            k = len(mats)
            prefix = [eye]
            for m in mats:
                prefix.append(prefix[-1] @ m)
            suffix = [eye] * (k + 1)
            for p in range(k - 1, -1, -1):
                suffix[p] = mats[p] @ suffix[p + 1]
            err = prefix[k] - eye
            for p, (i, e) in enumerate(rel):
                pre, suf = prefix[p], suffix[p + 1]
                if e == 1:
                    grad[i] += 2 * pre.conj().T @ err @ suf.conj().T
                else:
                    grad[i] += 2 * suf @ err.conj().T @ pre
        return grad

    def riemannian_gradient(self, us: np.ndarray) -> np.ndarray:
        """Skew-Hermitian ``X_g`` with ``dF`` along ``U_g exp(t Z_g)`` equal to ``sum <X_g, Z_g>``."""
        g = self.euclidean_gradient(us)
        x = np.conj(np.transpose(us, (0, 2, 1))) @ g
        return 0.5 * (x - np.conj(np.transpose(x, (0, 2, 1))))


def defect_objective(rep: AlmostRep) -> float:
    """Sum over relators of ``||r(rep) - I||_F^2``."""
    return _Compiled(rep.presentation).objective(_Compiled(rep.presentation).stack(rep))


def objective_gradient(rep: AlmostRep) -> dict[str, np.ndarray]:
    """Riemannian gradient (right trivialization) of :func:`defect_objective`."""
    comp = _Compiled(rep.presentation)
    x = comp.riemannian_gradient(comp.stack(rep))
    return {g: x[i] for i, g in enumerate(comp.gens)}


def _retract(us: np.ndarray, xs: np.ndarray, step: float) -> np.ndarray:
    n = us.shape[1]
    eye = np.eye(n)
    return np.stack([nearest_unitary(u @ (eye + step * x)) for u, x in zip(us, xs)])


def _inner(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.real(np.vdot(x, y)))


# --------------------------------------------------------------------------
# flow


@dataclass
class FlowConfig:
    budget: int = 10_000
    tolerance: float = 1e-8
    stride: int = 1
    track_invariants: bool = False
    seed: int = 0
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 60
    plateau_window: int = 200
    plateau_rtol: float = 1e-10
    escape_scale: float = 1e-3
    escape_attempts: int = 5


@dataclass
class FlowSample:
    t: float
    rep: AlmostRep
    defect: float
    objective: float
    invariants: dict = field(default_factory=dict)


@dataclass
class FlowTrace:
    samples: list[FlowSample]
    status: str
    steps: int = 0

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]

    def defects(self) -> np.ndarray:
        return np.array([s.defect for s in self.samples])

    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.samples])

    def invariant_columns(self) -> list[str]:
        cols: list[str] = []
        for s in self.samples:
            for k in s.invariants:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        cols = self.invariant_columns()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "defect", "objective", *cols])
        for s in self.samples:
            extra = ["" if s.invariants.get(c) is None else s.invariants[c] for c in cols]
            w.writerow([_g17(s.t), _g17(s.defect), _g17(s.objective), *extra])
        return buf.getvalue()

    def to_jsonl(self) -> str:
        lines = []
        for s in self.samples:
            rec = {
                "t": s.t,
                "defect": s.defect,
                "objective": s.objective,
                "invariants": s.invariants,
                "rep": rep_to_json(s.rep),
            }
            lines.append(json.dumps(rec))
        return "\n".join(lines) + "\n"


def _g17(x: float) -> str:
    return format(x, ".17g")


def tracked_invariants(p: GroupPresentation) -> tuple[list[tuple[str, str]], list[str]]:
    """Generator pairs appearing as commutator relators and generators appearing as square relators."""
    pairs, squares = [], []
    for r in p.relators:
        L = r.letters
        if len(L) == 4 and [e for _, e in L] == [1, 1, -1, -1] and L[0][0] == L[2][0] and L[1][0] == L[3][0] and L[0][0] != L[1][0]:
            pairs.append((L[0][0], L[1][0]))
        elif len(L) == 2 and L[0] == L[1]:
            squares.append(L[0][0])
    return pairs, squares


def _invariant_record(rep: AlmostRep, pairs, squares) -> dict:
    rec = {}
    for x, y in pairs:
        rec[f"winding_{x}_{y}"] = try_winding(rep[x], rep[y])
    for x in squares:
        rec[f"halfplane_{x}"] = halfplane_count(rep[x]).count
    return rec


def flow_minimize(rep: AlmostRep, config: FlowConfig | None = None) -> FlowTrace:
    """Retracted gradient descent with Armijo backtracking on :func:`defect_objective`.

    The first sample is ``rep`` itself.  Objective values are non-increasing.
    When the gradient vanishes before convergence, a few seeded random tangent
    moves are tried and kept only if they lower the objective.
    """
    cfg = config or FlowConfig()
    p = rep.presentation
    comp = _Compiled(p)
    us = comp.stack(rep)
    rng = np.random.default_rng(cfg.seed)
    pairs, squares = tracked_invariants(p) if cfg.track_invariants else ([], [])
    n = rep.dimension
    k_rel = max(len(p.relators), 1)

    def record(t, us_, f, rep_=None):
        r = rep_ if rep_ is not None else comp.unstack(p, us_.copy())
        samples.append(FlowSample(t, r, max_defect(r), f, _invariant_record(r, pairs, squares)))

    f = comp.objective(us)
    samples: list[FlowSample] = []
    record(0.0, us, f, rep)

    def is_converged(f_, us_):
        if f_ > k_rel * n * cfg.tolerance**2:
            return False
        return max_defect(comp.unstack(p, us_)) <= cfg.tolerance

    if samples[0].defect <= cfg.tolerance:
        return FlowTrace(samples, CONVERGED, 0)

    t = 0.0
    history = [f]
    steps = 0
    status = BUDGET_EXHAUSTED
    last_recorded = 0
    while steps < cfg.budget:
        x = comp.riemannian_gradient(us)
        gnorm2 = _inner(x, x)
        accepted = False
        if gnorm2 > 1e-30 * max(1.0, f):
            step = cfg.initial_step
            for _ in range(cfg.max_backtracks):
                trial = _retract(us, -x, step)
                f_new = comp.objective(trial)
                if f_new <= f - cfg.armijo * step * gnorm2:
                    accepted = True
                    break
                step *= cfg.shrink
        if not accepted:
            for _ in range(cfg.escape_attempts):
                z = np.stack([random_skew(n, rng, 1.0) for _ in range(len(us))]) if n else x
                step = cfg.escape_scale
                trial = _retract(us, z, step)
                f_new = comp.objective(trial)
                if f_new < f:
                    accepted = True
                    break
        if not accepted:
            status = PLATEAUED
            break
        if not math.isfinite(f_new):
            status = DIVERGED
            break
        us, f = trial, f_new
        t += step
        steps += 1
        history.append(f)
        done = is_converged(f, us)
        if done or steps - last_recorded >= cfg.stride:
            record(t, us, f)
            last_recorded = steps
        if done:
            status = CONVERGED
            break
        w = cfg.plateau_window
        if len(history) > w and history[-1 - w] > 0:
            if (history[-1 - w] - history[-1]) / history[-1 - w] < cfg.plateau_rtol:
                status = PLATEAUED
                break
    if last_recorded != steps:
        record(t, us, f)
    return FlowTrace(samples, status, steps)


# --------------------------------------------------------------------------
# path lifting through the commutator map


class LiftError(ValueError):
    pass


@dataclass
class LiftConfig:
    max_gap: float = 0.1
    corrector_iters: int = 30
    corrector_fraction: float = 0.1
    retries: int = 5
    seed: int = 0


@dataclass
class ContinuationResult:
    lifted_path: list[tuple[float, np.ndarray, np.ndarray]]
    residuals: list[float]
    max_residual: float
    status: str
    stalled_at: float | None = None

    @property
    def success(self) -> bool:
        return self.status == "success"


def _commutator_jacobian(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Real Jacobian of ``(X, Y) -> d gamma`` for ``u -> u(I+X)``, ``v -> v(I+Y)``.

    Columns index a real basis of skew-Hermitian X then Y; rows are real and
    imaginary parts of the flattened complex differential.
    """
    n = u.shape[0]
    uh, vh = u.conj().T, v.conj().T
    # d gamma = u X (v u* v*) - (u v) X (u* v*)  +  (u v) Y (u* v*) - (u v u*) Y v*
    a1, b1 = u, v @ uh @ vh
    a2, b2 = u @ v, uh @ vh
    a3, b3 = u @ v @ uh, vh
    kx = np.kron(a1, b1.T) - np.kron(a2, b2.T)
    ky = np.kron(a2, b2.T) - np.kron(a3, b3.T)
    basis = _skew_basis(n)
    cols = np.concatenate([kx @ basis, ky @ basis], axis=1)
    return np.concatenate([cols.real, cols.imag], axis=0)


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _skew_basis(n: int) -> np.ndarray:
    """Columns: row-major flattenings of an orthonormal real basis of skew-Hermitian n x n."""
    if n not in _BASIS_CACHE:
        cols = []
        for i in range(n):
            e = np.zeros((n, n), complex)
            e[i, i] = 1j
            cols.append(e.reshape(-1))
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n), complex)
                e[i, j], e[j, i] = 1, -1
                cols.append(e.reshape(-1) / math.sqrt(2))
                e = np.zeros((n, n), complex)
                e[i, j], e[j, i] = 1j, 1j
                cols.append(e.reshape(-1) / math.sqrt(2))
        _BASIS_CACHE[n] = np.array(cols).T
    return _BASIS_CACHE[n]


def _newton_direction(u, v, rhs):
    """Minimum-norm skew pair (X, Y) with d gamma(X, Y) ~ rhs."""
    n = u.shape[0]
    jac = _commutator_jacobian(u, v)
    b = np.concatenate([rhs.reshape(-1).real, rhs.reshape(-1).imag])
    sol, *_ = np.linalg.lstsq(jac, b, rcond=1e-10)
    basis = _skew_basis(n)
    k = basis.shape[1]
    x = (basis @ sol[:k]).reshape(n, n)
    y = (basis @ sol[k:]).reshape(n, n)
    return x, y


def _move(u, v, x, y, s=1.0):
    eye = np.eye(u.shape[0])
    return nearest_unitary(u @ (eye + s * x)), nearest_unitary(v @ (eye + s * y))


def _residual(u, v, c):
    return operator_norm(commutator(u, v) - c)


def _correct(u, v, c, target, iters):
    """Damped Gauss-Newton on ``gamma(u, v) = c``.  Returns the best pair found."""
    res = _residual(u, v, c)
    for _ in range(iters):
        if res <= target:
            break
        x, y = _newton_direction(u, v, c - commutator(u, v))
        s = 1.0
        improved = False
        while s > 1e-4:
            u2, v2 = _move(u, v, x, y, s)
            r2 = _residual(u2, v2, c)
            if r2 < res:
                u, v, res = u2, v2, r2
                improved = True
                break
            s *= 0.5
        if not improved:
            break
    return u, v, res


def validate_c_path(c_path, u0, v0, delta, max_gap):
    cs = [as_matrix(c) for c in c_path]
    if not cs:
        raise LiftError("c_path is empty")
    n = u0.shape[0]
    for k, c in enumerate(cs):
        if c.shape != (n, n):
            raise LiftError(f"c_path sample {k} has shape {c.shape}, expected {(n, n)}")
        try:
            check_unitary(c, 1e-8)
        except NumericsError as exc:
            raise LiftError(f"c_path sample {k}: {exc}") from None
    if n == 1 and any(abs(c[0, 0] - 1) > 1e-12 for c in cs):
        raise LiftError("n = 1: commutators are trivial, a nonconstant target path cannot be lifted")
    for k, c in enumerate(cs):
        if abs(np.linalg.det(c) - 1) > 1e-8:
            raise LiftError(f"c_path sample {k} is not special unitary (det = {np.linalg.det(c):.6g})")
    r0 = _residual(u0, v0, cs[0])
    if r0 > delta / 10:
        raise LiftError(f"initial residual {r0:.3e} exceeds delta/10 = {delta / 10:.3e}")
    for k in range(1, len(cs)):
        gap = operator_norm(cs[k] - cs[k - 1])
        if gap > max_gap:
            raise LiftError(
                f"sampling too coarse: gap between samples {k - 1} and {k} is {gap:.4g} > {max_gap:.4g}"
            )
    return cs


def lift_commutator_path(u0, v0, c_path, delta: float, config: LiftConfig | None = None,
                         times=None) -> ContinuationResult:
    """Follow ``c_path`` (special unitaries starting at ``gamma(u0, v0)``) with pairs ``(u_t, v_t)``.

    Predictor: linearized step toward the next sample.  Corrector: damped
    Gauss-Newton with polar retraction until the residual is below
    ``corrector_fraction * delta``.  On a stall the pair gets a seeded random
    skew kick of size ``delta / 10`` and the sample is retried.
    """
    cfg = config or LiftConfig()
    u = as_matrix(u0)
    v = as_matrix(v0)
    cs = validate_c_path(c_path, u, v, delta, cfg.max_gap)
    ts = np.linspace(0.0, 1.0, len(cs)) if times is None else np.asarray(times, float)
    rng = np.random.default_rng(cfg.seed)
    n = u.shape[0]
    target = cfg.corrector_fraction * delta

    r0 = _residual(u, v, cs[0])
    path = [(float(ts[0]), u.copy(), v.copy())]
    residuals = [r0]
    for k in range(1, len(cs)):
        c_prev, c = cs[k - 1], cs[k]
        here = _residual(u, v, c)
        if here <= target:
            path.append((float(ts[k]), u.copy(), v.copy()))
            residuals.append(here)
            continue
        x, y = _newton_direction(u, v, c - c_prev)
        up, vp = _move(u, v, x, y)
        u1, v1, res = _correct(up, vp, c, target, cfg.corrector_iters)
        tries = 0
        while res >= delta and tries < cfg.retries:
            tries += 1
            ku = random_skew(n, rng, delta / 10) if n > 1 else np.zeros((n, n))
            kv = random_skew(n, rng, delta / 10) if n > 1 else np.zeros((n, n))
            ub, vb = _move(u, v, ku, kv)
            x, y = _newton_direction(ub, vb, c - commutator(ub, vb))
            up, vp = _move(ub, vb, x, y)
            u1, v1, res = _correct(up, vp, c, target, cfg.corrector_iters)
        if res >= delta:
            return ContinuationResult(path, residuals, max(residuals), "stalled", float(ts[k]))
        u, v = u1, v1
        path.append((float(ts[k]), u.copy(), v.copy()))
        residuals.append(res)
    return ContinuationResult(path, residuals, max(residuals), "success")


def su_log_traceless(c) -> tuple[np.ndarray, np.ndarray]:
    """Eigenbasis ``Z`` and phases ``theta`` (summing to 0) with ``c = Z diag(e^{i theta}) Z*``."""
    prof, z = unitary_eigensystem(c)
    theta = np.angle(prof.eigenvalues)
    k = int(round(theta.sum() / (2 * np.pi)))
    order = np.argsort(theta)
    if k > 0:
        theta[order[-k:]] -= 2 * np.pi
    elif k < 0:
        theta[order[:-k]] += 2 * np.pi
    return z, theta


def su_geodesic_to_identity(c0, samples: int) -> list[np.ndarray]:
    """One-parameter subgroup path in SU(n) from ``c0`` to ``I`` with ``samples`` points."""
    c0 = as_matrix(c0)
    z, theta = su_log_traceless(c0)
    out = [c0.copy()]
    for s in np.linspace(0.0, 1.0, samples)[1:-1]:
        out.append((z * np.exp(1j * (1 - s) * theta)) @ z.conj().T)
    if samples > 1:
        out.append(identity(c0.shape[0]))
    return out


def geodesic_samples_for(c0, max_gap: float, minimum: int = 2) -> int:
    _, theta = su_log_traceless(c0)
    length = float(np.max(np.abs(theta))) if theta.size else 0.0
    return max(minimum, int(math.ceil(length / max_gap)) + 1)


# --------------------------------------------------------------------------
# commuting pairs to the identity


def drive_commuting_pair_to_identity(u, v, step: float = 0.05, rng=None):
    """Path from a commuting pair to ``(I, I)``: joint diagonalization, then phase contraction.

    Returns a list of ``(u_s, v_s)``; the last entry is exactly ``(I, I)``.
    """
    u = as_matrix(u)
    v = as_matrix(v)
    n = u.shape[0]
    rng = rng or np.random.default_rng(0)
    mix = 0.5 + rng.uniform(0.1, 0.4)
    # a generic combination of a commuting normal pair is normal with the joint eigenbasis
    _, w = sla.schur(u + mix * v, output="complex")
    du = np.diag(w.conj().T @ u @ w)
    dv = np.diag(w.conj().T @ v @ w)
    th_u = np.angle(du)
    th_v = np.angle(dv)
    ud = (w * np.exp(1j * th_u)) @ w.conj().T
    vd = (w * np.exp(1j * th_v)) @ w.conj().T
    path = []
    gap = max(operator_norm(ud - u), operator_norm(vd - v))
    m = max(1, int(math.ceil(gap / step)))
    for s in np.linspace(0, 1, m + 1)[1:]:
        path.append((nearest_unitary((1 - s) * u + s * ud), nearest_unitary((1 - s) * v + s * vd)))
    span = float(max(np.max(np.abs(th_u)), np.max(np.abs(th_v)), 0.0))
    m = max(1, int(math.ceil(span / step)))
    for s in np.linspace(0, 1, m + 1)[1:]:
        path.append(((w * np.exp(1j * (1 - s) * th_u)) @ w.conj().T,
                     (w * np.exp(1j * (1 - s) * th_v)) @ w.conj().T))
    path[-1] = (identity(n), identity(n))
    return path


# --------------------------------------------------------------------------
# surface groups


class SurfaceReductionError(RuntimeError):
    def __init__(self, message: str, stage: int):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


def _surface_genus(p: GroupPresentation) -> int:
    m = p.rank // 2
    if m < 1 or p != surface_group(m):
        raise PresentationError(f"expected a surface-group presentation, got {p.name}")
    return m


@dataclass
class SurfaceConfig:
    max_gap: float = 0.05
    lift: LiftConfig = field(default_factory=LiftConfig)
    commute_tol: float = 1e-13
    commute_budget: int = 5000
    drive_step: float = 0.05
    seed: int = 0


def surface_reduce(rep: AlmostRep, delta: float | None = None,
                   config: SurfaceConfig | None = None) -> FlowTrace:
    """Deform a surface-group almost representation so that handles 2..m become ``(I, I)``.

    Stage ``i`` (from ``m`` down to 2) lifts a path taking ``gamma(u_i, v_i)``
    to ``I`` while handle ``i-1`` follows the compensating path that keeps
    ``gamma_{i-1} gamma_i`` fixed; handle ``i`` is then made exactly
    commuting and contracted to the identity.  ``delta`` is the per-handle
    lift tolerance, defaulting to ``eps / (2m)``.
    """
    cfg = config or SurfaceConfig()
    p = rep.presentation
    m = _surface_genus(p)
    if m < 2:
        raise ValueError("surface reduction needs genus >= 2")
    eps = max_defect(rep)
    if eps > 0.2:
        raise ValueError(f"initial defect {eps:.4g} exceeds 0.2")
    if delta is None:
        delta = max(eps / (2 * m), 1e-9)
    n = rep.dimension
    eye = identity(n)
    comp = _Compiled(p)
    rng = np.random.default_rng(cfg.seed)
    mats = dict(rep.matrices)

    samples = [FlowSample(0.0, rep, eps, comp.objective(comp.stack(rep)))]
    t_offset = 0.0

    def push(t, new_mats):
        r = AlmostRep(p, dict(new_mats))
        samples.append(FlowSample(t, r, max_defect(r), comp.objective(comp.stack(r))))

    def is_identity(g):
        return operator_norm(mats[f"a{g}"] - eye) <= 1e-12 and operator_norm(mats[f"b{g}"] - eye) <= 1e-12

    for i in range(m, 1, -1):
        if is_identity(i):
            continue
        ai, bi, aj, bj = f"a{i}", f"b{i}", f"a{i-1}", f"b{i-1}"
        g_i = commutator(mats[ai], mats[bi])
        g_j = commutator(mats[aj], mats[bj])
        count = geodesic_samples_for(g_i, cfg.max_gap, minimum=3)
        c_i = su_geodesic_to_identity(g_i, count)
        fixed = g_j @ g_i
        c_j = [g_j] + [fixed @ c.conj().T for c in c_i[1:]]
        lift_cfg = LiftConfig(**{**cfg.lift.__dict__, "max_gap": 4 * cfg.max_gap,
                                 "seed": int(rng.integers(2**31))})
        res_i = lift_commutator_path(mats[ai], mats[bi], c_i, delta, lift_cfg)
        if not res_i.success:
            raise SurfaceReductionError(f"lift of handle {i} stalled at t={res_i.stalled_at}", i)
        res_j = lift_commutator_path(mats[aj], mats[bj], c_j, delta, lift_cfg)
        if not res_j.success:
            raise SurfaceReductionError(f"lift of handle {i-1} stalled at t={res_j.stalled_at}", i)
        for (t, ui, vi), (_, uj, vj) in zip(res_i.lifted_path[1:], res_j.lifted_path[1:]):
            mats.update({ai: ui, bi: vi, aj: uj, bj: vj})
            push(t_offset + t, mats)
        t_offset += 1.0

        # make handle i commute exactly
        pair = AlmostRep(free_abelian(2), {"x1": mats[ai], "x2": mats[bi]})
        ftrace = flow_minimize(pair, FlowConfig(budget=cfg.commute_budget,
                                                tolerance=cfg.commute_tol, stride=1))
        if ftrace.status != CONVERGED:
            raise SurfaceReductionError(f"handle {i} did not reach a commuting pair ({ftrace.status})", i)
        span = max(ftrace.final.t, 1e-12)
        for s in ftrace.samples[1:]:
            mats.update({ai: s.rep["x1"], bi: s.rep["x2"]})
            push(t_offset + 0.5 * s.t / span, mats)
        t_offset += 0.5

        drive = drive_commuting_pair_to_identity(mats[ai], mats[bi], cfg.drive_step, rng)
        for k, (ud, vd) in enumerate(drive, start=1):
            mats.update({ai: ud, bi: vd})
            push(t_offset + 0.5 * k / len(drive), mats)
        t_offset += 0.5

    return FlowTrace(samples, CONVERGED, len(samples) - 1)


# --------------------------------------------------------------------------
# invariant tracking along traces


@dataclass
class PathInvariantReport:
    winding_values: list[int | None]
    halfplane_values: list[int | None]
    violation_index: int | None
    reason: str = ""

    @property
    def constant(self) -> bool:
        return self.violation_index is None

    def __str__(self):
        return "constant" if self.constant else f"violation at index {self.violation_index}: {self.reason}"


def check_path_invariants(trace: FlowTrace, pair: tuple[str, str] | None = None,
                          involution: str | None = None,
                          certificate: float = 0.05) -> PathInvariantReport:
    """Check that the winding of ``pair`` and the half-plane count of ``involution`` never jump."""
    winds: list[int | None] = []
    halves: list[int | None] = []
    violation = None
    reason = ""
    last_w = last_h = None
    for k, s in enumerate(trace.samples):
        w = h = None
        if pair is not None:
            w = try_winding(s.rep[pair[0]], s.rep[pair[1]])
        if involution is not None:
            hc = halfplane_count(s.rep[involution])
            h = hc.count if hc.min_abs_real > certificate else None
        winds.append(w)
        halves.append(h)
        if violation is None:
            if w is not None and last_w is not None and w != last_w:
                violation, reason = k, f"winding changed {last_w} -> {w}"
            elif h is not None and last_h is not None and h != last_h:
                violation, reason = k, f"half-plane count changed {last_h} -> {h}"
        last_w = w if w is not None else last_w
        last_h = h if h is not None else last_h
    return PathInvariantReport(winds, halves, violation, reason)


def constant_trace(rep: AlmostRep, length: int = 3) -> FlowTrace:
    comp = _Compiled(rep.presentation)
    f = comp.objective(comp.stack(rep))
    d = max_defect(rep)
    return FlowTrace([FlowSample(float(k), rep, d, f) for k in range(length)], CONVERGED, 0)

