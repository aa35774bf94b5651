"""Almost representations of finitely presented groups by unitary matrices."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg as sla

from .numerics import (
    UNITARITY_TOL,
    as_matrix,
    check_unitary,
    direct_sum,
    identity,
    matrix_from_json,
    matrix_to_json,
    operator_norm,
    random_skew,
    random_unitary,
    unitary_eigensystem,
)
from .presentation import (
    GroupPresentation,
    PresentationError,
    PresentationMorphism,
    Word,
    gamma_no_aga,
    parse_presentation,
    serialize_presentation,
    surface_group,
)


@dataclass(frozen=True)
class AlmostRep:
    """One ``n x n`` unitary per generator of ``presentation``."""

    presentation: GroupPresentation
    matrices: Mapping[str, np.ndarray]

    def __post_init__(self):
        gens = self.presentation.generators
        if set(self.matrices) != set(gens):
            raise PresentationError(
                f"assignment keys {sorted(self.matrices)} do not match generators {list(gens)}"
            )
        mats = {}
        dims = set()
        for g in gens:
            m = as_matrix(self.matrices[g])
            dims.add(m.shape[0])
            mats[g] = m
        if len(dims) > 1:
            raise ValueError(f"generator matrices have different sizes {sorted(dims)}")
        if gens and 0 in dims:
            raise ValueError("dimension must be positive")
        object.__setattr__(self, "matrices", mats)

    @property
    def dimension(self) -> int:
        if not self.presentation.generators:
            return 0
        return self.matrices[self.presentation.generators[0]].shape[0]

    def __getitem__(self, g: str) -> np.ndarray:
        return self.matrices[g]

    def with_matrices(self, **updates: np.ndarray) -> "AlmostRep":
        mats = dict(self.matrices)
        mats.update(updates)
        return AlmostRep(self.presentation, mats)

    def check_unitary(self, tol: float = UNITARITY_TOL) -> None:
        for m in self.matrices.values():
            check_unitary(m, tol)


@dataclass(frozen=True)
class DefectReport:
    per_relator: tuple[tuple[int, float], ...]
    max_deviation: float


def evaluate_word(rep: AlmostRep, w: Word) -> np.ndarray:
    n = rep.dimension
    out = identity(n)
    for g, e in w.letters:
        try:
            m = rep.matrices[g]
        except KeyError:
            raise PresentationError(f"letter {g!r} is not a generator of {rep.presentation.name}") from None
        out = out @ (m if e == 1 else m.conj().T)
    return out


def relator_deviations(rep: AlmostRep) -> list[float]:
    eye = identity(rep.dimension)
    return [operator_norm(evaluate_word(rep, r) - eye) for r in rep.presentation.relators]


def defect(rep: AlmostRep) -> DefectReport:
    devs = relator_deviations(rep)
    return DefectReport(tuple(enumerate(devs)), max(devs, default=0.0))


def max_defect(rep: AlmostRep) -> float:
    return defect(rep).max_deviation


def voiculescu_matrices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(a, b, c)``: phase clock diag(w, ..., w^n), anti-diagonal flip, cyclic shift."""
    if n < 2:
        raise ValueError(f"Voiculescu family needs n >= 2, got {n}")
    k = np.arange(1, n + 1)
    a = np.diag(np.exp(2j * np.pi * k / n))
    # shift: e_i -> e_{i+1 mod n}, i.e. ones on the subdiagonal and top-right corner
    c = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    b = np.fliplr(np.eye(n, dtype=complex))
    return a, b, c


def voiculescu_family(n: int) -> AlmostRep:
    a, b, c = voiculescu_matrices(n)
    return AlmostRep(gamma_no_aga(), {"a": a, "b": b, "c": c})


def pushforward(rep: AlmostRep, phi: PresentationMorphism) -> AlmostRep:
    """Evaluate each target generator's image word on ``rep``."""
    if phi.source != rep.presentation:
        raise PresentationError("morphism source does not match the representation's presentation")
    return AlmostRep(phi.target, {h: evaluate_word(rep, w) for h, w in phi.images.items()})


def pad_with_identity(rep: AlmostRep, m: int) -> AlmostRep:
    if m < 0:
        raise ValueError("padding must be nonnegative")
    if m == 0:
        return rep
    eye = identity(m)
    return AlmostRep(rep.presentation, {g: direct_sum(u, eye) for g, u in rep.matrices.items()})


def minimal_dimension(rep: AlmostRep, tol: float = 1e-10) -> int:
    """Size left after stripping the largest common trailing identity block."""
    n = rep.dimension
    k = n
    while k > 0:
        ok = True
        for u in rep.matrices.values():
            # the (k-1)-th basis vector must be fixed and decoupled from the rest
            row = u[k - 1, :k].copy()
            col = u[:k, k - 1].copy()
            row[k - 1] -= 1
            col[k - 1] -= 1
            if np.max(np.abs(row)) > tol or np.max(np.abs(col)) > tol:
                ok = False
                break
        if not ok:
            break
        k -= 1
    return k


def direct_sum_reps(r1: AlmostRep, r2: AlmostRep) -> AlmostRep:
    if r1.presentation != r2.presentation:
        raise PresentationError("direct sum needs a common presentation")
    return AlmostRep(
        r1.presentation, {g: direct_sum(r1[g], r2[g]) for g in r1.presentation.generators}
    )


def conjugate(rep: AlmostRep, w: np.ndarray) -> AlmostRep:
    """``g -> W rep(g) W*`` for every generator."""
    wh = w.conj().T
    return AlmostRep(rep.presentation, {g: w @ u @ wh for g, u in rep.matrices.items()})


def perturb(rep: AlmostRep, magnitude: float, seed: int) -> AlmostRep:
    """Right-multiply each generator by ``expm(S)``, ``S`` random skew with ``||S|| = magnitude``."""
    if not 0 < magnitude < 0.5:
        raise ValueError(f"perturbation magnitude must lie in (0, 0.5), got {magnitude}")
    rng = np.random.default_rng(seed)
    n = rep.dimension
    mats = {}
    for g in rep.presentation.generators:
        s = random_skew(n, rng, magnitude)
        mats[g] = rep[g] @ sla.expm(s)
    return AlmostRep(rep.presentation, mats)


def random_commuting_rep(p: GroupPresentation, n: int, rng: np.random.Generator) -> AlmostRep:
    """Genuine representation: all generators diagonal in one random basis.

    Only valid for presentations whose relators vanish in the abelianization
    with arbitrary phases (free abelian, surface and free groups).
    """
    w = random_unitary(n, rng)
    mats = {}
    for g in p.generators:
        phases = rng.uniform(0, 2 * np.pi, n)
        mats[g] = (w * np.exp(1j * phases)) @ w.conj().T
    return AlmostRep(p, mats)


def random_rep(p: GroupPresentation, n: int, rng: np.random.Generator) -> AlmostRep:
    return AlmostRep(p, {g: random_unitary(n, rng) for g in p.generators})


def rep_to_json(rep: AlmostRep) -> dict:
    return {
        "presentation": serialize_presentation(rep.presentation),
        "n": rep.dimension,
        "assignment": {g: matrix_to_json(rep[g]) for g in rep.presentation.generators},
    }


def rep_from_json(obj: dict) -> AlmostRep:
    p = parse_presentation(obj["presentation"])
    rep = AlmostRep(p, {g: matrix_from_json(m) for g, m in obj["assignment"].items()})
    if "n" in obj and int(obj["n"]) != rep.dimension:
        raise ValueError(f"declared n={obj['n']} but matrices have size {rep.dimension}")
    return rep


def dump_rep(rep: AlmostRep) -> str:
    return json.dumps(rep_to_json(rep))


def load_rep(text: str) -> AlmostRep:
    return rep_from_json(json.loads(text))


def _commuting_twist(u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A random unitary function of ``u`` (same eigenvectors, fresh phases)."""
    _, w = unitary_eigensystem(u)
    return (w * np.exp(1j * rng.uniform(0, 2 * np.pi, u.shape[0]))) @ w.conj().T


def random_surface_rep(genus: int, n: int, rng: np.random.Generator) -> AlmostRep:
    """Genuine representation of the genus-``genus`` surface group with non-commuting handles.

    Handles are paired up so their commutators cancel: ``gamma(x, y)`` is
    unchanged by ``x -> x f(y)`` and ``y -> y g(x)``, and ``gamma(y, x)`` inverts
    ``gamma(x, y)``.  An odd last handle is a random commuting pair.
    """
    p = surface_group(genus)
    mats: dict[str, np.ndarray] = {}
    i = 1
    while i + 1 <= genus:
        x, y = random_unitary(n, rng), random_unitary(n, rng)
        # handle i+1 = (x, y); handle i = (y f(x), x g(y f(x)))
        u = y @ _commuting_twist(x, rng)
        v = x @ _commuting_twist(u, rng)
        mats.update({f"a{i}": u, f"b{i}": v, f"a{i+1}": x, f"b{i+1}": y})
        i += 2
    if i == genus:
        w = random_unitary(n, rng)
        for name in (f"a{i}", f"b{i}"):
            mats[name] = (w * np.exp(1j * rng.uniform(0, 2 * np.pi, n))) @ w.conj().T
    return AlmostRep(p, mats)


def perturb_to_defect(rep: AlmostRep, target: float, seed: int, tol: float = 1e-9) -> AlmostRep:
    """Scale one seeded random skew perturbation so the defect hits ``target``.

    Bisection on the perturbation size in (0, 0.49]; ``rep`` should be a
    genuine (or nearly genuine) representation.
    """
    rng = np.random.default_rng(seed)
    n = rep.dimension
    dirs = {g: random_skew(n, rng, 1.0) for g in rep.presentation.generators}

    def at(s):
        return AlmostRep(rep.presentation, {g: rep[g] @ sla.expm(s * dirs[g]) for g in dirs})

    lo, hi = 0.0, 0.49
    if max_defect(at(hi)) < target:
        raise ValueError(f"cannot reach defect {target} with perturbations below 0.5")
    if max_defect(at(lo)) > target:
        raise ValueError("representation already exceeds the target defect")
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        d = max_defect(at(mid))
        if abs(d - target) <= tol:
            return at(mid)
        if d < target:
            lo = mid
        else:
            hi = mid
    return at(hi)
