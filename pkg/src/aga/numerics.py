"""Dense unitary-matrix helpers: norms, polar retraction, spectra, logarithms.

Matrices are plain complex ``numpy`` arrays.  Functions that need unitarity
check it with :func:`check_unitary` instead of wrapping arrays in a class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

UNITARITY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-8
SINGULARITY_FLOOR = 1e-12
TWO_PI = 2 * np.pi


class NumericsError(ValueError):
    pass


class BranchCutError(NumericsError):
    """An eigenvalue sits on (or too close to) the branch cut at -1."""

    def __init__(self, message: str, eigenvalue: complex):
        super().__init__(message)
        self.eigenvalue = eigenvalue


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericsError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericsError("matrix has non-finite entries")
    return a


def operator_norm(m) -> float:
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(as_matrix(m), "fro"))


def unitarity_defect(u) -> float:
    a = as_matrix(u)
    return operator_norm(a.conj().T @ a - np.eye(a.shape[0]))


def check_unitary(u, tol: float = UNITARITY_TOL) -> np.ndarray:
    a = as_matrix(u)
    d = unitarity_defect(a)
    if d > tol:
        raise NumericsError(f"matrix is not unitary: ||U*U - I|| = {d:.3e} > {tol:.1e}")
    return a


def nearest_unitary(m) -> np.ndarray:
    """Unitary polar factor of ``m`` (closest unitary in Frobenius norm)."""
    a = as_matrix(m)
    w, s, vh = np.linalg.svd(a)
    if a.size and s[-1] <= SINGULARITY_FLOOR:
        raise NumericsError(f"matrix is (nearly) singular: smallest singular value {s[-1]:.3e}")
    return w @ vh


def skew_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m - m.conj().T)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_skew(n: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """Random skew-Hermitian matrix scaled to the given operator norm."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = skew_part(z)
    return s * (norm / operator_norm(s))


@dataclass(frozen=True)
class SpectralProfile:
    """Eigenphases in [0, 2*pi), ascending, with repetition."""

    phases: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def __len__(self):
        return len(self.phases)


def _normal_schur(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Complex Schur form of a normal matrix is diagonal, and Z is unitary
    # even when eigenvalues are degenerate.
    t, z = sla.schur(u, output="complex")
    return np.diag(t).copy(), z


def unitary_eigensystem(u) -> tuple[SpectralProfile, np.ndarray]:
    """Return ``(profile, V)`` with ``u = V diag(exp(i*phases)) V*``."""
    a = as_matrix(u)
    lam, z = _normal_schur(a)
    phases = np.mod(np.angle(lam), TWO_PI)
    phases[phases >= TWO_PI] = 0.0
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    v = z[:, order]
    residual = operator_norm(v @ np.diag(np.exp(1j * phases)) @ v.conj().T - a) if a.size else 0.0
    if residual > RECONSTRUCTION_TOL * max(1.0, operator_norm(a)):
        raise NumericsError(f"eigendecomposition residual {residual:.3e} too large (is the input unitary?)")
    return SpectralProfile(phases), v


def eigenphases(u) -> np.ndarray:
    return unitary_eigensystem(u)[0].phases


def principal_log_unitary(u, gap_margin: float = 1e-6) -> np.ndarray:
    """Skew-Hermitian ``L`` with ``expm(L) = u`` and eigenvalue phases in (-pi, pi).

    Raises :class:`BranchCutError` when an eigenvalue lies within angular
    distance ``gap_margin`` of -1.
    """
    a = as_matrix(u)
    lam, z = _normal_schur(a)
    theta = np.angle(lam)
    if theta.size:
        k = int(np.argmax(np.abs(theta)))
        if np.pi - abs(theta[k]) < gap_margin:
            raise BranchCutError(
                f"eigenvalue {lam[k]:.6g} within {gap_margin:g} of the branch cut at -1",
                complex(lam[k]),
            )
    log = z @ np.diag(1j * theta) @ z.conj().T
    return skew_part(log)


def direct_sum(a, b) -> np.ndarray:
    return sla.block_diag(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)).astype(complex)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def matrix_to_json(m) -> dict:
    a = as_matrix(m)
    flat = a.reshape(-1)
    return {"n": int(a.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        n = int(obj["n"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise NumericsError(f"matrix JSON needs 'n' and 'entries': {exc}") from None
    if n < 0 or len(entries) != n * n:
        raise NumericsError(f"matrix JSON: expected {n * n} entries, got {len(entries)}")
    vals = np.array([complex(re, im) for re, im in entries], dtype=complex)
    return as_matrix(vals.reshape(n, n))
