"""Homotopy obstructions for almost representations.

* winding number of an almost-commuting pair (normalized trace of the
  principal log of the multiplicative commutator),
* spectral lacunae and half-plane eigenvalue counts,
* rounding a near-involution to an exact one,
* the trace bookkeeping that rules out deforming the winding-one family.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .numerics import (
    TWO_PI,
    NumericsError,
    as_matrix,
    eigenphases,
    operator_norm,
    principal_log_unitary,
    unitary_eigensystem,
)

SNAP_THRESHOLD = 0.1


def commutator(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``u v u^-1 v^-1`` for unitaries."""
    u = as_matrix(u)
    v = as_matrix(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch {u.shape} vs {v.shape}")
    return u @ v @ u.conj().T @ v.conj().T


@dataclass(frozen=True)
class WindingReport:
    value: int
    commutator_distance: float
    raw_trace: float
    reliable: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def winding_number(u, v, gap_margin: float = 1e-6) -> WindingReport:
    """Winding number of the pair ``(u, v)``.

    Raises :class:`~aga.numerics.BranchCutError` if the commutator has an
    eigenvalue at (or within ``gap_margin`` of) -1; the invariant is
    undefined there.
    """
    g = commutator(u, v)
    dist = operator_norm(g - np.eye(g.shape[0]))
    log = principal_log_unitary(g, gap_margin)
    tr = np.trace(log) / (2j * np.pi)
    if abs(tr.imag) > 1e-8:
        raise NumericsError(f"normalized log-trace not real: {tr}")
    raw = float(tr.real)
    value = int(round(raw))
    return WindingReport(value, dist, raw, abs(raw - value) <= SNAP_THRESHOLD)


def try_winding(u, v) -> int | None:
    """Winding value, or ``None`` when undefined or unreliable."""
    try:
        rep = winding_number(u, v)
    except NumericsError:
        return None
    return rep.value if rep.reliable else None


def spectral_lacuna(u) -> tuple[float, float]:
    """Largest circular gap between eigenphases and the midpoint angle of that gap."""
    phases = eigenphases(u)
    if len(phases) == 0:
        raise ValueError("empty matrix has no spectrum")
    gaps = np.diff(phases, append=phases[0] + TWO_PI)
    k = int(np.argmax(gaps))
    gap = float(gaps[k])
    return gap, float(np.mod(phases[k] + gap / 2, TWO_PI))


@dataclass(frozen=True)
class HalfplaneCount:
    count: int
    min_abs_real: float

    def __int__(self):
        return self.count


def halfplane_count(u) -> HalfplaneCount:
    """Number of eigenvalues with negative real part, and ``min |Re lambda|`` as a stability certificate."""
    re = np.cos(eigenphases(u))
    if re.size == 0:
        return HalfplaneCount(0, np.inf)
    return HalfplaneCount(int(np.sum(re < 0)), float(np.min(np.abs(re))))


def round_involution(u, eps_prime: float | None = None) -> np.ndarray:
    """Snap every eigenvalue of ``u`` to +1 or -1 by the sign of its real part.

    Requires ``|lambda^2 - 1| <= 1`` for every eigenvalue.  ``eps_prime`` is
    optional: when given, also checks that the result lies within it.
    """
    prof, v = unitary_eigensystem(u)
    lam = prof.eigenvalues
    bad = np.abs(lam**2 - 1) > 1 + 1e-12
    if np.any(bad):
        z = lam[np.argmax(bad)]
        raise ValueError(f"eigenvalue {z:.6g} violates |lambda^2 - 1| <= 1")
    signs = np.where(lam.real > 0, 1.0, -1.0)
    r = (v * signs) @ v.conj().T
    if eps_prime is not None:
        d = operator_norm(as_matrix(u) - r)
        if d > eps_prime:
            raise ValueError(f"rounded involution is {d:.3e} away, more than eps'={eps_prime}")
    return r


@dataclass(frozen=True)
class ObstructionReport:
    n_small: int
    m_pad: int
    eps_prime: float
    trace_abs: float
    lower_bound: float
    N_count: int
    upper_bound: float
    contradiction: bool
    max_diag_term: float
    anticommute_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def trace_obstruction(a_mat, b_inv, n_small: int, m_pad: int, eps_prime: float) -> ObstructionReport:
    """Trace bounds for an involution against a unitary with spread-out spectrum.

    In the eigenbasis ``w_j`` of ``a_mat``: ``N`` counts ``|Im w_j| > 2 eps'``,
    the lower bound on ``|tr b|`` is ``m - n`` and the upper bound is
    ``n + m - N/4``.  ``max_diag_term`` is ``max_i |b_ii (w_i - conj w_i)|``
    and ``anticommute_residual`` is ``||a b a b - I||`` for auditing the
    diagonal estimate.
    """
    a = as_matrix(a_mat)
    b = as_matrix(b_inv)
    dim = n_small + m_pad
    if a.shape != b.shape or a.shape[0] != dim:
        raise ValueError(f"matrices must both be {dim}x{dim}, got {a.shape} and {b.shape}")
    if eps_prime <= 0:
        raise ValueError("eps_prime must be positive")
    inv_err = operator_norm(b @ b - np.eye(dim))
    if inv_err > 1e-8:
        raise ValueError(f"b_inv is not an involution: ||b^2 - I|| = {inv_err:.3e}")

    prof, v = unitary_eigensystem(a)
    w = prof.eigenvalues
    n_count = int(np.sum(np.abs(w.imag) > 2 * eps_prime))
    b_diag = np.diag(v.conj().T @ b @ v)
    max_diag = float(np.max(np.abs(b_diag * (w - w.conj()))))
    lower = float(m_pad - n_small)
    upper = float(dim - n_count / 4)
    return ObstructionReport(
        n_small=n_small,
        m_pad=m_pad,
        eps_prime=float(eps_prime),
        trace_abs=float(abs(np.trace(b))),
        lower_bound=lower,
        N_count=n_count,
        upper_bound=upper,
        contradiction=lower > upper,
        max_diag_term=max_diag,
        anticommute_residual=operator_norm(a @ b @ a @ b - np.eye(dim)),
    )
