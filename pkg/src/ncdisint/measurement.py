"""Projective measurement of a Hermitian observable and retrodiction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .algebra import commutative_algebra, density_state, matrix_algebra
from .classical import FinProb
from .disintegration import (
    Certificate,
    DisintegrationResult,
    make_problem,
    verify_disintegration,
)
from .errors import InvalidStateError
from .linalg import DEFAULT_TOL, Tolerance
from .maps import BlockMap, BratteliHom


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray
    spectrum: np.ndarray
    projectors: tuple[np.ndarray, ...]
    # orthonormal eigenbasis of each spectral point, columns in spectrum order
    bases: tuple[np.ndarray, ...]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def ranks(self) -> list[int]:
        return [b.shape[1] for b in self.bases]


def observable(a, tol: Tolerance = DEFAULT_TOL) -> Observable:
    """Spectral decomposition with eigenvalues closer than ``100 eps_rank`` merged."""
    a = linalg.as_matrix(a)
    w, v = linalg.eigh(a, tol)
    groups: list[list[int]] = []
    for k in range(len(w)):
        if groups and w[groups[-1][-1]] - w[k] <= 100 * tol.eps_rank:
            groups[-1].append(k)
        else:
            groups.append([k])
    spectrum = np.array([float(np.mean(w[g])) for g in groups])
    bases = tuple(v[:, g] for g in groups)
    projectors = tuple(b @ linalg.dagger(b) for b in bases)
    return Observable(a, spectrum, projectors, bases)


def spectral_hom(obs: Observable) -> BratteliHom:
    """``C^{spectrum} -> M_m``, ``e_lambda -> P_lambda``."""
    k = len(obs.spectrum)
    u = np.concatenate(obs.bases, axis=1)
    return BratteliHom(
        commutative_algebra(k), matrix_algebra(obs.size), np.array([obs.ranks]), (u,)
    )


def _density(rho, m: int, tol: Tolerance) -> np.ndarray:
    rho = linalg.as_matrix(rho)
    if rho.shape != (m, m):
        raise InvalidStateError(f"rho must be {m}x{m}")
    if not linalg.is_density(rho, tol):
        raise InvalidStateError("rho is not a density matrix")
    return rho


def outcome_distribution(obs: Observable, rho, tol: Tolerance = DEFAULT_TOL) -> FinProb:
    rho = _density(rho, obs.size, tol)
    q = np.array([np.trace(rho @ p).real for p in obs.projectors])
    return FinProb(np.clip(q, 0.0, None))


def luders(obs: Observable, rho, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    rho = _density(rho, obs.size, tol)
    return sum(p @ rho @ p for p in obs.projectors)


def measurement_disintegration(obs: Observable, rho, tol: Tolerance = DEFAULT_TOL) -> DisintegrationResult:
    """Retrodiction map ``M_m -> C^{spectrum}`` when ``rho`` is Lüders-invariant."""
    rho = _density(rho, obs.size, tol)
    m = obs.size
    gap = linalg.max_abs(rho - luders(obs, rho, tol))
    residuals = {"luders": gap}
    if gap > 10 * tol.eps_eq:
        return DisintegrationResult(False, None, None, Certificate(residuals, ("luders",)))
    q = outcome_distribution(obs, rho, tol).weights
    choi = []
    taus = []
    unconstrained = set()
    for lam, (p, basis) in enumerate(zip(obs.projectors, obs.bases)):
        # Choi of B -> tr(X B) is X^T
        if q[lam] > tol.eps_rank:
            choi.append((((p @ rho @ p) / q[lam]).T,))
            taus.append((linalg.dagger(basis) @ rho @ basis / q[lam],))
        else:
            choi.append((np.eye(m, dtype=np.complex128) / m,))
            taus.append((np.eye(basis.shape[1], dtype=np.complex128) / basis.shape[1],))
            unconstrained.add((lam, 0))
    r = BlockMap(matrix_algebra(m), commutative_algebra(len(q)), tuple(choi))
    problem = make_problem(spectral_hom(obs), density_state(rho, tol), tol=tol)
    report = verify_disintegration(problem, r, tol)
    return DisintegrationResult(
        True, r, tuple(taus), Certificate(residuals, (), report), frozenset(unconstrained)
    )


def component_states(result: DisintegrationResult) -> list[np.ndarray]:
    """Density matrices ``rho_lambda`` read back from the retrodiction map."""
    if result.map is None:
        raise ValueError("no map to read from")
    return [row[0].T for row in result.map.choi]
