"""Disintegrations of states along unital *-homomorphisms.

Given ``F: B -> A`` in Bratteli form, a state ``omega`` on ``A`` and the
induced state ``xi = omega o F`` on ``B``, a disintegration is a CPU map
``R: A -> B`` with ``xi o R = omega`` and ``R o F = id_B`` up to the null
space of ``xi``.  It exists exactly when every conjugated density block
``U_i^dagger (p_i rho_i) U_i`` is block diagonal with superblocks
``q_j tau_ji (x) sigma_j``; the ``tau_ji`` then determine ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .algebra import AlgebraElement, State, density_state, matrix_algebra, states_close
from .errors import DimensionError, IllPosedProblem, InvalidMapError, InvalidStateError
from .linalg import DEFAULT_TOL, Tolerance
from .maps import (
    BlockMap,
    BratteliHom,
    adjoint,
    ae_equal,
    ae_residual,
    apply,
    block_embedding,
    bratteli_to_blockmap,
    compose,
    conjugation_map,
    cp_residual,
    from_function,
    identity_choi,
    identity_map,
    matrix_map,
    pullback_state,
    unitality_residual,
)

TauGrid = tuple[tuple[Optional[np.ndarray], ...], ...]


@dataclass(frozen=True)
class DisintegrationProblem:
    hom: BratteliHom
    omega: State
    xi: State

    @property
    def hom_map(self) -> BlockMap:
        return bratteli_to_blockmap(self.hom)


def make_problem(
    hom: BratteliHom, omega: State, xi: Optional[State] = None, tol: Tolerance = DEFAULT_TOL
) -> DisintegrationProblem:
    """Bundle the data, computing ``xi`` or checking the one supplied.

    Raises :class:`IllPosedProblem` when a supplied ``xi`` is not ``omega o F``.
    """
    if omega.algebra != hom.target:
        raise DimensionError(f"omega lives on {omega.algebra}, hom target is {hom.target}")
    omega.validate(tol)
    induced = pullback_state(bratteli_to_blockmap(hom), omega, tol)
    if xi is None:
        return DisintegrationProblem(hom, omega, induced)
    if xi.algebra != hom.source:
        raise DimensionError(f"xi lives on {xi.algebra}, hom source is {hom.source}")
    xi.validate(tol)
    if not states_close(xi, induced, 10 * tol.eps_eq):
        raise IllPosedProblem("xi is not the pullback of omega along the homomorphism")
    return DisintegrationProblem(hom, omega, xi)


@dataclass(frozen=True)
class VerificationReport:
    cp: float
    unitality: float
    state: float
    consistency: float
    threshold: float

    @property
    def passed(self) -> bool:
        return max(self.cp, self.unitality, self.state, self.consistency) <= self.threshold

    def residuals(self) -> dict[str, float]:
        return {
            "cp": self.cp,
            "unitality": self.unitality,
            "state": self.state,
            "consistency": self.consistency,
        }


@dataclass(frozen=True)
class Certificate:
    residuals: dict[str, float]
    violations: tuple[str, ...]
    verification: Optional[VerificationReport] = None


@dataclass(frozen=True)
class DisintegrationResult:
    """Outcome of a disintegration attempt.

    ``tau[j][i]`` is ``None`` when source block ``j`` does not occur in
    target block ``i``.  Pairs listed in ``unconstrained`` belong to
    zero-weight blocks; their matrix is a placeholder.
    """

    exists: bool
    map: Optional[BlockMap]
    tau: Optional[TauGrid]
    certificate: Certificate
    unconstrained: frozenset[tuple[int, int]] = field(default_factory=frozenset)


def verify_disintegration(
    problem: DisintegrationProblem, candidate: BlockMap, tol: Tolerance = DEFAULT_TOL
) -> VerificationReport:
    """Residuals of the defining conditions; never raises on bad candidates."""
    hom = problem.hom
    if candidate.source != hom.target or candidate.target != hom.source:
        raise DimensionError("candidate must map the hom target back to the hom source")
    pulled = apply(adjoint(candidate), problem.xi.weighted_densities())
    state_res = (pulled - problem.omega.weighted_densities()).max_abs()
    consistency = ae_residual(compose(candidate, problem.hom_map), identity_map(hom.source), problem.xi)
    return VerificationReport(
        cp=cp_residual(candidate),
        unitality=unitality_residual(candidate),
        state=state_res,
        consistency=consistency,
        threshold=10 * tol.eps_eq,
    )


def uniqueness_check(
    problem: DisintegrationProblem, r1: BlockMap, r2: BlockMap, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """Two disintegrations agree a.e. and exactly on every positive-weight row."""
    if not ae_equal(r1, r2, problem.xi, tol):
        return False
    null = problem.xi.null_blocks(tol)
    for j in range(problem.hom.source.num_blocks):
        if j in null:
            continue
        for a, b in zip(r1.choi[j], r2.choi[j]):
            if linalg.max_abs(a - b) > 10 * tol.eps_eq:
                return False
    return True


def _extract_tau(superblock: np.ndarray, sigma: np.ndarray, q: float, c: int, n: int) -> np.ndarray:
    s4 = superblock.reshape(c, n, c, n)
    # (tau)_{gh} = tr(sigma S_{gh}) / (q tr sigma^2)
    num = np.einsum("ab,gbha->gh", sigma, s4)
    return num / (q * np.trace(sigma @ sigma).real)


def _failure(residuals: dict[str, float], violations: list[str]) -> DisintegrationResult:
    return DisintegrationResult(False, None, None, Certificate(residuals, tuple(violations)))


def _violations(residuals: dict[str, float], tol: Tolerance) -> list[str]:
    limits = {"reconstruction": 10 * tol.eps_eq, "psd": tol.eps_psd, "trace": 10 * tol.eps_eq}
    return [k for k, lim in limits.items() if residuals[k] > lim]


# matrix algebras -----------------------------------------------------------


def _matrix_inputs(rho, sigma, p: int, tol: Tolerance) -> tuple[np.ndarray, np.ndarray, int]:
    rho = linalg.as_matrix(rho)
    sigma = linalg.as_matrix(sigma)
    n = sigma.shape[0]
    if p < 1 or rho.shape != (p * n, p * n):
        raise DimensionError(f"rho must be {p * n}x{p * n} for p={p}, n={n}")
    if not linalg.is_density(rho, tol) or not linalg.is_density(sigma, tol):
        raise InvalidStateError("rho and sigma must be density matrices")
    if linalg.max_abs(linalg.partial_trace_left(rho, p, n) - sigma) > 10 * tol.eps_eq:
        raise IllPosedProblem("sigma is not the partial trace of rho")
    return rho, sigma, n


def disintegrate_matrix_case(rho, sigma, p: int, tol: Tolerance = DEFAULT_TOL) -> DisintegrationResult:
    """Disintegrate ``tr(rho .)`` along ``B -> I_p (x) B``."""
    rho, sigma, n = _matrix_inputs(rho, sigma, p, tol)
    tau = _extract_tau(rho, sigma, 1.0, p, n)
    residuals = {
        "reconstruction": linalg.max_abs(np.kron(tau, sigma) - rho),
        "psd": max(0.0, -linalg.min_eigenvalue(tau)),
        "trace": float(abs(np.trace(tau).real - 1.0)),
    }
    violations = _violations(residuals, tol)
    if violations:
        return _failure(residuals, violations)
    # Choi(R) = tau^T (x) Choi(id)
    r = matrix_map(np.kron(tau.T, identity_choi(n)), p * n, n)
    problem = DisintegrationProblem(block_embedding(p, n), density_state(rho, tol), density_state(sigma, tol))
    report = verify_disintegration(problem, r, tol)
    return DisintegrationResult(True, r, ((tau,),), Certificate(residuals, (), report))


def disintegrate_matrix_unitary_case(
    rho, sigma, p: int, u, tol: Tolerance = DEFAULT_TOL
) -> DisintegrationResult:
    """Same as :func:`disintegrate_matrix_case` for ``B -> U (I_p (x) B) U^dagger``."""
    u = linalg.as_matrix(u)
    if not linalg.is_unitary(u, tol):
        raise InvalidMapError("U is not unitary")
    rho = linalg.as_matrix(rho)
    if u.shape != rho.shape:
        raise DimensionError(f"U has shape {u.shape}, rho has shape {rho.shape}")
    base = disintegrate_matrix_case(linalg.dagger(u) @ rho @ u, sigma, p, tol)
    if not base.exists:
        return base
    r_u = compose(base.map, conjugation_map(linalg.dagger(u)))
    n = linalg.as_matrix(sigma).shape[0]
    hom = BratteliHom(matrix_algebra(n), matrix_algebra(p * n), np.array([[p]]), (u,))
    problem = DisintegrationProblem(hom, density_state(rho, tol), density_state(sigma, tol))
    report = verify_disintegration(problem, r_u, tol)
    cert = Certificate(base.certificate.residuals, (), report)
    return DisintegrationResult(True, r_u, base.tau, cert)


# direct sums ---------------------------------------------------------------


def disintegrate(problem: DisintegrationProblem, tol: Tolerance = DEFAULT_TOL) -> DisintegrationResult:
    hom, omega, xi = problem.hom, problem.omega, problem.xi
    s = hom.target.num_blocks
    t = hom.source.num_blocks
    c = hom.multiplicities
    null = xi.null_blocks(tol)
    rho_c = [
        linalg.dagger(u) @ blk @ u for u, blk in zip(hom.unitaries, omega.weighted_densities().blocks)
    ]

    tau: list[list[Optional[np.ndarray]]] = [[None] * s for _ in range(t)]
    unconstrained = set()
    recon = 0.0
    for i in range(s):
        expected = np.zeros_like(rho_c[i])
        for j, start, size in hom.offsets(i):
            cij = int(c[i, j])
            if cij == 0:
                continue
            if j in null:
                tau[j][i] = np.eye(cij, dtype=np.complex128) / (s * cij)
                unconstrained.add((j, i))
                continue
            n = hom.source.dims[j]
            sigma = xi.densities[j]
            q = float(xi.weights[j])
            sb = rho_c[i][start:start + size, start:start + size]
            tau[j][i] = _extract_tau(sb, sigma, q, cij, n)
            expected[start:start + size, start:start + size] = q * np.kron(tau[j][i], sigma)
        recon = max(recon, linalg.max_abs(rho_c[i] - expected))

    psd = 0.0
    for (j, i) in ((j, i) for j in range(t) for i in range(s)):
        if tau[j][i] is not None and (j, i) not in unconstrained:
            psd = max(psd, -linalg.min_eigenvalue(tau[j][i]))
    trace = 0.0
    for j in range(t):
        if j in null:
            continue
        total = sum(np.trace(tau[j][i]).real for i in range(s) if tau[j][i] is not None)
        trace = max(trace, float(abs(total - 1.0)))

    residuals = {"reconstruction": recon, "psd": psd, "trace": trace}
    violations = _violations(residuals, tol)
    if violations:
        return _failure(residuals, violations)

    grid = tuple(tuple(row) for row in tau)
    r = _build_map(hom, grid, null)
    report = verify_disintegration(problem, r, tol)
    return DisintegrationResult(True, r, grid, Certificate(residuals, (), report), frozenset(unconstrained))


def _build_map(hom: BratteliHom, tau: TauGrid, null: frozenset[int]) -> BlockMap:
    """Assemble ``R`` from the ``tau_ji``; zero-weight rows get the trace fallback."""
    s = hom.target.num_blocks

    def fn(a: AlgebraElement) -> AlgebraElement:
        out = []
        for j, n in enumerate(hom.source.dims):
            acc = np.zeros((n, n), dtype=np.complex128)
            for i, m in enumerate(hom.target.dims):
                blk = a.blocks[i]
                if j in null:
                    acc += np.trace(blk) / (s * m) * np.eye(n)
                    continue
                if tau[j][i] is None:
                    continue
                u = hom.unitaries[i]
                start = dict((jj, st) for jj, st, _ in hom.offsets(i))[j]
                cij = int(hom.multiplicities[i, j])
                ap = linalg.dagger(u) @ blk @ u
                sb = ap[start:start + cij * n, start:start + cij * n].reshape(cij, n, cij, n)
                # R_ji(A) = sum_{g,h} tau_{hg} A'_{gh}
                acc += np.einsum("hg,gahb->ab", tau[j][i], sb)
            out.append(acc)
        return AlgebraElement(hom.source, tuple(out))

    return from_function(hom.target, hom.source, fn)
