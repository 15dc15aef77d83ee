"""Linear maps between direct sums of matrix algebras.

A :class:`BlockMap` from ``M_{m_1} + ... + M_{m_s}`` to
``M_{n_1} + ... + M_{n_t}`` stores one Choi matrix per block pair.  Entry
``(j, i)`` of the grid is the ``(m_i n_j) x (m_i n_j)`` matrix

    Choi(phi_ji) = sum_{a,b} E_ab (x) phi_ji(E_ab)

with the source index on the outer Kronecker factor.  Reshaped to
``C4[a, x, b, y]`` this gives ``phi_ji(A)[x, y] = sum_ab A[a, b] C4[a, x, b, y]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .algebra import (
    Algebra,
    AlgebraElement,
    State,
    matrix_algebra,
    state_from_density,
    support,
)
from .errors import AlgebraMismatch, DimensionError, InvalidMapError
from .linalg import DEFAULT_TOL, Tolerance


# single-block Choi helpers ------------------------------------------------


def _choi4(choi: np.ndarray, m: int, n: int) -> np.ndarray:
    return choi.reshape(m, n, m, n)


def choi_apply(choi: np.ndarray, m: int, n: int, a: np.ndarray) -> np.ndarray:
    """Evaluate the map ``M_m -> M_n`` with Choi matrix ``choi`` on ``a``."""
    return np.einsum("ab,axby->xy", a, _choi4(choi, m, n))


def choi_to_superop(choi: np.ndarray, m: int, n: int) -> np.ndarray:
    """Row-major vectorized matrix ``S`` with ``vec(phi(A)) = S vec(A)``."""
    return _choi4(choi, m, n).transpose(1, 3, 0, 2).reshape(n * n, m * m)


def superop_to_choi(s: np.ndarray, m: int, n: int) -> np.ndarray:
    return s.reshape(n, n, m, m).transpose(2, 0, 3, 1).reshape(m * n, m * n)


def choi_adjoint(choi: np.ndarray, m: int, n: int) -> np.ndarray:
    """Choi matrix of the Hilbert-Schmidt adjoint ``M_n -> M_m``."""
    return np.conj(_choi4(choi, m, n).transpose(1, 0, 3, 2)).reshape(m * n, m * n)


def choi_from_kraus(ops: Sequence[np.ndarray], m: int, n: int) -> np.ndarray:
    out = np.zeros((m * n, m * n), dtype=np.complex128)
    for v in ops:
        v = linalg.as_matrix(v)
        if v.shape != (n, m):
            raise DimensionError(f"Kraus operator of shape {v.shape}, expected ({n}, {m})")
        w = v.T.reshape(-1)
        out += np.outer(w, np.conj(w))
    return out


def identity_choi(n: int) -> np.ndarray:
    """Unnormalized maximally entangled projector ``sum E_ab (x) E_ab``."""
    w = np.eye(n, dtype=np.complex128).reshape(-1)
    return np.outer(w, w)


# BlockMap -----------------------------------------------------------------


@dataclass(frozen=True)
class BlockMap:
    source: Algebra
    target: Algebra
    choi: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        grid = tuple(tuple(linalg.as_matrix(c) for c in row) for row in self.choi)
        if len(grid) != self.target.num_blocks or any(len(r) != self.source.num_blocks for r in grid):
            raise DimensionError(
                f"Choi grid must be {self.target.num_blocks}x{self.source.num_blocks}"
            )
        for j, n in enumerate(self.target.dims):
            for i, m in enumerate(self.source.dims):
                if grid[j][i].shape != (m * n, m * n):
                    raise DimensionError(
                        f"Choi block ({j}, {i}) has shape {grid[j][i].shape}, expected ({m * n}, {m * n})"
                    )
        object.__setattr__(self, "choi", grid)

    def block(self, j: int, i: int) -> np.ndarray:
        return self.choi[j][i]

    def __call__(self, a: AlgebraElement) -> AlgebraElement:
        return apply(self, a)


def apply(phi: BlockMap, a: AlgebraElement) -> AlgebraElement:
    if a.algebra != phi.source:
        raise AlgebraMismatch(f"map source {phi.source} vs element algebra {a.algebra}")
    out = []
    for j, n in enumerate(phi.target.dims):
        acc = np.zeros((n, n), dtype=np.complex128)
        for i, m in enumerate(phi.source.dims):
            acc += choi_apply(phi.choi[j][i], m, n, a.blocks[i])
        out.append(acc)
    return AlgebraElement(phi.target, tuple(out))


def from_function(
    source: Algebra, target: Algebra, fn: Callable[[AlgebraElement], AlgebraElement]
) -> BlockMap:
    """Tabulate a linear map by evaluating it on matrix units."""
    grid = [
        [np.zeros((m * n, m * n), dtype=np.complex128) for m in source.dims]
        for n in target.dims
    ]
    for (i, a, b), e in source.matrix_units():
        img = fn(e)
        if img.algebra != target:
            raise AlgebraMismatch(f"function returned an element of {img.algebra}, expected {target}")
        m = source.dims[i]
        eab = linalg.matrix_unit(m, a, b)
        for j in range(target.num_blocks):
            grid[j][i] += np.kron(eab, img.blocks[j])
    return BlockMap(source, target, tuple(tuple(r) for r in grid))


def identity_map(algebra: Algebra) -> BlockMap:
    grid = []
    for j, n in enumerate(algebra.dims):
        row = []
        for i, m in enumerate(algebra.dims):
            row.append(identity_choi(n) if i == j else np.zeros((m * n, m * n), dtype=np.complex128))
        grid.append(tuple(row))
    return BlockMap(algebra, algebra, tuple(grid))


def matrix_map(choi, m: int, n: int) -> BlockMap:
    """Wrap a single Choi matrix as a map ``M_m -> M_n``."""
    return BlockMap(matrix_algebra(m), matrix_algebra(n), ((linalg.as_matrix(choi),),))


def conjugation_map(v) -> BlockMap:
    """``A -> V A V^dagger`` for an ``n x m`` matrix ``V``."""
    v = linalg.as_matrix(v)
    n, m = v.shape
    return matrix_map(choi_from_kraus([v], m, n), m, n)


def transpose_map(n: int) -> BlockMap:
    swap = np.zeros((n * n, n * n), dtype=np.complex128)
    for a in range(n):
        for b in range(n):
            swap[a * n + b, b * n + a] = 1.0
    return matrix_map(swap, n, n)


def trace_map(n: int) -> BlockMap:
    """``M_n -> C``, ``A -> tr(A)``."""
    return matrix_map(np.eye(n, dtype=np.complex128), n, 1)


def linear_combination(coeffs: Sequence[complex], maps: Sequence[BlockMap]) -> BlockMap:
    if not maps or len(coeffs) != len(maps):
        raise ValueError("need one coefficient per map and at least one map")
    src, tgt = maps[0].source, maps[0].target
    for f in maps:
        if f.source != src or f.target != tgt:
            raise AlgebraMismatch("maps in a linear combination must share source and target")
    grid = tuple(
        tuple(sum(c * f.choi[j][i] for c, f in zip(coeffs, maps)) for i in range(src.num_blocks))
        for j in range(tgt.num_blocks)
    )
    return BlockMap(src, tgt, grid)


# structural tests ---------------------------------------------------------


def cp_residual(phi: BlockMap) -> float:
    """Largest negative part among the Choi eigenvalues (0 when CP)."""
    worst = 0.0
    for row in phi.choi:
        for c in row:
            worst = max(worst, -linalg.min_eigenvalue(c))
    return worst


def is_cp(phi: BlockMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    return all(linalg.is_psd(c, tol) for row in phi.choi for c in row)


def unitality_residual(phi: BlockMap) -> float:
    img = apply(phi, phi.source.unit())
    return (img - phi.target.unit()).max_abs()


def is_unital(phi: BlockMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    return unitality_residual(phi) <= tol.eps_eq


def is_positive_heuristic(
    phi: BlockMap, samples: int = 64, tol: Tolerance = DEFAULT_TOL, seed: int = 0
) -> bool:
    """Apply ``phi`` to random PSD inputs and look for a non-PSD output.

    A ``False`` answer is a proof of non-positivity; ``True`` only means no
    counterexample was found.  Rank-one inputs are used since they generate
    the positive cone.
    """
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        blocks = []
        for m in phi.source.dims:
            v = rng.normal(size=m) + 1j * rng.normal(size=m)
            blocks.append(np.outer(v, np.conj(v)) / np.vdot(v, v).real)
        out = apply(phi, AlgebraElement(phi.source, tuple(blocks)))
        if any(linalg.min_eigenvalue(b) < -tol.eps_psd for b in out.blocks):
            return False
    return True


# Kraus --------------------------------------------------------------------


@dataclass(frozen=True)
class KrausSet:
    source: Algebra
    target: Algebra
    ops: tuple[tuple[tuple[np.ndarray, ...], ...], ...]

    def to_blockmap(self) -> BlockMap:
        grid = tuple(
            tuple(choi_from_kraus(self.ops[j][i], m, n) for i, m in enumerate(self.source.dims))
            for j, n in enumerate(self.target.dims)
        )
        return BlockMap(self.source, self.target, grid)


def kraus_from_choi(phi: BlockMap, tol: Tolerance = DEFAULT_TOL) -> KrausSet:
    if not is_cp(phi, tol):
        raise InvalidMapError("Kraus operators exist only for completely positive maps")
    grid = []
    for j, n in enumerate(phi.target.dims):
        row = []
        for i, m in enumerate(phi.source.dims):
            w, v = linalg.eigh(phi.choi[j][i], tol)
            ops = tuple(
                np.sqrt(lam) * v[:, k].reshape(m, n).T
                for k, lam in enumerate(w)
                if lam > tol.eps_rank
            )
            row.append(ops)
        grid.append(tuple(row))
    return KrausSet(phi.source, phi.target, tuple(grid))


# adjoint and composition --------------------------------------------------


def adjoint(phi: BlockMap) -> BlockMap:
    grid = tuple(
        tuple(choi_adjoint(phi.choi[j][i], m, n) for j, n in enumerate(phi.target.dims))
        for i, m in enumerate(phi.source.dims)
    )
    return BlockMap(phi.target, phi.source, grid)


def compose(g: BlockMap, f: BlockMap) -> BlockMap:
    """The map ``g o f`` (apply ``f`` first)."""
    if f.target != g.source:
        raise AlgebraMismatch(f"cannot compose: {f.target} is not {g.source}")
    grid = []
    for k, r in enumerate(g.target.dims):
        row = []
        for i, m in enumerate(f.source.dims):
            s = np.zeros((r * r, m * m), dtype=np.complex128)
            for j, n in enumerate(f.target.dims):
                s += choi_to_superop(g.choi[k][j], n, r) @ choi_to_superop(f.choi[j][i], m, n)
            row.append(superop_to_choi(s, m, r))
        grid.append(tuple(row))
    return BlockMap(f.source, g.target, tuple(grid))


def choi_residual(f: BlockMap, g: BlockMap) -> float:
    """Largest entrywise difference between the Choi grids."""
    if f.source != g.source or f.target != g.target:
        raise AlgebraMismatch("maps have different source or target")
    return max(
        linalg.max_abs(a - b) for ra, rb in zip(f.choi, g.choi) for a, b in zip(ra, rb)
    )


def maps_equal(f: BlockMap, g: BlockMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    return choi_residual(f, g) <= 10 * tol.eps_eq


def pullback_state(phi: BlockMap, state: State, tol: Tolerance = DEFAULT_TOL) -> State:
    """The state ``state o phi`` on the source of ``phi``."""
    if state.algebra != phi.target:
        raise AlgebraMismatch(f"state lives on {state.algebra}, map target is {phi.target}")
    if not is_unital(phi, tol):
        raise InvalidMapError("pullback along a non-unital map is not a state")
    dens = apply(adjoint(phi), state.weighted_densities())
    return state_from_density(phi.source, dens.blocks, tol)


# almost-everywhere equality -----------------------------------------------


@dataclass(frozen=True)
class AeWitness:
    """Source matrix unit ``E_{row,col}`` in ``block`` with the largest defect."""

    block: int
    row: int
    col: int
    residual: float


def ae_defects(f: BlockMap, g: BlockMap, xi: State) -> list[AeWitness]:
    """Defect ``|(f(E) - g(E)) P_xi|`` for every source matrix unit, in basis order."""
    if f.source != g.source or f.target != g.target:
        raise AlgebraMismatch("maps have different source or target")
    if xi.algebra != f.target:
        raise AlgebraMismatch(f"state lives on {xi.algebra}, maps land in {f.target}")
    p = support(xi).blocks
    out = []
    for (i, a, b), e in f.source.matrix_units():
        diff = apply(f, e) - apply(g, e)
        out.append(AeWitness(i, a, b, max(linalg.max_abs(d @ pj) for d, pj in zip(diff.blocks, p))))
    return out


def ae_witness(f: BlockMap, g: BlockMap, xi: State) -> AeWitness:
    """The matrix unit with the largest defect (first one on ties)."""
    return max(ae_defects(f, g, xi), key=lambda w: w.residual)


def ae_residual(f: BlockMap, g: BlockMap, xi: State) -> float:
    return ae_witness(f, g, xi).residual


def ae_equal(f: BlockMap, g: BlockMap, xi: State, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when ``f(E) P_xi == g(E) P_xi`` for every source matrix unit ``E``."""
    return ae_residual(f, g, xi) <= 10 * tol.eps_eq


# *-homomorphisms ----------------------------------------------------------


@dataclass(frozen=True)
class BratteliHom:
    """Unital *-homomorphism ``B -> A`` given by multiplicities and unitaries.

    ``multiplicities[i][j]`` copies of source block ``j`` sit on the diagonal
    of target block ``i``, which is then conjugated by ``unitaries[i]``.
    """

    source: Algebra
    target: Algebra
    multiplicities: np.ndarray
    unitaries: tuple[np.ndarray, ...]

    def __post_init__(self):
        c = np.asarray(self.multiplicities)
        if c.shape != (self.target.num_blocks, self.source.num_blocks):
            raise DimensionError(
                f"multiplicity grid must be {self.target.num_blocks}x{self.source.num_blocks}, got {c.shape}"
            )
        if not np.all(c == np.round(c)) or np.any(c < 0):
            raise InvalidMapError("multiplicities must be nonnegative integers")
        c = c.astype(int)
        us = tuple(linalg.as_matrix(u) for u in self.unitaries)
        if len(us) != self.target.num_blocks:
            raise DimensionError("one unitary per target block is required")
        n = np.array(self.source.dims)
        for i, m in enumerate(self.target.dims):
            if int(c[i] @ n) != m:
                raise InvalidMapError(
                    f"dimension law fails in target block {i}: {m} != sum_j c_ij n_j = {int(c[i] @ n)}"
                )
            if us[i].shape != (m, m) or not linalg.is_unitary(us[i]):
                raise InvalidMapError(f"unitary {i} is not a {m}x{m} unitary")
        object.__setattr__(self, "multiplicities", c)
        object.__setattr__(self, "unitaries", us)

    def offsets(self, i: int) -> list[tuple[int, int, int]]:
        """``(j, start, size)`` of each superblock in target block ``i``."""
        out = []
        k = 0
        for j, n in enumerate(self.source.dims):
            size = int(self.multiplicities[i, j]) * n
            out.append((j, k, size))
            k += size
        return out


def trivial_unitaries(target: Algebra) -> tuple[np.ndarray, ...]:
    return tuple(np.eye(m, dtype=np.complex128) for m in target.dims)


def block_embedding(p: int, n: int) -> BratteliHom:
    """``M_n -> M_p (x) M_n``, ``B -> I_p (x) B``."""
    return BratteliHom(matrix_algebra(n), matrix_algebra(p * n), np.array([[p]]), trivial_unitaries(matrix_algebra(p * n)))


def bratteli_apply(hom: BratteliHom, b: AlgebraElement) -> AlgebraElement:
    if b.algebra != hom.source:
        raise AlgebraMismatch(f"hom source {hom.source} vs element algebra {b.algebra}")
    out = []
    for i, u in enumerate(hom.unitaries):
        reps = []
        for j, blk in enumerate(b.blocks):
            reps.extend([blk] * int(hom.multiplicities[i, j]))
        out.append(u @ linalg.block_diag(*reps) @ linalg.dagger(u))
    return AlgebraElement(hom.target, tuple(out))


def bratteli_to_blockmap(hom: BratteliHom) -> BlockMap:
    return from_function(hom.source, hom.target, lambda e: bratteli_apply(hom, e))


def hom_residual(phi: BlockMap) -> float:
    """Worst defect among unitality, *-preservation and multiplicativity."""
    worst = unitality_residual(phi)
    units = list(phi.source.matrix_units())
    images = {key: apply(phi, e) for key, e in units}
    for (i, a, b), _ in units:
        worst = max(worst, (images[(i, a, b)].adjoint() - images[(i, b, a)]).max_abs())
    for (i, a, b), _ in units:
        for (k, c, d), _ in units:
            prod = images[(i, a, b)] @ images[(k, c, d)]
            if i == k and b == c:
                worst = max(worst, (prod - images[(i, a, d)]).max_abs())
            else:
                worst = max(worst, prod.max_abs())
    return worst


def verify_hom(phi: BlockMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    return hom_residual(phi) <= 10 * tol.eps_eq
