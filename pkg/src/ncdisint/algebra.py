"""Finite-dimensional C*-algebras as direct sums of full matrix algebras.

An :class:`Algebra` ``M_{n_1} + ... + M_{n_t}`` is described by its block
dimensions.  Elements are tuples of square blocks.  States are kept in the
normal form ``xi(B) = sum_j q_j tr(sigma_j B_j)`` with weights ``q_j`` and
per-block density matrices ``sigma_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import linalg
from .errors import AlgebraMismatch, DimensionError, InvalidStateError
from .linalg import DEFAULT_TOL, Tolerance


@dataclass(frozen=True)
class Algebra:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if not dims or any(n < 1 for n in dims):
            raise DimensionError(f"an algebra needs at least one block of size >= 1, got {self.dims!r}")
        object.__setattr__(self, "dims", dims)

    @property
    def num_blocks(self) -> int:
        return len(self.dims)

    @property
    def dimension(self) -> int:
        """Complex vector-space dimension, ``sum n_j**2``."""
        return sum(n * n for n in self.dims)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, tuple(np.zeros((n, n), dtype=np.complex128) for n in self.dims))

    def unit(self) -> "AlgebraElement":
        return AlgebraElement(self, tuple(np.eye(n, dtype=np.complex128) for n in self.dims))

    def matrix_unit(self, block: int, a: int, b: int) -> "AlgebraElement":
        blocks = [np.zeros((n, n), dtype=np.complex128) for n in self.dims]
        blocks[block][a, b] = 1.0
        return AlgebraElement(self, tuple(blocks))

    def matrix_units(self) -> Iterator[tuple[tuple[int, int, int], "AlgebraElement"]]:
        """Yield ``((block, a, b), E)`` over the matrix-unit basis."""
        for k, n in enumerate(self.dims):
            for a in range(n):
                for b in range(n):
                    yield (k, a, b), self.matrix_unit(k, a, b)

    def element(self, blocks: Sequence) -> "AlgebraElement":
        return AlgebraElement(self, tuple(linalg.as_matrix(b) for b in blocks))


def matrix_algebra(n: int) -> Algebra:
    return Algebra((n,))


def commutative_algebra(size: int) -> Algebra:
    """``C^size`` as a direct sum of one-dimensional blocks."""
    return Algebra((1,) * size)


@dataclass(frozen=True)
class AlgebraElement:
    algebra: Algebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(linalg.as_matrix(b) for b in self.blocks)
        if len(blocks) != self.algebra.num_blocks:
            raise DimensionError(
                f"{len(blocks)} blocks supplied for an algebra with {self.algebra.num_blocks}"
            )
        for b, n in zip(blocks, self.algebra.dims):
            if b.shape != (n, n):
                raise DimensionError(f"block of shape {b.shape} where ({n}, {n}) expected")
        object.__setattr__(self, "blocks", blocks)

    def _check(self, other: "AlgebraElement"):
        if other.algebra != self.algebra:
            raise AlgebraMismatch(f"{self.algebra} vs {other.algebra}")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def scale(self, c: complex) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(c * b for b in self.blocks))

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(linalg.dagger(b) for b in self.blocks))

    def max_abs(self) -> float:
        return max(linalg.max_abs(b) for b in self.blocks)

    def allclose(self, other: "AlgebraElement", atol: float) -> bool:
        self._check(other)
        return (self - other).max_abs() <= atol


def inner(x: AlgebraElement, y: AlgebraElement) -> complex:
    """Hilbert-Schmidt inner product ``sum_k tr(x_k^dagger y_k)``."""
    x._check(y)
    return complex(sum(np.vdot(a, b) for a, b in zip(x.blocks, y.blocks)))


@dataclass(frozen=True)
class State:
    """A state in block normal form.

    ``densities[j]`` is stored even when ``weights[j] == 0``; it is then the
    maximally mixed matrix and carries no information.
    """

    algebra: Algebra
    weights: np.ndarray
    densities: tuple[np.ndarray, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        densities = tuple(linalg.as_matrix(d) for d in self.densities)
        if len(weights) != self.algebra.num_blocks or len(densities) != self.algebra.num_blocks:
            raise DimensionError("weights/densities do not match the number of blocks")
        for d, n in zip(densities, self.algebra.dims):
            if d.shape != (n, n):
                raise DimensionError(f"density of shape {d.shape} where ({n}, {n}) expected")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "densities", densities)

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> "State":
        if np.any(self.weights < -tol.eps_eq):
            raise InvalidStateError("negative weight")
        if abs(self.weights.sum() - 1.0) > tol.eps_eq:
            raise InvalidStateError(f"weights sum to {self.weights.sum()!r}, not 1")
        for d in self.densities:
            if not linalg.is_density(d, tol):
                raise InvalidStateError("block density is not PSD with unit trace")
        return self

    def null_blocks(self, tol: Tolerance = DEFAULT_TOL) -> frozenset[int]:
        """Indices ``j`` with ``q_j`` treated as zero (the set ``N_q``)."""
        return frozenset(j for j, q in enumerate(self.weights) if q <= tol.eps_rank)

    def weighted_densities(self) -> AlgebraElement:
        """The density tuple ``(q_1 sigma_1, ..., q_t sigma_t)``."""
        return AlgebraElement(self.algebra, tuple(q * d for q, d in zip(self.weights, self.densities)))


def state_from_density(algebra: Algebra, blocks: Sequence, tol: Tolerance = DEFAULT_TOL) -> State:
    """Normal form of the state ``B -> sum_j tr(blocks[j] B_j)``."""
    blocks = [linalg.as_matrix(b) for b in blocks]
    AlgebraElement(algebra, tuple(blocks))
    for b in blocks:
        if not linalg.is_psd(b, tol):
            raise InvalidStateError("density block is not positive semidefinite")
    traces = np.array([np.trace(b).real for b in blocks])
    if abs(traces.sum() - 1.0) > tol.eps_eq:
        raise InvalidStateError(f"total trace {traces.sum()!r} is not 1")
    weights = []
    densities = []
    for b, q, n in zip(blocks, traces, algebra.dims):
        if q > tol.eps_rank:
            weights.append(q)
            densities.append(linalg.hermitian_part(b) / q)
        else:
            weights.append(0.0)
            densities.append(np.eye(n, dtype=np.complex128) / n)
    return State(algebra, np.array(weights), tuple(densities))


def state_from_element(element: AlgebraElement, tol: Tolerance = DEFAULT_TOL) -> State:
    return state_from_density(element.algebra, element.blocks, tol)


def density_state(rho, tol: Tolerance = DEFAULT_TOL) -> State:
    """The state ``tr(rho .)`` on a single matrix algebra."""
    rho = linalg.as_matrix(rho)
    return state_from_density(matrix_algebra(rho.shape[0]), [rho], tol)


@dataclass(frozen=True)
class SupportProjection:
    algebra: Algebra
    blocks: tuple[np.ndarray, ...]

    def element(self) -> AlgebraElement:
        return AlgebraElement(self.algebra, self.blocks)

    def complement(self) -> AlgebraElement:
        return self.algebra.unit() - self.element()


def support(state: State, tol: Tolerance = DEFAULT_TOL) -> SupportProjection:
    blocks = []
    for q, sigma, n in zip(state.weights, state.densities, state.algebra.dims):
        if q > tol.eps_rank:
            blocks.append(linalg.support_projector(sigma, tol))
        else:
            blocks.append(np.zeros((n, n), dtype=np.complex128))
    return SupportProjection(state.algebra, tuple(blocks))


def eval_state(state: State, element: AlgebraElement) -> complex:
    if element.algebra != state.algebra:
        raise AlgebraMismatch(f"{element.algebra} vs {state.algebra}")
    return complex(sum(q * np.trace(s @ b) for q, s, b in zip(state.weights, state.densities, element.blocks)))


def null_residual(state: State, element: AlgebraElement) -> float:
    """``xi(a^dagger a)``, which vanishes exactly on the null space."""
    return eval_state(state, element.adjoint() @ element).real


def in_null_space(state: State, element: AlgebraElement, tol: Tolerance = DEFAULT_TOL) -> bool:
    if element.algebra != state.algebra:
        raise AlgebraMismatch(f"{element.algebra} vs {state.algebra}")
    return null_residual(state, element) <= tol.eps_eq


def states_close(a: State, b: State, atol: float) -> bool:
    """Compare two states through their weighted density tuples."""
    if a.algebra != b.algebra:
        return False
    return a.weighted_densities().allclose(b.weighted_densities(), atol)
