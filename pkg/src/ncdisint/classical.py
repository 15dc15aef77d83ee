"""Finite probability spaces and stochastic maps.

A stochastic map ``X -> Y`` is a ``|Y| x |X|`` column-stochastic matrix;
column ``x`` is the distribution assigned to the point ``x``.  Functions are
index lists ``f[x] = y`` (0-based here, 1-based in JSON).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import Algebra, State, commutative_algebra
from .errors import DimensionError, IllPosedProblem, InvalidStateError
from .linalg import DEFAULT_TOL, Tolerance
from .maps import BlockMap, BratteliHom, trivial_unitaries


@dataclass(frozen=True)
class FinProb:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise DimensionError("a probability space needs at least one point")
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.weights)

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> "FinProb":
        if np.any(self.weights < -tol.eps_eq):
            raise InvalidStateError("negative probability")
        if abs(self.weights.sum() - 1.0) > tol.eps_eq:
            raise InvalidStateError(f"probabilities sum to {self.weights.sum()!r}")
        return self

    def null_points(self, tol: Tolerance = DEFAULT_TOL) -> frozenset[int]:
        return frozenset(int(x) for x in np.flatnonzero(self.weights <= tol.eps_rank))


@dataclass(frozen=True)
class StochMap:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise DimensionError(f"stochastic matrix must be a nonempty 2-d array, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> "StochMap":
        if np.any(self.matrix < -tol.eps_eq):
            raise InvalidStateError("negative transition probability")
        if np.max(np.abs(self.matrix.sum(axis=0) - 1.0)) > tol.eps_eq:
            raise InvalidStateError("columns must sum to 1")
        return self

    def push(self, p: FinProb) -> FinProb:
        if p.size != self.cols:
            raise DimensionError(f"distribution on {p.size} points, map expects {self.cols}")
        return FinProb(self.matrix @ p.weights)


def function_to_stoch(f: Sequence[int], size_y: int) -> StochMap:
    f = _check_function(f, size_y)
    m = np.zeros((size_y, len(f)))
    m[f, np.arange(len(f))] = 1.0
    return StochMap(m)


def _check_function(f: Sequence[int], size_y: int) -> np.ndarray:
    arr = np.asarray(f, dtype=int).reshape(-1)
    if arr.size == 0 or np.any(arr < 0) or np.any(arr >= size_y):
        raise DimensionError(f"function values must lie in 0..{size_y - 1}")
    return arr


def pushforward(f: Sequence[int], p: FinProb, size_y: int) -> FinProb:
    return function_to_stoch(f, size_y).push(p)


def stoch_compose(g: StochMap, f: StochMap) -> StochMap:
    """``g o f``: first ``f``, then ``g``."""
    if f.rows != g.cols:
        raise DimensionError(f"cannot compose: f has {f.rows} outputs, g takes {g.cols} inputs")
    return StochMap(g.matrix @ f.matrix)


def classical_disintegration(
    f: Sequence[int], p: FinProb, q: FinProb, tol: Tolerance = DEFAULT_TOL
) -> StochMap:
    """The stochastic map ``r: Y -> X`` with ``r_xy = p_x [f(x) = y] / q_y``.

    Columns with ``q_y`` treated as zero are uniform on ``X``.
    """
    p.validate(tol)
    q.validate(tol)
    f = _check_function(f, q.size)
    if len(f) != p.size:
        raise DimensionError("function length must equal the size of X")
    push = pushforward(f, p, q.size)
    if np.max(np.abs(push.weights - q.weights)) > tol.eps_eq:
        raise IllPosedProblem("q is not the pushforward of p along f")
    r = np.zeros((p.size, q.size))
    for y in range(q.size):
        if q.weights[y] > tol.eps_rank:
            mask = f == y
            r[mask, y] = p.weights[mask] / q.weights[y]
        else:
            r[:, y] = 1.0 / p.size
    return StochMap(r)


def stoch_ae_equal(f: StochMap, g: StochMap, p: FinProb, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Columns may differ only at points of ``p``-measure zero."""
    if f.matrix.shape != g.matrix.shape:
        raise DimensionError("stochastic maps have different shapes")
    if p.size != f.cols:
        raise DimensionError("distribution does not live on the source")
    diff = np.max(np.abs(f.matrix - g.matrix), axis=0)
    bad = diff > tol.eps_eq
    return not np.any(bad & (p.weights > tol.eps_rank))


# embedding into commutative algebras ----------------------------------------


def embed_to_algebra(p: FinProb, tol: Tolerance = DEFAULT_TOL) -> tuple[Algebra, State]:
    p.validate(tol)
    alg = commutative_algebra(p.size)
    return alg, State(alg, np.clip(p.weights, 0.0, None), tuple(np.ones((1, 1)) for _ in range(p.size)))


def embed_stoch(f: StochMap) -> BlockMap:
    """PU map ``C^Y -> C^X`` sending ``e_y`` to ``sum_x f_yx e_x``."""
    grid = tuple(
        tuple(np.array([[f.matrix[y, x]]], dtype=np.complex128) for y in range(f.rows))
        for x in range(f.cols)
    )
    return BlockMap(commutative_algebra(f.rows), commutative_algebra(f.cols), grid)


def embed_function(f: Sequence[int], size_y: int) -> BratteliHom:
    """*-homomorphism ``C^Y -> C^X``, ``g -> g o f``."""
    f = _check_function(f, size_y)
    c = np.zeros((len(f), size_y), dtype=int)
    c[np.arange(len(f)), f] = 1
    target = commutative_algebra(len(f))
    return BratteliHom(commutative_algebra(size_y), target, c, trivial_unitaries(target))
