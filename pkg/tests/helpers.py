"""Constructions shared by the unit and acceptance tests."""

import numpy as np

from ncdisint.algebra import matrix_algebra
from ncdisint.maps import BlockMap, from_function
from ncdisint.sampling import random_density


def replace_null_rows(problem, r: BlockMap, rng) -> BlockMap:
    """Swap every zero-weight row of ``r`` for ``A -> [i = i0] tr(kappa A_i) I``."""
    hom = problem.hom
    i0 = int(rng.integers(hom.target.num_blocks))
    kappa = random_density(hom.target.dims[i0], rng)
    grid = [list(row) for row in r.choi]
    for j in problem.xi.null_blocks():
        n = hom.source.dims[j]
        for i, m in enumerate(hom.target.dims):
            # Choi of A -> tr(kappa A) I_n is kappa^T (x) I_n
            grid[j][i] = np.kron(kappa.T, np.eye(n)) if i == i0 else np.zeros((m * n, m * n))
    return BlockMap(r.source, r.target, tuple(tuple(row) for row in grid))


def ae_distinct_pair(m: int = 3, s: int = 1):
    """``tr(A)/m I`` and ``tr(A)/m P + chi(A)/(m - s) P_perp`` with ``P = diag(1, 0)``."""
    src, tgt = matrix_algebra(m), matrix_algebra(2)
    p = np.diag([1.0, 0.0])

    def phi(a):
        return tgt.element([np.trace(a.blocks[0]) / m * np.eye(2)])

    def psi(a):
        chi = np.trace(a.blocks[0][s:, s:])
        return tgt.element([np.trace(a.blocks[0]) / m * p + chi / (m - s) * (np.eye(2) - p)])

    return from_function(src, tgt, phi), from_function(src, tgt, psi), p
