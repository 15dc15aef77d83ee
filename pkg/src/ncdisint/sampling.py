"""Random test objects: unitaries, densities, CPU maps and solvable instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .algebra import Algebra, state_from_density
from .disintegration import DisintegrationProblem, make_problem
from .maps import BlockMap, BratteliHom, choi_from_kraus


def ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR with the phase correction)."""
    q, r = np.linalg.qr(ginibre(n, n, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(n: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    g = ginibre(n, rank or n, rng)
    rho = g @ linalg.dagger(g)
    return rho / np.trace(rho).real


def random_probability(k: int, rng: np.random.Generator, floor: float = 0.0) -> np.ndarray:
    """Point of the simplex with every entry at least ``floor``."""
    w = rng.dirichlet(np.ones(k))
    return floor + (1.0 - k * floor) * w


def random_cpu_map(source: Algebra, target: Algebra, rng: np.random.Generator, kraus: int = 2) -> BlockMap:
    """Unital CP map built from normalized random Kraus operators."""
    grid = []
    for n in target.dims:
        ops = [[ginibre(n, m, rng) for _ in range(kraus)] for m in source.dims]
        total = sum(g @ linalg.dagger(g) for row in ops for g in row)
        w, v = np.linalg.eigh(total)
        inv_sqrt = (v / np.sqrt(w)) @ linalg.dagger(v)
        grid.append(
            tuple(choi_from_kraus([inv_sqrt @ g for g in row], m, n) for row, m in zip(ops, source.dims))
        )
    return BlockMap(source, target, tuple(grid))


@dataclass(frozen=True)
class Instance:
    """A solvable problem together with the data it was assembled from."""

    problem: DisintegrationProblem
    tau: tuple[tuple[Optional[np.ndarray], ...], ...]
    weights: np.ndarray
    densities: tuple[np.ndarray, ...]


def random_multiplicities(s: int, t: int, rng: np.random.Generator, max_mult: int = 2) -> np.ndarray:
    c = rng.integers(0, max_mult + 1, size=(s, t))
    for i in range(s):
        while not c[i].any():
            c[i] = rng.integers(0, max_mult + 1, size=t)
    return c


def synthesize(
    rng: np.random.Generator,
    max_blocks: int = 3,
    max_dim: int = 3,
    max_mult: int = 2,
    null_rate: float = 0.25,
    min_weight: float = 0.05,
) -> Instance:
    """Random problem for which a disintegration exists by construction."""
    s = int(rng.integers(1, max_blocks + 1))
    t = int(rng.integers(1, max_blocks + 1))
    n = [int(rng.integers(1, max_dim + 1)) for _ in range(t)]
    c = random_multiplicities(s, t, rng, max_mult)

    used = [j for j in range(t) if c[:, j].any()]
    live = [j for j in used if rng.random() >= null_rate]
    if not live:
        live = [used[int(rng.integers(len(used)))]]
    q = np.zeros(t)
    q[live] = random_probability(len(live), rng, min_weight)

    sigmas = []
    for nj in n:
        rank = int(rng.integers(1, nj + 1)) if rng.random() < 0.3 else nj
        sigmas.append(random_density(nj, rng, rank))

    tau: list[list[Optional[np.ndarray]]] = [[None] * s for _ in range(t)]
    for j in range(t):
        rows = [i for i in range(s) if c[i, j] > 0]
        if j not in live:
            continue
        share = random_probability(len(rows), rng)
        for i, w in zip(rows, share):
            tau[j][i] = w * random_density(int(c[i, j]), rng)

    target = Algebra(tuple(int(c[i] @ np.array(n)) for i in range(s)))
    unitaries = tuple(random_unitary(m, rng) for m in target.dims)
    blocks = []
    for i, u in enumerate(unitaries):
        parts = []
        for j in range(t):
            size = int(c[i, j]) * n[j]
            if tau[j][i] is None:
                parts.append(np.zeros((size, size)))
            else:
                parts.append(q[j] * np.kron(tau[j][i], sigmas[j]))
        blocks.append(u @ linalg.block_diag(*parts) @ linalg.dagger(u))

    hom = BratteliHom(Algebra(tuple(n)), target, c, unitaries)
    omega = state_from_density(target, blocks)
    problem = make_problem(hom, omega)
    return Instance(problem, tuple(tuple(r) for r in tau), q, tuple(sigmas))
