"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The Kronecker
product follows the block convention in which the ``(i, j)`` block of
``kron(a, b)`` is ``a[i, j] * b``, i.e. ``C^m (x) C^n -> C^{mn}`` sends
``e_i (x) e_k`` to ``e_{i*n + k}``.  This is what :func:`numpy.kron` does.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, NotHermitianError


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds used by every comparison in the package.

    :param eps_eq: absolute entrywise tolerance for equality tests
    :param eps_psd: eigenvalue floor for positivity tests
    :param eps_rank: eigenvalue cut for support / rank / zero-weight decisions
    """

    eps_eq: float = 1e-9
    eps_psd: float = 1e-9
    eps_rank: float = 1e-8

    def __post_init__(self):
        for name in ("eps_eq", "eps_psd", "eps_rank"):
            value = getattr(self, name)
            if not (0.0 < value <= 1e-3):
                raise ValueError(f"{name} must lie in (0, 1e-3], got {value!r}")

    def scaled(self, factor: float) -> "Tolerance":
        """Multiply all three thresholds by ``factor``."""
        if factor <= 0:
            raise ValueError("tolerance factor must be positive")
        return replace(
            self,
            eps_eq=self.eps_eq * factor,
            eps_psd=self.eps_psd * factor,
            eps_rank=self.eps_rank * factor,
        )


DEFAULT_TOL = Tolerance()


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-d complex array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("matrix has non-finite entries")
    return arr


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def max_abs(a) -> float:
    """Largest absolute entry; 0 for empty arrays."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def close(a, b, atol: float) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return max_abs(a - b) <= atol


def kron(a, b) -> np.ndarray:
    """Kronecker product with block ``(i, j)`` equal to ``a[i, j] * b``."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_left(a, p: int, n: int) -> np.ndarray:
    """Trace out the ``M_p`` factor of ``M_p (x) M_n``.

    Returns the sum of the diagonal ``n x n`` blocks of ``a``, so that
    ``partial_trace_left(kron(c, b), p, n) == trace(c) * b``.
    """
    a = as_matrix(a)
    if p < 1 or n < 1 or a.shape != (p * n, p * n):
        raise DimensionError(
            f"bad block structure: shape {a.shape} is not ({p}*{n}, {p}*{n})"
        )
    return np.einsum("jajb->ab", a.reshape(p, n, p, n))


def is_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return max_abs(a - dagger(a)) <= tol.eps_eq


def hermitian_part(a) -> np.ndarray:
    a = as_matrix(a)
    return 0.5 * (a + dagger(a))


def eigh(a, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``a == v @ diag(w) @ v^dagger``.  Eigenvectors of
    degenerate eigenvalues are an arbitrary orthonormal basis of the
    eigenspace.
    """
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        raise NotHermitianError("eigh requires a Hermitian matrix")
    w, v = np.linalg.eigh(hermitian_part(a))
    return w[::-1].copy(), v[:, ::-1].copy()


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of the Hermitian part of ``a``."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


def is_psd(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        return False
    return min_eigenvalue(a) >= -tol.eps_psd


def is_projection(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        return False
    return max_abs(a @ a - a) <= tol.eps_eq


def is_unitary(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return max_abs(a @ dagger(a) - np.eye(a.shape[0])) <= tol.eps_eq


def is_density(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    return is_psd(a, tol) and abs(np.trace(a) - 1.0) <= tol.eps_eq


def support_projector(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Spectral projector of a PSD matrix onto eigenvalues above ``eps_rank``."""
    w, v = eigh(a, tol)
    keep = v[:, w > tol.eps_rank]
    return keep @ dagger(keep)


def rank(a, tol: Tolerance = DEFAULT_TOL) -> int:
    w, _ = eigh(a, tol)
    return int(np.sum(w > tol.eps_rank))


def psd_sqrt(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    w, v = eigh(a, tol)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def matrix_unit(n: int, a: int, b: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=np.complex128)
    e[a, b] = 1.0
    return e


def block_diag(*blocks) -> np.ndarray:
    """Block diagonal matrix; zero-size blocks are skipped."""
    blocks = [as_matrix(b) for b in blocks if np.asarray(b).size]
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size), dtype=np.complex128)
    k = 0
    for b in blocks:
        r = b.shape[0]
        out[k:k + r, k:k + r] = b
        k += r
    return out
