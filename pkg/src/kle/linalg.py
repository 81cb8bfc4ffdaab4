"""Dense symmetric linear algebra: eigendecomposition, spectral matrix
functions, unit-trace normalization and von Neumann entropy.

Matrices are plain ``numpy.ndarray`` objects. Every function returns a new
array and never mutates its input. Entropies are in nats.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import NonFinite, NotDensityMatrix, SingularFunction, ValidationError, ZeroDiagonal

#: eigenvalues in [-CLAMP_TOL, 0) are rounding noise and get clamped to zero
CLAMP_TOL = 1e-6
TRACE_TOL = 1e-6


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        V, lam = self.eigenvectors, self.eigenvalues
        return (V * lam) @ V.T


def as_symmetric(A, tol: float = 1e-8) -> np.ndarray:
    """Validate ``A`` as a finite, square, (numerically) symmetric matrix.

    Returns the exactly symmetric copy ``(A + A.T) / 2``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has NaN or Inf entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > tol * scale:
        raise ValidationError("matrix is not symmetric")
    return (A + A.T) / 2.0


def sym_eig(A) -> SpectralDecomposition:
    """Eigendecomposition of a real symmetric matrix, eigenvalues ascending."""
    A = as_symmetric(A)
    lam, V = np.linalg.eigh(A)
    return SpectralDecomposition(lam, V)


def spectral_map(A, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its spectrum.

    Computes ``V f(Λ) Vᵀ``. ``f`` receives the eigenvalue vector and must be
    vectorized. Raises :class:`SingularFunction` when ``f`` is not finite at
    some eigenvalue.
    """
    lam, V = sym_eig(A)
    with np.errstate(all="ignore"):
        try:
            fl = np.asarray(f(lam), dtype=float)
        except (ZeroDivisionError, ValueError, FloatingPointError) as exc:
            raise SingularFunction(str(exc)) from exc
    if fl.shape != lam.shape:
        raise ValidationError("f must map the eigenvalue vector elementwise")
    if not np.all(np.isfinite(fl)):
        bad = lam[~np.isfinite(fl)]
        raise SingularFunction(f"function undefined at eigenvalue(s) {bad.tolist()}")
    out = (V * fl) @ V.T
    return (out + out.T) / 2.0


def density_eigenvalues(K) -> np.ndarray:
    """Eigenvalues of a density matrix, validated and clamped into [0, 1]."""
    K = as_symmetric(K)
    tr = float(np.trace(K))
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotDensityMatrix(f"trace is {tr!r}, expected 1")
    lam = np.linalg.eigvalsh(K)
    if lam[0] < -CLAMP_TOL:
        raise NotDensityMatrix(f"smallest eigenvalue {lam[0]!r} is negative")
    return np.clip(lam, 0.0, 1.0)


def shannon_entropy(p) -> float:
    """-Σ p log p with the convention 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(K) -> float:
    """Von Neumann entropy ``-Tr[K log K]`` of a density matrix.

    Examples
    --------
    >>> round(von_neumann_entropy(np.eye(4) / 4), 4)
    1.3863
    """
    # clamping can push -Σλlogλ a hair below zero
    return max(0.0, shannon_entropy(density_eigenvalues(K)))


def unit_trace_normalize(K) -> np.ndarray:
    """Rescale a PSD kernel to unit trace.

    Each entry becomes ``K(x, y) / sqrt(K(x, x) K(y, y)) / N`` so that every
    diagonal entry equals ``1/N``.
    """
    K = as_symmetric(K)
    d = np.diag(K)
    if np.any(d <= 1e-12):
        raise ZeroDiagonal("kernel has a non-positive diagonal entry")
    s = 1.0 / np.sqrt(d)
    out = K * np.outer(s, s) / K.shape[0]
    np.fill_diagonal(out, 1.0 / K.shape[0])
    return (out + out.T) / 2.0


def is_density_matrix(K, tol: float = CLAMP_TOL) -> bool:
    try:
        K = as_symmetric(K)
    except ValidationError:
        return False
    if abs(np.trace(K) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(K)[0] >= -tol)
