"""Dense symmetric linear algebra.

Covariance estimation, a cyclic Jacobi eigensolver, the floored inverse
square root used for whitening, and conditioning metrics. Symmetric
matrices and embedding batches are plain ``numpy`` float64 arrays; the
helpers :func:`as_symmetric` and :func:`as_batch` validate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InputError, NotPSDError

MAX_SWEEPS = 100
OFFDIAG_RTOL = 1e-12
PSD_RTOL = 1e-10


@dataclass(frozen=True)
class SymmetricSpectrum:
    """Eigenvalues sorted descending, eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def as_symmetric(a, atol: float = 1e-9) -> np.ndarray:
    """Return ``a`` as a float64 symmetric matrix.

    Symmetry is enforced on write by averaging with the transpose, after
    checking the input is already symmetric up to ``atol`` relative to its
    norm.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InputError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    scale = 1.0 + np.linalg.norm(a)
    if np.max(np.abs(a - a.T)) > atol * scale:
        raise InputError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def as_batch(z) -> np.ndarray:
    """Validate an n x d embedding batch (n >= 2, finite entries)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise InputError(f"embedding batch must be 2-D, got shape {z.shape}")
    if z.shape[0] < 2:
        raise InputError(f"embedding batch needs n >= 2 rows, got {z.shape[0]}")
    if z.shape[1] < 1:
        raise InputError("embedding batch has no columns")
    if not np.all(np.isfinite(z)):
        raise InputError("embedding batch has non-finite entries")
    return z


def _offdiag_norm(a: np.ndarray) -> float:
    # direct sum; ||A||^2 - ||diag||^2 cancels catastrophically near convergence
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt(np.dot(off, off)))


def eigh(a) -> SymmetricSpectrum:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
    below ``1e-12 * ||A||_F``. Eigenvector signs are fixed so the largest
    component of each column is positive, which makes the output
    deterministic for a given input.
    """
    a = as_symmetric(a)
    d = a.shape[0]
    v = np.eye(d)
    norm = np.linalg.norm(a)
    if norm == 0.0 or d == 1:
        return SymmetricSpectrum(np.diag(a).copy(), v)

    tol = OFFDIAG_RTOL * norm
    for _ in range(MAX_SWEEPS):
        if _offdiag_norm(a) <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if _offdiag_norm(a) > tol:
            raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.where(v[idx, np.arange(d)] < 0, -1.0, 1.0)
    return SymmetricSpectrum(w, v * signs)


def default_floor(spectrum: SymmetricSpectrum) -> float:
    return 1e-12 * max(float(spectrum.eigenvalues[0]), 1.0)


def inv_sqrt(a, floor: float | None = None) -> np.ndarray:
    """Inverse square root ``V diag(max(lam, floor))^(-1/2) V^T``.

    ``floor`` defaults to ``1e-12 * max(lam_max, 1)`` so collapsed
    directions stay finite. Raises :class:`NotPSDError` when an eigenvalue
    falls below ``-1e-10 * ||A||_F``.
    """
    a = as_symmetric(a)
    spec = eigh(a)
    lam_min = spec.eigenvalues[-1]
    if lam_min < -PSD_RTOL * np.linalg.norm(a):
        raise NotPSDError(f"matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})")
    if floor is None:
        floor = default_floor(spec)
    if floor <= 0:
        raise InputError("floor must be positive")
    scale = 1.0 / np.sqrt(np.maximum(spec.eigenvalues, floor))
    v = spec.eigenvectors
    out = (v * scale) @ v.T
    return 0.5 * (out + out.T)


def covariance(batch, centered: bool = True) -> np.ndarray:
    """Population covariance (divides by n) of an n x d batch."""
    z = as_batch(batch)
    if centered:
        z = z - z.mean(axis=0)
    cov = z.T @ z / z.shape[0]
    return 0.5 * (cov + cov.T)


def condition_number(spectrum) -> float:
    """``lam_1 / lam_d``; ``inf`` when the smallest eigenvalue is not positive."""
    w = spectrum.eigenvalues if isinstance(spectrum, SymmetricSpectrum) else np.asarray(spectrum)
    if w[-1] <= 0:
        return math.inf
    return float(w[0] / w[-1])
