"""Fisher information geometry of Gaussian representation models.

Under ``p(t | z) = N(z, sigma_sq I)`` the local Fisher information is
``I / sigma_sq`` everywhere. The data dependence enters through the
covariance of the representations, whose eigenvalues ``nu`` map to Fisher
eigenvalues ``lam = nu / (nu + sigma_sq L^2) / sigma_sq``. Efficiency is the
fraction of dimensions needed to hold ``1 - epsilon`` of the Fisher mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import DegenerateSpectrumError, InputError

DEFAULT_EPSILON = 0.05
NEGATIVE_ATOL = 1e-12


@dataclass(frozen=True)
class GaussianModelConfig:
    sigma_sq: float = 1.0
    lipschitz: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise InputError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if not self.lipschitz > 0:
            raise InputError(f"lipschitz must be positive, got {self.lipschitz}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim}")


@dataclass(frozen=True)
class EfficiencyReport:
    cov_eigenvalues: np.ndarray
    fim_eigenvalues: np.ndarray
    epsilon: float
    d_eff: int
    eta: float
    condition_number: float
    offdiag_mass: float | None = None
    null_dimensions: int = field(default=0)

    @property
    def dim(self) -> int:
        return len(self.fim_eigenvalues)

    def __eq__(self, other):
        if not isinstance(other, EfficiencyReport):
            return NotImplemented
        return (
            np.array_equal(self.cov_eigenvalues, other.cov_eigenvalues)
            and np.array_equal(self.fim_eigenvalues, other.fim_eigenvalues)
            and self.epsilon == other.epsilon
            and self.d_eff == other.d_eff
            and self.eta == other.eta
            and self.condition_number == other.condition_number
            and self.offdiag_mass == other.offdiag_mass
            and self.null_dimensions == other.null_dimensions
        )


def local_fim(cfg: GaussianModelConfig) -> np.ndarray:
    """Fisher information of the isotropic Gaussian model: ``I_d / sigma_sq``."""
    return np.eye(cfg.dim) / cfg.sigma_sq


def average_fim(samples) -> np.ndarray:
    """Entrywise mean of a list of per-sample Fisher matrices."""
    samples = list(samples)
    if not samples:
        raise InputError("average_fim needs at least one matrix")
    mats = [spectral.as_symmetric(s) for s in samples]
    shape = mats[0].shape
    for i, m in enumerate(mats):
        if m.shape != shape:
            raise InputError(f"matrix {i} has shape {m.shape}, expected {shape}")
    return np.mean(np.stack(mats), axis=0)


def _check_epsilon(epsilon):
    if not 0.0 < epsilon < 1.0:
        raise InputError(f"epsilon must lie in (0, 1), got {epsilon}")


def fim_spectrum_from_cov(nu, cfg: GaussianModelConfig) -> np.ndarray:
    """Map covariance eigenvalues to the leading-order Fisher spectrum.

    ``lam_i = (1 / sigma_sq) * nu_i / (nu_i + sigma_sq * L^2)``. Negatives
    within 1e-12 of zero are clamped; anything lower is rejected.
    """
    nu = np.asarray(nu, dtype=np.float64)
    if nu.ndim != 1:
        raise InputError("nu must be a 1-D sequence")
    if np.any(nu < -NEGATIVE_ATOL):
        raise InputError(f"covariance eigenvalues must be >= 0, got min {nu.min():.3e}")
    nu = np.maximum(nu, 0.0)
    s2 = cfg.sigma_sq
    return nu / (nu + s2 * cfg.lipschitz**2) / s2


def effective_dimension(lam, epsilon: float = DEFAULT_EPSILON) -> int:
    """Smallest ``k`` whose top-``k`` eigenvalues hold ``>= 1 - epsilon`` of the mass."""
    _check_epsilon(epsilon)
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise InputError("spectrum must be a non-empty 1-D sequence")
    if np.any(lam < 0):
        raise InputError("spectrum has negative entries")
    if np.any(np.diff(lam) > 0):
        raise InputError("spectrum must be sorted in descending order")
    cums = np.cumsum(lam)
    total = cums[-1]
    if total <= 0:
        raise DegenerateSpectrumError("spectrum has zero total mass")
    # ties at exactly 1 - epsilon count as reaching the threshold; the slack
    # absorbs summation roundoff so equal spectra tie where exact arithmetic would
    slack = 4 * lam.size * np.finfo(np.float64).eps
    k = int(np.argmax(cums / total >= (1.0 - epsilon) - slack)) + 1
    return k


def efficiency(lam, epsilon: float = DEFAULT_EPSILON, d: int | None = None) -> float:
    lam = np.asarray(lam, dtype=np.float64)
    if d is None:
        d = lam.size
    if d != lam.size:
        raise InputError(f"d={d} does not match spectrum length {lam.size}")
    return effective_dimension(lam, epsilon) / d


def offdiag_mass(c) -> float:
    """Sum of squared off-diagonal entries."""
    c = np.asarray(c, dtype=np.float64)
    off = c[~np.eye(c.shape[0], dtype=bool)]
    return float(np.dot(off, off))


def _snap_null(nu: np.ndarray) -> np.ndarray:
    # numerical-rank cut as in matrix_rank: eigenvalues below d * eps * max are zero
    tol = nu.size * np.finfo(np.float64).eps * abs(nu[0])
    return np.where(np.abs(nu) <= tol, 0.0, nu)


def build_report(
    cov,
    cfg: GaussianModelConfig | None = None,
    epsilon: float = DEFAULT_EPSILON,
    correlation=None,
) -> EfficiencyReport:
    """Efficiency report for a representation covariance.

    Eigenvalues of ``cov`` at or below the numerical-rank threshold are
    treated as exact zeros, so a duplicated coordinate reports an infinite
    condition number instead of ~1e16.
    """
    _check_epsilon(epsilon)
    cov = spectral.as_symmetric(cov)
    d = cov.shape[0]
    if cfg is None:
        cfg = GaussianModelConfig(dim=d)
    elif cfg.dim != d:
        raise InputError(f"model config has dim {cfg.dim}, covariance has dim {d}")

    spec = spectral.eigh(cov)
    nu = spec.eigenvalues
    if nu[-1] < -spectral.PSD_RTOL * np.linalg.norm(cov):
        raise spectral.NotPSDError(f"covariance is not PSD (min eigenvalue {nu[-1]:.3e})")
    nu = _snap_null(np.maximum(nu, 0.0))
    if nu[0] <= 0:
        raise DegenerateSpectrumError("covariance is zero: every dimension has collapsed")

    lam = fim_spectrum_from_cov(nu, cfg)
    d_eff = effective_dimension(lam, epsilon)
    mass = None
    if correlation is not None:
        mass = offdiag_mass(correlation)
    return EfficiencyReport(
        cov_eigenvalues=nu,
        fim_eigenvalues=lam,
        epsilon=float(epsilon),
        d_eff=d_eff,
        eta=d_eff / d,
        condition_number=spectral.condition_number(lam),
        offdiag_mass=mass,
        null_dimensions=int(np.sum(nu == 0.0)),
    )

