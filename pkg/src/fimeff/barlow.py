"""Barlow Twins objective on batches of representations.

The cross-correlation of two views is computed on batch-centred,
column-normalised embeddings, and the loss is

    sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2.

Gradients are derived by hand and backpropagated through the centring and
normalisation, so a linear encoder can be trained with plain gradient
descent without an autodiff framework.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import fim, spectral
from .errors import DegenerateColumnError, DivergenceError, InputError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.005
DEFAULT_NOISE_VAR = 0.1
STD_FLOOR = 1e-12
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 100


@dataclass(frozen=True)
class AugmentationModel:
    """Second view is ``z + e`` with ``e ~ N(0, noise_var I)``."""

    noise_var: float = DEFAULT_NOISE_VAR
    seed: int = 0

    def __post_init__(self):
        if not self.noise_var > 0:
            raise InputError(f"noise_var must be positive, got {self.noise_var}")

    def rng(self) -> np.random.Generator:
        # PCG64, the numpy default bit generator
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class BtLossBreakdown:
    invariance: float
    redundancy: float
    lam: float
    total: float


def augment_pair(z, aug: AugmentationModel, rng: np.random.Generator | None = None):
    """Return ``(z, z + noise)``.

    Without an explicit ``rng`` a fresh generator is seeded from ``aug.seed``,
    so repeated calls give identical noise.
    """
    z = spectral.as_batch(z)
    if rng is None:
        rng = aug.rng()
    noise = rng.standard_normal(z.shape) * math.sqrt(aug.noise_var)
    return z, z + noise


def _normalized_columns(z: np.ndarray, view: str):
    centred = z - z.mean(axis=0)
    norms = np.sqrt(np.sum(centred * centred, axis=0))
    std = norms / math.sqrt(z.shape[0])
    bad = np.flatnonzero(~(std > STD_FLOOR))
    if bad.size:
        raise DegenerateColumnError(int(bad[0]), view)
    return centred / norms, norms


def _check_pair(za, zb):
    za = spectral.as_batch(za)
    zb = spectral.as_batch(zb)
    if za.shape != zb.shape:
        raise InputError(f"view shapes differ: {za.shape} vs {zb.shape}")
    return za, zb


def cross_correlation(za, zb) -> np.ndarray:
    """Cross-correlation of two views, d x d, not symmetric in general."""
    za, zb = _check_pair(za, zb)
    a_hat, _ = _normalized_columns(za, "A")
    b_hat, _ = _normalized_columns(zb, "B")
    return np.clip(a_hat.T @ b_hat, -1.0, 1.0)


def population_cross_correlation(cov_z, noise_var: float) -> np.ndarray:
    """Closed form ``W cov_z W`` with ``W = (cov_z + noise_var I)^(-1/2)``."""
    if not noise_var >= 0:
        raise InputError(f"noise_var must be non-negative, got {noise_var}")
    cov_z = spectral.as_symmetric(cov_z)
    w = spectral.inv_sqrt(cov_z + noise_var * np.eye(cov_z.shape[0]))
    c = w @ cov_z @ w
    return 0.5 * (c + c.T)


def bt_loss(c, lam: float = DEFAULT_LAMBDA) -> BtLossBreakdown:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InputError(f"C must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InputError("C has non-finite entries")
    invariance = float(np.sum((1.0 - np.diag(c)) ** 2))
    redundancy = fim.offdiag_mass(c)
    return BtLossBreakdown(invariance, redundancy, float(lam), invariance + lam * redundancy)


def bt_loss_grad_wrt_C(c, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    g = 2.0 * lam * c
    np.fill_diagonal(g, -2.0 * (1.0 - np.diag(c)))
    return g


def _normalize_backward(grad_hat, hat, norms):
    # y = x / ||x|| per column  =>  dx = (dy - y <y, dy>) / ||x||
    proj = np.sum(hat * grad_hat, axis=0)
    return (grad_hat - hat * proj) / norms


def bt_loss_grad_wrt_batches(za, zb, lam: float = DEFAULT_LAMBDA):
    """Gradient of the total loss with respect to both raw (uncentred) batches."""
    za, zb = _check_pair(za, zb)
    a_hat, a_norm = _normalized_columns(za, "A")
    b_hat, b_norm = _normalized_columns(zb, "B")
    g = bt_loss_grad_wrt_C(a_hat.T @ b_hat, lam)

    ga = _normalize_backward(b_hat @ g.T, a_hat, a_norm)
    gb = _normalize_backward(a_hat @ g, b_hat, b_norm)
    # centring is a projection; its adjoint removes the column mean
    return ga - ga.mean(axis=0), gb - gb.mean(axis=0)


@dataclass
class LinearEncoder:
    """Affine map ``z = x W^T + b`` with ``W`` of shape (d_out, d_in)."""

    weights: np.ndarray
    bias: np.ndarray = None

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        if self.bias is None:
            self.bias = np.zeros(self.weights.shape[0])
        self.bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape[0] != self.weights.shape[0]:
            raise InputError("bias length must equal d_out")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise InputError("encoder has non-finite parameters")

    @classmethod
    def random(cls, d_in: int, d_out: int, seed: int = 0, scale: float | None = None):
        """Gaussian weights with std ``1/sqrt(d_in)`` unless ``scale`` is given."""
        rng = np.random.default_rng(seed)
        if scale is None:
            scale = 1.0 / math.sqrt(d_in)
        return cls(rng.standard_normal((d_out, d_in)) * scale)

    @property
    def d_in(self) -> int:
        return self.weights.shape[1]

    @property
    def d_out(self) -> int:
        return self.weights.shape[0]

    def lipschitz(self) -> float:
        """Operator 2-norm of the weights."""
        w = self.weights
        gram = w @ w.T if w.shape[0] <= w.shape[1] else w.T @ w
        return math.sqrt(max(spectral.eigh(gram).eigenvalues[0], 0.0))

    def __call__(self, x):
        return np.asarray(x, dtype=np.float64) @ self.weights.T + self.bias


@dataclass(frozen=True)
class TraceRecord:
    step: int
    invariance: float
    redundancy: float
    total: float
    offdiag_mass: float
    diag_gap: float
    eta: float


TRACE_COLUMNS = ("step", "invariance", "redundancy", "total", "offdiag_mass", "diag_gap", "eta")


@dataclass
class TrainingTrace:
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord):
        if self.records and record.step <= self.records[-1].step:
            raise InputError("trace steps must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]


def gaussian_sampler(data_cov):
    """Return ``sample(rng, n)`` drawing rows from ``N(0, data_cov)``."""
    data_cov = spectral.as_symmetric(data_cov)
    spec = spectral.eigh(data_cov)
    if spec.eigenvalues[-1] < -spectral.PSD_RTOL * np.linalg.norm(data_cov):
        raise spectral.NotPSDError("data covariance is not PSD")
    factor = spec.eigenvectors * np.sqrt(np.maximum(spec.eigenvalues, 0.0))

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, factor.shape[0])) @ factor.T

    return sample


def correlation_summary(c) -> tuple[float, float]:
    """``(offdiag_mass, diag_gap)`` of a correlation matrix."""
    return fim.offdiag_mass(c), float(np.max(np.abs(1.0 - np.diag(c))))


def train_toy(
    data_cov,
    encoder_init: LinearEncoder,
    aug: AugmentationModel | None = None,
    lam: float = DEFAULT_LAMBDA,
    lr: float = 0.05,
    steps: int = 3000,
    batch_n: int = 512,
    report_eps: float = fim.DEFAULT_EPSILON,
    seed: int = 0,
    model: fim.GaussianModelConfig | None = None,
):
    """Train a linear encoder on Gaussian data with the Barlow Twins loss.

    Each step samples ``x ~ N(0, data_cov)``, encodes it, adds
    representation-space noise for the second view and takes one gradient
    step on the weights. Returns ``(encoder, trace)``.

    Raises :class:`DivergenceError` if the loss stays above ten times its
    first value for 100 consecutive steps, or becomes non-finite.
    """
    if int(steps) != steps or steps < 1:
        raise PreconditionError(f"steps must be >= 1, got {steps}")
    if not lr > 0:
        raise PreconditionError(f"lr must be positive, got {lr}")
    if aug is None:
        aug = AugmentationModel()
    data_cov = spectral.as_symmetric(data_cov)
    enc = LinearEncoder(encoder_init.weights.copy(), encoder_init.bias.copy())
    if enc.d_in != data_cov.shape[0]:
        raise PreconditionError(
            f"encoder expects d_in={enc.d_in}, data covariance has dim {data_cov.shape[0]}"
        )
    if batch_n < 2 * enc.d_out:
        raise PreconditionError(f"batch_n must be >= 2*d_out = {2 * enc.d_out}, got {batch_n}")
    if model is None:
        model = fim.GaussianModelConfig(dim=enc.d_out)

    sample = gaussian_sampler(data_cov)
    data_rng = np.random.default_rng(seed)
    noise_rng = aug.rng()
    trace = TrainingTrace()
    first_total = None
    above = 0

    for step in range(int(steps)):
        x = sample(data_rng, batch_n)
        z = enc(x)
        # beyond ~1e150 the second moments overflow
        if not np.all(np.abs(z) < 1e150):
            raise DivergenceError(f"representations overflowed at step {step}")
        za, zb = augment_pair(z, aug, noise_rng)
        c = cross_correlation(za, zb)
        loss = bt_loss(c, lam)
        if not math.isfinite(loss.total):
            raise DivergenceError(f"non-finite loss at step {step}")
        mass, gap = correlation_summary(c)
        report = fim.build_report(spectral.covariance(za), model, report_eps)
        trace.append(TraceRecord(step, loss.invariance, loss.redundancy, loss.total, mass, gap, report.eta))

        if first_total is None:
            first_total = loss.total
        above = above + 1 if loss.total > DIVERGENCE_FACTOR * first_total else 0
        if above >= DIVERGENCE_PATIENCE:
            raise DivergenceError(
                f"loss above {DIVERGENCE_FACTOR:g}x its initial value for "
                f"{DIVERGENCE_PATIENCE} consecutive steps (step {step})"
            )

        ga, gb = bt_loss_grad_wrt_batches(za, zb, lam)
        gz = ga + gb
        enc.weights -= lr * (gz.T @ x)
        enc.bias -= lr * gz.sum(axis=0)
        if not np.all(np.isfinite(enc.weights)):
            raise DivergenceError(f"non-finite weights after step {step}")

        if step % 500 == 0:
            logger.debug("step %d loss %.6g offdiag %.4g", step, loss.total, mass)

    return enc, trace
