"""Monte Carlo and end-to-end checks of the efficiency framework.

Each ``validate_*`` function returns a :class:`ValidationResult` holding
named deviations next to named tolerances; a result passes when every
deviation is within its bound. Finite-sample tolerances use ``5/sqrt(n)``.
All randomness flows from explicit seeds, so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import barlow, fim, spectral
from .errors import PreconditionError


@dataclass
class ValidationResult:
    name: str
    measured: dict
    tolerance: dict
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        if set(self.measured) != set(self.tolerance):
            raise ValueError("measured and tolerance must name the same checks")
        self.passed = all(self.measured[k] <= self.tolerance[k] for k in self.measured)


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian source ``N(0, Q^T diag(nu) Q)``; ``rotation_seed=None`` keeps Q = I."""

    cov_eigenvalues: tuple
    sample_count: int = 100_000
    rotation_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "cov_eigenvalues", tuple(float(v) for v in self.cov_eigenvalues))
        if not self.cov_eigenvalues:
            raise PreconditionError("cov_eigenvalues must be non-empty")
        if min(self.cov_eigenvalues) < 0:
            raise PreconditionError("cov_eigenvalues must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.cov_eigenvalues)

    def rotation(self) -> np.ndarray:
        if self.rotation_seed is None:
            return np.eye(self.dim)
        return random_orthogonal(self.dim, self.rotation_seed)

    def covariance(self) -> np.ndarray:
        q = self.rotation()
        cov = (q.T * np.asarray(self.cov_eigenvalues)) @ q
        return 0.5 * (cov + cov.T)


def random_orthogonal(d: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR with sign-corrected R)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((spec.sample_count, spec.dim))
    return (g * np.sqrt(np.asarray(spec.cov_eigenvalues))) @ spec.rotation()


def validate_lemma1(cfg: fim.GaussianModelConfig | None = None, mc_samples: int = 100_000, seed: int = 0):
    """Monte Carlo Fisher information ``E[s s^T]`` with score ``s = (t - z)/sigma^2``."""
    if cfg is None:
        cfg = fim.GaussianModelConfig(sigma_sq=1.0, dim=4)
    if mc_samples < 10_000:
        raise PreconditionError(f"lemma1 needs mc_samples >= 1e4, got {mc_samples}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(cfg.dim)
    t = z + math.sqrt(cfg.sigma_sq) * rng.standard_normal((mc_samples, cfg.dim))
    score = (t - z) / cfg.sigma_sq
    estimate = score.T @ score / mc_samples
    deviation = float(np.max(np.abs(estimate - fim.local_fim(cfg))))
    return ValidationResult(
        "lemma1_isotropic_fim",
        measured={"max_abs_dev": deviation},
        tolerance={"max_abs_dev": 5.0 / math.sqrt(mc_samples) / cfg.sigma_sq},
        config={"d": cfg.dim, "sigma_sq": cfg.sigma_sq, "n": mc_samples, "seed": seed},
        extras={"fim_diag_mean": float(np.mean(np.diag(estimate)))},
    )


def whitened_cross_correlation(za, zb, cov_z, noise_var: float) -> np.ndarray:
    """Average of ``(W z_a)(W z_b)^T`` with ``W = (cov_z + noise_var I)^(-1/2)``."""
    w = spectral.inv_sqrt(cov_z + noise_var * np.eye(cov_z.shape[0]))
    return w @ (za.T @ zb / za.shape[0]) @ w


def validate_lemma3(spec: SyntheticSpec | None = None, noise_var: float = 1.0, seed: int = 0):
    if spec is None:
        spec = SyntheticSpec((2.0, 1.0))
    if spec.sample_count < 10_000:
        raise PreconditionError(f"lemma3 needs sample_count >= 1e4, got {spec.sample_count}")
    za = generate_synthetic(spec, seed)
    aug = barlow.AugmentationModel(noise_var, seed=seed + 1)
    za, zb = barlow.augment_pair(za, aug)
    cov_z = spec.covariance()
    empirical = whitened_cross_correlation(za, zb, cov_z, noise_var)
    population = barlow.population_cross_correlation(cov_z, noise_var)
    deviation = float(np.max(np.abs(empirical - population)))
    return ValidationResult(
        "lemma3_closed_form",
        measured={"max_abs_dev": deviation},
        tolerance={"max_abs_dev": 5.0 / math.sqrt(spec.sample_count)},
        config={
            "d": spec.dim,
            "nu": list(spec.cov_eigenvalues),
            "n": spec.sample_count,
            "noise_var": noise_var,
            "rotation_seed": spec.rotation_seed,
            "seed": seed,
        },
        extras={"empirical": empirical.tolist(), "population": population.tolist()},
    )


def validate_lemma4(nu_equal: float = 1.0, noise_var: float = 1.0, d: int = 3, delta: float = 0.01):
    """Forward direction exactly, converse as the bound ``nu >= noise_var (1 - delta) / delta``."""
    if not nu_equal > 0:
        raise PreconditionError(f"nu_equal must be positive, got {nu_equal}")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    c = barlow.population_cross_correlation(nu_equal * np.eye(d), noise_var)
    expected = nu_equal / (nu_equal + noise_var)
    diag = np.diag(c)
    off = c[~np.eye(d, dtype=bool)]

    nu_bound = noise_var * (1.0 - delta) / delta
    if nu_bound > 0:
        at_bound = nu_bound / (nu_bound + noise_var)
        below = 0.99 * nu_bound / (0.99 * nu_bound + noise_var)
        bound_dev = abs(at_bound - (1.0 - delta))
        below_excess = max(0.0, below - (1.0 - delta))
    else:
        bound_dev = below_excess = 0.0

    tol = 1e-12
    return ValidationResult(
        "lemma4_isotropy",
        measured={
            "diag_spread": float(diag.max() - diag.min()),
            "offdiag_max": float(np.max(np.abs(off))) if off.size else 0.0,
            "closed_form_dev": float(np.max(np.abs(diag - expected))),
            "converse_bound_dev": bound_dev,
            "converse_below_excess": below_excess,
        },
        tolerance={
            "diag_spread": tol,
            "offdiag_max": tol,
            "closed_form_dev": tol,
            "converse_bound_dev": tol,
            "converse_below_excess": 0.0,
        },
        config={"nu": nu_equal, "noise_var": noise_var, "d": d, "delta": delta},
        extras={"c_diag": float(diag[0]), "implied_nu_lower_bound": nu_bound},
    )


def validate_theorem1(
    spec: SyntheticSpec | None = None,
    cfg: fim.GaussianModelConfig | None = None,
    noise_var: float = 1.0,
):
    """Equal covariance eigenvalues give an isotropic Fisher spectrum."""
    if spec is None:
        spec = SyntheticSpec((3.0,) * 16)
    nu = np.asarray(spec.cov_eigenvalues)
    if np.any(nu != nu[0]):
        raise PreconditionError("theorem1 needs all covariance eigenvalues equal")
    if cfg is None:
        cfg = fim.GaussianModelConfig(dim=spec.dim)
    gamma = float(nu[0])
    cov = gamma * np.eye(spec.dim)
    lam = fim.fim_spectrum_from_cov(spectral.eigh(cov).eigenvalues, cfg)
    config = {
        "d": spec.dim,
        "gamma": gamma,
        "sigma_sq": cfg.sigma_sq,
        "lipschitz": cfg.lipschitz,
        "noise_var": noise_var,
    }
    if lam[0] <= 0:
        return ValidationResult(
            "theorem1_isotropic_fim", {"degenerate": 1.0}, {"degenerate": 0.0}, config
        )
    c = barlow.population_cross_correlation(cov, noise_var)
    return ValidationResult(
        "theorem1_isotropic_fim",
        measured={
            "relative_spread": float((lam.max() - lam.min()) / lam.max()),
            "condition_excess": spectral.condition_number(lam) - 1.0,
            "degenerate": 0.0,
        },
        tolerance={"relative_spread": 1e-12, "condition_excess": 0.0, "degenerate": 0.0},
        config=config,
        extras={"c": float(lam[0]), "population_c_diag": float(c[0, 0])},
    )


@dataclass
class Theorem2Config:
    """End-to-end training setup; mirrors :func:`barlow.train_toy`."""

    d_in: int = 8
    d_out: int = 4
    lam: float = barlow.DEFAULT_LAMBDA
    lr: float = 0.05
    steps: int = 3000
    batch_n: int = 512
    noise_var: float = barlow.DEFAULT_NOISE_VAR
    epsilon: float = fim.DEFAULT_EPSILON
    sigma_sq: float = 1.0
    lipschitz: float = 1.0
    eval_n: int = 4096
    seed: int = 0

    def encoder_init(self) -> barlow.LinearEncoder:
        return barlow.LinearEncoder.random(self.d_in, self.d_out, seed=self.seed)

    def augmentation(self) -> barlow.AugmentationModel:
        return barlow.AugmentationModel(self.noise_var, seed=self.seed + 1)

    def model(self) -> fim.GaussianModelConfig:
        return fim.GaussianModelConfig(self.sigma_sq, self.lipschitz, self.d_out)


@dataclass
class EncoderEvaluation:
    report: fim.EfficiencyReport
    offdiag_mass: float
    diag_gap: float


def evaluate_encoder(encoder, data_cov, cfg: Theorem2Config, seed: int | None = None) -> EncoderEvaluation:
    """Efficiency and correlation summary of ``encoder`` on a fresh batch."""
    if seed is None:
        seed = cfg.seed
    rng = np.random.default_rng([seed, 1])
    x = barlow.gaussian_sampler(data_cov)(rng, cfg.eval_n)
    z = encoder(x)
    aug = barlow.AugmentationModel(cfg.noise_var)
    za, zb = barlow.augment_pair(z, aug, np.random.default_rng([seed, 2]))
    c = barlow.cross_correlation(za, zb)
    mass, gap = barlow.correlation_summary(c)
    report = fim.build_report(spectral.covariance(z), cfg.model(), cfg.epsilon, correlation=c)
    return EncoderEvaluation(report, mass, gap)


def validate_theorem2(cfg: Theorem2Config | None = None, encoder_init=None):
    """Train to near the loss optimum, then require eta = 1 on a fresh batch."""
    if cfg is None:
        cfg = Theorem2Config()
    if encoder_init is None:
        encoder_init = cfg.encoder_init()
    data_cov = np.eye(cfg.d_in)
    enc, trace = barlow.train_toy(
        data_cov,
        encoder_init,
        cfg.augmentation(),
        lam=cfg.lam,
        lr=cfg.lr,
        steps=cfg.steps,
        batch_n=cfg.batch_n,
        report_eps=cfg.epsilon,
        seed=cfg.seed,
        model=cfg.model(),
    )
    ev = evaluate_encoder(enc, data_cov, cfg)
    result = ValidationResult(
        "theorem2_optimal_efficiency",
        measured={
            "eta_shortfall": 1.0 - ev.report.eta,
            "offdiag_mass": ev.offdiag_mass,
            "diag_gap": ev.diag_gap,
        },
        tolerance={"eta_shortfall": 0.0, "offdiag_mass": 0.05, "diag_gap": 0.1},
        config=asdict(cfg),
        extras={
            "eta": ev.report.eta,
            "d_eff": ev.report.d_eff,
            "condition_number": ev.report.condition_number,
            "final_train_loss": trace.final.total,
            "encoder_lipschitz": enc.lipschitz(),
        },
    )
    result.trace = trace
    result.encoder = enc
    return result


DEFAULT_PROFILES = (
    (4.0, 3.0, 2.0, 1.0),
    (1.0, 1.0, 1.0, 1.0),
    (10.0, 1.0, 0.1, 0.01),
    (2.0, 1.0, 0.0),
    (100.0, 50.0, 50.0, 1.0, 1.0),
)
DEFAULT_MODEL_GRID = tuple((s2, L) for s2 in (0.25, 1.0, 4.0) for L in (0.5, 1.0, 2.0))


def sweep_spectrum_map(profiles=DEFAULT_PROFILES, model_grid=DEFAULT_MODEL_GRID, epsilon=fim.DEFAULT_EPSILON):
    """Check the covariance-to-Fisher map on every (profile, sigma_sq, L) pair.

    Reports efficiency computed from both spectra; the two agree exactly when
    the map keeps the effective-dimension cut in place.
    """
    profiles = list(profiles)
    model_grid = list(model_grid)
    if not profiles or not model_grid:
        raise PreconditionError("sweep needs non-empty profile and model grids")
    results = []
    for nu in profiles:
        nu = np.sort(np.asarray(nu, dtype=np.float64))[::-1]
        d = nu.size
        for sigma_sq, lipschitz in model_grid:
            cfg = fim.GaussianModelConfig(sigma_sq, lipschitz, d)
            lam = fim.fim_spectrum_from_cov(nu, cfg)
            # strict order in nu must stay strict, ties must stay ties
            strict = nu[:-1] > nu[1:]
            order_violations = int(np.sum(strict & ~(lam[:-1] > lam[1:])))
            order_violations += int(np.sum(~strict & (lam[:-1] != lam[1:])))
            excess = float(max(0.0, np.max(lam) - 1.0 / sigma_sq))

            d_nu = fim.effective_dimension(nu, epsilon)
            d_lam = fim.effective_dimension(lam, epsilon)
            eta_nu, eta_lam = d_nu / d, d_lam / d
            cut_preserved = d_nu == d_lam
            mismatch = float((eta_nu == eta_lam) != cut_preserved)
            results.append(
                ValidationResult(
                    "prop1_spectrum_map",
                    measured={
                        "order_violations": float(order_violations),
                        "upper_bound_excess": excess,
                        "eta_cut_mismatch": mismatch,
                    },
                    tolerance={"order_violations": 0.0, "upper_bound_excess": 0.0, "eta_cut_mismatch": 0.0},
                    config={"nu": nu.tolist(), "sigma_sq": sigma_sq, "lipschitz": lipschitz, "epsilon": epsilon},
                    extras={
                        "lam": lam.tolist(),
                        "eta_from_nu": eta_nu,
                        "eta_from_lambda": eta_lam,
                        "cut_preserved": cut_preserved,
                    },
                )
            )
    return results
