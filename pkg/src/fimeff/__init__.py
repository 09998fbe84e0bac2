"""Representation efficiency from the Fisher information spectrum, and the
Barlow Twins objective that drives it to the optimum."""

from .barlow import (
    AugmentationModel,
    BtLossBreakdown,
    LinearEncoder,
    TraceRecord,
    TrainingTrace,
    augment_pair,
    bt_loss,
    bt_loss_grad_wrt_batches,
    bt_loss_grad_wrt_C,
    cross_correlation,
    population_cross_correlation,
    train_toy,
)
from .errors import (
    DegenerateColumnError,
    DegenerateSpectrumError,
    DivergenceError,
    FimEffError,
    InputError,
    NotPSDError,
    ParseError,
    PreconditionError,
)
from .fim import (
    EfficiencyReport,
    GaussianModelConfig,
    average_fim,
    build_report,
    effective_dimension,
    efficiency,
    fim_spectrum_from_cov,
    local_fim,
)
from .spectral import SymmetricSpectrum, condition_number, covariance, eigh, inv_sqrt

__version__ = "0.1.0"
