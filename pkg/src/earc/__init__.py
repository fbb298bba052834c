"""Identification of symmetric dynamical systems with equivariant
autoregressive reservoir computers: polynomial Kronecker feature maps over
time-delay windows, symmetry-constrained output couplings from null-space
bases, truncated-SVD least squares, and autoregressive forecasting."""

from .embedding import (CompressionPlan, build_data_matrices, compress,
                        compressed_features, compression_plan, delay_windows,
                        embed, embed_dim, expand)
from .groups import GroupRep, close_group, lifted_action, reduced_action
from .model import (EarcModel, Forecast, estimate_lag, load, predict_step,
                    rollout, save, train)
from .solver import (EquivariantBasis, FitReport, assemble, equivariance_residual,
                     equivariant_basis, fit_coefficients, unconstrained_fit)
from .systems import (CompetitionConfig, HamiltonianConfig, builtin_rep,
                      competition_generate, competition_step,
                      hamiltonian_generate, planted_linear)

__version__ = "0.1.0"

__all__ = [
    "CompressionPlan", "build_data_matrices", "compress", "compressed_features",
    "compression_plan", "delay_windows", "embed", "embed_dim", "expand",
    "GroupRep", "close_group", "lifted_action", "reduced_action",
    "EarcModel", "Forecast", "estimate_lag", "load", "predict_step", "rollout",
    "save", "train",
    "EquivariantBasis", "FitReport", "assemble", "equivariance_residual",
    "equivariant_basis", "fit_coefficients", "unconstrained_fit",
    "CompetitionConfig", "HamiltonianConfig", "builtin_rep",
    "competition_generate", "competition_step", "hamiltonian_generate",
    "planted_linear",
    "__version__",
]
