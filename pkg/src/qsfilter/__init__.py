"""qsfilter: quantum stochastic filtering and decoherence toolkit."""

from .exact import ExactComplex
from .noise import NoisePath, TimeGrid, poisson_path, stream_generator, wiener_path
from .statespace import (bloch_to_density, density_to_bloch, pauli,
                         shannon_entropy, von_neumann_entropy)
from .trajectories import (DiffusionModel, EnsembleSummary, JumpModel,
                           TrajectoryRecord, diffusive_ensemble,
                           ensemble_average, integrate_jump_master,
                           integrate_lindblad, jump_ensemble,
                           jump_to_diffusion_embedding,
                           simulate_linear_diffusive, simulate_linear_jump,
                           simulate_nonlinear_diffusive, simulate_nonlinear_jump)

__version__ = "0.1.0"

__all__ = [
    "ExactComplex", "NoisePath", "TimeGrid", "poisson_path", "stream_generator",
    "wiener_path", "bloch_to_density", "density_to_bloch", "pauli",
    "shannon_entropy", "von_neumann_entropy", "DiffusionModel",
    "EnsembleSummary", "JumpModel", "TrajectoryRecord", "diffusive_ensemble",
    "ensemble_average", "integrate_jump_master", "integrate_lindblad",
    "jump_ensemble", "jump_to_diffusion_embedding", "simulate_linear_diffusive",
    "simulate_linear_jump", "simulate_nonlinear_diffusive",
    "simulate_nonlinear_jump", "__version__",
]
