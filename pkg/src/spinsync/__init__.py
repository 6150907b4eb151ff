"""Simulation library for nonreciprocally synchronized driven spin ensembles."""

__version__ = "0.1.0"

from .params import (
    BraidedWaveguideParams,
    CascadedWaveguideParams,
    CouplingParams,
    CouplingStrengths,
    DirectionalCouplings,
    JumpDecomposition,
    PhysicalityError,
    couplings_from_braided,
    couplings_from_cascaded,
    directional_from_symmetric,
    jump_decomposition,
    symmetric_from_directional,
)

__all__ = [
    "__version__",
    "BraidedWaveguideParams",
    "CascadedWaveguideParams",
    "CouplingParams",
    "CouplingStrengths",
    "DirectionalCouplings",
    "JumpDecomposition",
    "PhysicalityError",
    "couplings_from_braided",
    "couplings_from_cascaded",
    "directional_from_symmetric",
    "jump_decomposition",
    "symmetric_from_directional",
]
