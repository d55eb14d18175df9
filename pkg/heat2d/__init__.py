"""
Heat benchmark package.
Galerkin model of the boundary-controlled 2D heat equation and its exosystem.
"""

from heat2d.heat_plant import (
    BENCHMARK_V0,
    HeatModelConfig,
    HeatPlant,
    benchmark_exosystem,
    benchmark_reference,
    build_heat_plant,
    temperature_field,
    transfer_convergence,
)

__all__ = [
    "BENCHMARK_V0",
    "HeatModelConfig",
    "HeatPlant",
    "benchmark_exosystem",
    "benchmark_reference",
    "build_heat_plant",
    "temperature_field",
    "transfer_convergence",
]
