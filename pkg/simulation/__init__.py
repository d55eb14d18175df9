"""
Simulation package.
Closed-loop time simulation, decay-rate fitting and perturbation sweeps.
"""

from simulation.decay import DecayFit, fit_decay, fit_decay_series
from simulation.robustness import (
    PerturbationSample,
    RobustnessReport,
    SampleOutcome,
    draw_sample,
    robustness_sweep,
)
from simulation.simulator import SimResult, simulate

__all__ = [
    "DecayFit",
    "fit_decay",
    "fit_decay_series",
    "PerturbationSample",
    "RobustnessReport",
    "SampleOutcome",
    "draw_sample",
    "robustness_sweep",
    "SimResult",
    "simulate",
]
