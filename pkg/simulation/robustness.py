"""
Robustness Sweep
================
Draws seeded random perturbations of the plant and exosystem input
matrices, re-assembles the closed loop with the fixed controller and checks
that every perturbed loop that stays exponentially stable still regulates.

Perturbations that destabilize the loop fall outside the robustness class
and are counted separately; they do not fail the sweep.

Usage:
    report = robustness_sweep(plant, ctrl, exo, delta=1e-2, samples=50, seed=0)
    print(report.status)  # "PASS" or "FAIL"
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from numerics.errors import RangeError
from numerics.linalg import matrix_norm
from simulation.simulator import simulate
from sysmodel.state_space import Controller, Exosystem, PlantVariant, StateSpace, assemble_closed_loop

logger = logging.getLogger(__name__)

PERTURBED_MATRICES = ("A", "B", "C", "D", "E", "F")


@dataclass
class PerturbationSample:
    """One perturbed tuple (A~, B~, C~, D~, E~, F~) of relative size delta."""

    index: int
    delta: float
    variant: PlantVariant
    hurwitz: bool
    abscissa: float
    admissible: bool


@dataclass
class SampleOutcome:
    index: int
    hurwitz: bool
    abscissa: float
    admissible: bool
    alpha: Optional[float] = None
    terminal_error: Optional[float] = None
    below_threshold: bool = False

    @property
    def tracks(self) -> Optional[bool]:
        """None for samples outside the class (non-Hurwitz loop)."""
        if not self.hurwitz:
            return None
        return self.alpha is not None and self.alpha > 0 and self.below_threshold


@dataclass
class RobustnessReport:
    """Counts and per-sample outcomes of a sweep."""

    delta: float
    threshold: float
    seed: Optional[int]
    outcomes: List[SampleOutcome] = field(default_factory=list)

    @property
    def hurwitz_count(self) -> int:
        return sum(o.hurwitz for o in self.outcomes)

    @property
    def tracking_count(self) -> int:
        return sum(bool(o.tracks) for o in self.outcomes)

    @property
    def out_of_class(self) -> int:
        return len(self.outcomes) - self.hurwitz_count

    @property
    def failures(self) -> List[int]:
        return [o.index for o in self.outcomes if o.tracks is False]

    @property
    def status(self) -> str:
        return "FAIL" if self.failures else "PASS"

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame([
            {
                "sample": o.index,
                "hurwitz": o.hurwitz,
                "abscissa": o.abscissa,
                "admissible": o.admissible,
                "alpha": o.alpha,
                "terminal_error": o.terminal_error,
                "tracks": o.tracks,
            }
            for o in self.outcomes
        ])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "delta": self.delta,
            "threshold": self.threshold,
            "seed": self.seed,
            "samples": len(self.outcomes),
            "hurwitz": self.hurwitz_count,
            "tracking": self.tracking_count,
            "out_of_class": self.out_of_class,
            "failures": self.failures,
        }

    def summary(self) -> str:
        lines = [
            "═══ Robustness Sweep ═══",
            f"Status:        {self.status}",
            f"Delta:         {self.delta:g} (seed {self.seed})",
            f"Samples:       {len(self.outcomes)}",
            f"Hurwitz:       {self.hurwitz_count}",
            f"Tracking:      {self.tracking_count}",
            f"Out of class:  {self.out_of_class}",
        ]
        if self.failures:
            lines.append(f"Failed samples: {self.failures}")
        lines.append("════════════════════════")
        return "\n".join(lines)


def _perturb(M: np.ndarray, delta: float, rng: np.random.Generator) -> np.ndarray:
    """M + delta ||M|| G / ||G|| with Gaussian G; zero matrices stay zero."""
    scale = matrix_norm(M)
    if delta == 0 or scale == 0:
        return M.copy()
    G = rng.standard_normal(M.shape)
    if np.iscomplexobj(M):
        G = G + 1j * rng.standard_normal(M.shape)
    return M + delta * scale * G / matrix_norm(G)


def draw_sample(
    index: int,
    plant: StateSpace,
    ctrl: Controller,
    exo: Exosystem,
    delta: float,
    rng: np.random.Generator,
    matrices: Sequence[str] = PERTURBED_MATRICES,
) -> PerturbationSample:
    """Perturb the selected matrices and classify the resulting closed loop."""
    current = {
        "A": plant.A, "B": plant.B, "C": plant.C, "D": plant.D, "E": exo.E, "F": exo.F,
    }
    perturbed = {
        key: _perturb(value, delta, rng) if key in matrices else value
        for key, value in current.items()
    }
    variant = PlantVariant(
        plant=plant.with_matrices(**{k: perturbed[k] for k in "ABCD"}),
        E=perturbed["E"],
        F=perturbed["F"],
    )
    cl = assemble_closed_loop(variant.plant, ctrl, variant.exosystem(exo))
    abscissa = cl.abscissa
    return PerturbationSample(
        index=index,
        delta=delta,
        variant=variant,
        hurwitz=abscissa < 0,
        abscissa=abscissa,
        admissible=variant.admissible(exo),
    )


def robustness_sweep(
    plant: StateSpace,
    ctrl: Controller,
    exo: Exosystem,
    delta: float,
    samples: int = 50,
    seed: Optional[int] = 0,
    v0=None,
    t_final: float = 16.0,
    dt: float = 0.01,
    threshold: float = 0.05,
    matrices: Sequence[str] = PERTURBED_MATRICES,
    workers: int = 1,
    progress: bool = False,
) -> RobustnessReport:
    """
    Run a seeded perturbation sweep.

    Sample i uses the i-th child of SeedSequence(seed), so outcomes do not
    depend on `workers`. A Hurwitz sample tracks when its fitted decay rate is
    positive and its terminal error (on [0.75 t_final, t_final]) is below
    `threshold`.

    Raises:
        RangeError: delta < 0 or samples < 1.
    """
    if delta < 0:
        raise RangeError(f"delta must be non-negative, got {delta}")
    if samples < 1:
        raise RangeError(f"samples must be positive, got {samples}")
    unknown = set(matrices) - set(PERTURBED_MATRICES)
    if unknown:
        raise RangeError(f"cannot perturb {sorted(unknown)}")

    children = np.random.SeedSequence(seed).spawn(samples)

    def evaluate(i: int) -> SampleOutcome:
        rng = np.random.default_rng(children[i])
        sample = draw_sample(i, plant, ctrl, exo, delta, rng, matrices)
        outcome = SampleOutcome(
            index=i,
            hurwitz=sample.hurwitz,
            abscissa=sample.abscissa,
            admissible=sample.admissible,
        )
        if sample.hurwitz:
            member_exo = sample.variant.exosystem(exo)
            cl = assemble_closed_loop(sample.variant.plant, ctrl, member_exo)
            result = simulate(cl, member_exo, v0=v0, t_final=t_final, dt=dt)
            outcome.alpha = result.alpha
            outcome.terminal_error = result.max_terminal_error
            outcome.below_threshold = result.max_terminal_error < threshold
        logger.debug(
            f"Sample {i}: hurwitz={sample.hurwitz} abscissa={sample.abscissa:.3e} "
            f"terminal={outcome.terminal_error}"
        )
        return outcome

    indices = range(samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(tqdm(pool.map(evaluate, indices), total=samples,
                                 desc="Sweep", disable=not progress))
    else:
        outcomes = [evaluate(i) for i in tqdm(indices, desc="Sweep", disable=not progress)]

    report = RobustnessReport(delta=delta, threshold=threshold, seed=seed, outcomes=outcomes)
    logger.info(
        f"Robustness sweep {report.status}: {report.tracking_count}/{report.hurwitz_count} "
        f"Hurwitz samples track, {report.out_of_class} out of class"
    )
    return report
