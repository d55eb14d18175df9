"""
Closed-Loop Simulator
=====================
Time response of the closed loop driven by the exosystem. The augmented
system

    d/dt (v, xe) = [[S, 0], [Be, Ae]] (v, xe)

is LTI, so one step operator expm(dt M) is computed once and applied
repeatedly; dt only sets the sampling.

Usage:
    result = simulate(cl, exo, xe0=None, v0=[1, 1, 1], t_final=16.0, dt=0.01)
    print(result.summary())
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from numerics.errors import DimensionError, RangeError
from numerics.linalg import expm, spectral_abscissa
from simulation.decay import DecayFit, fit_decay_series
from sysmodel.state_space import ClosedLoop, Exosystem

logger = logging.getLogger(__name__)

# Imaginary parts below this (relative) are dropped from CSV columns
IMAG_TOLERANCE = 1e-9


def _json_float(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


@dataclass
class SimResult:
    """
    Sampled closed-loop trajectory.

    Rows of `states`, `outputs`, `reference` and `error` follow `times`.
    `error` equals `outputs - reference` sample by sample.
    """

    times: np.ndarray
    states: np.ndarray
    exo_states: np.ndarray
    outputs: np.ndarray
    reference: np.ndarray
    error: np.ndarray
    abscissa: float
    decay: Optional[DecayFit] = None
    terminal_window: Tuple[float, float] = (0.0, 0.0)
    terminal_errors: List[float] = field(default_factory=list)

    @property
    def error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.error, axis=1)

    @property
    def alpha(self) -> float:
        return self.decay.alpha if self.decay else float("nan")

    @property
    def abscissa_bound(self) -> float:
        """-abscissa(Ae), the decay rate of the slowest closed-loop mode."""
        return -self.abscissa

    @property
    def max_terminal_error(self) -> float:
        return max(self.terminal_errors) if self.terminal_errors else float("nan")

    @property
    def is_complex(self) -> bool:
        scale = 1.0 + float(np.max(np.abs(self.outputs), initial=0.0))
        parts = (self.outputs, self.reference, self.error)
        return any(float(np.max(np.abs(np.imag(a)), initial=0.0)) > IMAG_TOLERANCE * scale for a in parts)

    def to_dataframe(self) -> pd.DataFrame:
        """Columns t, y1..yp, yref1..yrefp, e1..ep (with _re/_im pairs when complex)."""
        p = self.outputs.shape[1]
        columns: Dict[str, np.ndarray] = {"t": self.times}
        split = self.is_complex
        for prefix, data in (("y", self.outputs), ("yref", self.reference), ("e", self.error)):
            for i in range(p):
                name = f"{prefix}{i + 1}"
                if split:
                    columns[f"{name}_re"] = np.real(data[:, i])
                    columns[f"{name}_im"] = np.imag(data[:, i])
                else:
                    columns[name] = np.real(data[:, i])
        return pd.DataFrame(columns)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t_final": float(self.times[-1]),
            "dt": float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0,
            "samples": int(len(self.times)),
            "abscissa": _json_float(self.abscissa),
            "abscissa_bound": _json_float(self.abscissa_bound),
            "decay": self.decay.to_dict() if self.decay else None,
            "terminal_window": list(self.terminal_window),
            "terminal_errors": [_json_float(e) for e in self.terminal_errors],
            "max_terminal_error": _json_float(self.max_terminal_error),
        }

    def summary(self) -> str:
        lines = [
            "═══ Simulation Summary ═══",
            f"Horizon:          {self.times[-1]:g} s ({len(self.times)} samples)",
            f"Spectral abscissa: {self.abscissa:.4e}",
            f"Fitted decay rate: {self.alpha:.4g} (bound {self.abscissa_bound:.4g})",
            f"Terminal window:  [{self.terminal_window[0]:g}, {self.terminal_window[1]:g}]",
        ]
        for i, err in enumerate(self.terminal_errors):
            lines.append(f"  max |e{i + 1}|:       {err:.4e}")
        lines.append("══════════════════════════")
        return "\n".join(lines)


def simulate(
    cl: ClosedLoop,
    exo: Exosystem,
    xe0=None,
    v0=None,
    t_final: float = 16.0,
    dt: float = 0.01,
    window: Optional[Sequence[float]] = None,
    terminal_fraction: float = 0.75,
) -> SimResult:
    """
    Simulate the closed loop on the grid 0, dt, ..., t_final.

    Args:
        cl: Closed loop from assemble_closed_loop.
        exo: Exosystem generating reference and disturbance.
        xe0: Initial closed-loop state (zero when omitted).
        v0: Initial exosystem state (ones when omitted).
        window: Decay-fit window (default [t_final/2, t_final]).
        terminal_fraction: Terminal errors are taken on [fraction * t_final, t_final].

    Raises:
        RangeError: dt <= 0 or t_final < dt.
        DimensionError: Initial states of the wrong size.
        NumericalError: expm failure.
    """
    if dt <= 0:
        raise RangeError(f"dt must be positive, got {dt}")
    if t_final < dt:
        raise RangeError(f"t_final={t_final} must be at least dt={dt}")
    r = exo.r
    order = cl.order
    xe0 = np.zeros(order) if xe0 is None else np.asarray(xe0)
    v0 = np.ones(r) if v0 is None else np.asarray(v0)
    if xe0.shape != (order,):
        raise DimensionError(f"xe0 must have {order} entries, got shape {xe0.shape}")
    if v0.shape != (r,):
        raise DimensionError(f"v0 must have {r} entries, got shape {v0.shape}")

    M = np.block([
        [exo.S, np.zeros((r, order))],
        [cl.Be, cl.Ae],
    ])
    step = expm(dt * M)
    steps = int(round(t_final / dt))
    times = dt * np.arange(steps + 1)

    dtype = np.result_type(step, xe0, v0)
    Z = np.empty((steps + 1, r + order), dtype=dtype)
    Z[0] = np.concatenate([v0, xe0])
    for k in range(steps):
        Z[k + 1] = step @ Z[k]

    V, Xe = Z[:, :r], Z[:, r:]
    outputs = Xe @ cl.Ce.T
    reference = -V @ exo.F.T
    error = outputs - reference

    abscissa = spectral_abscissa(cl.Ae)
    result = SimResult(
        times=times, states=Xe, exo_states=V, outputs=outputs,
        reference=reference, error=error, abscissa=abscissa,
    )
    result.decay = fit_decay_series(times, result.error_norm, window)

    t_start = terminal_fraction * times[-1]
    tail = times >= t_start - 1e-12
    result.terminal_window = (float(t_start), float(times[-1]))
    result.terminal_errors = [float(v) for v in np.max(np.abs(error[tail]), axis=0)]

    logger.info(
        f"Simulated {steps} steps of dt={dt}: alpha={result.alpha:.4g}, "
        f"max terminal error {result.max_terminal_error:.3e}"
    )
    return result
