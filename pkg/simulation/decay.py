"""
Exponential Decay Fitting
=========================
Least-squares slope of log ||e(t)|| over a time window. A positive rate
means the regulation error decays like e^{-alpha t}.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from numerics.errors import RangeError

logger = logging.getLogger(__name__)

# Error norms at or below this are treated as exactly zero
ZERO_ERROR = 1e-300

# Norms below this fraction of the peak norm are round-off
NOISE_FLOOR = 1e-13


@dataclass
class DecayFit:
    """
    Fitted decay rate of the error norm.

    `alpha` is +inf when the error vanishes on the whole window.
    """

    alpha: float
    r_squared: float
    window: Tuple[float, float]
    samples: int

    @property
    def converged(self) -> bool:
        return np.isinf(self.alpha) and self.alpha > 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["window"] = list(self.window)
        if not np.isfinite(self.alpha):
            data["alpha"] = "inf" if self.converged else None
        if not np.isfinite(self.r_squared):
            data["r_squared"] = None
        return data


def _resolve_window(times: np.ndarray, window: Optional[Sequence[float]]) -> Tuple[float, float]:
    t0, t_end = float(times[0]), float(times[-1])
    if window is None:
        return 0.5 * t_end, t_end
    t1, t2 = float(window[0]), float(window[1])
    slack = 1e-9 * max(1.0, abs(t_end))
    if t1 >= t2 or t1 < t0 - slack or t2 > t_end + slack:
        raise RangeError(f"decay window [{t1}, {t2}] is outside the time grid [{t0}, {t_end}]")
    return t1, t2


def fit_decay_series(times, error_norms, window: Optional[Sequence[float]] = None) -> DecayFit:
    """
    Fit log ||e(t)|| = c - alpha t on the window (default [t_final/2, t_final]).

    Samples below NOISE_FLOOR times the peak norm are left out of the fit;
    alpha is +inf when fewer than two remain.

    Raises:
        RangeError: If the window lies outside the grid or holds fewer than two samples.
    """
    times = np.asarray(times, dtype=float)
    norms = np.abs(np.asarray(error_norms, dtype=float))
    t1, t2 = _resolve_window(times, window)
    mask = (times >= t1 - 1e-12) & (times <= t2 + 1e-12)
    if mask.sum() < 2:
        raise RangeError(f"decay window [{t1}, {t2}] holds fewer than two samples")

    t_win, n_win = times[mask], norms[mask]
    peak = float(norms.max()) if norms.size else 0.0
    positive = n_win > max(ZERO_ERROR, NOISE_FLOOR * peak)
    if positive.sum() < 2:
        logger.debug("Error vanishes on the decay window")
        return DecayFit(alpha=float("inf"), r_squared=float("nan"), window=(t1, t2), samples=int(mask.sum()))

    log_e = np.log(n_win[positive])
    slope, intercept = np.polyfit(t_win[positive], log_e, 1)
    fitted = intercept + slope * t_win[positive]
    ss_res = float(np.sum((log_e - fitted) ** 2))
    ss_tot = float(np.sum((log_e - log_e.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(alpha=float(-slope), r_squared=r_squared, window=(t1, t2), samples=int(positive.sum()))


def fit_decay(result, window: Optional[Sequence[float]] = None) -> DecayFit:
    """Decay fit of a SimResult's error norm."""
    return fit_decay_series(result.times, result.error_norm, window)
