"""Reconstruction and DOA accuracy metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .array_model import CovarianceEstimate


@dataclass
class TrialResult:
    nse: float
    doa_mse_deg2: float
    estimates_deg: list = field(default_factory=list)
    truths_deg: list = field(default_factory=list)
    degenerate: bool = False
    reason: str = ""


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, CovarianceEstimate) else np.asarray(x)


def nse(estimate, truth) -> float:
    """Normalized square error ``||R_hat - R||_F^2 / ||R||_F^2``."""
    Rh, R = _matrix(estimate), _matrix(truth)
    if Rh.shape != R.shape:
        raise ValueError("estimate and truth differ in dimension")
    denom = np.linalg.norm(R) ** 2
    if denom == 0:
        raise ValueError("truth has zero Frobenius norm")
    return float(np.linalg.norm(Rh - R) ** 2 / denom)


def doa_mse(estimates_deg, truths_deg) -> float:
    """Mean square angle error after pairing both lists in sorted order."""
    est = np.sort(np.asarray(estimates_deg, dtype=float))
    tru = np.sort(np.asarray(truths_deg, dtype=float))
    if est.shape != tru.shape or est.size == 0:
        raise ValueError("estimates and truths must be equal-length and nonempty")
    return float(np.mean((est - tru) ** 2))


def aggregate(trials) -> dict:
    """Means over trials.

    Degenerate trials are left out of the MSE mean; the NSE mean covers every
    trial with a finite NSE. ``mean_mse`` is ``None`` when nothing is left.
    """
    trials = list(trials)
    if not trials:
        raise ValueError("no trials to aggregate")
    nses = [t.nse for t in trials if math.isfinite(t.nse)]
    mses = [t.doa_mse_deg2 for t in trials if not t.degenerate and math.isfinite(t.doa_mse_deg2)]
    return {
        "mean_nse": float(np.mean(nses)) if nses else None,
        "mean_mse": float(np.mean(mses)) if mses else None,
        "trial_count": len(trials),
        "degenerate_count": sum(bool(t.degenerate) for t in trials),
    }
