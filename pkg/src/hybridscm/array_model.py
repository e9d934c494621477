"""Hybrid ULA geometry, steering vectors, snapshots and the true SCM.

An array of ``M`` antennas is split into ``N`` contiguous groups of ``M/N``
antennas, one group per RF chain. Angles are in degrees at the API boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    """Array geometry and hybrid partition.

    Attributes:
        M: Number of antennas.
        N: Number of RF chains. Each chain drives ``M // N`` antennas.
        d_over_lambda: Element spacing in wavelengths.
    """

    M: int
    N: int
    d_over_lambda: float = 0.5

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N:
            raise ValueError("M and N must be integers")
        if self.N < 1 or self.M < 1:
            raise ValueError("M and N must be positive")
        if self.M % self.N != 0:
            raise ValueError(f"M={self.M} is not divisible by N={self.N}")
        if self.M // self.N < 2:
            raise ValueError("each RF chain needs at least two antennas (M/N >= 2)")
        if not self.d_over_lambda > 0:
            raise ValueError("d_over_lambda must be positive")

    @property
    def per_chain(self) -> int:
        """Antennas per RF chain, ``M / N``."""
        return self.M // self.N

    @property
    def lag_count(self) -> int:
        """Number of distinct lags in a sub-SCM, ``2M/N - 1``."""
        return 2 * self.per_chain - 1

    def chain_slice(self, n: int) -> slice:
        p = self.per_chain
        return slice(n * p, (n + 1) * p)


@dataclass(frozen=True)
class SourceScene:
    """Independent far-field narrowband sources in white noise."""

    doas_deg: tuple
    powers: tuple
    noise_power: float

    def __post_init__(self):
        doas = tuple(float(x) for x in np.atleast_1d(self.doas_deg))
        powers = tuple(float(x) for x in np.atleast_1d(self.powers))
        object.__setattr__(self, "doas_deg", doas)
        object.__setattr__(self, "powers", powers)
        if len(doas) < 1:
            raise ValueError("at least one source is required")
        if len(doas) != len(powers):
            raise ValueError("doas_deg and powers must have the same length")
        if any(abs(t) > 90 for t in doas):
            raise ValueError("source DOAs must lie in [-90, 90] degrees")
        if any(not p > 0 for p in powers):
            raise ValueError("source powers must be positive")
        if not self.noise_power >= 0:
            raise ValueError("noise_power must be non-negative")

    @property
    def L(self) -> int:
        return len(self.doas_deg)

    @classmethod
    def equispaced(cls, L: int, snr_db: float, power: float = 1.0) -> "SourceScene":
        """``L`` unit-power sources at the midpoints of ``L`` equal bins of [-90, 90].

        The noise power follows from the per-source SNR.
        """
        if L < 1:
            raise ValueError("L must be >= 1")
        doas = -90.0 + 180.0 * (np.arange(L) + 0.5) / L
        noise = power * 10.0 ** (-snr_db / 10.0)
        return cls(tuple(doas), (power,) * L, noise)


@dataclass
class SnapshotBatch:
    """``M x K`` complex snapshot matrix; column ``k`` is ``y[k]``."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[1] < 1:
            raise ValueError("snapshot data must be a 2-D array with K >= 1 columns")

    @property
    def sample_count(self) -> int:
        return self.data.shape[1]


PROVENANCES = ("true", "sample_average", "basic", "low_complexity", "fast_diagonal")


@dataclass
class CovarianceEstimate:
    """An ``M x M`` complex covariance matrix tagged with how it was obtained."""

    matrix: np.ndarray
    provenance: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("covariance matrix must be square")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def M(self) -> int:
        return self.matrix.shape[0]


def _check_angles(theta_deg) -> np.ndarray:
    theta = np.asarray(theta_deg, dtype=float)
    if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) > 90):
        raise ValueError("angles must lie in [-90, 90] degrees")
    return theta


def steering_subvector(cfg: ArrayConfig, n: int, theta_deg: float) -> np.ndarray:
    """Response of the antennas behind chain ``n`` to a plane wave from ``theta_deg``."""
    if not 0 <= n < cfg.N:
        raise ValueError(f"chain index {n} out of range [0, {cfg.N})")
    theta = _check_angles(theta_deg)
    idx = n * cfg.per_chain + np.arange(cfg.per_chain)
    return np.exp(2j * np.pi * cfg.d_over_lambda * np.sin(np.deg2rad(theta)) * idx)


def steering_vector(cfg: ArrayConfig, theta_deg: float) -> np.ndarray:
    theta = _check_angles(theta_deg)
    return np.exp(2j * np.pi * cfg.d_over_lambda * np.sin(np.deg2rad(theta)) * np.arange(cfg.M))


def steering_matrix(cfg: ArrayConfig, thetas_deg: Sequence[float]) -> np.ndarray:
    """Stack of steering vectors, one column per angle (``M x len(thetas)``)."""
    theta = _check_angles(np.atleast_1d(thetas_deg))
    phase = 2 * np.pi * cfg.d_over_lambda * np.outer(np.arange(cfg.M), np.sin(np.deg2rad(theta)))
    return np.exp(1j * phase)


def true_scm(cfg: ArrayConfig, scene: SourceScene) -> CovarianceEstimate:
    A = steering_matrix(cfg, scene.doas_deg)
    R = (A * np.asarray(scene.powers)) @ A.conj().T + scene.noise_power * np.eye(cfg.M)
    return CovarianceEstimate(R, "true", {"L": scene.L, "noise_power": scene.noise_power})


def complex_gaussian(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_snapshots(cfg: ArrayConfig, scene: SourceScene, K: int, seed) -> SnapshotBatch:
    """Draw ``K`` snapshots ``y[k] = sum_l a(theta_l) x_l[k] + z[k]``.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`, including a
    ``SeedSequence`` or an existing ``Generator``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    A = steering_matrix(cfg, scene.doas_deg)
    x = complex_gaussian(rng, (scene.L, K), np.asarray(scene.powers)[:, None])
    z = complex_gaussian(rng, (cfg.M, K), scene.noise_power)
    return SnapshotBatch(A @ x + z)
