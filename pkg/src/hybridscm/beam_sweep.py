"""Sweep plans, per-chain analog combining and correlation measurements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import (
    ArrayConfig,
    CovarianceEstimate,
    SnapshotBatch,
    SourceScene,
    generate_snapshots,
    steering_subvector,
)

PLAN_FAMILIES = ("uniform_theta", "uniform_spatial_freq")


@dataclass(frozen=True)
class SweepPlan:
    """Ordered predetermined beam directions, in degrees."""

    angles_deg: tuple
    family: str

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles_deg)
        object.__setattr__(self, "angles_deg", angles)
        if len(angles) < 1:
            raise ValueError("a sweep plan needs at least one angle")
        if any(not abs(a) <= 90 for a in angles):
            raise ValueError("sweep angles must lie in [-90, 90] degrees")
        if self.family not in PLAN_FAMILIES:
            raise ValueError(f"unknown plan family {self.family!r}")

    @property
    def Q(self) -> int:
        return len(self.angles_deg)

    def spatial_freqs(self, d_over_lambda: float = 0.5) -> np.ndarray:
        return d_over_lambda * np.sin(np.deg2rad(self.angles_deg))

    def to_text(self) -> str:
        """One angle per line, preceded by a ``# family`` comment line."""
        lines = [f"# {self.family}"] + [repr(a) for a in self.angles_deg]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, family: str | None = None) -> "SweepPlan":
        angles = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if family is None:
                    family = line[1:].strip()
                continue
            angles.append(float(line))
        return cls(tuple(angles), family or "uniform_theta")


def _check_count(Q: int) -> None:
    if int(Q) != Q or Q < 1:
        raise ValueError("Q must be a positive integer")


def uniform_theta_plan(Q: int) -> SweepPlan:
    """Angles ``-90 + 180 q / Q`` degrees (includes -90, excludes +90)."""
    _check_count(Q)
    return SweepPlan(tuple(-90.0 + 180.0 * np.arange(Q) / Q), "uniform_theta")


def uniform_spatial_freq_plan(Q: int) -> SweepPlan:
    """Angles whose half-wavelength spatial frequencies are ``-0.5 + q / Q``."""
    _check_count(Q)
    s = -1.0 + 2.0 * np.arange(Q) / Q
    return SweepPlan(tuple(np.rad2deg(np.arcsin(s))), "uniform_spatial_freq")


def make_plan(family: str, Q: int) -> SweepPlan:
    if family == "uniform_theta":
        return uniform_theta_plan(Q)
    if family == "uniform_spatial_freq":
        return uniform_spatial_freq_plan(Q)
    raise ValueError(f"unknown plan family {family!r}")


@dataclass
class CorrelationSet:
    """Chain-pair correlations, ``values[n1, n2, q]`` (``N x N x Q``)."""

    values: np.ndarray
    samples_per_beam: int | None
    source: str
    plan: SweepPlan | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 3 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("correlation values must have shape (N, N, Q)")
        if self.source not in ("measured", "oracle"):
            raise ValueError(f"unknown correlation source {self.source!r}")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def Q(self) -> int:
        return self.values.shape[2]

    def pair(self, n1: int, n2: int) -> np.ndarray:
        return self.values[n1, n2, :]


def combiner_matrix(cfg: ArrayConfig, theta_deg: float) -> np.ndarray:
    """``N x M`` block-diagonal analog combiner; row ``n`` applies ``a_n^H``."""
    W = np.zeros((cfg.N, cfg.M), dtype=np.complex128)
    for n in range(cfg.N):
        W[n, cfg.chain_slice(n)] = steering_subvector(cfg, n, theta_deg).conj()
    return W


def combine(cfg: ArrayConfig, plan: SweepPlan, q: int, n: int, batch: SnapshotBatch) -> np.ndarray:
    """Chain ``n`` output samples while the beams point at ``plan.angles_deg[q]``."""
    if not 0 <= q < plan.Q:
        raise ValueError(f"sweep index {q} out of range [0, {plan.Q})")
    if not 0 <= n < cfg.N:
        raise ValueError(f"chain index {n} out of range [0, {cfg.N})")
    if batch.data.shape[0] != cfg.M:
        raise ValueError("snapshot row count does not match cfg.M")
    w = steering_subvector(cfg, n, plan.angles_deg[q]).conj()
    return w @ batch.data[cfg.chain_slice(n), :]


def beam_seed(seed, q: int) -> np.random.SeedSequence:
    """Independent child seed for sweep index ``q``.

    Integers and sequences are wrapped in a ``SeedSequence``; the beam index is
    appended to its spawn key so beams can be drawn in any order.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (int(q),))


def correlations_from_batch(cfg: ArrayConfig, theta_deg: float, batch: SnapshotBatch) -> np.ndarray:
    """``N x N`` matrix ``(1/K) sum_k c[k] c[k]^H`` for one beam direction."""
    C = combiner_matrix(cfg, theta_deg) @ batch.data
    P = C @ C.conj().T / batch.sample_count
    # the gemm result is Hermitian only to rounding; force the exact pair symmetry
    P = np.triu(P) + np.triu(P, 1).conj().T
    P[np.diag_indices_from(P)] = P.diagonal().real
    return P


def measure_correlations(
    cfg: ArrayConfig,
    plan: SweepPlan,
    scene: SourceScene,
    K: int,
    seed,
    dwell: str = "fresh",
) -> CorrelationSet:
    """Simulate the sweep and return measured correlations.

    With ``dwell="fresh"`` every beam direction gets its own independent batch of
    ``K`` snapshots (``Q*K`` in total). ``dwell="shared"`` reuses one batch for
    all beams, which is the usual shortcut when simulating the sweep offline.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    values = np.empty((cfg.N, cfg.N, plan.Q), dtype=np.complex128)
    if dwell == "fresh":
        for q, theta in enumerate(plan.angles_deg):
            batch = generate_snapshots(cfg, scene, K, beam_seed(seed, q))
            values[:, :, q] = correlations_from_batch(cfg, theta, batch)
    elif dwell == "shared":
        batch = generate_snapshots(cfg, scene, K, seed)
        for q, theta in enumerate(plan.angles_deg):
            values[:, :, q] = correlations_from_batch(cfg, theta, batch)
    else:
        raise ValueError(f"unknown dwell mode {dwell!r}")
    return CorrelationSet(values, K, "measured", plan)


def _check_hermitian(R: np.ndarray, tol: float = 1e-9) -> None:
    scale = np.linalg.norm(R)
    if np.linalg.norm(R - R.conj().T) > tol * max(scale, np.finfo(float).tiny):
        raise ValueError("covariance matrix is not Hermitian")


def oracle_correlations(cfg: ArrayConfig, R: CovarianceEstimate, plan: SweepPlan) -> CorrelationSet:
    """Exact correlations ``a_{n1}^H R_{n1,n2} a_{n2}`` for every beam."""
    mat = R.matrix if isinstance(R, CovarianceEstimate) else np.asarray(R, dtype=np.complex128)
    if mat.shape != (cfg.M, cfg.M):
        raise ValueError("covariance dimension does not match cfg.M")
    _check_hermitian(mat)
    values = np.empty((cfg.N, cfg.N, plan.Q), dtype=np.complex128)
    for q, theta in enumerate(plan.angles_deg):
        W = combiner_matrix(cfg, theta)
        values[:, :, q] = W @ mat @ W.conj().T
    return CorrelationSet(values, None, "oracle", plan)
