"""Sub-SCM reconstruction from beam-swept correlations.

Three solvers recover each ``M/N x M/N`` block ``R_{n1,n2}``:

* ``basic``: diagonally loaded least squares on all ``(M/N)^2`` entries.
* ``low_complexity``: least squares on the ``2M/N - 1`` distinct lags of the
  Toeplitz block.
* ``fast_diagonal``: the same lag system for spatial-frequency plans, whose
  Gram matrix is diagonal with a known closed form, so no inverse is needed.

``vec`` stacks columns (Fortran order) throughout, so that
``vec(B C D) = (D^T kron B) vec(C)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .array_model import ArrayConfig, CovarianceEstimate, SnapshotBatch, steering_subvector
from .beam_sweep import CorrelationSet, SweepPlan

ALGORITHMS = ("basic", "low_complexity", "fast_diagonal")

#: Largest accepted condition number of the compressed Gram matrix.
GRAM_CONDITION_LIMIT = 1e12


class IllConditionedError(ValueError):
    """The compressed system cannot be solved without regularization."""


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, rows: int) -> np.ndarray:
    return np.asarray(x).reshape(rows, -1, order="F")


def toeplitz_from_lags(gamma: np.ndarray) -> np.ndarray:
    """Square matrix with ``T[m1, m2] = gamma[m1 - m2 + P - 1]``.

    ``gamma`` runs from lag ``1 - P`` to lag ``P - 1`` and has odd length ``2P - 1``.
    """
    gamma = np.asarray(gamma)
    P = (gamma.shape[0] + 1) // 2
    if gamma.shape[0] != 2 * P - 1:
        raise ValueError("lag vector must have odd length")
    idx = np.arange(P)[:, None] - np.arange(P)[None, :] + P - 1
    return gamma[idx]


def sample_average_scm(batch: SnapshotBatch) -> CovarianceEstimate:
    Y = batch.data
    R = Y @ Y.conj().T / batch.sample_count
    R = 0.5 * (R + R.conj().T)
    return CovarianceEstimate(R, "sample_average", {"K": batch.sample_count})


@dataclass
class LinearSystem:
    """``matrix @ unknowns = rhs`` for one chain pair; ``kind`` is basic or compressed."""

    matrix: np.ndarray
    rhs: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ("basic", "compressed"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.matrix.shape[0] != self.rhs.shape[0]:
            raise ValueError("matrix rows and rhs length differ")

    @property
    def block_size(self) -> int:
        cols = self.matrix.shape[1]
        if self.kind == "basic":
            return int(round(np.sqrt(cols)))
        return (cols + 1) // 2


def _pair_vectors(cfg: ArrayConfig, theta: float, n1: int, n2: int):
    return steering_subvector(cfg, n1, theta), steering_subvector(cfg, n2, theta)


def _check_pair(cfg: ArrayConfig, n1: int, n2: int) -> None:
    if not (0 <= n1 < cfg.N and 0 <= n2 < cfg.N):
        raise ValueError(f"chain pair ({n1}, {n2}) out of range for N={cfg.N}")


def _rhs(correlations, plan: SweepPlan, n1: int, n2: int) -> np.ndarray:
    if isinstance(correlations, CorrelationSet):
        p = correlations.pair(n1, n2)
    else:
        p = np.asarray(correlations, dtype=np.complex128)
    if p.shape != (plan.Q,):
        raise ValueError(f"expected {plan.Q} correlations, got shape {p.shape}")
    return p


def basic_matrix(cfg: ArrayConfig, plan: SweepPlan, n1: int, n2: int) -> np.ndarray:
    """``Q x (M/N)^2`` matrix whose row ``q`` is ``a_{n2} kron conj(a_{n1})``."""
    _check_pair(cfg, n1, n2)
    rows = []
    for theta in plan.angles_deg:
        a1, a2 = _pair_vectors(cfg, theta, n1, n2)
        rows.append(np.kron(a2, a1.conj()))
    return np.array(rows)


def build_basic_system(cfg: ArrayConfig, plan: SweepPlan, n1: int, n2: int, correlations) -> LinearSystem:
    return LinearSystem(basic_matrix(cfg, plan, n1, n2), _rhs(correlations, plan, n1, n2), "basic")


@lru_cache(maxsize=64)
def _selection_matrix(P: int) -> np.ndarray:
    E = np.zeros((P * P, 2 * P - 1))
    for m2 in range(P):
        # block row m2 is [O_{P-1-m2}, I_P, O_{m2}]
        E[m2 * P:(m2 + 1) * P, P - 1 - m2:2 * P - 1 - m2] = np.eye(P)
    E.setflags(write=False)
    return E


def build_E(cfg: ArrayConfig) -> np.ndarray:
    """0/1 matrix with ``vec(R_block) = E @ gamma`` for any Toeplitz block."""
    return _selection_matrix(cfg.per_chain).copy()


def build_compressed_row(cfg: ArrayConfig, plan: SweepPlan, q: int, n1: int, n2: int) -> np.ndarray:
    """Row ``q`` of the lag system, as the convolution of the two chain responses.

    Entry ``m0`` is ``sum_m a_{n2}[P-1-m0+m] conj(a_{n1}[m])`` with out-of-range
    indices treated as zero.
    """
    if not 0 <= q < plan.Q:
        raise ValueError(f"sweep index {q} out of range [0, {plan.Q})")
    _check_pair(cfg, n1, n2)
    a1, a2 = _pair_vectors(cfg, plan.angles_deg[q], n1, n2)
    return np.convolve(a1.conj()[::-1], a2)[::-1]


def compressed_matrix(cfg: ArrayConfig, plan: SweepPlan, n1: int, n2: int) -> np.ndarray:
    return np.array([build_compressed_row(cfg, plan, q, n1, n2) for q in range(plan.Q)])


def build_compressed_system(cfg: ArrayConfig, plan: SweepPlan, n1: int, n2: int, correlations) -> LinearSystem:
    return LinearSystem(compressed_matrix(cfg, plan, n1, n2), _rhs(correlations, plan, n1, n2), "compressed")


def basic_operator(A: np.ndarray, sigma2: float) -> np.ndarray:
    """``(A^H A + sigma2 I)^-1 A^H``, factorized on the smaller Gram side."""
    if not sigma2 > 0:
        raise ValueError("diagonal loading sigma2 must be positive")
    Q, n = A.shape
    AH = A.conj().T
    if n <= Q:
        G = AH @ A + sigma2 * np.eye(n)
        return sla.cho_solve(sla.cho_factor(G, lower=True), AH)
    # push-through identity: A^H (A A^H + sigma2 I)^-1
    G = A @ AH + sigma2 * np.eye(Q)
    return sla.cho_solve(sla.cho_factor(G, lower=True), A).conj().T


def low_complexity_operator(B: np.ndarray) -> np.ndarray:
    """``(B^H B)^-1 B^H`` via a thin QR factorization of ``B``."""
    Q, n = B.shape
    if Q < n:
        raise IllConditionedError(f"Q={Q} sweep beams cannot identify {n} lags (need Q >= {n})")
    s = np.linalg.svd(B, compute_uv=False)
    cond = np.inf if s[-1] == 0 else (s[0] / s[-1]) ** 2
    if cond > GRAM_CONDITION_LIMIT:
        raise IllConditionedError(f"compressed Gram matrix is ill-conditioned (cond={cond:.3g})")
    Qf, Rf = np.linalg.qr(B)
    return sla.solve_triangular(Rf, Qf.conj().T)


def solve_basic(system: LinearSystem, sigma2: float = 1.0) -> np.ndarray:
    if system.kind != "basic":
        raise ValueError("solve_basic needs a basic system")
    r = basic_operator(system.matrix, sigma2) @ system.rhs
    return unvec(r, system.block_size)


def solve_low_complexity(system: LinearSystem) -> np.ndarray:
    if system.kind != "compressed":
        raise ValueError("solve_low_complexity needs a compressed system")
    gamma = low_complexity_operator(system.matrix) @ system.rhs
    return toeplitz_from_lags(gamma)


def gram_diagonal_closed_form(cfg: ArrayConfig, Q: int) -> np.ndarray:
    """Diagonal of ``B^H B`` for a spatial-frequency plan with ``Q`` beams."""
    P = cfg.per_chain
    if Q < 2 * P - 1:
        raise IllConditionedError(f"closed form needs Q >= 2M/N-1 = {2 * P - 1}, got {Q}")
    m = np.arange(2 * P - 1)
    counts = np.where(m <= P - 1, m + 1, 2 * (P - 1) - m + 1)
    return Q * counts.astype(float) ** 2


def _check_fast_plan(cfg: ArrayConfig, plan: SweepPlan) -> None:
    if plan.family != "uniform_spatial_freq":
        raise ValueError("fast diagonal solve needs a uniform_spatial_freq plan")
    if cfg.d_over_lambda != 0.5:
        raise ValueError("fast diagonal solve assumes half-wavelength spacing")


def solve_fast_diagonal(cfg: ArrayConfig, plan: SweepPlan, p, n1: int, n2: int) -> np.ndarray:
    _check_fast_plan(cfg, plan)
    D = gram_diagonal_closed_form(cfg, plan.Q)
    B = compressed_matrix(cfg, plan, n1, n2)
    gamma = (B.conj().T @ _rhs(p, plan, n1, n2)) / D
    return toeplitz_from_lags(gamma)


def assemble_overall(cfg: ArrayConfig, sub_scm_grid, provenance: str = "basic", metadata=None) -> CovarianceEstimate:
    """Place sub-SCM blocks into the full matrix.

    ``sub_scm_grid`` is either a dict keyed by ``(n1, n2)`` or an ``N x N`` nested
    list with ``None`` for absent blocks. An absent block is filled with the
    conjugate transpose of its mirror.
    """
    N, P = cfg.N, cfg.per_chain
    if isinstance(sub_scm_grid, dict):
        blocks = dict(sub_scm_grid)
    else:
        blocks = {
            (i, j): b
            for i, row in enumerate(sub_scm_grid)
            for j, b in enumerate(row)
            if b is not None
        }
    R = np.zeros((cfg.M, cfg.M), dtype=np.complex128)
    for n1 in range(N):
        for n2 in range(N):
            if (n1, n2) in blocks:
                blk = np.asarray(blocks[(n1, n2)])
            elif (n2, n1) in blocks:
                blk = np.asarray(blocks[(n2, n1)]).conj().T
            else:
                raise ValueError(f"block ({n1}, {n2}) and its mirror are both missing")
            if blk.shape != (P, P):
                raise ValueError(f"block ({n1}, {n2}) has shape {blk.shape}, expected {(P, P)}")
            R[cfg.chain_slice(n1), cfg.chain_slice(n2)] = blk
    R = 0.5 * (R + R.conj().T)
    return CovarianceEstimate(R, provenance, dict(metadata or {}))


def multiplication_count(cfg: ArrayConfig, Q: int, algorithm: str) -> int:
    """Online complex multiplications per sub-SCM (the precomputed operator times ``p``)."""
    P = cfg.per_chain
    if algorithm == "basic":
        return Q * P * P
    if algorithm == "low_complexity":
        return Q * (2 * P - 1)
    raise ValueError(f"unknown algorithm {algorithm!r}")


class SubScmSolver:
    """Precomputed linear map from a pair's correlations to its sub-SCM.

    Both system matrices depend on the chain pair only through ``n2 - n1``, so one
    solver serves every pair with the same offset. The map is built once and is
    read-only afterwards.
    """

    def __init__(self, cfg: ArrayConfig, plan: SweepPlan, offset: int, algorithm: str, sigma2: float = 1.0):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        if not -cfg.N < offset < cfg.N:
            raise ValueError(f"offset {offset} out of range for N={cfg.N}")
        self.cfg, self.plan, self.offset, self.algorithm = cfg, plan, offset, algorithm
        n1, n2 = (0, offset) if offset >= 0 else (-offset, 0)
        if algorithm == "basic":
            self.operator = basic_operator(basic_matrix(cfg, plan, n1, n2), sigma2)
        elif algorithm == "low_complexity":
            self.operator = low_complexity_operator(compressed_matrix(cfg, plan, n1, n2))
        else:
            _check_fast_plan(cfg, plan)
            D = gram_diagonal_closed_form(cfg, plan.Q)
            self.operator = compressed_matrix(cfg, plan, n1, n2).conj().T / D[:, None]
        self.operator.setflags(write=False)

    def __call__(self, p: np.ndarray) -> np.ndarray:
        x = self.operator @ p
        if self.algorithm == "basic":
            return unvec(x, self.cfg.per_chain)
        return toeplitz_from_lags(x)


def reconstruct_scm(
    cfg: ArrayConfig,
    correlations: CorrelationSet,
    algorithm: str,
    sigma2: float = 1.0,
    plan: SweepPlan | None = None,
    all_blocks: bool = False,
) -> CovarianceEstimate:
    """Reconstruct the full SCM from a correlation set.

    Only blocks with ``n1 <= n2`` are solved unless ``all_blocks`` is set; the rest
    follow from Hermitian symmetry.
    """
    plan = plan or correlations.plan
    if plan is None:
        raise ValueError("a sweep plan is required")
    if correlations.N != cfg.N or correlations.Q != plan.Q:
        raise ValueError("correlation set does not match cfg / plan")
    solvers = {}
    blocks = {}
    for n1 in range(cfg.N):
        for n2 in range(cfg.N):
            if n2 < n1 and not all_blocks:
                continue
            off = n2 - n1
            if off not in solvers:
                solvers[off] = SubScmSolver(cfg, plan, off, algorithm, sigma2)
            blocks[(n1, n2)] = solvers[off](correlations.pair(n1, n2))
    meta = {"Q": plan.Q, "K": correlations.samples_per_beam, "plan_family": plan.family}
    if algorithm == "basic":
        meta["sigma2"] = sigma2
    return assemble_overall(cfg, blocks, algorithm, meta)
