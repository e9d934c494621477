"""Classical MUSIC: eigendecomposition, noise subspace, pseudospectrum, peaks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayConfig, CovarianceEstimate, steering_matrix

#: Upper bound on pseudospectrum values (exact nulls would otherwise be infinite).
SPECTRUM_CEILING = 1e12


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]


@dataclass
class MusicSpectrum:
    grid_deg: np.ndarray
    values: np.ndarray
    source_count: int | None = None

    def to_csv(self) -> str:
        lines = ["theta_deg,p_theta"]
        lines += [f"{t!r},{v!r}" for t, v in zip(self.grid_deg.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"


@dataclass
class DoaEstimate:
    angles_deg: np.ndarray
    degenerate: bool = False


def default_grid(step_deg: float = 0.1) -> np.ndarray:
    """Ascending grid over [-90, 90] with both endpoints included."""
    count = int(round(180.0 / step_deg))
    return np.linspace(-90.0, 90.0, count + 1)


def hermitian_eig(R) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian (possibly indefinite) matrix.

    Eigenvalues are returned in descending order; ties keep LAPACK's index order.
    """
    mat = R.matrix if isinstance(R, CovarianceEstimate) else np.asarray(R, dtype=np.complex128)
    if not np.all(np.isfinite(mat)):
        raise ValueError("covariance matrix has non-finite entries")
    asym = np.linalg.norm(mat - mat.conj().T)
    if asym > 1e-9 * max(np.linalg.norm(mat), np.finfo(float).tiny):
        raise ValueError("covariance matrix is not Hermitian")
    w, U = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], U[:, order])


def noise_subspace(eig: EigenDecomposition, L: int) -> np.ndarray:
    M = eig.eigenvalues.shape[0]
    if not 1 <= L < M:
        raise ValueError(f"source count L={L} must satisfy 1 <= L < M={M}")
    return eig.eigenvectors[:, L:]


def pseudospectrum(cfg: ArrayConfig, Un: np.ndarray, grid_deg=None, source_count=None) -> MusicSpectrum:
    grid = default_grid() if grid_deg is None else np.asarray(grid_deg, dtype=float)
    if grid.size == 0:
        raise ValueError("empty search grid")
    A = steering_matrix(cfg, grid)
    denom = np.sum(np.abs(Un.conj().T @ A) ** 2, axis=0)
    values = 1.0 / np.maximum(denom, 1.0 / SPECTRUM_CEILING)
    return MusicSpectrum(grid, values, source_count)


def _parabolic_vertex(x, y):
    """Vertex of the parabola through three points with distinct abscissae."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    d0 = (y1 - y0) / (x1 - x0)
    d1 = (y2 - y1) / (x2 - x1)
    a = (d1 - d0) / (x2 - x0)
    if a >= 0:
        return x1, y1
    b = d0 - a * (x0 + x1)
    c = y0 - x0 * (a * x0 + b)
    xv = -b / (2 * a)
    xv = min(max(xv, x0), x2)
    return xv, a * xv * xv + b * xv + c


def estimate_doas(spectrum: MusicSpectrum, L: int) -> DoaEstimate:
    """Pick the ``L`` strongest local maxima of a pseudospectrum.

    Interior peaks are refined by a parabola through the three points around the
    peak, fitted to the spectrum in dB against ``sin(theta)``. If fewer than ``L``
    peaks exist, the largest remaining grid points fill the gap and the result is
    flagged degenerate.
    """
    grid, p = np.asarray(spectrum.grid_deg), np.asarray(spectrum.values)
    if p.size == 0:
        raise ValueError("empty spectrum")
    if L < 1:
        raise ValueError("L must be >= 1")
    G = p.size
    if G == 1:
        is_peak = np.array([False])
    else:
        left = np.concatenate(([True], p[1:] > p[:-1]))
        right = np.concatenate((p[:-1] > p[1:], [True]))
        is_peak = left & right
    peaks = np.flatnonzero(is_peak)
    s, db = np.sin(np.deg2rad(grid)), 10 * np.log10(p)
    refined = []
    for i in peaks:
        if 0 < i < G - 1:
            sv, hv = _parabolic_vertex(s[i - 1:i + 2], db[i - 1:i + 2])
            refined.append((hv, float(np.rad2deg(np.arcsin(np.clip(sv, -1, 1)))), i))
        else:
            refined.append((db[i], float(grid[i]), i))
    refined.sort(key=lambda t: (-t[0], t[2]))
    chosen = refined[:L]
    degenerate = len(chosen) < L
    if degenerate:
        used = {t[2] for t in chosen}
        rest = [i for i in np.argsort(-p, kind="stable") if i not in used]
        chosen += [(db[i], float(grid[i]), i) for i in rest[: L - len(chosen)]]
    angles = np.sort(np.array([t[1] for t in chosen]))
    return DoaEstimate(angles, degenerate)


def music_doas(cfg: ArrayConfig, R, L: int, grid_deg=None):
    """Convenience pipeline returning ``(DoaEstimate, MusicSpectrum)``."""
    Un = noise_subspace(hermitian_eig(R), L)
    spec = pseudospectrum(cfg, Un, grid_deg, L)
    return estimate_doas(spec, L), spec
