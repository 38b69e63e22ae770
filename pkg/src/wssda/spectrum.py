"""Eigenspectrum decomposition, pivot location, and hyperbolic tail modeling.

The within-subclass eigenspectrum is decomposed over the full basis (range
and null space).  Small eigenvalues are the most biased, so beyond a pivot
index m the measured values are replaced by a hyperbolic decay model
alpha / (k + beta) fitted through the first and the pivot eigenvalue; past
the rank r the model continues at the constant alpha / (r + 1 + beta).
Whitening weights are the inverse square roots of the modeled spectrum, so
null-space directions keep a finite, non-zero weight instead of being
truncated away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SpectrumError
from .scatter import ScatterMatrix

RANK_RTOL = 1e-12
SYMMETRY_RTOL = 1e-10

REGULARIZED = "regularized"
TRUNCATED = "truncated"


@dataclass
class Eigenspectrum:
    """Full descending eigensystem of a symmetric PSD matrix.

    eigenvalues: (l,) descending, negatives clamped to zero.
    eigenvectors: (l, l) orthonormal columns, one per eigenvalue.
    rank: number of eigenvalues above eigenvalues[0] * RANK_RTOL.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int

    @property
    def tau(self) -> np.ndarray:
        """Square roots of the eigenvalues."""
        return np.sqrt(self.eigenvalues)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


class PivotResult(NamedTuple):
    m: int
    flat: bool


@dataclass
class SpectrumModel:
    """Modeled spectrum and the feature scaling weights derived from it.

    In regularized mode lambda_reg follows the measured values up to the
    pivot and the hyperbolic model beyond it; weights = 1/sqrt(lambda_reg).
    In truncated mode weights are 1/sqrt(lambda) on the range space and zero
    beyond the rank (lambda_reg then just echoes the measured values).
    """

    lambda_reg: np.ndarray
    weights: np.ndarray
    mode: str
    pivot: int | None = None
    alpha: float | None = None
    beta: float | None = None
    usable: bool = True


def eig_symmetric_full(scatter: ScatterMatrix | np.ndarray) -> Eigenspectrum:
    """Full descending eigendecomposition of a symmetric PSD matrix.

    Negative eigenvalues (numerical noise) are clamped to zero.  Eigenvector
    signs follow a fixed convention: the largest-magnitude component of each
    vector is positive, so repeated runs produce identical bases.
    """
    matrix = scatter.matrix if isinstance(scatter, ScatterMatrix) else np.asarray(scatter)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("input must be a square matrix")
    norm = np.linalg.norm(matrix)
    if np.linalg.norm(matrix - matrix.T) > SYMMETRY_RTOL * max(norm, 1e-300):
        raise ValueError("matrix is not symmetric within tolerance")

    values, vectors = np.linalg.eigh(matrix)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    np.clip(values, 0.0, None, out=values)

    peaks = np.argmax(np.abs(vectors), axis=0)
    flip = vectors[peaks, np.arange(vectors.shape[1])] < 0
    vectors[:, flip] *= -1.0

    rank = int(np.count_nonzero(values > values[0] * RANK_RTOL)) if values[0] > 0 else 0
    return Eigenspectrum(values, vectors, rank)


def find_pivot(es: Eigenspectrum, med_factor: float = 1.0) -> PivotResult:
    """Locate the pivot index m (1-based) separating trusted from modeled eigenvalues.

    m is the smallest k with lambda_k below med_factor times the median of
    the non-null eigenvalues, clamped into [2, r - 1].  A spectrum whose
    first and pivot eigenvalues coincide is reported as flat.
    """
    r = es.rank
    if r < 3:
        raise SpectrumError(f"spectrum rank {r} is too short to locate a pivot (need >= 3)")
    if med_factor <= 0:
        raise ValueError("med_factor must be positive")
    nonzero = es.eigenvalues[:r]
    threshold = med_factor * np.median(nonzero)
    below = np.flatnonzero(nonzero < threshold)
    m = int(below[0]) + 1 if below.size else r - 1
    m = min(max(m, 2), r - 1)
    flat = es.eigenvalues[m - 1] >= es.eigenvalues[0] * (1.0 - RANK_RTOL)
    return PivotResult(m, flat)


def fit_model(es: Eigenspectrum, m: int) -> tuple[float, float]:
    """Closed-form constants of the hyperbolic decay through (1, lambda_1) and (m, lambda_m)."""
    r = es.rank
    if not 2 <= m <= r:
        raise ValueError(f"pivot m={m} outside [2, rank={r}]")
    lam1 = float(es.eigenvalues[0])
    lam_m = float(es.eigenvalues[m - 1])
    if lam_m <= 0:
        raise SpectrumError("pivot eigenvalue is zero: pivot sits in the null space")
    if lam1 <= lam_m:
        raise SpectrumError("flat spectrum: first and pivot eigenvalues coincide")
    alpha = lam1 * lam_m * (m - 1) / (lam1 - lam_m)
    beta = (m * lam_m - lam1) / (lam1 - lam_m)
    return alpha, beta


def regularize(es: Eigenspectrum, m: int, alpha: float, beta: float) -> SpectrumModel:
    """Regularized spectrum: measured below the pivot, hyperbolic tail beyond it.

    lambda_reg[k] = lambda_k              for k < m
                  = alpha / (k + beta)    for m <= k <= r
                  = alpha / (r + 1 + beta) for k > r      (1-based k)
    """
    r = es.rank
    k = np.arange(1, es.dim + 1, dtype=np.float64)
    lam = np.empty(es.dim)
    lam[: m - 1] = es.eigenvalues[: m - 1]
    mid = slice(m - 1, r)
    lam[mid] = alpha / (k[mid] + beta)
    lam[r:] = alpha / (r + 1 + beta)
    return SpectrumModel(
        lambda_reg=lam,
        weights=1.0 / np.sqrt(lam),
        mode=REGULARIZED,
        pivot=m,
        alpha=alpha,
        beta=beta,
    )


def flat_model(es: Eigenspectrum) -> SpectrumModel:
    """Degenerate model for flat spectra: every direction gets lambda_1."""
    lam1 = float(es.eigenvalues[0])
    if lam1 <= 0:
        raise SpectrumError("cannot model an all-zero spectrum")
    lam = np.full(es.dim, lam1)
    return SpectrumModel(lambda_reg=lam, weights=1.0 / np.sqrt(lam), mode=REGULARIZED)


def short_tail_model(es: Eigenspectrum) -> SpectrumModel:
    """Fallback for spectra too short to fit the hyperbola (rank < 3).

    Keeps the measured eigenvalues on the range space and extends the last
    non-null eigenvalue into the null space, mirroring the constant
    continuation of the full model.
    """
    r = es.rank
    if r < 1:
        raise SpectrumError("cannot model an all-zero spectrum")
    lam = np.empty(es.dim)
    lam[:r] = es.eigenvalues[:r]
    lam[r:] = es.eigenvalues[r - 1]
    return SpectrumModel(lambda_reg=lam, weights=1.0 / np.sqrt(lam), mode=REGULARIZED)


def truncated_weights(es: Eigenspectrum) -> SpectrumModel:
    """Baseline scaling: inverse square roots on the range space, zero beyond the rank.

    A zero-rank spectrum yields all-zero weights and is flagged unusable.
    """
    r = es.rank
    weights = np.zeros(es.dim)
    if r > 0:
        weights[:r] = 1.0 / np.sqrt(es.eigenvalues[:r])
    return SpectrumModel(
        lambda_reg=es.eigenvalues.copy(),
        weights=weights,
        mode=TRUNCATED,
        usable=r > 0,
    )
