"""Identification and verification harnesses.

Identification: single-sample-per-class gallery, cosine nearest neighbor,
error rate swept over feature dimension.  The sweep trains once at the
largest requested d and slices leading columns, which is exact because the
extractor's columns are ordered by the second-stage eigenvalues.

Verification: threshold sweep over all observed pair scores (higher score
means more likely same), exact ROC staircase, equal error rate by linear
interpolation between the two operating points where FAR crosses FRR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import LabeledDataset, SplitSpec
from .errors import ConfigError, ProtocolError
from .pipeline import FeatureExtractor

# A scored verification trial: (similarity score, is_same_class).
Pair = tuple[float, bool]


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b), in [0, 2].  Zero vectors have no direction: ValueError."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("cosine_distance expects two vectors of equal dimension")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance is undefined for zero vectors")
    return float(np.clip(1.0 - float(a @ b) / (na * nb), 0.0, 2.0))


def pair_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Verification score: 1 - cosine_distance, higher means more alike."""
    return 1.0 - cosine_distance(a, b)


def _normalize_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    if (norms == 0.0).any():
        raise ValueError(f"{what} contains a zero vector; cosine matching is undefined")
    return x / norms[:, None]


def nn_classify(
    gallery: np.ndarray, gallery_labels: np.ndarray, probe: np.ndarray
) -> int:
    """Label of the gallery row nearest in cosine distance; ties go to the
    lowest gallery index."""
    gallery = np.asarray(gallery, dtype=np.float64)
    probe = np.asarray(probe, dtype=np.float64)
    if gallery.ndim != 2 or probe.ndim != 1 or gallery.shape[1] != probe.shape[0]:
        raise ValueError("gallery must be rows of the probe's dimension")
    gallery_labels = np.asarray(gallery_labels)
    if gallery_labels.shape != (gallery.shape[0],):
        raise ValueError("one label per gallery row required")
    if gallery.shape[0] == 0:
        raise ValueError("empty gallery")
    gn = _normalize_rows(gallery, "gallery")
    pnorm = np.linalg.norm(probe)
    if pnorm == 0.0:
        raise ValueError("probe is a zero vector")
    dists = 1.0 - gn @ (probe / pnorm)
    return int(gallery_labels[int(np.argmin(dists))])


def _classify_batch(gallery: np.ndarray, labels: np.ndarray, probes: np.ndarray) -> np.ndarray:
    gn = _normalize_rows(gallery, "gallery")
    pn = _normalize_rows(probes, "probe set")
    # argmin over 1 - sims == argmax over sims; first hit wins, so ties
    # resolve to the lowest gallery index either way
    dists = 1.0 - pn @ gn.T
    return labels[np.argmin(dists, axis=1)]


@dataclass
class IdentificationReport:
    curve: list[tuple[int, float]]  # (d, mean error over splits)
    per_split: np.ndarray  # (splits, d_values) error rates
    config: dict = field(default_factory=dict)


def identification_sweep(
    factory: Callable[[int], FeatureExtractor],
    ds: LabeledDataset,
    splits: Sequence[SplitSpec],
    d_values: Sequence[int],
) -> IdentificationReport:
    """Closed-set identification error over feature dimensions.

    factory(d_max) must return an extractor with at least d_max columns;
    lower-dimensional results reuse its leading columns.
    """
    d_values = sorted(set(int(d) for d in d_values))
    if not d_values or d_values[0] < 1:
        raise ValueError("d_values must be positive integers")
    if not splits:
        raise ProtocolError("no gallery/probe splits supplied")
    d_max = d_values[-1]
    if d_max > ds.dim:
        raise ConfigError(f"d={d_max} exceeds the data dimension {ds.dim}")
    fx = factory(d_max)
    if fx.d < d_max:
        raise ConfigError(
            f"extractor provides {fx.d} feature dimensions but the sweep needs {d_max}"
        )
    feats = ds.samples @ fx.projection[:, :d_max]

    errors = np.zeros((len(splits), len(d_values)))
    for s, split in enumerate(splits):
        if split.gallery.size == 0:
            raise ProtocolError("split has an empty gallery")
        truth = ds.class_labels[split.probe]
        for k, d in enumerate(d_values):
            if split.probe.size == 0:
                errors[s, k] = 0.0
                continue
            pred = _classify_batch(
                feats[split.gallery, :d], ds.class_labels[split.gallery], feats[split.probe, :d]
            )
            errors[s, k] = float(np.mean(pred != truth))
    curve = [(d, float(errors[:, k].mean())) for k, d in enumerate(d_values)]
    config = {
        "d_values": d_values,
        "split_count": len(splits),
        "mode": fx.meta.mode,
        "strategy": fx.meta.strategy,
        "h": fx.meta.h,
    }
    return IdentificationReport(curve=curve, per_split=errors, config=config)


@dataclass
class RocReport:
    points: list[tuple[float, float]]  # (far, tar), far non-decreasing
    eer: float
    threshold_at_eer: float
    thresholds: list[float] | None = None  # per point when exact, None when resampled


def _roc_staircase(pairs: Sequence[Pair]):
    same = np.array([s for s, flag in pairs if flag], dtype=np.float64)
    diff = np.array([s for s, flag in pairs if not flag], dtype=np.float64)
    if same.size == 0 or diff.size == 0:
        raise ProtocolError("verification needs at least one same pair and one different pair")
    scores = np.concatenate([same, diff])
    if not np.isfinite(scores).all():
        raise ValueError("pair scores must be finite")
    # accept when score >= threshold; sentinel above the maximum pins (0, 0)
    thresholds = np.unique(scores)[::-1]
    thresholds = np.concatenate([[thresholds[0] + 1.0], thresholds])
    fars = np.array([np.mean(diff >= t) for t in thresholds])
    tars = np.array([np.mean(same >= t) for t in thresholds])
    return thresholds, fars, tars


def _eer_from_staircase(thresholds, fars, tars):
    frrs = 1.0 - tars
    gaps = fars - frrs  # -1 at the sentinel, +1 at the lowest threshold
    j = int(np.argmax(gaps >= 0.0))
    if gaps[j] == 0.0:
        return float(fars[j]), float(thresholds[j])
    s = -gaps[j - 1] / (gaps[j] - gaps[j - 1])
    eer = fars[j - 1] + s * (fars[j] - fars[j - 1])
    thr = thresholds[j - 1] + s * (thresholds[j] - thresholds[j - 1])
    return float(eer), float(thr)


def _grid_readout(fars, tars, grid):
    # staircase value at each grid FAR: best TAR among points with far <= g
    idx = np.searchsorted(fars, grid, side="right") - 1
    return tars[np.maximum(idx, 0)]


def verification_roc(pairs: Sequence[Pair], resolution: int | None = None) -> RocReport:
    """Exact ROC over the observed scores; optional resampling onto a uniform
    FAR grid for plotting or cross-fold averaging.  The EER always comes from
    the exact staircase."""
    thresholds, fars, tars = _roc_staircase(pairs)
    eer, thr = _eer_from_staircase(thresholds, fars, tars)
    if resolution is None:
        points = list(zip(fars.tolist(), tars.tolist()))
        return RocReport(points=points, eer=eer, threshold_at_eer=thr, thresholds=thresholds.tolist())
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    grid = np.linspace(0.0, 1.0, resolution)
    tg = _grid_readout(fars, tars, grid)
    return RocReport(points=list(zip(grid.tolist(), tg.tolist())), eer=eer, threshold_at_eer=thr)


@dataclass
class KFoldReport:
    points: list[tuple[float, float]]  # common FAR grid, fold-averaged TAR
    fold_eers: list[float]
    eer_mean: float
    eer_std: float


def kfold_pairwise(
    pairs: Sequence[Pair], folds: int = 10, resolution: int = 101
) -> KFoldReport:
    """Split the pair list into contiguous folds, compute a ROC per fold, and
    average TAR on a shared FAR grid.  Pair order is the fold assignment, so
    shuffle beforehand if the list is structured."""
    if folds < 1:
        raise ValueError("folds must be at least 1")
    if len(pairs) < folds:
        raise ProtocolError(f"cannot split {len(pairs)} pairs into {folds} folds")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    grid = np.linspace(0.0, 1.0, resolution)
    chunk_bounds = np.array_split(np.arange(len(pairs)), folds)
    eers = []
    tar_rows = []
    for f, idx in enumerate(chunk_bounds):
        chunk = [pairs[i] for i in idx]
        try:
            thresholds, fars, tars = _roc_staircase(chunk)
        except ProtocolError as exc:
            raise ProtocolError(f"fold {f}: {exc}") from exc
        eer, _ = _eer_from_staircase(thresholds, fars, tars)
        eers.append(eer)
        tar_rows.append(_grid_readout(fars, tars, grid))
    mean_tar = np.mean(tar_rows, axis=0)
    return KFoldReport(
        points=list(zip(grid.tolist(), mean_tar.tolist())),
        fold_eers=eers,
        eer_mean=float(np.mean(eers)),
        eer_std=float(np.std(eers)),
    )
