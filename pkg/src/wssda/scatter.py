"""Scatter matrix construction with equal class and subclass priors.

All builders return symmetric positive semidefinite matrices; exact symmetry
is enforced by averaging the accumulated matrix with its transpose.  Class
priors are fixed at 1/C and subclass priors at 1/H_i throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .errors import PartitionError
from .partition import SubclassPartition

WITHIN_CLASS = "within_class"
WITHIN_SUBCLASS = "within_subclass"
BETWEEN_SUBCLASS = "between_subclass"
TOTAL_SUBCLASS = "total_subclass"


@dataclass
class ScatterMatrix:
    matrix: np.ndarray
    kind: str
    rank_bound: int


def _symmetrize(acc: np.ndarray) -> np.ndarray:
    return (acc + acc.T) / 2.0


def class_means(samples: np.ndarray, class_labels: np.ndarray) -> np.ndarray:
    """(C, dim) matrix of per-class sample means."""
    c = int(class_labels.max()) + 1
    out = np.empty((c, samples.shape[1]))
    for i in range(c):
        out[i] = samples[class_labels == i].mean(axis=0)
    return out


def mean_of_class_means(samples: np.ndarray, class_labels: np.ndarray) -> np.ndarray:
    """Global center used by the subclass scatters: the unweighted mean of class means.

    For unbalanced classes this differs from the grand sample mean.
    """
    return class_means(samples, class_labels).mean(axis=0)


def within_class_scatter(ds: LabeledDataset) -> ScatterMatrix:
    """Average outer product of deviations from class means, weighted 1/n."""
    acc = np.zeros((ds.dim, ds.dim))
    for i in range(ds.class_count):
        block = ds.samples[ds.class_labels == i]
        centered = block - block.mean(axis=0)
        acc += centered.T @ centered
    acc /= ds.n
    return ScatterMatrix(_symmetrize(acc), WITHIN_CLASS, min(ds.dim, ds.n - ds.class_count))


def within_subclass_scatter(ds: LabeledDataset, part: SubclassPartition) -> ScatterMatrix:
    """Prior-weighted scatter of deviations from subclass means.

    Each subclass contributes its centered Gram matrix scaled by
    1/(C * H_i * G_ij); singleton subclasses contribute zero.
    """
    if part.class_labels.shape != ds.class_labels.shape or not np.array_equal(
        part.class_labels, ds.class_labels
    ):
        raise PartitionError("partition does not match the dataset's class labels")
    c = ds.class_count
    acc = np.zeros((ds.dim, ds.dim))
    rank_bound = 0
    for i in range(c):
        h_i = len(part.subclass_counts[i])
        for j in range(h_i):
            idx = part.group_indices(i, j)
            if idx.size == 0:
                raise PartitionError(f"subclass ({i}, {j}) is empty")
            block = ds.samples[idx]
            centered = block - block.mean(axis=0)
            acc += (centered.T @ centered) / (c * h_i * idx.size)
            rank_bound += idx.size - 1
    return ScatterMatrix(_symmetrize(acc), WITHIN_SUBCLASS, min(ds.dim, rank_bound))


def between_subclass_scatter(
    subclass_means: list[np.ndarray], global_mean: np.ndarray
) -> ScatterMatrix:
    """Scatter of subclass means about the global center, weighted 1/(C * H_i).

    subclass_means holds one (H_i, dim) array per class.
    """
    c = len(subclass_means)
    dim = global_mean.shape[0]
    acc = np.zeros((dim, dim))
    total_subclasses = 0
    for means in subclass_means:
        dev = means - global_mean
        acc += (dev.T @ dev) / (c * means.shape[0])
        total_subclasses += means.shape[0]
    return ScatterMatrix(_symmetrize(acc), BETWEEN_SUBCLASS, min(dim, total_subclasses - 1))


def total_subclass_scatter(
    samples: np.ndarray, class_labels: np.ndarray, global_mean: np.ndarray
) -> ScatterMatrix:
    """Scatter of all samples about the global center, weighted 1/(C * n_i)."""
    c = int(class_labels.max()) + 1
    dim = samples.shape[1]
    acc = np.zeros((dim, dim))
    for i in range(c):
        dev = samples[class_labels == i] - global_mean
        acc += (dev.T @ dev) / (c * dev.shape[0])
    return ScatterMatrix(_symmetrize(acc), TOTAL_SUBCLASS, min(dim, samples.shape[0]))
