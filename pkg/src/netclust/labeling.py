"""Pseudo-labeling: turn cluster assignments into class labels and report
the class distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import ClusterModel, predict
from .errors import DataError
from .preprocess import FeatureMatrix


@dataclass
class PseudoLabeledDataset:
    features: FeatureMatrix
    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.labels) != self.features.n_rows:
            raise DataError("labels length must equal number of feature rows")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise DataError("labels must lie in [0, k)")


def label_dataset(m: FeatureMatrix, model: ClusterModel) -> PseudoLabeledDataset:
    """Assign each row its nearest-centroid cluster index as a pseudo-class."""
    asg = predict(model, m)
    return PseudoLabeledDataset(features=m, labels=asg.labels, k=model.k)


def class_distribution(labels) -> dict[int, int]:
    """Label -> count, ordered by descending count (ties by ascending label)."""
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        return {}
    uniq, counts = np.unique(labels, return_counts=True)
    order = sorted(range(len(uniq)), key=lambda i: (-counts[i], uniq[i]))
    return {int(uniq[i]): int(counts[i]) for i in order}
