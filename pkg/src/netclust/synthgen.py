"""Deterministic synthetic flow-feature generator.

Each attack profile is a per-feature Gaussian (mean/stddev vectors); rows
are drawn per profile, clipped at zero (flow rates and counts are
non-negative), and shuffled by seed. The default set ships seven
well-separated profiles over 78 features, standing in for a private
testbed capture at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .preprocess import FeatureMatrix

DEFAULT_N_FEATURES = 78

DEFAULT_PROFILE_NAMES = (
    "benign",
    "dos",
    "brute-force",
    "tcp-flood",
    "udp-flood",
    "port-scan",
    "slowloris",
)


@dataclass
class AttackProfile:
    name: str
    means: np.ndarray
    stddevs: np.ndarray
    row_count: int

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stddevs = np.asarray(self.stddevs, dtype=np.float64)
        if self.means.shape != self.stddevs.shape:
            raise ValueError("means and stddevs must have equal length")
        if (self.stddevs < 0).any():
            raise ValueError("stddevs must be >= 0")
        if self.row_count < 1:
            raise ValueError("row_count must be >= 1")


def default_profiles(
    n_features: int = DEFAULT_N_FEATURES, rows_per_class: int = 700
) -> list[AttackProfile]:
    """Seven profiles whose means differ by >= 6 stddevs on their own
    feature block, so K-means can recover them."""
    profiles = []
    for i, name in enumerate(DEFAULT_PROFILE_NAMES):
        means = np.full(n_features, 2.0)
        block = np.arange(n_features) % len(DEFAULT_PROFILE_NAMES) == i
        means[block] = 10.0
        stddevs = np.full(n_features, 1.0)
        profiles.append(AttackProfile(name, means, stddevs, rows_per_class))
    return profiles


def generate(
    profiles: list[AttackProfile], n_features: int, seed: int
) -> tuple[FeatureMatrix, np.ndarray]:
    """Draw all profile rows, clip at 0, and shuffle deterministically.

    Returns the feature matrix and the ground-truth profile index per row.
    """
    if not profiles:
        raise DataError("need at least one attack profile")
    for p in profiles:
        if len(p.means) != n_features:
            raise DataError(
                f"profile {p.name!r} has {len(p.means)} features, expected {n_features}"
            )
    total = sum(p.row_count for p in profiles)
    if total == 0:
        raise DataError("profiles generate zero rows")
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for i, p in enumerate(profiles):
        draws = rng.normal(p.means, p.stddevs, size=(p.row_count, n_features))
        blocks.append(np.maximum(draws, 0.0))
        labels.append(np.full(p.row_count, i, dtype=int))
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    perm = rng.permutation(total)
    names = [f"f{j:02d}" for j in range(n_features)]
    return FeatureMatrix(X[perm], names), y[perm]


def load_profiles(path) -> tuple[list[AttackProfile], int]:
    """Read profiles from a JSON file:

    {"n_features": 78,
     "profiles": [{"name": ..., "means": [...], "stddevs": [...],
                   "row_count": ...}, ...]}

    ``means``/``stddevs`` may also be scalars, broadcast to n_features.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        n_features = int(doc["n_features"])
        profiles = []
        for p in doc["profiles"]:
            means = np.broadcast_to(
                np.asarray(p["means"], dtype=np.float64), (n_features,)
            ).copy()
            stddevs = np.broadcast_to(
                np.asarray(p["stddevs"], dtype=np.float64), (n_features,)
            ).copy()
            profiles.append(AttackProfile(p["name"], means, stddevs, int(p["row_count"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad profile file {path}: {exc}") from exc
    return profiles, n_features
