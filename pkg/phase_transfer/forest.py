"""Feature ranking by extremely randomized trees (mean decrease in Gini impurity)."""

import logging
from dataclasses import dataclass
from math import isqrt

import numpy as np
import pandas as pd
from sklearn.ensemble import ExtraTreesClassifier

from .artifacts import read_csv, write_csv
from .dataset import feature_matrix, label_vector
from .errors import DataError, ParameterError
from .model import PauliAxis, chordal_distance, feature_pairs

logger = logging.getLogger(__name__)

DEFAULT_N_TREES = 1000
DEFAULT_SEED = 42
DEFAULT_TOP_K = 4


@dataclass
class ForestConfig:
    n_trees: int = DEFAULT_N_TREES
    max_depth: int = None
    candidate_features_per_split: int = None  # None: floor(sqrt(feature count))
    rng_seed: int = DEFAULT_SEED
    threads: int = 1

    def candidates_for(self, n_features):
        """Features drawn per split for `n_features` columns"""
        candidates = self.candidate_features_per_split or max(1, isqrt(n_features))
        if not 1 <= candidates <= n_features:
            raise ParameterError(
                f"candidate_features_per_split must be in [1, {n_features}], got {candidates}"
            )
        return candidates


@dataclass
class ImportanceVector:
    scores: np.ndarray

    def __len__(self):
        return len(self.scores)


def fit_importances(train, config=None, features=None, labels=None):
    """Average per-tree normalized impurity decreases over an extra-trees ensemble.

    Trees see the full training set (no bootstrap); at each node one uniform
    random threshold is drawn per candidate feature and the best Gini gain wins.
    `features`/`labels` may be passed directly instead of Sample objects.
    """
    config = config or ForestConfig()
    X = feature_matrix(train) if features is None else np.asarray(features, dtype=np.float64)
    y = label_vector(train) if labels is None else np.asarray(labels, dtype=int)
    if len(np.unique(y)) < 2:
        raise DataError("Feature ranking needs at least two phase labels in the training set")

    forest = ExtraTreesClassifier(
        n_estimators=config.n_trees,
        criterion="gini",
        max_depth=config.max_depth,
        max_features=config.candidates_for(X.shape[1]),
        bootstrap=False,
        random_state=config.rng_seed,
        n_jobs=config.threads,
    )
    forest.fit(X, y)
    scores = np.asarray(forest.feature_importances_, dtype=np.float64)
    if not np.isfinite(scores).all() or scores.sum() <= 0:
        raise DataError("No split possible: every feature is constant across the training set")
    logger.info(f"Fitted {config.n_trees} extra trees on {X.shape[0]} samples x {X.shape[1]} features "
                f"(seed {config.rng_seed})")
    return ImportanceVector(scores=scores)


def select_top_k(scores, k=DEFAULT_TOP_K):
    """Indices of the k largest scores (ties to the lower index), in ascending order."""
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    if not 1 <= k <= len(values):
        raise ParameterError(f"k must be in [1, {len(values)}], got {k}")
    ranking = np.lexsort((np.arange(len(values)), -values))
    return sorted(int(i) for i in ranking[:k])


def describe_selection(selected, n_sites):
    """How many selected features are zz correlators and how far apart their sites are."""
    pairs = feature_pairs(n_sites)
    chosen = [pairs[i] for i in selected]
    all_distances = [chordal_distance(i, j, n_sites) for _, i, j in pairs]
    chosen_distances = [chordal_distance(i, j, n_sites) for _, i, j in chosen]
    zz_count = sum(1 for axis, _, _ in chosen if axis is PauliAxis.Z)
    summary = {
        "zz_count": zz_count,
        "mean_selected_distance": float(np.mean(chosen_distances)),
        "mean_all_distance": float(np.mean(all_distances)),
    }
    summary["physics_check"] = bool(
        zz_count >= min(3, len(selected)) and summary["mean_selected_distance"] > summary["mean_all_distance"]
    )
    return summary


def write_importances(scores, names, path, header=None):
    """Write scores sorted descending, ties by feature index"""
    values = np.asarray(scores.scores, dtype=np.float64)
    order = np.lexsort((np.arange(len(values)), -values))
    frame = pd.DataFrame({"feature_name": [names[i] for i in order], "score": values[order]})
    return write_csv(frame, path, header)


def read_importances(path, names):
    """Scores back in canonical feature order"""
    frame = read_csv(path)
    if list(frame.columns) != ["feature_name", "score"]:
        raise DataError(f"{path}: expected columns feature_name,score, found {list(frame.columns)}")
    lookup = dict(zip(frame["feature_name"], frame["score"]))
    missing = [name for name in names if name not in lookup]
    if missing:
        raise DataError(f"{path}: no score for feature '{missing[0]}'")
    return ImportanceVector(scores=np.array([float(lookup[name]) for name in names]))
