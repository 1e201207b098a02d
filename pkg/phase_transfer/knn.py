"""Classical k-nearest-neighbors baseline on raw (Euclidean) or encoded (Hamming) vectors."""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.model_selection import GridSearchCV, StratifiedKFold
from sklearn.neighbors import KNeighborsClassifier

from .errors import DataError, ParameterError
from .qnn import ClassProbabilities

logger = logging.getLogger(__name__)

DEFAULT_K = 7
DEFAULT_K_CANDIDATES = (1, 3, 5, 7, 9, 11, 13, 15)
DEFAULT_FOLDS = 5

SOURCE_KNN = "knn"


class Metric(Enum):
    EUCLIDEAN = "euclidean"
    HAMMING = "hamming"


@dataclass
class KnnConfig:
    k: int = DEFAULT_K
    metric: Metric = Metric.EUCLIDEAN

    def validate(self, n_training):
        if not 1 <= self.k <= n_training:
            raise ParameterError(f"k must be in [1, {n_training}] for this training set, got {self.k}")
        return self


def _vector(sample):
    if hasattr(sample, "features"):
        return np.asarray(sample.features, dtype=np.float64)
    if hasattr(sample, "bits"):
        return np.asarray(sample.bits, dtype=np.float64)
    return np.asarray(sample, dtype=np.float64)


def _check_binary(matrix):
    if not np.isin(matrix, (0, 1)).all():
        raise ParameterError("Hamming distance needs binary vectors")


def distance(a, b, metric=Metric.EUCLIDEAN):
    """Euclidean distance, or the Hamming bit count for binary vectors"""
    a, b = _vector(a), _vector(b)
    if a.shape != b.shape:
        raise ParameterError(f"Vectors of different lengths: {a.size} and {b.size}")
    metric = Metric(metric)
    if metric is Metric.HAMMING:
        _check_binary(a)
        _check_binary(b)
        return float(np.count_nonzero(a != b))
    return float(np.linalg.norm(a - b))


def pairwise_distances(queries, training, metric):
    """(queries, training) distance matrix; Hamming distances are bit counts."""
    if queries.shape[1] != training.shape[1]:
        raise ParameterError(f"Query vectors have {queries.shape[1]} entries, training vectors {training.shape[1]}")
    if metric is Metric.HAMMING:
        _check_binary(queries)
        _check_binary(training)
        return np.rint(cdist(queries, training, metric="hamming") * training.shape[1])
    return cdist(queries, training, metric="euclidean")


class KNearestNeighbors:
    def __init__(self, config=None):
        self.config = config or KnnConfig()
        self.X_train = None
        self.y_train = None

    def fit(self, X, y):
        """Store training vectors and 0/1 labels"""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=int)
        if X.shape[0] == 0:
            raise DataError("KNN training set is empty")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} training vectors but {y.shape[0]} labels")
        if not np.isin(y, (0, 1)).all():
            raise DataError(f"KNN labels must be 0 or 1, found {sorted(set(y.tolist()))}")
        self.config.validate(X.shape[0])
        self.X_train, self.y_train = X, y
        return self

    def predict_proba(self, X):
        """(rows, 2) array of neighbor label fractions; ties keep training-row order."""
        if self.X_train is None:
            raise ParameterError("KNearestNeighbors.predict_proba called before fit")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        distances = pairwise_distances(X, self.X_train, self.config.metric)
        k_indices = np.argsort(distances, axis=1, kind="stable")[:, :self.config.k]
        k_nearest_labels = self.y_train[k_indices]
        ones = np.count_nonzero(k_nearest_labels == 1, axis=1)
        return np.column_stack([(self.config.k - ones) / self.config.k, ones / self.config.k])

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def classify(self, sample):
        """Neighbor label fractions for one sample"""
        p0, p1 = self.predict_proba(_vector(sample)[None, :])[0]
        return ClassProbabilities(p0=float(p0), p1=float(p1))


def classify_knn(query, training, config=None):
    """Neighbor label fractions for one query against labeled training samples."""
    if not training:
        raise DataError("KNN training set is empty")
    X = np.array([_vector(t) for t in training])
    y = np.array([t.label for t in training])
    return KNearestNeighbors(config).fit(X, y).classify(query)


def search_k(features, labels, candidates=DEFAULT_K_CANDIDATES, folds=DEFAULT_FOLDS, seed=42,
             metric=Metric.EUCLIDEAN, threads=1):
    """Cross-validated choice of k over `candidates` with stratified folds."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    smallest_class = int(np.bincount(y).min()) if len(np.unique(y)) > 1 else 0
    if smallest_class < folds:
        raise DataError(f"Every class needs at least {folds} samples for {folds}-fold search, "
                        f"smallest has {smallest_class}")
    fold_size = len(y) - int(np.ceil(len(y) / folds))
    usable = [int(k) for k in candidates if 1 <= k <= fold_size]
    if not usable:
        raise ParameterError(f"No candidate k fits inside a training fold of {fold_size} rows")
    search = GridSearchCV(
        KNeighborsClassifier(algorithm="brute", metric=Metric(metric).value),
        {"n_neighbors": usable},
        cv=StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed),
        n_jobs=threads,
    )
    search.fit(X, y)
    best = int(search.best_params_["n_neighbors"])
    logger.info(f"Cross-validated k={best} (accuracy {search.best_score_:.4f}) from {usable}")
    return best
