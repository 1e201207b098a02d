"""Discretize selected features with 1-D k-means and one-hot encode them to bits.

Each selected feature gets 3 bins whose centers are k-means centroids fitted on
training data only. The three levels become 2 bits each: level 0 -> 10,
level 1 -> 01, level 2 -> 00. Bits are concatenated in ascending
selected-feature order.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans
from sklearn.preprocessing import OneHotEncoder

from .artifacts import read_csv, read_json, write_csv, write_json
from .errors import DataError, ParameterError

logger = logging.getLogger(__name__)

N_LEVELS = 3
BITS_PER_FEATURE = N_LEVELS - 1
ONE_HOT_CONVENTION = "level0=10,level1=01,level2=00"
KMEANS_TOL = 1e-9
KMEANS_MAX_ITER = 300


@dataclass
class FeatureEncoder:
    feature_index: int
    centroids: tuple
    bin_edges: tuple

    @classmethod
    def from_centroids(cls, feature_index, centroids):
        centroids = tuple(float(c) for c in centroids)
        edges = tuple((centroids[t] + centroids[t + 1]) / 2 for t in range(len(centroids) - 1))
        return cls(feature_index=int(feature_index), centroids=centroids, bin_edges=edges)

    def levels(self, values):
        """Index of the nearest centroid; a value on an edge goes to the lower level."""
        return np.searchsorted(np.asarray(self.bin_edges), np.asarray(values, dtype=np.float64), side="left")


@dataclass
class EncoderStack:
    selected: list
    encoders: list
    _one_hot: OneHotEncoder = field(default=None, repr=False, compare=False)

    @property
    def bit_width(self):
        return len(self.selected) * BITS_PER_FEATURE

    def __post_init__(self):
        m = len(self.selected)
        encoder = OneHotEncoder(
            categories=[list(range(N_LEVELS))] * m, drop=[N_LEVELS - 1] * m, sparse_output=False, dtype=np.int8
        )
        self._one_hot = encoder.fit(np.repeat(np.arange(N_LEVELS)[:, None], m, axis=1))

    @property
    def one_hot(self):
        return self._one_hot


@dataclass(frozen=True)
class EncodedSample:
    bits: tuple
    label: int = None

    @property
    def key(self):
        return bits_to_string(self.bits)


def bits_to_string(bits):
    return "".join(str(int(b)) for b in bits)


def string_to_bits(text):
    """Parse a 0/1 string into a bit tuple"""
    text = str(text)
    if any(ch not in "01" for ch in text):
        raise DataError(f"Bit string '{text}' contains characters other than 0/1")
    return tuple(int(ch) for ch in text)


def quantile_starts(values, k=N_LEVELS):
    """Initial centroids at the (2t+1)/2k quantiles; distinct values are used when those coincide."""
    values = np.asarray(values, dtype=np.float64)
    quantiles = (2 * np.arange(k) + 1) / (2 * k)
    starts = np.quantile(values, quantiles)
    if np.any(np.diff(starts) <= 0):
        starts = np.quantile(np.unique(values), quantiles)
    return starts


def _lloyd(values, starts, max_iter):
    kmeans = KMeans(
        n_clusters=len(starts), init=starts[:, None], n_init=1, max_iter=max_iter,
        tol=KMEANS_TOL, algorithm="lloyd", random_state=0,
    )
    return kmeans.fit(np.asarray(values, dtype=np.float64)[:, None])


def kmeans_1d(values, k=N_LEVELS, max_iter=KMEANS_MAX_ITER):
    """Sorted centroids of a 1-D Lloyd k-means started at the quantile starts."""
    fitted = _lloyd(values, quantile_starts(values, k), max_iter)
    return np.sort(fitted.cluster_centers_[:, 0])


def kmeans_objective_trace(values, k=N_LEVELS, iterations=10):
    """Within-cluster sum of squares after 1, 2, ..., `iterations` Lloyd steps from the same start."""
    starts = quantile_starts(values, k)
    return [float(_lloyd(values, starts, steps).inertia_) for steps in range(1, iterations + 1)]


def fit_encoders(train, selected, names=None):
    """Fit one 3-bin k-means discretizer per selected feature on training data."""
    if not train:
        raise DataError("Cannot fit encoders on an empty training set")
    selected = sorted(int(i) for i in selected)
    matrix = np.array([s.features for s in train])
    encoders = []
    for index in selected:
        column = matrix[:, index]
        label = names[index] if names else f"feature {index}"
        if len(np.unique(column)) < N_LEVELS:
            raise DataError(f"{label} has fewer than {N_LEVELS} distinct training values")
        centroids = kmeans_1d(column)
        if np.any(np.diff(centroids) <= 0):
            raise DataError(f"{label}: k-means produced coinciding centroids {centroids.tolist()}")
        encoders.append(FeatureEncoder.from_centroids(index, centroids))
        logger.debug(f"{label}: centroids {centroids.tolist()}")
    return EncoderStack(selected=selected, encoders=encoders)


def encode_matrix(matrix, stack):
    """Bits for every row of a raw feature matrix, shape (rows, bit_width)."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    levels = np.column_stack([enc.levels(matrix[:, enc.feature_index]) for enc in stack.encoders])
    return stack.one_hot.transform(levels).astype(int)


def encode_sample(raw, stack):
    bits = encode_matrix(raw.features[None, :], stack)[0]
    return EncodedSample(bits=tuple(int(b) for b in bits), label=raw.label)


def encode_samples(samples, stack):
    """Encode a list of samples, keeping their labels"""
    if not samples:
        return []
    rows = encode_matrix(np.array([s.features for s in samples]), stack)
    return [EncodedSample(bits=tuple(int(b) for b in row), label=s.label) for row, s in zip(rows, samples)]


def pad_to_width(bits, width=8):
    """Right-pad with zeros to `width` bits."""
    label = None
    if isinstance(bits, EncodedSample):
        bits, label = bits.bits, bits.label
    bits = tuple(int(b) for b in bits)
    if len(bits) > width:
        raise ParameterError(f"Bit vector of length {len(bits)} is wider than {width}")
    return EncodedSample(bits=bits + (0,) * (width - len(bits)), label=label)


def encode_test_set(samples, stack, kappa=None):
    """Encode and pad one test line; warns on bit positions that never change"""
    encoded = [pad_to_width(e, stack.bit_width) for e in encode_samples(samples, stack)]
    if len(encoded) > 1:
        matrix = np.array([e.bits for e in encoded])
        constant = np.flatnonzero(np.all(matrix == matrix[0], axis=0))
        if constant.size:
            logger.warning(f"Encoded test set kappa={kappa}: bit positions {constant.tolist()} are constant "
                           f"(concentrated bins)")
    return encoded


def dedup_training(encoded):
    """Unique (bits, label) pairs in first-occurrence order."""
    unique = list(OrderedDict.fromkeys(encoded))
    labels_by_bits = {}
    for e in unique:
        labels_by_bits.setdefault(e.bits, set()).add(e.label)
    for bits, labels in labels_by_bits.items():
        if len(labels) > 1:
            logger.warning(f"Encoding {bits_to_string(bits)} carries conflicting labels {sorted(labels)}; keeping both")
    logger.info(f"Binarized training set: {len(encoded)} rows -> {len(unique)} unique rows")
    return unique


def write_encoders(stack, path, names=None, header=None):
    """Save centroids and bin edges with the one-hot convention"""
    data = {
        "selected": stack.selected,
        "selected_names": [names[i] for i in stack.selected] if names else None,
        "levels": N_LEVELS,
        "bit_width": stack.bit_width,
        "one_hot": ONE_HOT_CONVENTION,
        "encoders": [
            {"feature_index": e.feature_index, "centroids": list(e.centroids), "bin_edges": list(e.bin_edges)}
            for e in stack.encoders
        ],
    }
    return write_json(data, path, header)


def read_encoders(path):
    """Load encoders saved by write_encoders"""
    data = read_json(path)
    try:
        if data["one_hot"] != ONE_HOT_CONVENTION or data["levels"] != N_LEVELS:
            raise DataError(f"{path}: unsupported encoding convention {data['one_hot']!r}")
        encoders = [
            FeatureEncoder(
                feature_index=int(e["feature_index"]),
                centroids=tuple(float(c) for c in e["centroids"]),
                bin_edges=tuple(float(c) for c in e["bin_edges"]),
            )
            for e in data["encoders"]
        ]
        selected = [int(i) for i in data["selected"]]
    except (KeyError, TypeError) as e:
        raise DataError(f"{path}: malformed encoder file ({e})")
    if [e.feature_index for e in encoders] != selected:
        raise DataError(f"{path}: encoder order does not match the selected features")
    return EncoderStack(selected=selected, encoders=encoders)


def write_encoded(samples, encoded, path, header=None):
    frame = pd.DataFrame({
        "kappa": [float(s.kappa) for s in samples],
        "g": [float(s.g) for s in samples],
        "bits": [e.key for e in encoded],
        "label": pd.array([e.label for e in encoded], dtype="Int64"),
    })
    return write_csv(frame, path, header)


def read_encoded(path):
    """Frame with kappa, g, bits (string), label plus the EncodedSample list."""
    frame = read_csv(path, dtype={"bits": str})
    if list(frame.columns) != ["kappa", "g", "bits", "label"]:
        raise DataError(f"{path}: expected columns kappa,g,bits,label, found {list(frame.columns)}")
    encoded = []
    for r, (bits, label) in enumerate(zip(frame["bits"], frame["label"])):
        try:
            parsed = string_to_bits(bits)
        except DataError as e:
            raise DataError(f"{path}: row {r + 1}, column 'bits': {e}")
        encoded.append(EncodedSample(bits=parsed, label=None if pd.isna(label) else int(label)))
    return frame, encoded
