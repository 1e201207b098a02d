"""Labeled kappa=0 training grid and unlabeled kappa>0 test grids of correlation samples."""

import logging
import re
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from .artifacts import make_header, read_csv, read_header, write_csv
from .errors import ConvergenceError, DataError, ParameterError
from .model import ModelParams, feature_names, solve_point

logger = logging.getLogger(__name__)

DEFAULT_G_MAX = 2.0
DEFAULT_G_COUNT = 1000
DEFAULT_TEST_KAPPAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
CRITICAL_G = 1.0

FERROMAGNETIC = 0
PARAMAGNETIC = 1

META_COLUMNS = ["kappa", "g", "label"]
TRAIN_FILE = "train.csv"
TEST_FILE_PATTERN = re.compile(r"^test_kappa_(.+)\.csv$")


@dataclass
class Sample:
    kappa: float
    g: float
    features: np.ndarray
    label: int = None


@dataclass
class DatasetSplit:
    n_sites: int
    train: list
    tests: dict = field(default_factory=dict)
    g_max: float = DEFAULT_G_MAX
    g_count: int = DEFAULT_G_COUNT


def label_sample(g):
    """Phase on the kappa=0 line: 0 ferromagnetic (g < 1), 1 paramagnetic (g >= 1)."""
    return FERROMAGNETIC if g < CRITICAL_G else PARAMAGNETIC


def g_grid(g_count, g_max=DEFAULT_G_MAX):
    """g_max * i / g_count for i = 1..g_count; g = 0 is excluded."""
    return [g_max * i / g_count for i in range(1, g_count + 1)]


def kappa_file_name(kappa):
    """Test-set file name; repr keeps the kappa exact"""
    return f"test_kappa_{float(kappa)!r}.csv"


def _solve(n_sites, kappa, g):
    try:
        _, features = solve_point(ModelParams(n_sites=n_sites, kappa=kappa, g=g))
    except ConvergenceError as e:
        raise ConvergenceError(
            f"Ground state failed at kappa={kappa}, g={g}: {e}", residual=e.residual, kappa=kappa, g=g
        )
    return features


def generate_split(n_sites, g_count, test_kappas, g_max=DEFAULT_G_MAX, threads=1, progress=True):
    """Solve the kappa=0 training line and every test line on the same g grid"""
    if g_count < 2:
        raise ParameterError(f"g_count must be >= 2, got {g_count}")
    test_kappas = sorted(float(k) for k in test_kappas)
    if not test_kappas or any(k <= 0 for k in test_kappas):
        raise ParameterError(f"test_kappas must be non-empty and all > 0, got {test_kappas}")
    if len(set(test_kappas)) != len(test_kappas):
        raise ParameterError(f"Duplicate test kappa values: {test_kappas}")

    grid = g_grid(g_count, g_max)
    points = [(0.0, g) for g in grid] + [(kappa, g) for kappa in test_kappas for g in grid]
    logger.info(f"Solving {len(points)} ground states at N={n_sites} with {threads} worker(s)")

    features = Parallel(n_jobs=threads)(
        delayed(_solve)(n_sites, kappa, g)
        for kappa, g in tqdm(points, desc="Ground states", disable=not progress)
    )

    train = [
        Sample(kappa=0.0, g=g, features=f, label=label_sample(g))
        for g, f in zip(grid, features[:g_count])
    ]
    tests = {}
    for t, kappa in enumerate(test_kappas):
        block = features[(t + 1) * g_count:(t + 2) * g_count]
        tests[kappa] = [Sample(kappa=kappa, g=g, features=f) for g, f in zip(grid, block)]
    return DatasetSplit(n_sites=n_sites, train=train, tests=tests, g_max=g_max, g_count=g_count)


def samples_to_frame(samples, n_sites):
    """Samples as a kappa, g, label, features frame sorted by (kappa, g)"""
    names = feature_names(n_sites)
    frame = pd.DataFrame(np.array([s.features for s in samples]).reshape(len(samples), len(names)), columns=names)
    frame.insert(0, "label", pd.array([s.label for s in samples], dtype="Int64"))
    frame.insert(0, "g", [float(s.g) for s in samples])
    frame.insert(0, "kappa", [float(s.kappa) for s in samples])
    return frame.sort_values(["kappa", "g"], kind="stable").reset_index(drop=True)


def _n_sites_from_columns(n_features):
    for n in range(2, 64):
        if 3 * comb(n, 2) == n_features:
            return n
        if 3 * comb(n, 2) > n_features:
            break
    return None


def frame_to_samples(frame, path="<frame>"):
    """Validate a dataset frame and return (n_sites, samples)"""
    columns = list(frame.columns)
    if columns[:3] != META_COLUMNS:
        raise DataError(f"{path}: first columns must be {META_COLUMNS}, found {columns[:3]}")
    n_features = len(columns) - 3
    n_sites = _n_sites_from_columns(n_features)
    if n_sites is None:
        raise DataError(
            f"{path}: found {n_features} feature columns; the count must be 3*C(N,2) for a chain size N"
        )
    expected = feature_names(n_sites)
    for position, (found, wanted) in enumerate(zip(columns[3:], expected)):
        if found != wanted:
            raise DataError(f"{path}: column {position + 4} is '{found}', expected '{wanted}'")

    numeric = frame[["kappa", "g"] + expected].apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataError(f"{path}: row {row + 1}, column '{numeric.columns[col]}' is not a number")
    values = numeric[expected].to_numpy(dtype=np.float64)
    if np.any(np.abs(values) > 1.0):
        row, col = np.argwhere(np.abs(values) > 1.0)[0]
        raise DataError(f"{path}: row {row + 1}, column '{expected[col]}' outside [-1, 1]")

    labels = pd.to_numeric(frame["label"], errors="coerce")
    samples = []
    for r in range(len(frame)):
        label = labels.iloc[r]
        if pd.isna(label) and not pd.isna(frame["label"].iloc[r]):
            raise DataError(f"{path}: row {r + 1}, column 'label' is not an integer")
        if pd.isna(label) != (numeric["kappa"].iloc[r] != 0):
            raise DataError(f"{path}: row {r + 1}, column 'label' must be set exactly on kappa=0 rows")
        samples.append(Sample(
            kappa=float(numeric["kappa"].iloc[r]),
            g=float(numeric["g"].iloc[r]),
            features=values[r],
            label=None if pd.isna(label) else int(label),
        ))
    return n_sites, samples


def write_dataset(split, directory, header=None):
    """Write train.csv and one test file per kappa"""
    directory = Path(directory)
    header = dict(header or make_header())
    header.update(n_sites=split.n_sites, g_max=split.g_max, g_count=split.g_count)
    paths = [write_csv(samples_to_frame(split.train, split.n_sites), directory / TRAIN_FILE, header)]
    for kappa in sorted(split.tests):
        frame = samples_to_frame(split.tests[kappa], split.n_sites)
        paths.append(write_csv(frame, directory / kappa_file_name(kappa), header))
    return paths


def read_dataset(directory):
    """Load a directory written by write_dataset"""
    directory = Path(directory)
    train_path = directory / TRAIN_FILE
    n_sites, train = frame_to_samples(read_csv(train_path), train_path)
    header = read_header(train_path)

    tests = {}
    for path in sorted(directory.glob("test_kappa_*.csv")):
        match = TEST_FILE_PATTERN.match(path.name)
        test_sites, samples = frame_to_samples(read_csv(path), path)
        if test_sites != n_sites:
            raise DataError(f"{path}: chain size {test_sites} differs from training size {n_sites}")
        kappa = samples[0].kappa if samples else float(match.group(1))
        tests[kappa] = samples

    g_values = [s.g for s in train]
    g_max = float(header.get("g_max", max(g_values) if g_values else DEFAULT_G_MAX))
    g_count = int(header.get("g_count", len(train)))
    return DatasetSplit(
        n_sites=n_sites, train=train, tests=dict(sorted(tests.items())), g_max=g_max, g_count=g_count
    )


def feature_matrix(samples):
    return np.array([s.features for s in samples])


def label_vector(samples):
    labels = [s.label for s in samples]
    if any(label is None for label in labels):
        raise DataError("Training samples must all carry a label")
    return np.array(labels, dtype=int)
