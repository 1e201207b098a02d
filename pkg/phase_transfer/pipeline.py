"""Pipeline stages: gen -> rank -> encode -> classify -> boundary -> report.

Each stage reads the artifacts of the previous one from `output_dir`, so any
stage can be rerun on its own once its inputs exist.
"""

import logging
import time

import numpy as np
import pandas as pd

from .artifacts import make_header, read_csv, write_csv
from .boundary import (
    METHODS,
    curves_from_predictions,
    estimate_boundaries,
    phase_diagram_frame,
    read_boundaries,
    score_mse,
    write_boundaries,
)
from .config import config_hash
from .dataset import feature_matrix, generate_split, kappa_file_name, label_vector, read_dataset, write_dataset
from .encode import (
    dedup_training,
    encode_samples,
    encode_test_set,
    fit_encoders,
    pad_to_width,
    read_encoded,
    read_encoders,
    write_encoded,
    write_encoders,
)
from .errors import DataError, PipelineError, UsageError
from .forest import ForestConfig, describe_selection, fit_importances, read_importances, select_top_k, write_importances
from .knn import KnnConfig, KNearestNeighbors, Metric, SOURCE_KNN, search_k
from .model import feature_names
from .qnn import QuantumNearestNeighbors

logger = logging.getLogger(__name__)

STAGES = ("gen", "rank", "encode", "classify", "boundary", "report")
PREDICTION_COLUMNS = ["kappa", "g", "bits", "p0", "p1", "p_postselect", "source"]
TRAIN_ENCODED = "train.csv"


def artifact_header(config, **extra):
    return make_header(config_hash=config_hash(config), forest_seed=config.forest_seed, **extra)


def run_stage(name, function, *args, **kwargs):
    """Run one stage; failures are logged and tagged with the stage name."""
    logger.info(f"[{name}] start")
    started = time.perf_counter()
    try:
        result = function(*args, **kwargs)
    except PipelineError as e:
        if e.stage is None:
            e.stage = name
        logger.error(f"[{e.stage}] {e}")
        raise
    logger.info(f"[{name}] done in {time.perf_counter() - started:.1f}s")
    return result


def stage_gen(config):
    """Solve ground states and write the datasets"""
    split = generate_split(
        config.n_sites, config.g_count, config.test_kappas,
        g_max=config.g_max, threads=config.threads, progress=config.progress,
    )
    return write_dataset(split, config.paths["data"], artifact_header(config))


def stage_rank(config):
    """Rank features and return the selected indices"""
    split = read_dataset(config.paths["data"])
    names = feature_names(split.n_sites)
    forest = ForestConfig(
        n_trees=config.n_trees, max_depth=config.max_depth, rng_seed=config.forest_seed, threads=config.threads
    )
    scores = fit_importances(split.train, forest)
    write_importances(scores, names, config.paths["importances"], artifact_header(config))
    selected = select_top_k(scores, config.top_k)
    logger.info(f"Selected features: {[names[i] for i in selected]}")

    summary = describe_selection(selected, split.n_sites)
    if summary["physics_check"]:
        logger.info(f"Selection: {summary['zz_count']} zz correlators, mean distance "
                    f"{summary['mean_selected_distance']:.2f} vs {summary['mean_all_distance']:.2f} overall")
    else:
        logger.warning(f"Selection fails the long-range zz check (seed {config.forest_seed}): {summary}")
    return selected


def _encoded_path(config, kappa=None):
    return config.paths["encoded"] / (TRAIN_ENCODED if kappa is None else kappa_file_name(kappa))


def stage_encode(config):
    """Fit encoders and write the binarized training and test sets"""
    split = read_dataset(config.paths["data"])
    names = feature_names(split.n_sites)
    selected = select_top_k(read_importances(config.paths["importances"], names), config.top_k)
    stack = fit_encoders(split.train, selected, names)
    header = artifact_header(config)
    write_encoders(stack, config.paths["encoders"], names, header)

    train = [pad_to_width(e, config.pad_width) for e in encode_samples(split.train, stack)]
    write_encoded(split.train, train, _encoded_path(config), header)
    unique = dedup_training(train)
    for kappa, samples in split.tests.items():
        encoded = [pad_to_width(e, config.pad_width) for e in encode_test_set(samples, stack, kappa)]
        write_encoded(samples, encoded, _encoded_path(config, kappa), header)
    return unique


def _encoded_test_sets(config):
    """(kappa, frame, encoded) for kappa=0 (training rows) and every test kappa."""
    train_frame, train = read_encoded(_encoded_path(config))
    sets = [(0.0, train_frame, train)]
    for kappa in config.test_kappas:
        frame, encoded = read_encoded(_encoded_path(config, kappa))
        sets.append((kappa, frame, encoded))
    return train, sets


def _knn_k(config, X, y, metric):
    if not config.knn_search:
        return config.knn_k
    return search_k(X, y, seed=config.forest_seed, metric=metric, threads=config.threads)


def _classify_qnn(config):
    train, sets = _encoded_test_sets(config)
    model = QuantumNearestNeighbors().fit(train)
    frames = []
    for kappa, frame, encoded in sets:
        results = model.predict_many(encoded, progress=config.progress, desc=f"QNN kappa={kappa}")
        frames.append(pd.DataFrame({
            "kappa": kappa,
            "g": frame["g"].to_numpy(),
            "bits": frame["bits"].to_numpy(),
            "p0": [np.nan if r is None else r.p0 for r, _ in results],
            "p1": [np.nan if r is None else r.p1 for r, _ in results],
            "p_postselect": [np.nan if r is None else r.p_postselect for r, _ in results],
            "source": [source for _, source in results],
        }, columns=PREDICTION_COLUMNS))
        failed = sum(1 for r, _ in results if r is None)
        if failed:
            logger.warning(f"QNN kappa={kappa}: post-selection impossible at {failed} point(s)")
    logger.info(f"QNN cache: {model.cache.circuit_runs} circuit runs, {model.cache.hits} hits")
    return pd.concat(frames, ignore_index=True)


def _classify_knn_pre(config):
    train, sets = _encoded_test_sets(config)
    X = np.array([e.bits for e in train])
    y = np.array([e.label for e in train])
    k = _knn_k(config, X, y, Metric.HAMMING)
    model = KNearestNeighbors(KnnConfig(k=k, metric=Metric.HAMMING)).fit(X, y)
    frames = []
    for kappa, frame, encoded in sets:
        proba = model.predict_proba(np.array([e.bits for e in encoded]))
        frames.append(_knn_frame(kappa, frame["g"].to_numpy(), frame["bits"].to_numpy(), proba))
    return pd.concat(frames, ignore_index=True)


def _classify_knn_raw(config):
    split = read_dataset(config.paths["data"])
    X, y = feature_matrix(split.train), label_vector(split.train)
    k = _knn_k(config, X, y, Metric.EUCLIDEAN)
    model = KNearestNeighbors(KnnConfig(k=k, metric=Metric.EUCLIDEAN)).fit(X, y)
    frames = [_knn_frame(0.0, [s.g for s in split.train], None, model.predict_proba(X))]
    for kappa, samples in split.tests.items():
        proba = model.predict_proba(feature_matrix(samples))
        frames.append(_knn_frame(kappa, [s.g for s in samples], None, proba))
    return pd.concat(frames, ignore_index=True)


def _knn_frame(kappa, g, bits, proba):
    rows = len(proba)
    return pd.DataFrame({
        "kappa": kappa,
        "g": np.asarray(g, dtype=np.float64),
        "bits": bits if bits is not None else [""] * rows,
        "p0": proba[:, 0],
        "p1": proba[:, 1],
        "p_postselect": np.nan,
        "source": SOURCE_KNN,
    }, columns=PREDICTION_COLUMNS)


CLASSIFIERS = {"qnn": _classify_qnn, "knn_pre": _classify_knn_pre, "knn_raw": _classify_knn_raw}


def normalize_method(method):
    """Accept knn-pre style names; raise UsageError on unknown methods"""
    key = method.replace("-", "_")
    if key not in CLASSIFIERS:
        raise UsageError(f"Unknown method '{method}'; choose from {', '.join(m.replace('_', '-') for m in METHODS)}")
    return key


def stage_classify(config, method):
    """Write the prediction table for one method"""
    method = normalize_method(method)
    frame = CLASSIFIERS[method](config)
    return write_csv(frame, config.prediction_path(method), artifact_header(config, method=method))


def read_predictions(path):
    frame = read_csv(path, dtype={"bits": str, "source": str})
    if list(frame.columns) != PREDICTION_COLUMNS:
        raise DataError(f"{path}: expected columns {','.join(PREDICTION_COLUMNS)}, found {list(frame.columns)}")
    return frame


def stage_boundary(config, methods=METHODS):
    """Locate crossings for every method and write the boundary table"""
    estimates = []
    for method in methods:
        frame = read_predictions(config.prediction_path(method))
        estimates += estimate_boundaries(curves_from_predictions(frame, method), method)
    write_boundaries(estimates, config.paths["boundaries"], artifact_header(config))
    return estimates


def emit_report(estimates, scores, config):
    """Score table plus the plot-ready phase-diagram table."""
    header = artifact_header(config)
    write_csv(scores, config.paths["scores"], header)
    write_csv(phase_diagram_frame(estimates), config.paths["diagram"], header)
    for row in scores.itertuples(index=False):
        logger.info(f"{row.method:>8}: mse={row.mse:.6f} rmse={row.rmse:.6f} over {row.n_kappa} kappa value(s), "
                    f"{row.n_censored} censored")
    return config.paths["scores"], config.paths["diagram"]


def stage_report(config):
    """Score the kappa > 0 boundaries and write the report tables"""
    estimates = read_boundaries(config.paths["boundaries"])
    if not estimates:
        raise DataError(f"{config.paths['boundaries']} holds no boundary estimates")
    transfer = [e for e in estimates if e.kappa > 0]
    if not transfer:
        raise DataError("No boundary estimate at kappa > 0 to score")
    return emit_report(estimates, score_mse(transfer), config)


def run_pipeline(config):
    """Every stage in order; returns the exit status."""
    try:
        run_stage("gen", stage_gen, config)
        run_stage("rank", stage_rank, config)
        run_stage("encode", stage_encode, config)
        for method in METHODS:
            run_stage("classify", stage_classify, config, method)
        run_stage("boundary", stage_boundary, config)
        run_stage("report", stage_report, config)
    except PipelineError as e:
        return e.exit_code
    return 0
