import numpy as np
import pandas as pd
import pytest

from phase_transfer.artifacts import make_header, read_header, write_csv
from phase_transfer.dataset import (
    DatasetSplit,
    TRAIN_FILE,
    frame_to_samples,
    g_grid,
    generate_split,
    kappa_file_name,
    label_sample,
    read_dataset,
    samples_to_frame,
    write_dataset,
)
from phase_transfer.errors import DataError, ParameterError
from phase_transfer.model import feature_names


@pytest.fixture(scope="module")
def tiny_split():
    return generate_split(4, 3, [0.2], progress=False)


def test_label_convention():
    assert label_sample(0.5) == 0
    assert label_sample(1.5) == 1
    assert label_sample(1.0) == 1


def test_grid_excludes_zero():
    grid = g_grid(3, 2.0)
    assert grid == [2.0 * 1 / 3, 2.0 * 2 / 3, 2.0]
    assert 0.0 not in g_grid(1000)
    assert len(set(g_grid(1000))) == 1000


def test_tiny_split_shape(tiny_split):
    assert tiny_split.n_sites == 4
    assert [s.g for s in tiny_split.train] == [2 / 3 * 1, 2 / 3 * 2, 2.0]
    assert [s.label for s in tiny_split.train] == [0, 1, 1]
    assert list(tiny_split.tests) == [0.2]
    assert len(tiny_split.tests[0.2]) == 3
    assert all(s.label is None for s in tiny_split.tests[0.2])
    assert all(len(s.features) == 18 for s in tiny_split.train)


def test_labels_non_decreasing_in_g(small_split):
    labels = [s.label for s in small_split.train]
    assert labels == sorted(labels)


@pytest.mark.parametrize("kwargs", [
    {"g_count": 1, "test_kappas": [0.2]},
    {"g_count": 3, "test_kappas": []},
    {"g_count": 3, "test_kappas": [0.0]},
    {"g_count": 3, "test_kappas": [0.2, 0.2]},
])
def test_invalid_split_arguments(kwargs):
    with pytest.raises(ParameterError):
        generate_split(4, progress=False, **kwargs)


def test_round_trip_identity(tiny_split, tmp_path):
    write_dataset(tiny_split, tmp_path, make_header(config_hash="abc"))
    loaded = read_dataset(tmp_path)
    assert loaded.n_sites == 4
    assert loaded.g_count == 3
    assert loaded.g_max == 2.0
    for original, copy in zip(tiny_split.train, loaded.train):
        assert copy.g == original.g
        assert copy.label == original.label
        assert np.array_equal(copy.features, original.features)
    for original, copy in zip(tiny_split.tests[0.2], loaded.tests[0.2]):
        assert copy.kappa == 0.2
        assert np.array_equal(copy.features, original.features)


def test_file_layout_and_header(tiny_split, tmp_path):
    paths = write_dataset(tiny_split, tmp_path, make_header(config_hash="abc", forest_seed=42))
    assert [p.name for p in paths] == [TRAIN_FILE, kappa_file_name(0.2)]
    assert kappa_file_name(0.2) == "test_kappa_0.2.csv"
    lines = (tmp_path / TRAIN_FILE).read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# artifact_version=1 config_hash=abc forest_seed=42")
    assert lines[1].split(",")[:4] == ["kappa", "g", "label", "xx_1_2"]
    assert len(lines) == 1 + 1 + 3
    header = read_header(tmp_path / TRAIN_FILE)
    assert header["n_sites"] == "4"
    test_lines = (tmp_path / kappa_file_name(0.2)).read_text(encoding="utf-8").splitlines()
    assert test_lines[2].split(",")[2] == ""


def test_generation_is_deterministic(tmp_path):
    first = generate_split(4, 4, [0.3], progress=False)
    second = generate_split(4, 4, [0.3], threads=2, progress=False)
    write_dataset(first, tmp_path / "a")
    write_dataset(second, tmp_path / "b")
    for name in (TRAIN_FILE, kappa_file_name(0.3)):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_tests_split(tiny_split, tmp_path):
    split = DatasetSplit(n_sites=4, train=tiny_split.train, tests={}, g_max=2.0, g_count=3)
    paths = write_dataset(split, tmp_path)
    assert len(paths) == 1
    assert read_dataset(tmp_path).tests == {}


def test_rejects_missing_feature_column(tiny_split, tmp_path):
    frame = samples_to_frame(tiny_split.train, 4).drop(columns=["zz_3_4"])
    write_csv(frame, tmp_path / TRAIN_FILE)
    with pytest.raises(DataError, match="17 feature columns"):
        read_dataset(tmp_path)


def test_rejects_bad_cell_with_row_and_column(tiny_split):
    frame = samples_to_frame(tiny_split.train, 4).astype({"xx_1_3": object})
    frame.loc[1, "xx_1_3"] = "oops"
    with pytest.raises(DataError, match=r"row 2, column 'xx_1_3'"):
        frame_to_samples(frame)


def test_rejects_out_of_range_value(tiny_split):
    frame = samples_to_frame(tiny_split.train, 4)
    frame.loc[0, "zz_1_2"] = 1.5
    with pytest.raises(DataError, match="outside"):
        frame_to_samples(frame)


def test_rejects_label_on_test_row(tiny_split):
    frame = samples_to_frame(tiny_split.tests[0.2], 4)
    frame["label"] = pd.array([0, None, None], dtype="Int64")
    with pytest.raises(DataError, match="label"):
        frame_to_samples(frame)


def test_rejects_wrong_column_name(tiny_split):
    frame = samples_to_frame(tiny_split.train, 4)
    names = ["kappa", "g", "label"] + feature_names(4)
    names[4] = "xx_1_9"
    frame.columns = names
    with pytest.raises(DataError, match="column 5 is 'xx_1_9'"):
        frame_to_samples(frame)


def test_missing_directory(tmp_path):
    with pytest.raises(DataError, match="Missing input file"):
        read_dataset(tmp_path / "nowhere")


@pytest.mark.slow
def test_tfim_long_range_order_at_twelve_sites():
    split = generate_split(12, 20, [0.5], threads=-1, progress=False)
    names = feature_names(12)
    far = names.index("zz_1_7")
    by_g = {round(s.g, 6): s.features[far] for s in split.train}
    assert by_g[0.1] > 0.5
    assert by_g[2.0] < 0.1
