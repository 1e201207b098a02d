"""Run configuration: INI file sections, command-line overrides and the config hash."""

import configparser
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .dataset import DEFAULT_G_COUNT, DEFAULT_G_MAX, DEFAULT_TEST_KAPPAS
from .errors import ParameterError, UsageError
from .forest import DEFAULT_N_TREES, DEFAULT_SEED, DEFAULT_TOP_K
from .knn import DEFAULT_K
from .model import DEFAULT_N_SITES, ModelParams

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = "output"
DEFAULT_PAD_WIDTH = 8
AUTO = "auto"

# (section, key) in the INI file -> RunConfig field
INI_KEYS = {
    ("model", "n_sites"): "n_sites",
    ("dataset", "g_count"): "g_count",
    ("dataset", "g_max"): "g_max",
    ("dataset", "test_kappas"): "test_kappas",
    ("forest", "n_trees"): "n_trees",
    ("forest", "seed"): "forest_seed",
    ("forest", "max_depth"): "max_depth",
    ("forest", "top_k"): "top_k",
    ("encode", "pad_width"): "pad_width",
    ("knn", "k"): "knn_k",
    ("output", "dir"): "output_dir",
    ("run", "threads"): "threads",
    ("run", "progress"): "progress",
}

# Fields that never change output bytes
UNHASHED = {"threads", "progress", "output_dir"}


@dataclass
class RunConfig:
    n_sites: int = DEFAULT_N_SITES
    g_count: int = DEFAULT_G_COUNT
    g_max: float = DEFAULT_G_MAX
    test_kappas: tuple = DEFAULT_TEST_KAPPAS
    n_trees: int = DEFAULT_N_TREES
    forest_seed: int = DEFAULT_SEED
    max_depth: int = None
    top_k: int = DEFAULT_TOP_K
    pad_width: int = DEFAULT_PAD_WIDTH
    knn_k: int = DEFAULT_K  # None: cross-validated choice
    output_dir: str = DEFAULT_OUTPUT_DIR
    threads: int = 1
    progress: bool = True
    paths: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.test_kappas = tuple(sorted(float(k) for k in self.test_kappas))
        root = Path(self.output_dir)
        self.paths = {
            "data": root / "data",
            "importances": root / "importances.csv",
            "encoders": root / "encoders.json",
            "encoded": root / "encoded",
            "predictions": root / "predictions",
            "boundaries": root / "boundaries.csv",
            "scores": root / "scores.csv",
            "diagram": root / "phase_diagram.csv",
        }

    @property
    def knn_search(self):
        return self.knn_k is None

    def prediction_path(self, method):
        return self.paths["predictions"] / f"{method}.csv"

    def validate(self):
        """Raise UsageError on any out-of-range or conflicting setting"""
        try:
            ModelParams(n_sites=self.n_sites).validate()
        except ParameterError as e:
            raise UsageError(str(e))
        if self.g_count < 2 or self.g_max <= 0:
            raise UsageError(f"Need g_count >= 2 and g_max > 0, got g_count={self.g_count}, g_max={self.g_max}")
        if not self.test_kappas or any(k <= 0 for k in self.test_kappas):
            raise UsageError(f"test_kappas must be non-empty and all > 0, got {self.test_kappas}")
        if len(set(self.test_kappas)) != len(self.test_kappas):
            raise UsageError(f"Duplicate test kappa values: {self.test_kappas}")
        if self.n_trees < 1:
            raise UsageError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.top_k < 1 or 2 * self.top_k > self.pad_width:
            raise UsageError(f"top_k={self.top_k} needs {2 * self.top_k} bits, pad_width is {self.pad_width}")
        if self.knn_k is not None and self.knn_k < 1:
            raise UsageError(f"knn k must be >= 1 or '{AUTO}', got {self.knn_k}")
        if self.threads == 0 or self.threads < -1:
            raise UsageError(f"threads must be >= 1 (or -1 for all cores), got {self.threads}")
        resolved = [p.resolve() for p in self.paths.values()]
        if len(set(resolved)) != len(resolved):
            raise UsageError("Artifact paths are not distinct")
        return self

    def hashable(self):
        """Fields that change outputs, as a JSON-ready dict"""
        data = asdict(self)
        data.pop("paths")
        for key in UNHASHED:
            data.pop(key)
        data["test_kappas"] = list(self.test_kappas)
        return data


def config_hash(config):
    """First 16 hex digits of SHA-256 over the canonical JSON of output-relevant fields."""
    canonical = json.dumps(config.hashable(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def parse_kappas(text):
    """Parse "0.1,0.2,..." into a tuple of floats"""
    try:
        return tuple(float(k) for k in str(text).replace(" ", "").split(",") if k)
    except ValueError:
        raise UsageError(f"Cannot parse kappa list '{text}'; expected comma-separated numbers")


def parse_knn_k(text):
    """Integer k, or None for a cross-validated choice"""
    if text is None or str(text).strip().lower() == AUTO:
        return None
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"knn k must be an integer or '{AUTO}', got '{text}'")


def _parse_optional_int(text):
    return None if str(text).strip().lower() in ("", "none") else int(text)


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


PARSERS = {
    "n_sites": int,
    "g_count": int,
    "g_max": float,
    "test_kappas": parse_kappas,
    "n_trees": int,
    "forest_seed": int,
    "max_depth": _parse_optional_int,
    "top_k": int,
    "pad_width": int,
    "knn_k": parse_knn_k,
    "output_dir": str,
    "threads": int,
    "progress": _parse_bool,
}


def read_ini(path):
    """Field values found in an INI file, keyed by RunConfig field name."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"Config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise UsageError(f"Cannot parse config {path}: {e}")

    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            name = INI_KEYS.get((section, key))
            if name is None:
                raise UsageError(f"{path}: unknown setting [{section}] {key}")
            try:
                values[name] = PARSERS[name](raw)
            except (ValueError, TypeError) as e:
                raise UsageError(f"{path}: [{section}] {key} = {raw!r} is invalid ({e})")
    return values


def apply_overrides(config, **overrides):
    """Replace fields whose override is not None."""
    known = {f.name for f in fields(RunConfig) if f.init}
    unknown = set(overrides) - known
    if unknown:
        raise UsageError(f"Unknown config fields: {sorted(unknown)}")
    changes = {key: value for key, value in overrides.items() if value is not None}
    if "knn_k" in changes:
        changes["knn_k"] = parse_knn_k(changes["knn_k"])
    return replace(config, **changes)


def load_config(path=None, **overrides):
    """RunConfig from defaults, then the INI file, then explicit overrides."""
    config = RunConfig()
    if path is not None:
        config = replace(config, **read_ini(path))
        logger.info(f"Loaded config {path}")
    return apply_overrides(config, **overrides).validate()
