"""Critical-field estimates from probability crossings, scored against the analytic lines."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.metrics import mean_squared_error

from .artifacts import read_csv, write_csv
from .errors import DataError, NoCrossingError, ParameterError
from .model import bkt_line, ising_line

logger = logging.getLogger(__name__)

METHODS = ("qnn", "knn_pre", "knn_raw")
ISING = "ising"
BKT = "bkt"
MULTICRITICAL_KAPPA = 0.5
MAX_REFERENCE_KAPPA = 1.5
SUM_TOL = 1e-9

BOUNDARY_COLUMNS = ["kappa", "method", "g_star", "g_ref", "ref_line", "censored"]
SCORE_COLUMNS = ["method", "mse", "rmse", "n_kappa", "n_censored"]
DIAGRAM_COLUMNS = ["kappa"] + [f"g_{m}" for m in METHODS] + ["g_ising", "g_bkt", "ref_line"]


@dataclass
class ProbabilityCurve:
    kappa: float
    g: np.ndarray
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64)
        self.p0 = np.asarray(self.p0, dtype=np.float64)
        self.p1 = np.asarray(self.p1, dtype=np.float64)
        if not (self.g.shape == self.p0.shape == self.p1.shape):
            raise ParameterError("g, p0 and p1 must have the same length")
        if np.any(np.diff(self.g) <= 0):
            raise ParameterError(f"kappa={self.kappa}: g values must be strictly increasing")
        if np.any(np.abs(self.p0 + self.p1 - 1) > SUM_TOL):
            raise ParameterError(f"kappa={self.kappa}: p0 + p1 differs from 1")

    @property
    def points(self):
        return list(zip(self.g.tolist(), self.p0.tolist(), self.p1.tolist()))

    def __len__(self):
        return len(self.g)


@dataclass(frozen=True)
class BoundaryEstimate:
    kappa: float
    g_star: float
    method: str
    g_ref: float
    ref_line: str
    censored: bool = False  # no crossing: g_star is the end of the g range the curve never left


def find_crossing(curve, ordered_label=0):
    """g where p[ordered_label] falls through 1/2 for the last time and stays below.

    Linear interpolation between the two grid points around the crossing; a
    point sitting exactly at 1/2 is the crossing itself.
    """
    if len(curve) < 2:
        raise ParameterError(f"kappa={curve.kappa}: a crossing needs at least 2 points, got {len(curve)}")
    p = curve.p0 if ordered_label == 0 else curve.p1
    f = p - 0.5
    g = curve.g
    if f[-1] > 0:
        raise NoCrossingError(f"kappa={curve.kappa}: p{ordered_label} stays above 1/2 at the end of the g range")
    at_or_above = np.flatnonzero(f >= 0)
    if at_or_above.size == 0:
        raise NoCrossingError(f"kappa={curve.kappa}: p{ordered_label} < 1/2 over the whole g range")
    i = int(at_or_above[-1])
    if f[i] == 0:
        return float(g[i])
    return float(g[i] + f[i] / (f[i] - f[i + 1]) * (g[i + 1] - g[i]))


def reference_g(kappa):
    """Analytic critical field and the line it comes from."""
    if not 0 <= kappa <= MAX_REFERENCE_KAPPA:
        raise ParameterError(f"No reference line for kappa={kappa}; expected 0 <= kappa <= {MAX_REFERENCE_KAPPA}")
    if kappa <= MULTICRITICAL_KAPPA:
        return ising_line(kappa), ISING
    return bkt_line(kappa), BKT


def _method_order(method):
    return (METHODS.index(method), method) if method in METHODS else (len(METHODS), method)


def score_mse(estimates):
    """Per-method mean of (g_star - g_ref)^2 over kappa, plus its square root.

    Every method is scored over the same kappa values: those all methods have an
    estimate for. Kappas missing from any method are logged and left out for all.
    """
    if not estimates:
        raise DataError("No boundary estimates to score")
    methods = sorted({e.method for e in estimates}, key=_method_order)
    by_method = {}
    for method in methods:
        chosen = [e for e in estimates if e.method == method]
        kappas = [e.kappa for e in chosen]
        if len(set(kappas)) != len(kappas):
            raise DataError(f"Method {method} has more than one estimate for the same kappa")
        by_method[method] = {e.kappa: e for e in chosen}

    shared = sorted(set.intersection(*(set(chosen) for chosen in by_method.values())))
    if not shared:
        raise DataError(f"Methods {', '.join(methods)} have no kappa value in common to score on")
    for method, chosen in by_method.items():
        left_out = sorted(set(chosen) - set(shared))
        if left_out:
            logger.warning(f"{method}: kappa={left_out} not scored, another method has no estimate there")

    rows = []
    for method in methods:
        chosen = [by_method[method][kappa] for kappa in shared]
        mse = float(mean_squared_error([e.g_ref for e in chosen], [e.g_star for e in chosen]))
        rows.append({
            "method": method, "mse": mse, "rmse": float(np.sqrt(mse)),
            "n_kappa": len(chosen), "n_censored": sum(e.censored for e in chosen),
        })
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


def curves_from_predictions(frame, method=None):
    """One ProbabilityCurve per kappa; rows with missing probabilities are dropped."""
    missing = frame["p0"].isna() | frame["p1"].isna()
    if missing.any():
        logger.warning(f"{method or 'predictions'}: dropped {int(missing.sum())} point(s) without probabilities")
    frame = frame.loc[~missing]
    curves = []
    for kappa, block in frame.groupby("kappa", sort=True):
        block = block.sort_values("g", kind="stable")
        curves.append(ProbabilityCurve(
            kappa=float(kappa), g=block["g"].to_numpy(), p0=block["p0"].to_numpy(), p1=block["p1"].to_numpy()
        ))
    return curves


def censored_g(curve, ordered_label=0):
    """End of the g range for a curve without a crossing.

    A curve that stays above 1/2 puts the transition at or beyond its last g; one
    that stays below puts it at or before its first g.
    """
    p = curve.p0 if ordered_label == 0 else curve.p1
    return float(curve.g[-1] if p[-1] > 0.5 else curve.g[0])


def estimate_boundaries(curves, method, ordered_label=0):
    """One estimate per curve; curves without a crossing give censored estimates."""
    estimates = []
    for curve in curves:
        if len(curve) < 2:
            logger.warning(f"{method} kappa={curve.kappa}: only {len(curve)} usable point(s), skipped")
            continue
        censored = False
        try:
            g_star = find_crossing(curve, ordered_label)
        except NoCrossingError as e:
            censored = True
            g_star = censored_g(curve, ordered_label)
            logger.warning(f"{method}: {e}; censored at g={g_star:.6f}")
        g_ref, ref_line = reference_g(curve.kappa)
        estimates.append(BoundaryEstimate(
            kappa=curve.kappa, g_star=g_star, method=method, g_ref=g_ref, ref_line=ref_line, censored=censored
        ))
        logger.debug(f"{method} kappa={curve.kappa}: g*={g_star:.6f} ({ref_line} {g_ref:.6f})")
    if estimates and all(e.censored for e in estimates):
        raise NoCrossingError(f"{method}: no probability curve crosses 1/2")
    return estimates


def boundaries_frame(estimates):
    """One row per estimate, ordered by kappa then method"""
    ordered = sorted(estimates, key=lambda e: (e.kappa, _method_order(e.method)))
    return pd.DataFrame(
        [[e.kappa, e.method, e.g_star, e.g_ref, e.ref_line, int(e.censored)] for e in ordered],
        columns=BOUNDARY_COLUMNS,
    )


def write_boundaries(estimates, path, header=None):
    return write_csv(boundaries_frame(estimates), path, header)


def read_boundaries(path):
    """Estimates back from a boundaries CSV"""
    frame = read_csv(path, dtype={"method": str, "ref_line": str})
    if list(frame.columns) != BOUNDARY_COLUMNS:
        raise DataError(f"{path}: expected columns {','.join(BOUNDARY_COLUMNS)}, found {list(frame.columns)}")
    return [
        BoundaryEstimate(kappa=float(k), g_star=float(s), method=m, g_ref=float(r), ref_line=line, censored=bool(c))
        for k, m, s, r, line, c in frame.itertuples(index=False)
    ]


def phase_diagram_frame(estimates):
    """Per kappa: g_star of each method next to both analytic lines (empty outside their domain)."""
    if not estimates:
        raise DataError("Boundary table is empty")
    rows = []
    for kappa in sorted({e.kappa for e in estimates}):
        row = {"kappa": kappa}
        for method in METHODS:
            match = [e.g_star for e in estimates if e.kappa == kappa and e.method == method]
            row[f"g_{method}"] = match[0] if match else np.nan
        row["g_ising"] = ising_line(kappa) if 0 <= kappa <= MULTICRITICAL_KAPPA else np.nan
        row["g_bkt"] = bkt_line(kappa) if MULTICRITICAL_KAPPA <= kappa <= MAX_REFERENCE_KAPPA else np.nan
        row["ref_line"] = reference_g(kappa)[1]
        rows.append(row)
    return pd.DataFrame(rows, columns=DIAGRAM_COLUMNS)
