"""ANNNI chain: Hamiltonian, exact ground state and pairwise spin correlations.

H = -J sum_j (sz_j sz_{j+1} - kappa sz_j sz_{j+2} + g sx_j), periodic boundary.

Basis convention: bit j (0-based, little-endian) of a basis index is spin j,
and bit value 0 means sigma^z_j = +1.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import comb, sqrt

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConvergenceError, DataError, ParameterError

logger = logging.getLogger(__name__)

J_COUPLING = 1.0
DEFAULT_N_SITES = 12
MAX_N_SITES = 16

RESIDUAL_TOL = 1e-10
MAX_ITERATIONS = 5000
START_VECTOR_SEED = 20240101


class PauliAxis(Enum):
    X = "x"
    Y = "y"
    Z = "z"


@dataclass(frozen=True)
class ModelParams:
    n_sites: int = DEFAULT_N_SITES
    kappa: float = 0.0
    g: float = 0.0
    j: float = J_COUPLING

    def validate(self):
        if self.n_sites < 4 or self.n_sites % 2:
            raise ParameterError(f"n_sites must be even and >= 4, got {self.n_sites}")
        if self.n_sites > MAX_N_SITES:
            raise ParameterError(f"n_sites above {MAX_N_SITES} is not supported, got {self.n_sites}")
        if self.kappa < 0 or self.g < 0:
            raise ParameterError(f"kappa and g must be >= 0, got kappa={self.kappa}, g={self.g}")
        if self.j != J_COUPLING:
            raise ParameterError(f"J is fixed to {J_COUPLING}, got {self.j}")
        return self


@dataclass
class SparseOperator:
    n_sites: int
    matrix: sparse.csr_matrix

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def entries(self):
        """(row, column, value) triples of the stored nonzeros."""
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def is_hermitian(self):
        return (self.matrix != self.matrix.conj().T).nnz == 0

    def diagonal(self):
        return self.matrix.diagonal()


@dataclass
class GroundState:
    energy: float
    amplitudes: np.ndarray
    residual: float = 0.0
    iterations: int = 0


def _spin_table(n_sites):
    """(2^N, N) array of sigma^z eigenvalues (+1 for bit 0)."""
    states = np.arange(1 << n_sites, dtype=np.int64)
    bits = (states[:, None] >> np.arange(n_sites)) & 1
    return 1 - 2 * bits


def build_hamiltonian(params):
    """Sparse ANNNI Hamiltonian on a periodic chain, sigma^z basis"""
    params.validate()
    n = params.n_sites
    dim = 1 << n
    spins = _spin_table(n)

    nearest = (spins * np.roll(spins, -1, axis=1)).sum(axis=1)
    next_nearest = (spins * np.roll(spins, -2, axis=1)).sum(axis=1)
    diagonal = -params.j * (nearest - params.kappa * next_nearest).astype(np.float64)

    states = np.arange(dim, dtype=np.int64)
    rows = [states]
    cols = [states]
    data = [diagonal]
    if params.g != 0:
        for site in range(n):
            rows.append(states)
            cols.append(states ^ (1 << site))
            data.append(np.full(dim, -params.j * params.g))

    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    return SparseOperator(n_sites=n, matrix=matrix)


def _start_vector(dim):
    # Fixed seed; a symmetric start vector would pin the iteration to the
    # translation- and flip-invariant sector.
    rng = np.random.default_rng(START_VECTOR_SEED)
    v0 = rng.standard_normal(dim)
    return v0 / np.linalg.norm(v0)


def _fix_phase(vector):
    pivot = np.argmax(np.abs(vector))
    return vector * (np.abs(vector[pivot]) / vector[pivot])


def ground_state(h, tol=RESIDUAL_TOL, max_iterations=MAX_ITERATIONS):
    """Lowest eigenpair of a Hermitian operator by restarted Lanczos (ARPACK)."""
    v0 = _start_vector(h.dimension)
    try:
        values, vectors = eigsh(h.matrix, k=1, which="SA", v0=v0, tol=0, maxiter=max_iterations)
    except ArpackNoConvergence as e:
        residual = float("inf")
        if e.eigenvectors is not None and e.eigenvectors.size:
            vector = e.eigenvectors[:, 0]
            residual = float(np.linalg.norm(h.matrix @ vector - e.eigenvalues[0] * vector))
        raise ConvergenceError(
            f"Lanczos did not converge within {max_iterations} iterations (residual {residual:.3e})",
            residual=residual,
        )

    vector = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
    vector = _fix_phase(vector)
    h_vector = h.matrix @ vector
    energy = float(np.real(np.vdot(vector, h_vector)))
    residual = float(np.linalg.norm(h_vector - energy * vector))
    if residual >= tol:
        raise ConvergenceError(
            f"Ground state residual {residual:.3e} above tolerance {tol:.1e}", residual=residual
        )
    return GroundState(energy=energy, amplitudes=vector.astype(np.complex128), residual=residual)


def feature_pairs(n_sites):
    """Canonical order: axis-major (xx, yy, zz), then (i, j) lexicographic, 1-based."""
    pairs = list(combinations(range(1, n_sites + 1), 2))
    return [(axis, i, j) for axis in PauliAxis for i, j in pairs]


def feature_names(n_sites):
    """Column names such as zz_1_7, in canonical order"""
    return [f"{axis.value * 2}_{i}_{j}" for axis, i, j in feature_pairs(n_sites)]


def feature_count(n_sites):
    return 3 * comb(n_sites, 2)


def chordal_distance(i, j, n_sites):
    """Distance between sites i and j around the ring"""
    d = abs(i - j)
    return min(d, n_sites - d)


def correlation_features(state, params):
    """All <s^a_i s^a_j> for a in {x, y, z}, i < j, in canonical order."""
    n = params.n_sites
    dim = 1 << n
    psi = np.asarray(state.amplitudes)
    if psi.shape != (dim,):
        raise DataError(f"State has {psi.shape} amplitudes, expected ({dim},) for N={n}")

    spins = _spin_table(n)
    states = np.arange(dim, dtype=np.int64)
    probabilities = np.abs(psi) ** 2
    pairs = list(combinations(range(n), 2))

    values = {PauliAxis.X: [], PauliAxis.Y: [], PauliAxis.Z: []}
    for i, j in pairs:
        zz_sign = spins[:, i] * spins[:, j]
        flipped = psi[states ^ ((1 << i) | (1 << j))]
        values[PauliAxis.Z].append(float(probabilities @ zz_sign))
        values[PauliAxis.X].append(float(np.real(np.vdot(psi, flipped))))
        values[PauliAxis.Y].append(float(np.real(np.vdot(psi, -zz_sign * flipped))))

    features = np.array(values[PauliAxis.X] + values[PauliAxis.Y] + values[PauliAxis.Z])
    return np.clip(features, -1.0, 1.0)


def solve_point(params):
    """Ground state and correlation features for one (kappa, g) point."""
    state = ground_state(build_hamiltonian(params))
    return state, correlation_features(state, params)


def ising_line(kappa):
    """Ferro/para critical field, perturbative approximation valid for 0 <= kappa <= 1/2."""
    if not 0 <= kappa <= 0.5:
        raise ParameterError(f"ising_line is defined for 0 <= kappa <= 0.5, got {kappa}")
    if kappa == 0:
        return 1.0
    return (1 - kappa) / kappa * (1 - sqrt((1 - 3 * kappa + 4 * kappa ** 2) / (1 - kappa)))


def bkt_line(kappa):
    """Para/floating critical field, fit valid for 1/2 <= kappa <= 3/2."""
    if not 0.5 <= kappa <= 1.5:
        raise ParameterError(f"bkt_line is defined for 0.5 <= kappa <= 1.5, got {kappa}")
    return 1.05 * sqrt((kappa - 0.5) * (kappa - 0.1))
