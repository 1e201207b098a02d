"""Statevector simulation of the quantum Hamming-distance classifier.

Register layout for n feature bits (qubit q is bit q of a basis index):

    input        qubits [0, n)
    training     qubits [n, 2n)
    class        qubit 2n
    ancilla      qubit 2n+1

The circuit tensors the input basis state with the training superposition and
an ancilla in |0>, applies H(ancilla), CNOT(input_k -> training_k) for every k,
one diagonal phase gate per (training_k, ancilla) pair and a final H(ancilla).
After post-selecting the ancilla on |0> the class qubit reads out
P(y) = sum_{l in y} cos^2(pi d_H / 2n) / sum_l cos^2(pi d_H / 2n).
"""

import logging
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from math import pi, sqrt

import numpy as np
from tqdm import tqdm

from .encode import EncodedSample, bits_to_string, dedup_training, string_to_bits
from .errors import DataError, ParameterError, PostSelectionError

logger = logging.getLogger(__name__)

POSTSELECT_MIN = 1e-12
NORM_TOL = 1e-12

SOURCE_CIRCUIT = "circuit"
SOURCE_CACHE = "cache"

# Training set of the worked 10-qubit instance.
WORKED_TRAINING = (("0000", 0), ("0001", 0), ("1110", 1), ("1111", 1))
WORKED_INPUT = "0010"

_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)


@dataclass(frozen=True)
class RegisterLayout:
    n_bits: int

    @property
    def input(self):
        return range(0, self.n_bits)

    @property
    def training(self):
        return range(self.n_bits, 2 * self.n_bits)

    @property
    def class_qubit(self):
        return 2 * self.n_bits

    @property
    def ancilla(self):
        return 2 * self.n_bits + 1

    @property
    def total(self):
        return 2 * self.n_bits + 2


@dataclass
class QuantumState:
    n_qubits: int
    amplitudes: np.ndarray

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def nonzero(self, threshold=NORM_TOL):
        """Basis indices whose amplitude magnitude exceeds `threshold`."""
        return np.flatnonzero(np.abs(self.amplitudes) > threshold)


@dataclass(frozen=True)
class ClassProbabilities:
    p0: float
    p1: float
    p_postselect: float = None

    @property
    def probabilities(self):
        return (self.p0, self.p1)


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple
    params: tuple = ()


def _check_bits(bits, what):
    if any(b not in (0, 1) for b in bits):
        raise ParameterError(f"{what} must contain only 0/1 entries, got {bits}")


def build_training_superposition(training):
    """Uniform superposition of |x^p, y^p> over the training set, on n+1 qubits.

    Amplitudes are assigned directly; bit k of x^p is qubit k and the label is
    qubit n. Duplicate (bits, label) pairs are rejected: dedup first.
    """
    if not training:
        raise DataError("Training set is empty")
    n = len(training[0].bits)
    if n == 0:
        raise ParameterError("Training bit vectors are empty")
    indices = []
    for p, sample in enumerate(training):
        if len(sample.bits) != n:
            raise ParameterError(f"Training row {p + 1} has {len(sample.bits)} bits, expected {n}")
        _check_bits(sample.bits, f"Training row {p + 1}")
        if sample.label not in (0, 1):
            raise ParameterError(f"Training row {p + 1} has label {sample.label!r}, expected 0 or 1")
        indices.append(sum(b << k for k, b in enumerate(sample.bits)) + (sample.label << n))
    if len(set(indices)) != len(indices):
        raise ParameterError("Training set contains duplicate (bits, label) pairs; deduplicate it first")

    amplitudes = np.zeros(1 << (n + 1), dtype=complex)
    amplitudes[indices] = 1 / sqrt(len(indices))
    return QuantumState(n_qubits=n + 1, amplitudes=amplitudes)


def circuit_operations(layout):
    """Gate list run after state preparation: 2n sequential gates between two Hadamards."""
    n = layout.n_bits
    phase = pi / (2 * n)
    ops = [Gate("h", (layout.ancilla,))]
    ops += [Gate("cx", (k, n + k)) for k in range(n)]
    ops += [
        Gate("diag", (n + k, layout.ancilla), (1.0, 1.0, np.exp(-1j * phase), np.exp(1j * phase)))
        for k in range(n)
    ]
    ops.append(Gate("h", (layout.ancilla,)))
    return ops


def _axis(qubit, n_qubits):
    # C-order reshape puts the most significant bit on axis 0
    return n_qubits - 1 - qubit


def _apply_single_qubit(state, matrix, qubit, n_qubits):
    axis = _axis(qubit, n_qubits)
    tensor = state.reshape([2] * n_qubits)
    tensor = np.tensordot(tensor, matrix, axes=([axis], [1]))
    return np.moveaxis(tensor, -1, axis).reshape(-1)


def _apply_two_qubit(state, gate, n_qubits):
    q0, q1 = gate.qubits
    tensor = state.reshape([2] * n_qubits)
    new = tensor.copy()

    def idx(v0, v1):
        i = [slice(None)] * n_qubits
        i[_axis(q0, n_qubits)], i[_axis(q1, n_qubits)] = v0, v1
        return tuple(i)

    if gate.name == "cx":
        new[idx(1, 0)], new[idx(1, 1)] = tensor[idx(1, 1)].copy(), tensor[idx(1, 0)].copy()
    elif gate.name == "diag":
        for v0 in (0, 1):
            for v1 in (0, 1):
                new[idx(v0, v1)] *= gate.params[2 * v0 + v1]
    else:
        raise ParameterError(f"Unknown two-qubit gate '{gate.name}'")
    return new.reshape(-1)


def apply_gate(state, gate, n_qubits):
    """Apply one gate to a flat amplitude vector"""
    if gate.name == "h":
        return _apply_single_qubit(state, _H, gate.qubits[0], n_qubits)
    return _apply_two_qubit(state, gate, n_qubits)


def run_circuit(query, training_state, on_step=None):
    """Return the final state |psi_4> for one encoded query.

    `on_step(step, gate, state)` is called after state preparation (gate None,
    step 0) and after every gate.
    """
    n = len(query.bits)
    _check_bits(query.bits, "Input")
    if training_state.n_qubits != n + 1:
        raise ParameterError(
            f"Input has {n} bits but the training state has {training_state.n_qubits} qubits (expected {n + 1})"
        )
    layout = RegisterLayout(n)
    query_index = sum(b << k for k, b in enumerate(query.bits))
    amplitudes = np.zeros(1 << layout.total, dtype=complex)
    occupied = np.flatnonzero(training_state.amplitudes)
    amplitudes[query_index + (occupied << n)] = training_state.amplitudes[occupied]

    state = QuantumState(n_qubits=layout.total, amplitudes=amplitudes)
    if on_step:
        on_step(0, None, state)
    for step, gate in enumerate(circuit_operations(layout), start=1):
        state = QuantumState(n_qubits=layout.total, amplitudes=apply_gate(state.amplitudes, gate, layout.total))
        if on_step:
            on_step(step, gate, state)
    return state


@lru_cache(maxsize=None)
def _branch_masks(n_bits):
    layout = RegisterLayout(n_bits)
    indices = np.arange(1 << layout.total, dtype=np.int64)
    ancilla_zero = ((indices >> layout.ancilla) & 1) == 0
    class_one = ((indices >> layout.class_qubit) & 1) == 1
    return ancilla_zero, class_one


def extract_probabilities(psi4, layout):
    """Exact post-selected class probabilities from the final amplitudes."""
    if psi4.n_qubits != layout.total:
        raise ParameterError(f"State has {psi4.n_qubits} qubits, layout expects {layout.total}")
    ancilla_zero, class_one = _branch_masks(layout.n_bits)
    weights = np.abs(psi4.amplitudes) ** 2
    p_postselect = float(weights[ancilla_zero].sum())
    if p_postselect < POSTSELECT_MIN:
        raise PostSelectionError(
            f"Post-selection impossible: P(ancilla=0) = {p_postselect:.3e}; every neighbor is at maximal distance"
        )
    p1 = float(weights[ancilla_zero & class_one].sum()) / p_postselect
    p0 = float(weights[ancilla_zero & ~class_one].sum()) / p_postselect
    return ClassProbabilities(p0=p0, p1=p1, p_postselect=p_postselect)


def sample_probabilities(psi4, layout, shots=1024, seed=None):
    """Shot-sampled estimate; runs ending with the ancilla in |1> are discarded."""
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    ancilla_zero, class_one = _branch_masks(layout.n_bits)
    weights = np.abs(psi4.amplitudes) ** 2
    counts = np.random.default_rng(seed).multinomial(shots, weights / weights.sum())
    accepted = int(counts[ancilla_zero].sum())
    if accepted == 0:
        raise PostSelectionError(f"All {shots} shots ended with the ancilla in |1>")
    p1 = int(counts[ancilla_zero & class_one].sum()) / accepted
    logger.debug(f"Sampled {shots} shots, {accepted} kept after post-selection")
    return ClassProbabilities(p0=1.0 - p1, p1=p1, p_postselect=accepted / shots)


def hamming_distances(query, training):
    """Hamming distance from the query to every training row"""
    bits = np.asarray(query.bits, dtype=np.int8)
    matrix = np.array([t.bits for t in training], dtype=np.int8)
    if matrix.shape[1] != bits.size:
        raise ParameterError(f"Input has {bits.size} bits, training rows have {matrix.shape[1]}")
    return np.count_nonzero(matrix != bits, axis=1)


def analytic_probabilities(query, training):
    """Closed form of the post-selected readout, from classical Hamming distances."""
    if not training:
        raise DataError("Training set is empty")
    n = len(query.bits)
    weights = np.cos(pi * hamming_distances(query, training) / (2 * n)) ** 2
    labels = np.array([t.label for t in training])
    p_postselect = float(weights.sum()) / len(training)
    if p_postselect < POSTSELECT_MIN:
        raise PostSelectionError(
            f"Post-selection impossible: P(ancilla=0) = {p_postselect:.3e}; every neighbor is at maximal distance"
        )
    p1 = float(weights[labels == 1].sum()) / len(training) / p_postselect
    p0 = float(weights[labels == 0].sum()) / len(training) / p_postselect
    return ClassProbabilities(p0=p0, p1=p1, p_postselect=p_postselect)


@dataclass
class PredictionCache:
    """bits -> ClassProbabilities (or the PostSelectionError raised for them)."""

    hits: int = 0
    circuit_runs: int = 0
    _entries: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get_or_compute(self, key, compute):
        """Return (result, hit). `compute` runs at most once per key."""
        with self._lock:
            if key in self._entries:
                self.hits += 1
                hit = True
            else:
                self.circuit_runs += 1
                try:
                    self._entries[key] = compute()
                except PostSelectionError as e:
                    self._entries[key] = e
                hit = False
            result = self._entries[key]
        if isinstance(result, PostSelectionError):
            raise result
        return result, hit


def classify(query, training, cache=None, training_state=None):
    """Post-selected class probabilities for one query; `cache` skips repeated bits."""

    def compute():
        state = training_state or build_training_superposition(training)
        psi4 = run_circuit(query, state)
        return extract_probabilities(psi4, RegisterLayout(len(query.bits)))

    if cache is None:
        return compute()
    result, _ = cache.get_or_compute(bits_to_string(query.bits), compute)
    return result


class QuantumNearestNeighbors:
    """Deduplicated training superposition plus a prediction cache."""

    def __init__(self):
        self.training = None
        self.training_state = None
        self.cache = PredictionCache()

    @property
    def layout(self):
        return RegisterLayout(len(self.training[0].bits))

    def fit(self, training):
        """Deduplicate the training rows and prepare their superposition"""
        self.training = dedup_training(list(training))
        self.training_state = build_training_superposition(self.training)
        logger.info(f"Training superposition over {len(self.training)} states, "
                    f"{self.layout.total} qubits in the full register")
        return self

    def predict(self, bits):
        """Return (ClassProbabilities, source) with source 'circuit' or 'cache'."""
        if self.training_state is None:
            raise ParameterError("QuantumNearestNeighbors.predict called before fit")
        sample = bits if isinstance(bits, EncodedSample) else EncodedSample(bits=tuple(bits))

        def compute():
            psi4 = run_circuit(sample, self.training_state)
            return extract_probabilities(psi4, self.layout)

        result, hit = self.cache.get_or_compute(sample.key, compute)
        return result, SOURCE_CACHE if hit else SOURCE_CIRCUIT

    def predict_many(self, samples, progress=True, desc="QNN"):
        """(ClassProbabilities or None, source) per sample; None marks post-selection failure."""
        results = []
        for sample in tqdm(samples, desc=desc, disable=not progress):
            hit_before = sample.key in self.cache
            try:
                results.append(self.predict(sample))
            except PostSelectionError as e:
                logger.debug(f"{sample.key}: {e}")
                results.append((None, SOURCE_CACHE if hit_before else SOURCE_CIRCUIT))
        return results


def worked_instance(input_bits=WORKED_INPUT):
    """The 4-sample, 4-bit training set of the 10-qubit illustration and one input."""
    training = [EncodedSample(bits=string_to_bits(b), label=y) for b, y in WORKED_TRAINING]
    return EncodedSample(bits=string_to_bits(input_bits)), training


def format_state(state, layout, threshold=NORM_TOL):
    """One line per nonzero amplitude, registers shown bit 0 first."""
    lines = []
    n = layout.n_bits
    for index in state.nonzero(threshold):
        bits = [(int(index) >> q) & 1 for q in range(layout.total)]
        register = (
            f"in={''.join(map(str, bits[:n]))} tr={''.join(map(str, bits[n:2 * n]))} "
            f"y={bits[layout.class_qubit]} a={bits[layout.ancilla]}"
        )
        amplitude = state.amplitudes[index]
        lines.append(f"|{register}>  {amplitude.real:+.6f}{amplitude.imag:+.6f}j")
    return lines
