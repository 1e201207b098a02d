from itertools import combinations

import numpy as np
import pytest
from scipy.linalg import eigh

from phase_transfer.errors import ConvergenceError, ParameterError
from phase_transfer.model import (
    GroundState,
    ModelParams,
    PauliAxis,
    bkt_line,
    build_hamiltonian,
    chordal_distance,
    correlation_features,
    feature_count,
    feature_names,
    feature_pairs,
    ground_state,
    ising_line,
    solve_point,
)


def dense_ground_state(params):
    h = build_hamiltonian(params).matrix.toarray()
    values, vectors = eigh(h)
    return values[0], vectors[:, 0]


class TestHamiltonian:
    def test_classical_ferromagnet_minimum(self):
        h = build_hamiltonian(ModelParams(n_sites=4, kappa=0.0, g=0.0))
        assert h.dimension == 16
        assert h.diagonal().min() == -4.0

    def test_antiphase_minimum(self):
        h = build_hamiltonian(ModelParams(n_sites=4, kappa=2.0, g=0.0))
        assert h.diagonal().min() == -8.0
        # up-up-down-down: bits 0,1 up (0) and bits 2,3 down (1)
        assert h.diagonal()[0b1100] == -8.0

    def test_tfim_lowest_eigenvalue(self):
        energy, _ = dense_ground_state(ModelParams(n_sites=4, kappa=0.0, g=1.0))
        assert energy == pytest.approx(-5.226252, abs=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_hermitian_exactly(self, seed):
        rng = np.random.default_rng(seed)
        params = ModelParams(n_sites=6, kappa=float(rng.uniform(0, 2)), g=float(rng.uniform(0, 2)))
        h = build_hamiltonian(params)
        assert h.is_hermitian()
        assert abs(h.matrix - h.matrix.T).max() == 0

    def test_entries_are_triples(self):
        h = build_hamiltonian(ModelParams(n_sites=4, kappa=0.5, g=0.3))
        entries = h.entries()
        assert len(entries) == h.matrix.nnz
        row, col, value = entries[0]
        assert h.matrix[row, col] == value

    @pytest.mark.parametrize("params", [
        ModelParams(n_sites=3),
        ModelParams(n_sites=2),
        ModelParams(n_sites=18),
        ModelParams(n_sites=4, kappa=-0.1),
        ModelParams(n_sites=4, g=-1.0),
        ModelParams(n_sites=4, j=2.0),
    ])
    def test_invalid_params(self, params):
        with pytest.raises(ParameterError):
            build_hamiltonian(params)


class TestGroundState:
    def test_classical_ground_energy(self):
        state = ground_state(build_hamiltonian(ModelParams(n_sites=4, kappa=0.0, g=0.0)))
        assert state.energy == pytest.approx(-4.0, abs=1e-10)

    def test_tfim_ground_energy(self):
        state = ground_state(build_hamiltonian(ModelParams(n_sites=4, kappa=0.0, g=1.0)))
        assert state.energy == pytest.approx(-5.226252, abs=1e-6)
        assert state.residual < 1e-10
        assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n_sites", [4, 6, 8, 10])
    def test_matches_dense_diagonalization(self, n_sites):
        rng = np.random.default_rng(n_sites)
        for kappa, g in rng.uniform(0, 2, (50, 2)):
            params = ModelParams(n_sites=n_sites, kappa=float(kappa), g=float(g))
            h = build_hamiltonian(params)
            values, vectors = eigh(h.matrix.toarray())
            state = ground_state(h)
            assert state.energy == pytest.approx(values[0], abs=1e-9), params
            # small g leaves a near-degenerate doublet: compare against the whole low multiplet
            low = vectors[:, values < values[0] + 1e-4]
            weight = np.linalg.norm(low.conj().T @ state.amplitudes) ** 2
            assert weight == pytest.approx(1.0, abs=1e-8), params

    def test_ten_sites_against_dense(self):
        params = ModelParams(n_sites=10, kappa=0.3, g=0.8)
        dense_energy, dense_vector = dense_ground_state(params)
        state = ground_state(build_hamiltonian(params))
        assert state.energy == pytest.approx(dense_energy, abs=1e-9)
        assert abs(np.vdot(dense_vector, state.amplitudes)) > 1 - 1e-8

    def test_iteration_cap_raises_with_residual(self):
        h = build_hamiltonian(ModelParams(n_sites=10, kappa=0.7, g=0.6))
        with pytest.raises(ConvergenceError) as info:
            ground_state(h, max_iterations=1)
        assert info.value.residual is not None
        assert info.value.exit_code == 3

    def test_deterministic(self):
        h = build_hamiltonian(ModelParams(n_sites=8, kappa=0.4, g=1.1))
        first, second = ground_state(h), ground_state(h)
        assert np.array_equal(first.amplitudes, second.amplitudes)


class TestFeatures:
    def test_canonical_order_and_names(self):
        names = feature_names(4)
        assert len(names) == feature_count(4) == 18
        assert names[:3] == ["xx_1_2", "xx_1_3", "xx_1_4"]
        assert names[6] == "yy_1_2"
        assert names[-1] == "zz_3_4"
        assert feature_count(12) == 198
        assert feature_pairs(4)[12] == (PauliAxis.Z, 1, 2)

    def test_chordal_distance(self):
        assert chordal_distance(1, 7, 12) == 6
        assert chordal_distance(1, 12, 12) == 1
        assert chordal_distance(3, 5, 12) == 2

    def test_ferromagnetic_doublet(self):
        params = ModelParams(n_sites=4, kappa=0.0, g=0.0)
        _, features = solve_point(params)
        m = len(features) // 3
        np.testing.assert_allclose(features[2 * m:], 1.0, atol=1e-10)
        np.testing.assert_allclose(features[:2 * m], 0.0, atol=1e-10)

    def test_antiphase_next_nearest(self):
        params = ModelParams(n_sites=8, kappa=2.0, g=0.0)
        _, features = solve_point(params)
        zz = dict(zip(feature_names(8), features))
        for i, j in combinations(range(1, 9), 2):
            if chordal_distance(i, j, 8) == 2:
                assert zz[f"zz_{i}_{j}"] == pytest.approx(-1.0, abs=1e-10)

    def test_matches_dense_recomputation(self):
        params = ModelParams(n_sites=8, kappa=0.0, g=1.0)
        energy, vector = dense_ground_state(params)
        dense = correlation_features(GroundState(energy=energy, amplitudes=vector.astype(complex)), params)
        _, iterative = solve_point(params)
        np.testing.assert_allclose(iterative, dense, atol=1e-9)

    def test_translation_invariance(self):
        params = ModelParams(n_sites=8, kappa=0.2, g=1.0)
        _, features = solve_point(params)
        by_distance = {}
        for (axis, i, j), value in zip(feature_pairs(8), features):
            by_distance.setdefault((axis, chordal_distance(i, j, 8)), []).append(value)
        for values in by_distance.values():
            assert np.ptp(values) < 1e-9

    def test_spin_flip_even(self):
        params = ModelParams(n_sites=6, kappa=0.6, g=0.9)
        state, features = solve_point(params)
        flipped = state.amplitudes[np.arange(1 << 6) ^ ((1 << 6) - 1)]
        flipped_features = correlation_features(GroundState(energy=state.energy, amplitudes=flipped), params)
        np.testing.assert_allclose(flipped_features, features, atol=1e-12)

    def test_bounded(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            params = ModelParams(n_sites=6, kappa=float(rng.uniform(0, 2)), g=float(rng.uniform(0.3, 2)))
            _, features = solve_point(params)
            assert np.all(np.abs(features) <= 1.0)


class TestAnalyticLines:
    def test_ising_values(self):
        assert ising_line(0.0) == 1.0
        assert ising_line(0.5) == pytest.approx(0.0, abs=1e-12)
        assert ising_line(0.25) == pytest.approx(0.550510, abs=1e-6)

    def test_bkt_values(self):
        assert bkt_line(0.5) == 0.0
        assert bkt_line(1.0) == pytest.approx(0.704361, abs=1e-6)
        assert bkt_line(1.5) == pytest.approx(1.242377, abs=1e-6)

    def test_monotone(self):
        ising = [ising_line(k) for k in np.linspace(0, 0.5, 51)]
        bkt = [bkt_line(k) for k in np.linspace(0.5, 1.5, 51)]
        assert np.all(np.diff(ising) < 0)
        assert np.all(np.diff(bkt) > 0)

    @pytest.mark.parametrize("line, kappa", [(ising_line, -0.1), (ising_line, 0.6), (bkt_line, 0.4), (bkt_line, 1.6)])
    def test_domain(self, line, kappa):
        with pytest.raises(ParameterError):
            line(kappa)
