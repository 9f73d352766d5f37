import numpy as np
import pytest

from conftest import (
    SM,
    SZ,
    random_density,
    random_hermitian,
    random_lindblad_model,
    random_state,
)
from lindkit import (
    DensityMatrix,
    ProjectorBasis,
    born_collapse,
    entropy_rate,
    errors,
    evolve,
    expectation,
    mixture,
    unitary_step,
    vn_entropy,
)


class TestDensityMatrix:
    def test_pure_state(self):
        rho = DensityMatrix.pure([1, 0])
        assert np.allclose(rho.matrix, np.diag([1, 0]))

    def test_repair_clips_tiny_negativity(self):
        mat = np.diag([1.0 + 5e-11, -5e-11])
        rho = DensityMatrix.from_matrix(mat)
        assert rho.repaired
        assert rho.eigenvalues().min() >= 0
        assert abs(np.trace(rho.matrix) - 1) < 1e-14

    def test_rejects_large_negativity(self):
        with pytest.raises(errors.InvalidDensityMatrix):
            DensityMatrix.from_matrix(np.diag([1.5, -0.5]))

    def test_rejects_bad_trace(self):
        with pytest.raises(errors.InvalidDensityMatrix):
            DensityMatrix.from_matrix(np.diag([0.7, 0.7]))


class TestMixture:
    def test_single_pure_state(self):
        rho = mixture([1.0], [[1, 0]])
        assert np.allclose(rho.matrix, np.diag([1, 0]))

    def test_classical_mixture(self):
        rho = mixture([0.5, 0.5], [[1, 0], [0, 1]])
        assert np.allclose(rho.matrix, np.diag([0.5, 0.5]))

    def test_non_orthogonal_states(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        rho = mixture([0.5, 0.5], [[1, 0], plus])
        assert abs(rho.matrix[0, 0] - 0.75) < 1e-14

    def test_bad_weights(self):
        with pytest.raises(errors.BadWeights):
            mixture([0.7, 0.7], [[1, 0], [0, 1]])
        with pytest.raises(errors.UnnormalizedState):
            mixture([1.0], [[1, 1]])


class TestExpectation:
    def test_maximally_mixed(self, rng):
        obs = random_hermitian(rng, 4)
        rho = DensityMatrix.maximally_mixed(4)
        assert abs(expectation(rho, obs) - np.trace(obs).real / 4) < 1e-13

    def test_eigenstate(self):
        assert expectation(DensityMatrix.pure([1, 0]), SZ) == pytest.approx(1.0)

    def test_matches_per_state_sum(self, rng):
        states = [random_state(rng, 3) for _ in range(4)]
        w = rng.random(4)
        w = w / w.sum()
        rho = mixture(w, states)
        obs = random_hermitian(rng, 3)
        ref = sum(wi * np.real(s.conj() @ obs @ s) for wi, s in zip(w, states))
        assert abs(expectation(rho, obs) - ref) < 1e-12


class TestBornCollapse:
    def test_diagonal_fixed_point(self):
        basis = ProjectorBasis.computational(2)
        rho = DensityMatrix.from_matrix(np.diag([0.3, 0.7]))
        out = born_collapse(rho, basis)
        assert np.allclose(out.matrix, rho.matrix, atol=1e-14)

    def test_plus_state_in_z_basis(self):
        rho = DensityMatrix.pure(np.array([1, 1]) / np.sqrt(2))
        out = born_collapse(rho, ProjectorBasis.computational(2))
        assert np.allclose(out.matrix, np.diag([0.5, 0.5]), atol=1e-14)

    def test_two_qubit_classes_keep_within_class_coherence(self, rng):
        # measuring only the first spin: classes {00,01} and {10,11}
        basis = ProjectorBasis.computational(4, classes=[[0, 1], [2, 3]])
        rho = random_density(rng, 4)
        out = born_collapse(rho, basis).matrix
        assert np.allclose(out[:2, :2], rho.matrix[:2, :2], atol=1e-14)
        assert np.allclose(out[2:, 2:], rho.matrix[2:, 2:], atol=1e-14)
        assert np.allclose(out[:2, 2:], 0.0, atol=1e-14)

    def test_idempotent(self, rng):
        basis = ProjectorBasis.computational(3, classes=[[0, 1], [2]])
        rho = random_density(rng, 3)
        once = born_collapse(rho, basis)
        twice = born_collapse(once, basis)
        assert np.linalg.norm(once.matrix - twice.matrix) < 1e-12

    def test_never_decreases_entropy(self, rng):
        for _ in range(10):
            rho = random_density(rng, 4)
            out = born_collapse(rho, ProjectorBasis.computational(4))
            assert vn_entropy(out) >= vn_entropy(rho) - 1e-12

    def test_probabilities_sum_to_one(self, rng):
        rho = random_density(rng, 3)
        out = born_collapse(rho, ProjectorBasis.computational(3))
        assert abs(np.trace(out.matrix) - 1) < 1e-12


class TestProjectorBasis:
    def test_incomplete_set_rejected(self):
        with pytest.raises(errors.IncompleteBasis):
            ProjectorBasis.from_vectors([[1, 0]])  # d=2 but only one projector

    def test_non_orthogonal_rejected(self):
        v = np.array([1, 1]) / np.sqrt(2)
        with pytest.raises(errors.IncompleteBasis):
            ProjectorBasis.from_vectors([[1, 0], v])

    def test_bad_class_partition_rejected(self):
        with pytest.raises(errors.IncompleteBasis):
            ProjectorBasis.computational(3, classes=[[0, 1]])

    def test_class_projectors_sum_members(self):
        basis = ProjectorBasis.computational(3, classes=[[0, 2], [1]])
        pc = basis.class_projectors()
        assert np.allclose(pc[0], np.diag([1.0, 0.0, 1.0]))
        assert np.allclose(pc[1], np.diag([0.0, 1.0, 0.0]))


class TestUnitaryStep:
    def test_zero_hamiltonian(self, rng):
        rho = random_density(rng, 3)
        out = unitary_step(rho, np.zeros((3, 3)), 0.5)
        assert np.allclose(out.matrix, rho.matrix, atol=1e-14)

    def test_half_larmor_period(self):
        w = 1.3
        plus = DensityMatrix.pure(np.array([1, 1]) / np.sqrt(2))
        out = unitary_step(plus, w * SZ / 2, np.pi / w)
        minus = np.array([1, -1]) / np.sqrt(2)
        assert np.linalg.norm(out.matrix - np.outer(minus, minus)) < 1e-12

    def test_purity_preserved(self, rng):
        rho = random_density(rng, 4)
        h = random_hermitian(rng, 4)
        out = unitary_step(rho, h, 0.7)
        assert abs(
            np.trace(out.matrix @ out.matrix) - np.trace(rho.matrix @ rho.matrix)
        ) < 1e-12

    def test_finite_difference_matches_commutator(self, rng):
        rho = random_density(rng, 3)
        h = random_hermitian(rng, 3)
        dt = 1e-5
        drho = (unitary_step(rho, h, dt).matrix - unitary_step(rho, h, -dt).matrix) / (
            2 * dt
        )
        ref = -1j * (h @ rho.matrix - rho.matrix @ h)
        assert np.linalg.norm(drho - ref) < 1e-8


class TestEntropy:
    def test_pure_state_zero(self):
        assert vn_entropy(DensityMatrix.pure([1, 0])) == 0.0

    def test_maximally_mixed(self):
        assert abs(vn_entropy(DensityMatrix.maximally_mixed(4)) - np.log(4)) < 1e-13

    def test_scalar_value(self):
        rho = DensityMatrix.from_matrix(np.diag([0.75, 0.25]))
        ref = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
        assert abs(vn_entropy(rho) - ref) < 1e-14
        assert ref == pytest.approx(0.5623, abs=1e-4)

    def test_range(self, rng):
        rho = random_density(rng, 5)
        assert 0.0 <= vn_entropy(rho) <= np.log(5) + 1e-12


class TestEntropyRate:
    def test_zero_lindblads(self, rng):
        rho = random_density(rng, 3, strictly_positive=True)
        assert entropy_rate(rho, [np.zeros((3, 3))]) == 0.0

    def test_maximally_mixed_is_stationary(self, rng):
        rho = DensityMatrix.maximally_mixed(3)
        ls = [random_hermitian(rng, 3) for _ in range(2)]
        assert abs(entropy_rate(rho, ls)) < 1e-12

    def test_matches_central_difference(self, rng):
        model = random_lindblad_model(rng, 3, hermitian_ops=True)
        rho0 = random_density(rng, 3, strictly_positive=True)
        t, eps = 0.4, 1e-5
        rho_t = evolve(model, rho0, t)
        rate = entropy_rate(rho_t, model.lindblads)
        s_plus = vn_entropy(evolve(model, rho0, t + eps))
        s_minus = vn_entropy(evolve(model, rho0, t - eps))
        assert abs(rate - (s_plus - s_minus) / (2 * eps)) < 1e-6

    def test_nonnegative_for_balanced_models(self, rng):
        for _ in range(5):
            model = random_lindblad_model(rng, 3, hermitian_ops=True)
            rho = random_density(rng, 3, strictly_positive=True)
            assert entropy_rate(rho, model.lindblads) >= -1e-12

    def test_trace_identity(self, rng):
        ls = [np.asarray(l) for l in random_lindblad_model(rng, 4).lindblads]
        lhs = sum(np.trace(l.conj().T @ l) for l in ls)
        rhs = sum(np.trace(l @ l.conj().T) for l in ls)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_singular_state_rejected(self):
        rho = DensityMatrix.pure([1, 0])
        with pytest.raises(errors.SingularState):
            entropy_rate(rho, [SM])
