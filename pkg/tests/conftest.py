import numpy as np
import pytest

from lindkit import LindbladModel, MeasurementModel, ProjectorBasis, measurement_model

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SM = np.array([[0, 0], [1, 0]], dtype=complex)  # lowering |e> -> |g>


def random_hermitian(rng, d, scale=1.0):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (a + a.conj().T)


def random_matrix(rng, d, scale=1.0):
    return scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))


def random_unitary(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(rng, d, strictly_positive=False):
    from lindkit import DensityMatrix

    a = random_matrix(rng, d)
    rho = a @ a.conj().T
    if strictly_positive:
        rho = rho + 0.2 * np.eye(d)
    return DensityMatrix.from_matrix(rho / np.trace(rho).real)


def random_lindblad_model(rng, d, n_ops=2, scale=0.5, hermitian_ops=False):
    ops = []
    for _ in range(n_ops):
        l = random_matrix(rng, d, scale)
        ops.append(0.5 * (l + l.conj().T) if hermitian_ops else l)
    return LindbladModel(d, random_hermitian(rng, d), ops)


def random_measurement_model(rng, d, n_ops=2, min_gap=0.3) -> MeasurementModel:
    """Diagonal model whose coefficient columns are pairwise well separated,
    so gamma_min stays bounded away from zero."""
    basis = ProjectorBasis.from_vectors(list(random_unitary(rng, d).T))
    while True:
        l = rng.standard_normal((n_ops, d)) + 1j * rng.standard_normal((n_ops, d))
        sep = min(
            np.sum(np.abs(l[:, a] - l[:, b]) ** 2)
            for a in range(d)
            for b in range(a + 1, d)
        )
        if sep >= min_gap:
            break
    h = rng.standard_normal(d)
    return measurement_model(basis, l, h)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
