"""Dense complex linear algebra: eigendecompositions (Hermitian and general,
including generalized-eigenvector chains), matrix exponential, Kronecker
products, and the vec/unvec reshaping between d x d matrices and length-d^2
vectors.

Conventions
-----------
vec is row-major: element (i, j) of a d x d matrix maps to slot i*d + j of the
vector.  With this ordering,

    vec(A @ X @ B) == kron(A, B.T) @ vec(X)

which is the identity every superoperator construction in the package relies
on.  All operations are pure functions on immutable inputs; every tolerance
below is a module-level default that callers may override per call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    IllConditioned,
    NoConvergence,
    NotHermitian,
    Overflow,
)

TOL_HERM = 1e-10
TOL_EIG = 1e-10
TOL_CLUSTER_REL = 1e-8
EXPM_NORM_BOUND = 1e6


def as_square_matrix(m) -> np.ndarray:
    """Coerce to a complex square ndarray and check the ComplexMatrix invariants."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionMismatch("matrix dimension must be at least 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def hermiticity_defect(m) -> float:
    a = np.asarray(m)
    return float(np.linalg.norm(a - a.conj().T))


def herm_eig(m, tol_herm: float = TOL_HERM):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector matrix with orthonormal
    columns).  Raises NotHermitian if the input is not Hermitian within
    ``tol_herm`` (scaled by the matrix norm), NoConvergence if LAPACK fails.
    """
    a = as_square_matrix(m)
    scale = max(1.0, float(np.linalg.norm(a)))
    if hermiticity_defect(a) > tol_herm * scale:
        raise NotHermitian(
            f"matrix is not Hermitian: defect {hermiticity_defect(a):.3e}"
        )
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return vals, vecs


def expm(m, t: float = 1.0, norm_bound: float = EXPM_NORM_BOUND) -> np.ndarray:
    """exp(t*m) by scaling-and-squaring (scipy Pade core).

    exp(0*m) is the identity exactly.  Raises Overflow if ||t*m||_1 exceeds
    ``norm_bound``; beyond that scale the double-precision result is garbage
    anyway.
    """
    a = as_square_matrix(m)
    if t == 0.0:
        return np.eye(a.shape[0], dtype=complex)
    scaled = t * a
    nrm = float(np.linalg.norm(scaled, 1))
    if nrm > norm_bound:
        raise Overflow(f"||t*m||_1 = {nrm:.3e} exceeds bound {norm_bound:.3e}")
    return scipy.linalg.expm(scaled)


def kron(a, b) -> np.ndarray:
    return np.kron(as_square_matrix(a), as_square_matrix(b))


def vec(m) -> np.ndarray:
    """Row-major vectorization: (i, j) -> slot i*d + j."""
    return as_square_matrix(m).reshape(-1)


def unvec(v, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; the exact round trip unvec(vec(m)) == m."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    if dim is None:
        dim = int(round(np.sqrt(a.size)))
    if dim * dim != a.size:
        raise DimensionMismatch(f"vector of length {a.size} is not d*d")
    return a.reshape(dim, dim)


@dataclass
class ChainSpectrum:
    """Eigenvalues with their generalized-eigenvector chains.

    ``chains[k]`` lists the chains belonging to ``eigenvalues[k]``; each chain
    is an ordered list [V_1, ..., V_p] with (A - lambda I) V_i = V_{i-1} and
    (A - lambda I) V_1 = 0.  ``rank_flags[k]`` holds, chain by chain, the
    generalized rank of every vector (1-based position in its chain).
    """

    eigenvalues: list[complex]
    multiplicities: list[int]
    chains: list[list[list[np.ndarray]]]
    rank_flags: list[list[list[int]]]

    @property
    def dim(self) -> int:
        return self.chains[0][0][0].shape[0]

    def all_vectors(self) -> np.ndarray:
        """All generalized eigenvectors as columns, grouped by eigenvalue."""
        cols = [
            v
            for per_eig in self.chains
            for chain in per_eig
            for v in chain
        ]
        return np.column_stack(cols)


def _cluster_eigenvalues(vals: np.ndarray, tol: float):
    """Group eigenvalues whose pairwise distance chains below ``tol``."""
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _null_space(mat: np.ndarray, cutoff: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``mat``."""
    _, s, vh = np.linalg.svd(mat)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def general_eig(m, tol_cluster: float | None = None) -> ChainSpectrum:
    """Full spectral data of a general square matrix, with Jordan chains.

    Eigenvalues closer than ``tol_cluster`` (default 1e-8 * ||A||) are treated
    as a single cluster; if no consistent chain structure exists for a cluster
    the function raises IllConditioned naming it rather than guessing.  For a
    diagonalizable matrix every chain has length one and the vectors within
    each eigenvalue are orthonormal.
    """
    a = as_square_matrix(m)
    d = a.shape[0]
    norm_a = float(np.linalg.norm(a, 2)) if d > 1 else float(abs(a[0, 0]))
    if tol_cluster is None:
        tol_cluster = TOL_CLUSTER_REL * max(1.0, norm_a)
    try:
        raw = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NoConvergence(str(exc)) from exc

    groups = _cluster_eigenvalues(raw, tol_cluster)
    groups.sort(key=lambda idx: (raw[idx].real.mean(), raw[idx].imag.mean()))

    eigenvalues: list[complex] = []
    multiplicities: list[int] = []
    all_chains: list[list[list[np.ndarray]]] = []
    all_flags: list[list[list[int]]] = []

    for idx in groups:
        lam = complex(np.mean(raw[idx]))
        m_alg = len(idx)
        b = a - lam * np.eye(d)
        norm_b = max(float(np.linalg.norm(b, 2)), 1e-300)

        # Null spaces of B^k until the dimension reaches the algebraic
        # multiplicity.  The rank cutoff scales with ||B||^k because powering
        # amplifies rounding noise at exactly that rate.
        null_bases = [np.zeros((d, 0))]
        dims = [0]
        bk = np.eye(d, dtype=complex)
        p = 0
        for k in range(1, m_alg + 1):
            bk = bk @ b
            cutoff = max(d * 1e-10 * norm_b**k, 1e-300)
            nb = _null_space(bk, cutoff)
            if nb.shape[1] <= dims[-1]:
                break
            null_bases.append(nb)
            dims.append(nb.shape[1])
            p = k
            if nb.shape[1] >= m_alg:
                break
        if dims[-1] != m_alg:
            raise IllConditioned(
                f"cluster at {lam:.6g} (multiplicity {m_alg}): generalized "
                f"null space stalled at dimension {dims[-1]}",
                cluster=[complex(raw[i]) for i in idx],
            )

        chains: list[list[np.ndarray]] = []
        flags: list[list[int]] = []
        if p == 1:
            # Diagonalizable cluster: the orthonormal null-space basis is the
            # chain set directly.
            for col in range(m_alg):
                chains.append([null_bases[1][:, col].copy()])
                flags.append([1])
        else:
            carry: list[np.ndarray] = []  # level-k vectors of taller chains
            tops_by_level: dict[int, list[np.ndarray]] = {}
            for k in range(p, 0, -1):
                have = len(carry)
                need = (dims[k] - dims[k - 1]) - have
                if need > 0:
                    obstruction = [null_bases[k - 1]] if k > 1 else []
                    if carry:
                        obstruction.append(np.column_stack(carry))
                    cand = null_bases[k]
                    if obstruction:
                        q = np.linalg.qr(np.column_stack(obstruction))[0]
                        cand = cand - q @ (q.conj().T @ cand)
                    u, s, _ = np.linalg.svd(cand, full_matrices=False)
                    if np.sum(s > 0.1) < need:
                        raise IllConditioned(
                            f"cluster at {lam:.6g}: cannot separate chain tops "
                            f"at level {k}",
                            cluster=[complex(raw[i]) for i in idx],
                        )
                    tops_by_level[k] = [u[:, c].copy() for c in range(need)]
                    carry = carry + tops_by_level[k]
                carry = [b @ v for v in carry]
            for k, tops in sorted(tops_by_level.items(), reverse=True):
                for top in tops:
                    chain = [top]
                    for _ in range(k - 1):
                        chain.append(b @ chain[-1])
                    chain.reverse()  # chain[0] is now the eigenvector V_1
                    nrm = np.linalg.norm(chain[0])
                    if nrm < 1e-300:
                        raise IllConditioned(
                            f"cluster at {lam:.6g}: degenerate chain",
                            cluster=[complex(raw[i]) for i in idx],
                        )
                    chains.append([v / nrm for v in chain])
                    flags.append(list(range(1, k + 1)))

        eigenvalues.append(lam)
        multiplicities.append(m_alg)
        all_chains.append(chains)
        all_flags.append(flags)

    spectrum = ChainSpectrum(eigenvalues, multiplicities, all_chains, all_flags)
    basis = spectrum.all_vectors()
    if np.linalg.matrix_rank(basis, tol=1e-8) < d:
        raise IllConditioned(
            "generalized eigenvectors do not span the space",
            cluster=eigenvalues,
        )
    return spectrum
