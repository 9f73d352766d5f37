"""Density matrices, projective measurement collapse, unitary steps, and the
von Neumann entropy with its dissipative rate formula.

Entropy is in nats throughout (natural log); converting to bits is a display
concern.  Density-matrix constructors repair eigenvalues in [-tol_pos, 0) by
clipping to zero and renormalizing the trace, recording that the repair
happened -- long evolutions accumulate negativity at the 1e-13 scale and a
silent hard failure there would be useless.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import (
    BadWeights,
    IncompleteBasis,
    InvalidDensityMatrix,
    NotHermitian,
    SingularState,
    UnnormalizedState,
)

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_POS = 1e-10
TOL_POS_STRICT = 1e-12


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state.

    ``repaired`` records whether the constructor clipped small negative
    eigenvalues and renormalized.
    """

    matrix: np.ndarray
    repaired: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(
        cls,
        mat,
        tol_herm: float = TOL_HERM,
        tol_trace: float = TOL_TRACE,
        tol_pos: float = TOL_POS,
    ) -> "DensityMatrix":
        a = matcore.as_square_matrix(mat)
        scale = max(1.0, float(np.linalg.norm(a)))
        if matcore.hermiticity_defect(a) > tol_herm * scale:
            raise NotHermitian("density matrix must be Hermitian")
        a = 0.5 * (a + a.conj().T)
        tr = float(np.trace(a).real)
        if abs(tr - 1.0) > tol_trace:
            raise InvalidDensityMatrix(f"trace is {tr}, not 1")
        vals, vecs = np.linalg.eigh(a)
        if vals[0] < -tol_pos:
            raise InvalidDensityMatrix(
                f"minimum eigenvalue {vals[0]:.3e} below -{tol_pos:.0e}"
            )
        repaired = False
        if vals[0] < 0.0:
            vals = np.clip(vals, 0.0, None)
            a = (vecs * vals) @ vecs.conj().T
            a = a / float(np.trace(a).real)
            repaired = True
        return cls(a, repaired)

    @classmethod
    def pure(cls, state) -> "DensityMatrix":
        v = np.asarray(state, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-12:
            raise UnnormalizedState(f"state norm is {nrm}")
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass
class ProjectorBasis:
    """Rank-1 orthogonal projectors summing to the identity, optionally
    partitioned into equivalence classes of indistinguishable outcomes."""

    projectors: list[np.ndarray]
    classes: list[list[int]] | None = None
    _tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        d = self.projectors[0].shape[0]
        total = sum(self.projectors)
        if np.linalg.norm(total - np.eye(d)) > self._tol * d:
            raise IncompleteBasis("projectors do not sum to the identity")
        for i, p in enumerate(self.projectors):
            for j, q in enumerate(self.projectors):
                ref = p if i == j else 0.0
                if np.linalg.norm(p @ q - ref) > self._tol:
                    raise IncompleteBasis(f"projectors {i},{j} not orthogonal")
        if self.classes is not None:
            flat = sorted(i for c in self.classes for i in c)
            if flat != list(range(len(self.projectors))):
                raise IncompleteBasis("classes are not a partition of outcomes")

    @classmethod
    def from_vectors(cls, vectors, classes=None) -> "ProjectorBasis":
        projs = []
        for v in vectors:
            w = np.asarray(v, dtype=complex).reshape(-1)
            nrm = np.linalg.norm(w)
            if abs(nrm - 1.0) > 1e-12:
                raise UnnormalizedState("basis vectors must be normalized")
            projs.append(np.outer(w, w.conj()))
        return cls(projs, classes)

    @classmethod
    def computational(cls, dim: int, classes=None) -> "ProjectorBasis":
        return cls.from_vectors(list(np.eye(dim)), classes)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def class_projectors(self) -> list[np.ndarray]:
        """P_C = sum of the member projectors; the whole basis if no classes."""
        if self.classes is None:
            return [p.copy() for p in self.projectors]
        return [sum(self.projectors[i] for i in c) for c in self.classes]


def mixture(weights, states) -> DensityMatrix:
    """rho = sum_i w_i |psi_i><psi_i| for classical weights over (possibly
    non-orthogonal) normalized states."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise BadWeights(f"weights must be nonnegative and sum to 1, got sum {w.sum()}")
    if len(w) != len(states):
        raise BadWeights("one weight per state required")
    d = np.asarray(states[0]).size
    rho = np.zeros((d, d), dtype=complex)
    for wi, s in zip(w, states):
        v = np.asarray(s, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise UnnormalizedState("mixture states must be normalized")
        rho += wi * np.outer(v, v.conj())
    return DensityMatrix.from_matrix(rho)


def expectation(rho: DensityMatrix, obs) -> float:
    """Tr(obs * rho) for a Hermitian observable; the (tiny) imaginary part of
    the trace is discarded."""
    a = matcore.as_square_matrix(obs)
    if matcore.hermiticity_defect(a) > TOL_HERM * max(1.0, np.linalg.norm(a)):
        raise NotHermitian("observable must be Hermitian")
    return float(np.trace(a @ rho.matrix).real)


def born_collapse(rho: DensityMatrix, basis: ProjectorBasis) -> DensityMatrix:
    """Projective collapse: sum_m P_m rho P_m, or sum_C P_C rho P_C when the
    basis carries outcome classes (incomplete measurement)."""
    if basis.dim != rho.dim:
        raise IncompleteBasis(
            f"basis dimension {basis.dim} does not match state dimension {rho.dim}"
        )
    out = np.zeros_like(rho.matrix)
    for p in basis.class_projectors():
        out += p @ rho.matrix @ p
    return DensityMatrix.from_matrix(out)


def unitary_step(rho: DensityMatrix, h, dt: float) -> DensityMatrix:
    """rho -> U rho U^dag with U = exp(-i h dt)."""
    a = matcore.as_square_matrix(h)
    if matcore.hermiticity_defect(a) > TOL_HERM * max(1.0, np.linalg.norm(a)):
        raise NotHermitian("Hamiltonian must be Hermitian")
    u = matcore.expm(-1j * a, dt)
    return DensityMatrix.from_matrix(u @ rho.matrix @ u.conj().T)


def vn_entropy(rho: DensityMatrix) -> float:
    """von Neumann entropy -sum p ln p in nats, with 0 ln 0 := 0."""
    p = rho.eigenvalues()
    p = p[p > 0.0]
    s = float(-np.sum(p * np.log(p)))
    return max(s, 0.0)


def entropy_rate(rho: DensityMatrix, lindblads) -> float:
    """dS/dt along the dissipative flow, evaluated in the eigenbasis of rho.

    Returns sum_{ij,a} |(L_a)_{ij}|^2 p_j (ln p_j - ln p_i); the Hamiltonian
    contribution vanishes identically.  Requires a strictly positive state --
    the p -> 0 limit of the formula is delicate, so regularizing is the
    caller's decision, not ours.
    """
    p, v = np.linalg.eigh(rho.matrix)
    if p.min() <= TOL_POS_STRICT:
        raise SingularState(
            f"entropy rate needs all eigenvalues > {TOL_POS_STRICT:.0e}, "
            f"got minimum {p.min():.3e}"
        )
    lnp = np.log(p)
    rate = 0.0
    for l in lindblads:
        lt = v.conj().T @ matcore.as_square_matrix(l) @ v
        w = np.abs(lt) ** 2
        rate += float(np.sum(w.sum(axis=0) * p * lnp) - lnp @ w @ p)
    return rate
