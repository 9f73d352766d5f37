"""Lindblad generators: superoperator construction, spectral analysis,
evolution, measurement-form (diagonal) models, decay-rate matrices, and the
Born-rule asymptotics check.

The central objects are LindbladModel (Hamiltonian plus jump operators) and
MeasurementModel, the diagonal family L_a = sum_alpha l_{a,alpha} P_alpha,
H = sum_alpha h_alpha P_alpha over a rank-1 projector basis.  Measurement
models are the only constructor that guarantees the hypotheses of the
Born-rule limit; general models get the asymptotic checks gated by the
balanced predicate ||sum_a (L_a^dag L_a - L_a L_a^dag)|| = 0.

Evolution goes through exp(t L) on the vectorized state rather than the
modal sum, which sidesteps non-diagonalizable generators; the modal sum is
exercised only in tests on diagonalizable fixtures.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import (
    DimensionMismatch,
    NotBalanced,
    NotDiagonalFamily,
    NotHermitianH,
)
from .matcore import ChainSpectrum
from .quantum import DensityMatrix, ProjectorBasis, born_collapse

BALANCE_TOL = 1e-10
STATIONARY_TOL_REL = 1e-9


@dataclass
class LindbladModel:
    """Hamiltonian (angular frequency, hbar = 1) plus Lindblad operators
    (square-root-of-rate units)."""

    dim: int
    hamiltonian: np.ndarray
    lindblads: list[np.ndarray]

    def __post_init__(self):
        h = matcore.as_square_matrix(self.hamiltonian)
        if h.shape[0] != self.dim:
            raise DimensionMismatch("Hamiltonian dimension mismatch")
        if matcore.hermiticity_defect(h) > 1e-10 * max(1.0, np.linalg.norm(h)):
            raise NotHermitianH("model Hamiltonian must be Hermitian")
        self.hamiltonian = h
        ops = []
        for l in self.lindblads:
            lm = matcore.as_square_matrix(l)
            if lm.shape[0] != self.dim:
                raise DimensionMismatch("Lindblad operator dimension mismatch")
            ops.append(lm)
        self.lindblads = ops

    def balance_defect(self) -> float:
        """||sum_a (L_a^dag L_a - L_a L_a^dag)|| (Frobenius)."""
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for l in self.lindblads:
            acc += l.conj().T @ l - l @ l.conj().T
        return float(np.linalg.norm(acc))

    @property
    def balanced(self) -> bool:
        return self.balance_defect() <= BALANCE_TOL

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "lindkit.model/1",
                "dim": self.dim,
                "h_re": self.hamiltonian.real.reshape(-1).tolist(),
                "h_im": self.hamiltonian.imag.reshape(-1).tolist(),
                "lindblads": [
                    {
                        "re": l.real.reshape(-1).tolist(),
                        "im": l.imag.reshape(-1).tolist(),
                    }
                    for l in self.lindblads
                ],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "LindbladModel":
        doc = json.loads(text)
        if doc.get("schema") != "lindkit.model/1":
            raise ValueError(f"unknown model schema {doc.get('schema')!r}")
        d = int(doc["dim"])
        h = (np.asarray(doc["h_re"]) + 1j * np.asarray(doc["h_im"])).reshape(d, d)
        ls = [
            (np.asarray(entry["re"]) + 1j * np.asarray(entry["im"])).reshape(d, d)
            for entry in doc["lindblads"]
        ]
        return cls(d, h, ls)


def build_superoperator(model: LindbladModel) -> np.ndarray:
    """d^2 x d^2 matrix of L(rho) = -i[H, rho] + sum_a (L rho L^dag
    - 1/2 {L^dag L, rho}) in the row-major vec ordering."""
    d = model.dim
    eye = np.eye(d)
    h = model.hamiltonian
    sop = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for l in model.lindblads:
        ll = l.conj().T @ l
        sop += np.kron(l, l.conj()) - 0.5 * (np.kron(ll, eye) + np.kron(eye, ll.T))
    return sop


def apply_generator(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """Direct evaluation, used as the oracle for build_superoperator."""
    h = model.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for l in model.lindblads:
        ll = l.conj().T @ l
        out += l @ rho @ l.conj().T - 0.5 * (ll @ rho + rho @ ll)
    return out


@dataclass
class SuperopSpectrum:
    """Spectral data of the generator, stored with the decay-rate sign
    convention L rho_n = -mu_n rho_n: decaying modes have Re mu > 0."""

    mus: np.ndarray                 # one entry per chain (per mode)
    modes: list[np.ndarray]         # reshaped eigenvectors (chain heads)
    classifications: list[str]      # decaying | stationary | forbidden
    chains: ChainSpectrum
    tol: float

    def stationary_modes(self) -> list[np.ndarray]:
        return [
            m
            for m, c in zip(self.modes, self.classifications)
            if c == "stationary"
        ]


def spectrum(model: LindbladModel, tol: float | None = None) -> SuperopSpectrum:
    """Eigenvalues and modes of the generator.

    Classification: Re mu > tol decaying, |Re mu| <= tol stationary (this
    bucket includes purely oscillatory coherences), Re mu < -tol forbidden.
    A balanced model must produce no forbidden modes, and every generator has
    at least one mu = 0 mode.
    """
    sop = build_superoperator(model)
    if tol is None:
        tol = STATIONARY_TOL_REL * max(1.0, float(np.linalg.norm(sop, 2)))
    chains = matcore.general_eig(sop)
    mus = []
    modes = []
    classes = []
    for lam, per_eig in zip(chains.eigenvalues, chains.chains):
        mu = -lam
        for chain in per_eig:
            mus.append(mu)
            modes.append(matcore.unvec(chain[0], model.dim))
            if mu.real > tol:
                classes.append("decaying")
            elif mu.real >= -tol:
                classes.append("stationary")
            else:
                classes.append("forbidden")
    return SuperopSpectrum(np.asarray(mus), modes, classes, chains, tol)


def evolve(model: LindbladModel, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """rho(t) = unvec(exp(t L) vec(rho0)), with the clip-and-renormalize
    repair policy of DensityMatrix applied to the output."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    if t == 0.0:
        return DensityMatrix(rho0.matrix.copy(), rho0.repaired)
    sop = build_superoperator(model)
    out = matcore.unvec(matcore.expm(sop, t) @ matcore.vec(rho0.matrix), model.dim)
    return DensityMatrix.from_matrix(out)


@dataclass
class MeasurementModel(LindbladModel):
    """Diagonal family over a projector basis; the constructor that makes the
    Born-rule hypotheses hold automatically."""

    basis: ProjectorBasis = None
    l_coeffs: np.ndarray = None     # (n_ops, d) complex
    h_coeffs: np.ndarray = None     # (d,) real


def measurement_model(basis: ProjectorBasis, l_coeffs, h_coeffs) -> MeasurementModel:
    """L_a = sum_alpha l[a, alpha] P_alpha and H = sum_alpha h_alpha P_alpha.

    Diagonal operators commute, so the result is balanced by construction and
    [L_a, P_beta] = 0 for every a, beta.
    """
    l = np.atleast_2d(np.asarray(l_coeffs, dtype=complex))
    h = np.asarray(h_coeffs, dtype=float)
    d = basis.dim
    if l.shape[1] != len(basis.projectors) or h.shape != (len(basis.projectors),):
        raise DimensionMismatch(
            "need one l coefficient per operator per projector and one real h "
            "per projector"
        )
    ham = sum(hi * p for hi, p in zip(h, basis.projectors))
    ops = [
        sum(l[a, i] * p for i, p in enumerate(basis.projectors))
        for a in range(l.shape[0])
    ]
    return MeasurementModel(d, ham, ops, basis=basis, l_coeffs=l, h_coeffs=h)


@dataclass
class DecayMatrix:
    """Pairwise decay rates lambda_{alpha beta} of a diagonal model, and the
    energy-phase-free variant lambda-tilde used by the Ramsey analysis."""

    basis: ProjectorBasis
    l_coeffs: np.ndarray
    h_coeffs: np.ndarray
    lambdas: np.ndarray        # lambda_{alpha beta}, zero on the diagonal
    lambdas_tilde: np.ndarray  # same with the h (energy) phases removed

    def classes(self, tol: float = 1e-10) -> list[list[int]]:
        """Partition of outcomes into groups with identical coefficients
        (|lambda_{alpha beta}| <= tol), i.e. coherence-preserving classes."""
        n = self.lambdas.shape[0]
        seen = [False] * n
        out = []
        for i in range(n):
            if seen[i]:
                continue
            grp = [i]
            seen[i] = True
            for j in range(i + 1, n):
                if not seen[j] and abs(self.lambdas[i, j]) <= tol:
                    grp.append(j)
                    seen[j] = True
            out.append(grp)
        return out

    def gamma_min(self, tol: float = 1e-10) -> float:
        """Smallest nonzero decay rate Re lambda across distinct classes."""
        classes = self.classes(tol)
        label = {}
        for k, grp in enumerate(classes):
            for i in grp:
                label[i] = k
        n = self.lambdas.shape[0]
        rates = [
            self.lambdas[i, j].real
            for i in range(n)
            for j in range(n)
            if label[i] != label[j]
        ]
        if not rates:
            return 0.0
        return float(min(rates))


def decay_matrix(model: MeasurementModel) -> DecayMatrix:
    """lambda_{alpha beta} = 1/2 sum_a |l_{a alpha} - l_{a beta}|^2
    - i Im sum_a l_{a alpha} l*_{a beta} + i (h_alpha - h_beta)."""
    if not isinstance(model, MeasurementModel) or model.l_coeffs is None:
        raise NotDiagonalFamily(
            "decay_matrix needs a model built by measurement_model"
        )
    l = model.l_coeffs
    h = model.h_coeffs
    n = l.shape[1]
    lam = np.zeros((n, n), dtype=complex)
    lam_t = np.zeros((n, n), dtype=complex)
    for a_ in range(n):
        for b_ in range(n):
            if a_ == b_:
                continue
            diff = 0.5 * np.sum(np.abs(l[:, a_] - l[:, b_]) ** 2)
            cross = np.sum(l[:, a_] * np.conj(l[:, b_]))
            lam_t[a_, b_] = diff - 1j * cross.imag
            lam[a_, b_] = lam_t[a_, b_] + 1j * (h[a_] - h[b_])
    return DecayMatrix(model.basis, l, h, lam, lam_t)


def diagonal_solution(dm: DecayMatrix, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """Closed form rho(t) = sum_{alpha beta} P_alpha rho0 P_beta
    e^{-lambda_{alpha beta} t} for diagonal models."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    projs = dm.basis.projectors
    out = np.zeros_like(rho0.matrix)
    decay = np.exp(-dm.lambdas * t)
    for a_, pa in enumerate(projs):
        for b_, pb in enumerate(projs):
            out += decay[a_, b_] * (pa @ rho0.matrix @ pb)
    return DensityMatrix.from_matrix(out)


def born_limit_check(
    model: LindbladModel,
    rho0: DensityMatrix,
    horizon: float,
    tol: float,
    class_tol: float = 1e-10,
):
    """Does evolve() reach the Born-rule fixed point by ``horizon``?

    Returns (converged, residual) with residual the Frobenius distance from
    the collapsed state (class projection when the coefficient pattern makes
    outcomes indistinguishable).  The theory bounds the residual by
    ||rho0|| e^{-gamma_min * horizon}.  Raises NotBalanced when the model
    fails the balanced condition the theorem needs, NotDiagonalFamily when it
    is balanced but not of measurement form.
    """
    if not model.balanced:
        raise NotBalanced(
            f"balance defect {model.balance_defect():.3e} exceeds {BALANCE_TOL}"
        )
    if not isinstance(model, MeasurementModel) or model.l_coeffs is None:
        raise NotDiagonalFamily("born_limit_check needs a measurement model")
    dm = decay_matrix(model)
    classes = dm.classes(class_tol)
    basis = ProjectorBasis(
        [p.copy() for p in model.basis.projectors],
        classes if any(len(c) > 1 for c in classes) else None,
    )
    target = born_collapse(rho0, basis)
    reached = evolve(model, rho0, horizon)
    residual = float(np.linalg.norm(reached.matrix - target.matrix))
    return residual <= tol, residual
