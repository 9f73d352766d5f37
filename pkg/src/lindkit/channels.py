"""Markovian kernels K(tau), their spectral/Choi structure, the complete-
positivity test, the GKS canonical form of generators, the derivative
positivity check, and generator extraction from sampled kernels.

Conventions
-----------
A kernel propagates density-matrix components,

    rho_out[i, j] = sum_{i', j'} K[(i, j), (i', j')] rho_in[i', j'],

stored as a d^2 x d^2 matrix in the row-major vec ordering of
:mod:`lindkit.matcore` (row index i*d + j, column index i'*d + j').

The alternative index pairing K_{i i', j j'} groups (output row, input row)
against (output col, input col); as a matrix that object is the *reshuffle*
of the superoperator and coincides with the Choi matrix in the convention

    C(Phi) = sum_{ij} Phi(|i><j|) (x) |i><j|.

Hermiticity preservation of the map is Hermiticity of this reshuffled matrix,
its eigenvalues are the Choi spectrum (summing to d for a trace-preserving
map), and its reshaped eigenvectors are the orthonormal operator family of
the kernel's spectral decomposition.  The stored eigen-matrices depend on
this convention; the CP verdict does not.

The fixed traceless operator basis {F_m} is the generalized Gell-Mann set,
ordered: symmetric pairs (j < k, lexicographic), then antisymmetric pairs,
then diagonal, all normalized to Tr(F_m F_n^dag) = delta_mn.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import matcore
from .errors import (
    DimensionMismatch,
    InconsistentSamples,
    NotAGenerator,
    NotHermitian,
    NotHermitianKernel,
    NotTracePreserving,
    SingularSimilarity,
    StepTooLarge,
)

TOL_KERNEL = 1e-10
TOL_GENERATOR_TRACE = 1e-8


def reshuffle(mat: np.ndarray, dim: int) -> np.ndarray:
    """Swap the inner index pairing: M[(i,j),(i',j')] <-> C[(i,i'),(j,j')].

    An involution; maps the superoperator form to the Choi/kernel-pairing
    form and back.
    """
    return (
        mat.reshape(dim, dim, dim, dim)
        .transpose(0, 2, 1, 3)
        .reshape(dim * dim, dim * dim)
    )


def trace_defect(mat: np.ndarray, dim: int) -> float:
    """How far the superoperator (a propagator) is from preserving the trace."""
    vec_i = np.eye(dim, dtype=complex).reshape(-1)
    return float(np.linalg.norm(vec_i @ mat - vec_i))


def generator_trace_defect(mat: np.ndarray, dim: int) -> float:
    """Trace condition for a *generator*: the identity must be a left null
    vector, vec(I)^T L = 0."""
    vec_i = np.eye(dim, dtype=complex).reshape(-1)
    return float(np.linalg.norm(vec_i @ mat))


@dataclass
class Kernel:
    """Markovian propagator over an elapsed time tau."""

    dim: int
    tau: float
    matrix: np.ndarray
    _tol: float = field(default=TOL_KERNEL, repr=False)

    def __post_init__(self):
        d = self.dim
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (d * d, d * d):
            raise DimensionMismatch(
                f"kernel matrix must be {d*d} x {d*d}, got {self.matrix.shape}"
            )
        c = reshuffle(self.matrix, d)
        scale = max(1.0, float(np.linalg.norm(c)))
        if np.linalg.norm(c - c.conj().T) > self._tol * scale:
            raise NotHermitianKernel(
                "kernel does not preserve Hermiticity "
                f"(defect {np.linalg.norm(c - c.conj().T):.3e})"
            )
        if trace_defect(self.matrix, d) > self._tol * d:
            raise NotTracePreserving(
                f"trace defect {trace_defect(self.matrix, d):.3e}"
            )
        if self.tau == 0.0:
            if np.linalg.norm(self.matrix - np.eye(d * d)) > self._tol * d:
                raise NotTracePreserving("K(0) must be the identity")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return matcore.unvec(self.matrix @ matcore.vec(rho), self.dim)

    def choi(self) -> np.ndarray:
        return reshuffle(self.matrix, self.dim)

    def to_json(self) -> str:
        flat = self.matrix.reshape(-1)
        return json.dumps(
            {
                "schema": "lindkit.kernel/1",
                "dim": self.dim,
                "tau": self.tau,
                "re": flat.real.tolist(),
                "im": flat.imag.tolist(),
                "vec_order": "row-major",
                "choi_convention": "sum Phi(|i><j|) x |i><j|",
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Kernel":
        doc = json.loads(text)
        if doc.get("schema") != "lindkit.kernel/1":
            raise ValueError(f"unknown kernel schema {doc.get('schema')!r}")
        d = int(doc["dim"])
        mat = (np.asarray(doc["re"]) + 1j * np.asarray(doc["im"])).reshape(
            d * d, d * d
        )
        return cls(d, float(doc["tau"]), mat)


def kernel_from_generator(generator: np.ndarray, tau: float) -> Kernel:
    """exp(tau * L) wrapped as a Kernel."""
    gen = matcore.as_square_matrix(generator)
    d = int(round(np.sqrt(gen.shape[0])))
    return Kernel(d, tau, matcore.expm(gen, tau))


@dataclass
class KernelSpectrum:
    """Real eigenvalues alpha_N with orthonormal eigen-matrices u^N,
    ordered by descending alpha."""

    alphas: np.ndarray
    u_mats: list[np.ndarray]

    def reassemble(self) -> np.ndarray:
        """Rebuild the kernel matrix sum_N alpha_N vec(u^N) vec(u^N)^dag
        (in the superoperator ordering)."""
        d = self.u_mats[0].shape[0]
        c = np.zeros((d * d, d * d), dtype=complex)
        for a, u in zip(self.alphas, self.u_mats):
            v = matcore.vec(u)
            c += a * np.outer(v, v.conj())
        return reshuffle(c, d)


def _fix_phase(u: np.ndarray) -> np.ndarray:
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    piv = flat[k]
    if abs(piv) < 1e-300:
        return u
    return u * (np.conj(piv) / abs(piv))


def _choi_eig(k: Kernel):
    c = k.choi()
    vals, vecs = np.linalg.eigh(c)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    mats = [_fix_phase(matcore.unvec(vecs[:, i], k.dim)) for i in order]
    return vals, mats


def kernel_spectrum(k: Kernel) -> KernelSpectrum:
    """Diagonalize the kernel in its Hermitian index pairing.

    The eigen-matrices satisfy sum_{ii'} u^N_{ii'} (u^M_{ii'})^* = delta_NM
    and, at tau = 0, the top eigenvalue is d with eigen-matrix I/sqrt(d) and
    the remaining d^2 - 1 eigenvalues vanish with traceless eigen-matrices.
    """
    vals, mats = _choi_eig(k)
    return KernelSpectrum(vals, mats)


@dataclass
class ChoiSpectrum:
    """Choi eigenvalues (summing to d for trace-preserving kernels) with the
    orthonormal Kraus-like operator family."""

    lambdas: np.ndarray
    kraus_like: list[np.ndarray]


def choi_cp_test(k: Kernel, tol: float | None = None):
    """Complete positivity via the Choi spectrum.

    Returns (is_cp, ChoiSpectrum); ``is_cp`` is min(lambda) >= -tol with the
    default tol = 1e-10 * d (the eigensolver noise floor of exactly-CP maps).
    """
    if tol is None:
        tol = 1e-10 * k.dim
    vals, mats = _choi_eig(k)
    return bool(vals.min() >= -tol), ChoiSpectrum(vals, mats)


def kraus_operators(spectrum: ChoiSpectrum, tol: float = 1e-12) -> list[np.ndarray]:
    """{sqrt(lambda) E} for the nonnegligible Choi eigenvalues; reproduces the
    channel action when the map is CP."""
    return [
        np.sqrt(lam) * e
        for lam, e in zip(spectrum.lambdas, spectrum.kraus_like)
        if lam > tol
    ]


# ---------------------------------------------------------------------------
# Traceless operator basis and the GKS canonical form
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gellmann_basis(dim: int) -> tuple[np.ndarray, ...]:
    """Generalized Gell-Mann matrices for dimension ``dim``.

    d^2 - 1 Hermitian traceless matrices with Tr(F_m F_n^dag) = delta_mn,
    ordered symmetric / antisymmetric / diagonal as documented in the module
    docstring.
    """
    fs: list[np.ndarray] = []
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            fs.append(m)
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            fs.append(m)
    for l in range(1, dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[np.diag_indices(l)] = 1.0
        m[l, l] = -l
        fs.append(m / np.sqrt(l * (l + 1)))
    for f in fs:
        f.flags.writeable = False
    return tuple(fs)


@dataclass
class GKSForm:
    """Generator data (H, c_mn) over the fixed Gell-Mann basis."""

    dim: int
    hamiltonian: np.ndarray
    c_matrix: np.ndarray

    def __post_init__(self):
        n = self.dim * self.dim - 1
        if self.c_matrix.shape != (n, n):
            raise DimensionMismatch(f"c matrix must be {n} x {n}")
        if matcore.hermiticity_defect(self.c_matrix) > 1e-10 * max(
            1.0, np.linalg.norm(self.c_matrix)
        ):
            raise NotHermitian("c matrix must be Hermitian")
        if matcore.hermiticity_defect(self.hamiltonian) > 1e-10 * max(
            1.0, np.linalg.norm(self.hamiltonian)
        ):
            raise NotHermitian("GKS Hamiltonian must be Hermitian")

    @property
    def basis(self) -> tuple[np.ndarray, ...]:
        return gellmann_basis(self.dim)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "lindkit.gks/1",
                "dim": self.dim,
                "basis": "gellmann:sym-antisym-diag",
                "h_re": self.hamiltonian.real.reshape(-1).tolist(),
                "h_im": self.hamiltonian.imag.reshape(-1).tolist(),
                "c_re": self.c_matrix.real.reshape(-1).tolist(),
                "c_im": self.c_matrix.imag.reshape(-1).tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GKSForm":
        doc = json.loads(text)
        if doc.get("schema") != "lindkit.gks/1":
            raise ValueError(f"unknown GKS schema {doc.get('schema')!r}")
        d = int(doc["dim"])
        n = d * d - 1
        h = (np.asarray(doc["h_re"]) + 1j * np.asarray(doc["h_im"])).reshape(d, d)
        c = (np.asarray(doc["c_re"]) + 1j * np.asarray(doc["c_im"])).reshape(n, n)
        return cls(d, h, c)


def gks_build(gks: GKSForm) -> np.ndarray:
    """Superoperator of the GKS-form generator

        L(rho) = -i[H, rho] + sum_mn c_mn (F_m rho F_n^dag
                                           - 1/2 {F_n^dag F_m, rho}).
    """
    d = gks.dim
    eye = np.eye(d)
    h = gks.hamiltonian
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    fs = gks.basis
    for m_i, fm in enumerate(fs):
        for n_i, fn in enumerate(fs):
            c = gks.c_matrix[m_i, n_i]
            if c == 0:
                continue
            anti = fn.conj().T @ fm
            out += c * (
                np.kron(fm, fn.conj())
                - 0.5 * (np.kron(anti, eye) + np.kron(eye, anti.T))
            )
    return out


def gks_project(superop: np.ndarray) -> GKSForm:
    """Project a trace- and Hermiticity-preserving generator onto (H, c_mn).

    Expands the superoperator in the orthonormal family
    {G_a (x) conj(G_b)} with G_0 = I/sqrt(d), G_m = F_m; the (m, n >= 1) block
    of the expansion is c, and the m0 column plus the 00 coefficient fits the
    Hamiltonian.  gks_build(gks_project(L)) reproduces L exactly for valid
    generators.
    """
    sop = matcore.as_square_matrix(superop)
    d = int(round(np.sqrt(sop.shape[0])))
    if d * d != sop.shape[0]:
        raise DimensionMismatch("superoperator side must be a perfect square")
    if generator_trace_defect(sop, d) > TOL_GENERATOR_TRACE:
        raise NotAGenerator(
            f"trace-preservation residual {generator_trace_defect(sop, d):.3e}"
        )
    gs = [np.eye(d, dtype=complex) / np.sqrt(d)] + list(gellmann_basis(d))
    n = d * d
    q = np.empty((n, n), dtype=complex)
    for a, ga in enumerate(gs):
        for b, gb in enumerate(gs):
            basis_el = np.kron(ga, gb.conj())
            q[a, b] = np.vdot(basis_el, sop)  # Tr(basis^dag sop)
    herm_defect = np.linalg.norm(q - q.conj().T)
    if herm_defect > 1e-8 * max(1.0, np.linalg.norm(q)):
        raise NotHermitianKernel(
            f"generator is not Hermiticity-preserving (defect {herm_defect:.3e})"
        )
    q = 0.5 * (q + q.conj().T)
    c = q[1:, 1:].copy()
    f_op = sum(q[m, 0] * gs[m] for m in range(1, n)) / np.sqrt(d)
    f_op = f_op + q[0, 0] / (2 * d) * np.eye(d)
    h = 0.5j * (f_op - f_op.conj().T)
    return GKSForm(d, h, c)


def gks_lindblad_ops(gks: GKSForm, tol: float = 1e-12) -> list[np.ndarray]:
    """Lindblad operators from the eigendecomposition of a PSD c matrix."""
    vals, vecs = np.linalg.eigh(gks.c_matrix)
    if vals.min() < -tol * max(1.0, abs(vals).max()):
        raise NotAGenerator(
            f"c matrix has negative eigenvalue {vals.min():.3e}; not a CP generator"
        )
    ops = []
    for eta, w in zip(vals, vecs.T):
        if eta > tol:
            ops.append(np.sqrt(eta) * sum(wi * f for wi, f in zip(w, gks.basis)))
    return ops


def bfr_derivative_check(
    gks: GKSForm, trials: int, seed: int = 0, max_resample: int = 50
) -> float:
    """Minimum of the derivative-positivity quadratic form over random probes.

    For each trial draws coefficients w, forms W = 1/2 sum conj(w_m) F_m,
    finds a similarity U with W^T = U^{-1} W U (via the eigenbasis of W), sets
    Phi = U and Psi^dag = U^{-1} W, and evaluates the derivative expression

        sum_mn c_mn [Tr(Psi Phi^dag F_m) Tr(Phi Psi^dag F_n^dag)
                     + Tr((Phi^dag Psi)^T F_m) Tr((Psi^dag Phi)^T F_n^dag)]

    whose value is half the quadratic form of c at w.  Returns the minimum of
    the (doubled) values, so c = identity yields ||w||^2 per trial.  For a
    PSD c the minimum stays above -1e-10; a negative c direction shows up as
    a negative minimum.  Raises SingularSimilarity if no well-conditioned
    similarity can be found after ``max_resample`` redraws.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    fs = gks.basis
    n = len(fs)
    best = np.inf
    for _ in range(trials):
        for attempt in range(max_resample + 1):
            w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            big_w = 0.5 * sum(np.conj(wi) * f for wi, f in zip(w, fs))
            try:
                _, s_mat = np.linalg.eig(big_w)
            except np.linalg.LinAlgError:
                continue
            u = s_mat @ s_mat.T
            if np.linalg.cond(u) < 1e10 and np.linalg.cond(s_mat) < 1e8:
                break
        else:
            raise SingularSimilarity(
                f"no well-conditioned similarity after {max_resample} redraws"
            )
        phi = u
        psi_dag = np.linalg.solve(u, big_w)
        psi = psi_dag.conj().T
        a_vec = np.array([np.trace(psi @ phi.conj().T @ f) for f in fs])
        b_vec = np.array([np.trace(phi @ psi_dag @ f.conj().T) for f in fs])
        e_vec = np.array([np.trace((phi.conj().T @ psi).T @ f) for f in fs])
        g_vec = np.array([np.trace((psi_dag @ phi).T @ f.conj().T) for f in fs])
        val = a_vec @ gks.c_matrix @ b_vec + e_vec @ gks.c_matrix @ g_vec
        best = min(best, 2.0 * float(val.real))
    return best


# ---------------------------------------------------------------------------
# Generator extraction and kernel construction
# ---------------------------------------------------------------------------

def extract_generator(samples, scheme: str = "central") -> np.ndarray:
    """Finite-difference estimate of the generator dK/dtau at tau = 0.

    ``samples`` is a list of (tau, Kernel) pairs with tau > 0.  The "central"
    scheme (second order) needs the pair (h, 2h) for the smallest h present
    and computes (K(2h) - I) K(h)^{-1} / (2h), i.e. the centered difference
    of K'(h) pulled back to tau = 0; "forward" (first order) uses only the
    smallest sample, (K(h) - I)/h.
    """
    if scheme not in ("central", "forward"):
        raise ValueError(f"unknown differencing scheme {scheme!r}")
    by_tau: dict[float, Kernel] = {}
    for tau, ker in samples:
        tau = float(tau)
        if tau <= 0:
            raise InconsistentSamples("sample times must be positive")
        if tau in by_tau:
            if not np.allclose(by_tau[tau].matrix, ker.matrix, atol=1e-12):
                raise InconsistentSamples(
                    f"tau = {tau} sampled twice with different kernels"
                )
            continue
        by_tau[tau] = ker
    if len(by_tau) < (2 if scheme == "central" else 1):
        raise InconsistentSamples("not enough distinct sample times")
    taus = sorted(by_tau)
    h = taus[0]
    d2 = by_tau[h].dim ** 2
    if np.linalg.norm(by_tau[h].matrix - np.eye(d2)) > 0.1:
        raise StepTooLarge(
            f"||K(h) - I|| = {np.linalg.norm(by_tau[h].matrix - np.eye(d2)):.3f} "
            "exceeds 0.1; sample closer to tau = 0"
        )
    if scheme == "forward":
        return (by_tau[h].matrix - np.eye(d2)) / h
    matches = [t for t in taus[1:] if abs(t - 2 * h) <= 1e-9 * h]
    if not matches:
        raise InconsistentSamples(
            f"central differencing needs a sample at 2h = {2*h}"
        )
    k2h = by_tau[matches[0]].matrix
    return (k2h - np.eye(d2)) @ np.linalg.inv(by_tau[h].matrix) / (2 * h)


def extract_generator_richardson(samples) -> np.ndarray:
    """Richardson extrapolation of the central scheme using steps h and 2h.

    Needs samples at (h, 2h, 4h); combines the central estimates at h and 2h
    as (4 L_h - L_2h)/3, cancelling the leading O(h^2) error term.
    """
    by_tau = {float(t): k for t, k in samples}
    taus = sorted(by_tau)
    h = taus[0]
    needed = [h, 2 * h, 4 * h]
    sel = []
    for target in needed:
        found = [t for t in taus if abs(t - target) <= 1e-9 * h]
        if not found:
            raise InconsistentSamples(
                f"Richardson extrapolation needs samples at h, 2h, 4h (missing {target})"
            )
        sel.append(found[0])
    l_h = extract_generator([(t, by_tau[t]) for t in sel[:2]], "central")
    l_2h = extract_generator([(t, by_tau[t]) for t in sel[1:]], "central")
    return (4.0 * l_h - l_2h) / 3.0


def kernel_from_unitary_ensemble(unitary_sampler, tau: float, n_samples: int) -> Kernel:
    """Monte-Carlo kernel K = < U (x) conj(U) > over a unitary ensemble.

    ``unitary_sampler(k)`` must return the k-th sample unitary; indexing by k
    keeps the average reproducible regardless of evaluation order.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    u0 = np.asarray(unitary_sampler(0), dtype=complex)
    d = u0.shape[0]
    acc = np.zeros((d * d, d * d), dtype=complex)
    for k in range(n_samples):
        u = np.asarray(unitary_sampler(k), dtype=complex) if k else u0
        acc += np.kron(u, u.conj())
    return Kernel(d, tau, acc / n_samples)
