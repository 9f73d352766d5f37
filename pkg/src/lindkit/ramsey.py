"""Ramsey interferometer for a driven two-level system.

Basis ordering is (e, g) everywhere, matching the index order of the slowly
varying coefficient matrix f_ee, f_eg, f_gg.  The interaction-picture RWA
equations for a monochromatic drive -U e^{-i w t} - U^dag e^{i w t} are

    i f_ee' =  conj(U) f_eg e^{+i dw t} - U f_ge e^{-i dw t}
    i f_gg' = -conj(U) f_eg e^{+i dw t} + U f_ge e^{-i dw t}
    i f_eg' =  U (f_ee - f_gg) e^{-i dw t}

with detuning dw = omega - (E_e - E_g) and f_ge = conj(f_eg).  In the frame
g = f_eg e^{i dw t} the system is an exact precession of the Bloch vector
(2 Re g~, 2 Im g~, f_ee - f_gg) about the axis (2|U|, 0, dw) at angular rate
2*Omega, Omega^2 = dw^2/4 + |U|^2; pulse_closed_form evaluates that rotation
directly (Rodrigues formula), which is the general closed-form solution and
degrades gracefully to the identity in the Omega -> 0 limit (a removable
singularity: zero drive on resonance means nothing moves).

The three-segment protocol is pulse(tau) -> free flight(T) -> pulse(tau) from
the ground state.  In the standard theory f is constant during free flight;
in a linearly modified theory the coherence picks up e^{-lambda_tilde T}
(conjugate factor on f_ge, populations untouched).  Because the composed
excited-state fraction is exactly a single damped fringe in T,

    Pb_e(T) = A + e^{-Re(lt) T} [P cos(nu T) + Q sin(nu T)],
    nu = dw - Im(lt),

its Gaussian transit-time average has an exact closed form; the quadrature
path integrates the same product numerically as a cross-check.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureFailure, StepTooLarge

RWA_DT_MAX = 1e-2      # rwa_ode requires dt <= RWA_DT_MAX / Omega
FULL_DT_MAX = 0.05     # full_ode requires dt <= FULL_DT_MAX / omega


@dataclass
class RamseyConfig:
    """Drive and protocol parameters (rad/time units, hbar = 1)."""

    e_g: float
    e_e: float
    u_eg: complex
    omega: float
    tau: float
    t_free: float
    t0: float
    sigma: float
    lambda_tilde_eg: complex = 0.0

    def __post_init__(self):
        if not self.e_e > self.e_g:
            raise ValueError("need E_e > E_g")
        for name in ("tau", "t_free", "t0", "sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if complex(self.lambda_tilde_eg).real < 0:
            raise ValueError("Re(lambda_tilde_eg) must be nonnegative")
        self.u_eg = complex(self.u_eg)
        self.lambda_tilde_eg = complex(self.lambda_tilde_eg)

    def with_detuning(self, delta_omega: float) -> "RamseyConfig":
        return replace(self, omega=self.e_e - self.e_g + delta_omega)

    def to_dict(self) -> dict:
        return {
            "e_g": self.e_g,
            "e_e": self.e_e,
            "u_eg_re": self.u_eg.real,
            "u_eg_im": self.u_eg.imag,
            "omega": self.omega,
            "tau": self.tau,
            "t_free": self.t_free,
            "t0": self.t0,
            "sigma": self.sigma,
            "lambda_tilde_re": self.lambda_tilde_eg.real,
            "lambda_tilde_im": self.lambda_tilde_eg.imag,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RamseyConfig":
        return cls(
            e_g=float(doc["e_g"]),
            e_e=float(doc["e_e"]),
            u_eg=complex(float(doc["u_eg_re"]), float(doc.get("u_eg_im", 0.0))),
            omega=float(doc["omega"]),
            tau=float(doc["tau"]),
            t_free=float(doc["t_free"]),
            t0=float(doc["t0"]),
            sigma=float(doc["sigma"]),
            lambda_tilde_eg=complex(
                float(doc.get("lambda_tilde_re", 0.0)),
                float(doc.get("lambda_tilde_im", 0.0)),
            ),
        )


@dataclass
class RamseyDerived:
    delta_omega: float
    big_omega: float


def derive(config: RamseyConfig) -> RamseyDerived:
    """Detuning dw = omega - (E_e - E_g) and generalized Rabi frequency
    Omega = sqrt(dw^2/4 + |U|^2)."""
    dw = config.omega - (config.e_e - config.e_g)
    return RamseyDerived(dw, float(np.sqrt(dw * dw / 4 + abs(config.u_eg) ** 2)))


@dataclass
class CoefficientMatrix:
    """Hermitian 2x2 slowly-varying coefficient matrix over (e, g)."""

    f: np.ndarray
    _tol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        if f.shape != (2, 2):
            raise ValueError("coefficient matrix must be 2x2")
        if abs(f[0, 1] - np.conj(f[1, 0])) > self._tol:
            raise ValueError("coefficient matrix must be Hermitian")
        if abs(f[0, 0].real + f[1, 1].real - 1.0) > 1e-10:
            raise ValueError("coefficient matrix must have unit trace")
        for p in (f[0, 0], f[1, 1]):
            if abs(p.imag) > self._tol or p.real < -1e-10 or p.real > 1 + 1e-10:
                raise ValueError("populations must be real in [0, 1]")
        self.f = f

    @classmethod
    def ground(cls) -> "CoefficientMatrix":
        return cls(np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex))

    @classmethod
    def from_components(cls, f_ee: float, f_eg: complex) -> "CoefficientMatrix":
        return cls(
            np.array([[f_ee, f_eg], [np.conj(f_eg), 1.0 - f_ee]], dtype=complex)
        )

    @property
    def f_ee(self) -> float:
        return float(self.f[0, 0].real)

    @property
    def f_gg(self) -> float:
        return float(self.f[1, 1].real)

    @property
    def f_eg(self) -> complex:
        return complex(self.f[0, 1])


def _pulse_raw(f_ee, f_eg, tau, derived, u_eg, t_start):
    """Rodrigues rotation on raw coefficient values, no physicality checks
    (the transit-average continuation visits transiently unphysical points
    whose Gaussian weight is negligible)."""
    dw = derived.delta_omega
    u = abs(u_eg)
    big_om = derived.big_omega
    if big_om == 0.0 or tau == 0.0:
        return f_ee, f_eg
    phi = np.angle(u_eg) if u > 0 else 0.0
    g = f_eg * np.exp(1j * dw * t_start) * np.exp(-1j * phi)
    bloch = np.array([2 * g.real, 2 * g.imag, 2 * f_ee - 1.0])
    axis = np.array([2 * u, 0.0, dw]) / (2 * big_om)
    theta = 2 * big_om * tau
    c, s = np.cos(theta), np.sin(theta)
    rotated = (
        bloch * c
        + np.cross(axis, bloch) * s
        + axis * np.dot(axis, bloch) * (1 - c)
    )
    g_out = (rotated[0] + 1j * rotated[1]) / 2
    f_ee_out = (1.0 + rotated[2]) / 2
    f_eg_out = g_out * np.exp(1j * phi) * np.exp(-1j * dw * (t_start + tau))
    return f_ee_out, f_eg_out


def pulse_closed_form(
    f_init: CoefficientMatrix,
    tau: float,
    derived: RamseyDerived,
    u_eg: complex,
    t_start: float = 0.0,
) -> CoefficientMatrix:
    """Exact RWA pulse solution over [t_start, t_start + tau].

    The start time matters because the lab-frame coefficients carry the
    explicit e^{+-i dw t} drive phases; fitting the general solution to the
    boundary at t_start is what produces the Ramsey fringe when segments are
    composed.  Reduces to the textbook ground-state pulse formulas when
    f_init is the ground state at t_start = 0.
    """
    if derived.big_omega == 0.0 or tau == 0.0:
        return CoefficientMatrix(f_init.f.copy())
    f_ee, f_eg = _pulse_raw(
        f_init.f_ee, f_init.f_eg, tau, derived, u_eg, t_start
    )
    return CoefficientMatrix.from_components(f_ee, f_eg)


def _rwa_rhs(t, fee, fgg, feg, u_eg, dw):
    ep = np.exp(1j * dw * t)
    fge = np.conj(feg)
    dee = -1j * (np.conj(u_eg) * feg * ep - u_eg * fge / ep)
    dgg = -1j * (-np.conj(u_eg) * feg * ep + u_eg * fge / ep)
    deg = -1j * (u_eg * (fee - fgg) / ep)
    return dee, dgg, deg


def rwa_ode(
    f_init: CoefficientMatrix,
    tau: float,
    derived: RamseyDerived,
    u_eg: complex,
    dt: float,
    t_start: float = 0.0,
) -> CoefficientMatrix:
    """Fixed-step RK4 integration of the RWA system; the independent oracle
    for pulse_closed_form."""
    big_om = derived.big_omega
    if big_om > 0 and dt > RWA_DT_MAX / big_om:
        raise StepTooLarge(f"dt must be <= {RWA_DT_MAX / big_om:.3e}")
    dw = derived.delta_omega
    n = max(1, int(np.ceil(tau / dt)))
    h = tau / n
    t = t_start
    fee, fgg, feg = complex(f_init.f_ee), complex(f_init.f_gg), f_init.f_eg
    for _ in range(n):
        k1 = _rwa_rhs(t, fee, fgg, feg, u_eg, dw)
        k2 = _rwa_rhs(
            t + h / 2, fee + h / 2 * k1[0], fgg + h / 2 * k1[1], feg + h / 2 * k1[2],
            u_eg, dw,
        )
        k3 = _rwa_rhs(
            t + h / 2, fee + h / 2 * k2[0], fgg + h / 2 * k2[1], feg + h / 2 * k2[2],
            u_eg, dw,
        )
        k4 = _rwa_rhs(
            t + h, fee + h * k3[0], fgg + h * k3[1], feg + h * k3[2], u_eg, dw
        )
        fee += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        fgg += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        feg += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        t += h
    return CoefficientMatrix.from_components(fee.real, feg)


def full_ode(energies, u_matrix, omega: float, t_span, dt: float):
    """Integrate the exact interaction-picture equations, counter-rotating
    terms included: f' = -i [H_I(t), f] with
    H_I(t) = D(t) (-U e^{-i w t} - U^dag e^{i w t}) D(t)^dag,
    D(t) = diag(e^{i E_m t}).

    ``energies`` are the stable-basis energies E_m (for the two-level case
    use (E_e, E_g) to keep the (e, g) ordering).  Returns (times, f_stack)
    where f_stack[k] is the coefficient matrix at times[k].
    """
    e = np.asarray(energies, dtype=float)
    u = np.asarray(u_matrix, dtype=complex)
    d = e.size
    if u.shape != (d, d):
        raise ValueError("drive matrix shape must match the energy count")
    if dt > FULL_DT_MAX / abs(omega):
        raise StepTooLarge(f"dt must be <= {FULL_DT_MAX / abs(omega):.3e}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    n = max(1, int(np.ceil((t1 - t0) / dt)))
    h = (t1 - t0) / n

    def rhs(t, f):
        ph = np.exp(1j * e * t)
        hp = -u * np.exp(-1j * omega * t) - u.conj().T * np.exp(1j * omega * t)
        hi = (ph[:, None] * hp) * ph.conj()[None, :]
        return -1j * (hi @ f - f @ hi)

    f = np.zeros((d, d), dtype=complex)
    f[-1, -1] = 1.0  # ground state occupies the last basis slot
    times = np.empty(n + 1)
    traj = np.empty((n + 1, d, d), dtype=complex)
    times[0] = t0
    traj[0] = f
    t = t0
    for k in range(n):
        k1 = rhs(t, f)
        k2 = rhs(t + h / 2, f + h / 2 * k1)
        k3 = rhs(t + h / 2, f + h / 2 * k2)
        k4 = rhs(t + h, f + h * k3)
        f = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        times[k + 1] = t
        traj[k + 1] = f
    return times, traj


def free_flight(
    f_after_pulse: CoefficientMatrix,
    t_flight: float,
    lambda_tilde_eg: complex,
    theory: str,
) -> CoefficientMatrix:
    """Segment 2.  Standard theory: f unchanged.  Modified theory: the
    coherence decays/rotates by e^{-lambda_tilde T} (conjugate factor on
    f_ge), populations untouched."""
    if theory not in ("standard", "modified"):
        raise ValueError(f"unknown theory {theory!r}")
    if t_flight < 0:
        raise ValueError("flight time must be nonnegative")
    if theory == "standard":
        return CoefficientMatrix(f_after_pulse.f.copy())
    factor = np.exp(-complex(lambda_tilde_eg) * t_flight)
    return CoefficientMatrix.from_components(
        f_after_pulse.f_ee, f_after_pulse.f_eg * factor
    )


def _protocol_at(config: RamseyConfig, theory: str, t_flight: float) -> float:
    """Composed fraction at an arbitrary flight time.

    Accepts negative t_flight as the analytic continuation of the fringe so
    the Gaussian transit average can follow the full-real-line integral the
    closed form corresponds to; the public protocol() keeps the physical
    T >= 0 gate.
    """
    der = derive(config)
    f_ee, f_eg = _pulse_raw(0.0, 0.0 + 0.0j, config.tau, der, config.u_eg, 0.0)
    if theory == "modified":
        f_eg = f_eg * np.exp(-complex(config.lambda_tilde_eg) * t_flight)
    elif theory != "standard":
        raise ValueError(f"unknown theory {theory!r}")
    f_ee, _ = _pulse_raw(
        f_ee, f_eg, config.tau, der, config.u_eg, config.tau + t_flight
    )
    return float(f_ee)


def protocol(config: RamseyConfig, theory: str = "standard") -> float:
    """Excited-state probability after pulse -> free flight (t_free) -> pulse
    from the ground state, with equal pulse durations."""
    return _protocol_at(config, theory, config.t_free)


def fringe_decomposition(config: RamseyConfig, theory: str):
    """Exact constants (A, P, Q, gamma, nu) of the composed fringe
    Pb_e(T) = A + e^{-gamma T} [P cos(nu T) + Q sin(nu T)].

    The flight segment only multiplies the boundary coherence by
    e^{(i dw - lambda_tilde) T} = e^{(-gamma + i nu) T} in the rotating frame
    while the populations stay fixed, and the second pulse is a fixed Bloch
    rotation, so the final f_ee is an affine function of that rotating
    coherence: a single damped fringe.  The constants come straight from the
    bottom row of the pulse rotation applied to the first-pulse output.
    """
    lam = config.lambda_tilde_eg if theory == "modified" else 0.0 + 0.0j
    der = derive(config)
    dw, big_om = der.delta_omega, der.big_omega
    u = abs(config.u_eg)
    gamma = lam.real
    nu = dw - lam.imag
    f1 = pulse_closed_form(CoefficientMatrix.ground(), config.tau, der, config.u_eg)
    z_b = f1.f_ee - f1.f_gg
    if big_om == 0.0 or config.tau == 0.0:
        r_zx, r_zy, r_zz = 0.0, 0.0, 1.0
    else:
        n_x, n_z = u / big_om, dw / (2 * big_om)
        theta = 2 * big_om * config.tau
        c, s = np.cos(theta), np.sin(theta)
        r_zx = (1 - c) * n_z * n_x
        r_zy = s * n_x
        r_zz = c + (1 - c) * n_z * n_z
    phi = np.angle(config.u_eg) if u > 0 else 0.0
    g1 = f1.f_eg * np.exp(1j * dw * config.tau) * np.exp(-1j * phi)
    a_coef = (1.0 + r_zz * z_b) / 2.0
    p_coef = r_zx * g1.real + r_zy * g1.imag
    q_coef = -r_zx * g1.imag + r_zy * g1.real
    return float(a_coef), float(p_coef), float(q_coef), gamma, nu


def gaussian_fraction(
    config: RamseyConfig,
    theory: str = "standard",
    method: str = "analytic",
    truncate: bool = False,
) -> float:
    """Fraction of excited atoms averaged over the Gaussian transit-time
    distribution P(T) = exp(-(T - T0)^2 / sigma^2) / sqrt(pi sigma^2).

    "analytic" evaluates the exact closed form of the fringe integral over
    the full real line; "quadrature" integrates P(T) * Pb_e(T) numerically
    and serves as the independent check.  ``truncate`` switches to the
    physical variant that clips T < 0, renormalizes the weight, and warns;
    this only applies to the quadrature path (the untruncated integral is
    the documented default).
    """
    sig = config.sigma
    if sig == 0.0:
        # delta-function transit distribution, truncated or not
        return _protocol_at(config, theory, config.t0)
    if method == "analytic" and not truncate:
        a_coef, p_coef, q_coef, gamma, nu = fringe_decomposition(config, theory)
        env = np.exp(-gamma * (config.t0 - gamma * sig**2 / 4)) * np.exp(
            -(nu**2) * sig**2 / 4
        )
        t_shift = config.t0 - gamma * sig**2 / 2
        return float(
            a_coef + env * (p_coef * np.cos(nu * t_shift) + q_coef * np.sin(nu * t_shift))
        )
    if method not in ("analytic", "quadrature"):
        raise ValueError(f"unknown method {method!r}")

    gamma = config.lambda_tilde_eg.real if theory == "modified" else 0.0
    center = config.t0 - gamma * sig**2 / 2  # effective center of the damped term
    lo = min(config.t0, center) - 10 * sig
    hi = max(config.t0, center) + 10 * sig
    norm = 1.0
    if truncate:
        lo_phys = max(config.t0 - 8 * sig, 0.0)
        hi_phys = config.t0 + 8 * sig
        if config.t0 - 8 * sig < 0.0:
            warnings.warn(
                "transit-time window clipped at T = 0; weight renormalized",
                stacklevel=2,
            )
        lo, hi = lo_phys, hi_phys
        norm, _ = quad(
            lambda t: np.exp(-((t - config.t0) ** 2) / sig**2)
            / np.sqrt(np.pi * sig**2),
            lo,
            hi,
        )

    def integrand(t):
        w = np.exp(-((t - config.t0) ** 2) / sig**2) / np.sqrt(np.pi * sig**2)
        return w * _protocol_at(config, theory, t)

    try:
        val, err = quad(integrand, lo, hi, limit=500, epsabs=1e-12, epsrel=1e-12)
    except Exception as exc:  # pragma: no cover - scipy failure path
        raise QuadratureFailure(str(exc)) from exc
    if not np.isfinite(val) or err > 1e-6:
        raise QuadratureFailure(f"quadrature error estimate {err:.3e}")
    return float(val / norm)


# ---------------------------------------------------------------------------
# Regime reference formulas (valid for |U_eg| >> |delta omega|)
# ---------------------------------------------------------------------------

def pb_e_formula(config: RamseyConfig, theory: str = "standard") -> float:
    """Single-shot fringe formula 1/2 sin^2(2 Omega tau) [1 + e^{-Re(lt) T}
    cos((dw - Im(lt)) T)]; exact only in the strong-drive regime."""
    der = derive(config)
    pref = 0.5 * np.sin(2 * der.big_omega * config.tau) ** 2
    lam = config.lambda_tilde_eg if theory == "modified" else 0.0 + 0.0j
    nu = der.delta_omega - lam.imag
    return float(
        pref * (1.0 + np.exp(-lam.real * config.t_free) * np.cos(nu * config.t_free))
    )


def pb_e_avg_formula(config: RamseyConfig, theory: str = "standard") -> float:
    """Gaussian-averaged fringe formula: the modified variant carries the
    damping e^{-Re(lt)(T0 - Re(lt) sigma^2/4)}, the fringe-center shift
    dw -> dw - Im(lt), and the effective time T0 - Re(lt) sigma^2/2."""
    der = derive(config)
    pref = 0.5 * np.sin(2 * der.big_omega * config.tau) ** 2
    lam = config.lambda_tilde_eg if theory == "modified" else 0.0 + 0.0j
    g = lam.real
    nu = der.delta_omega - lam.imag
    env = np.exp(-g * (config.t0 - g * config.sigma**2 / 4)) * np.exp(
        -(nu**2) * config.sigma**2 / 4
    )
    return float(pref * (1.0 + env * np.cos(nu * (config.t0 - g * config.sigma**2 / 2))))


# ---------------------------------------------------------------------------
# Detuning scans
# ---------------------------------------------------------------------------

@dataclass
class ScanResult:
    """Rows of (delta_omega, single-shot Pb_e at t_free, Gaussian-averaged
    Pb_e), with the generating config and theory recorded."""

    delta_omegas: np.ndarray
    pb_e: np.ndarray
    pb_e_avg: np.ndarray
    config: RamseyConfig
    theory: str

    def argmax_avg(self) -> float:
        return float(self.delta_omegas[int(np.argmax(self.pb_e_avg))])

    def to_csv(self) -> str:
        lines = ["delta_omega,pb_e,pb_e_avg"]
        for dw, p, pa in zip(self.delta_omegas, self.pb_e, self.pb_e_avg):
            lines.append(f"{float(dw)!r},{float(p)!r},{float(pa)!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "lindkit.scan/1",
                "theory": self.theory,
                "config": self.config.to_dict(),
                "rows": [
                    {"delta_omega": dw, "pb_e": p, "pb_e_avg": pa}
                    for dw, p, pa in zip(
                        self.delta_omegas.tolist(),
                        self.pb_e.tolist(),
                        self.pb_e_avg.tolist(),
                    )
                ],
            },
            sort_keys=True,
        )


def scan(
    config: RamseyConfig,
    delta_omega_grid,
    theory: str = "standard",
    truncate: bool = False,
) -> ScanResult:
    """Sweep the detuning over a sorted finite grid; each point re-derives
    omega = (E_e - E_g) + delta and is independent of the others."""
    grid = np.asarray(delta_omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValueError("detuning grid must be a finite 1-d array")
    if np.any(np.diff(grid) < 0):
        raise ValueError("detuning grid must be sorted ascending")
    pb = np.empty(grid.size)
    avg = np.empty(grid.size)
    for k, dw in enumerate(grid):
        cfg = config.with_detuning(dw)
        pb[k] = protocol(cfg, theory)
        avg[k] = gaussian_fraction(cfg, theory, truncate=truncate)
    return ScanResult(grid, pb, avg, config, theory)
