"""Bath side of the engine: spectral densities, the correlation function
L(t), the Bessel/discrete expansion bases, the weight matrix D and the
coefficients (lambda, U, Cbar, v(0), cbar) that feed the hierarchy.

Internal units: hbar = 1, energies in eV, times in 1/eV. Frequencies
(omega, Omega) therefore carry eV, and L(t) is in eV^2.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bessel import bessel_jn_all
from .linalg import jacobi_eigh

DEFAULT_QUAD_NODES = 256

EIGENVALUE_CLAMP = 1e-12  # lambda in [-clamp, 0) -> 0; below -clamp -> error


class BathError(Exception):
    pass


class QuadratureError(BathError):
    pass


@dataclass(frozen=True)
class SpectralDensity:
    """Bath coupling profile J(omega), odd in omega.

    kind "ohmic_circular": J = strength * (w/cutoff) * sqrt(1-(w/cutoff)^2)
    for 0 <= w <= cutoff, zero beyond the cutoff.
    kind "discrete": a sum of delta functions at mode_freqs with weights
    mode_couplings^2 (couplings d_i in eV).
    """

    kind: str
    strength: float = 0.0
    cutoff: float = 0.0
    mode_freqs: tuple = ()
    mode_couplings: tuple = ()

    def __post_init__(self):
        if self.kind not in ("ohmic_circular", "discrete"):
            raise ValueError(f"unknown spectral density kind {self.kind!r}")
        if self.kind == "ohmic_circular":
            if self.strength < 0 or self.cutoff <= 0:
                raise ValueError("ohmic_circular needs strength >= 0 and cutoff > 0")
        else:
            if len(self.mode_freqs) != len(self.mode_couplings):
                raise ValueError("mode_freqs and mode_couplings must pair up")
            if any(w <= 0 for w in self.mode_freqs):
                raise ValueError("discrete mode frequencies must be positive")

    def __call__(self, omega):
        """J(omega); defined on all reals via the odd extension."""
        if self.kind == "discrete":
            raise BathError("discrete density has no pointwise value")
        w = np.asarray(omega, dtype=float)
        x = w / self.cutoff
        inside = np.abs(x) <= 1.0
        val = np.where(inside, self.strength * x * np.sqrt(np.clip(1.0 - x * x, 0.0, None)), 0.0)
        return val if np.ndim(omega) else float(val)


@dataclass(frozen=True)
class BathSpec:
    """Spectral density plus inverse temperature (beta = inf means T = 0)."""

    density: SpectralDensity
    beta: float = math.inf

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive (use math.inf for zero temperature)")

    @property
    def zero_temperature(self):
        return math.isinf(self.beta)


@dataclass(frozen=True)
class ExpansionBasis:
    """Differentiation-closed basis {u_k} used to expand exp(-i w t)."""

    kind: str  # "bessel" | "discrete_exponential"
    size: int
    cutoff: float  # Omega for bessel; unused for discrete
    deriv: np.ndarray = field(repr=False)  # C with du_k/dt = sum C[k,k'] u_k'
    mode_freqs: tuple = ()
    mode_couplings: tuple = ()


def bessel_basis(size, cutoff):
    """u_k(t) = Omega * J_{k-1}(Omega t); C is the truncated J-recurrence."""
    if size < 1 or cutoff <= 0:
        raise ValueError("need size >= 1 and cutoff > 0")
    c = np.zeros((size, size))
    for k in range(1, size):
        c[k, k - 1] = cutoff / 2.0
    for k in range(size - 1):
        c[k, k + 1] = -cutoff / 2.0
    if size > 1:
        c[0, 1] = -cutoff
    return ExpansionBasis("bessel", size, cutoff, c)


def discrete_exponential_basis(mode_freqs, mode_couplings):
    """u_k(t) = v_k(t) = d_k exp(-i w_k t); C is diagonal -i w_k."""
    freqs = tuple(float(w) for w in mode_freqs)
    coups = tuple(float(d) for d in mode_couplings)
    if len(freqs) != len(coups) or not freqs:
        raise ValueError("need matching non-empty frequency/coupling lists")
    c = np.diag(-1j * np.asarray(freqs))
    return ExpansionBasis("discrete_exponential", len(freqs), max(freqs), c,
                          mode_freqs=freqs, mode_couplings=coups)


@dataclass(frozen=True)
class BathCoefficients:
    """Everything the HEOM needs from the bath."""

    size: int
    lam: np.ndarray        # K real eigenvalues of D, ascending, clamped >= 0
    unitary: np.ndarray    # K x K, columns are eigenvectors of D
    cbar_matrix: np.ndarray  # rotated derivative matrix Cbar (1/time)
    v0: np.ndarray         # v_k(0) (1/time)
    cbar: np.ndarray       # cbar_k = lam_k * conj(v_k(0)) (1/time)
    basis: ExpansionBasis = field(repr=False)


@lru_cache(maxsize=16)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _bath_quad_grid(bath, nodes):
    """Quadrature abscissas/weights for integrals of J(w)*BoseFactor*f(w).

    Returns (omega, weight) with weight already including J(w) and the
    Bose-Einstein factor 1/(1-exp(-beta*w)).  The substitution
    w = Omega*sin(theta) removes the square-root endpoint behavior of the
    circular cutoff, so plain Gauss-Legendre converges to machine
    precision.  Nodes never land on w = 0 (open rule); the finite-T
    integrand limit there is strength/(beta*Omega).
    """
    dens = bath.density
    if dens.kind != "ohmic_circular":
        raise BathError("quadrature only applies to continuous densities")
    x, gw = _gauss_legendre(nodes if bath.zero_temperature else (nodes + 1) // 2)
    theta = (x + 1.0) * (np.pi / 4.0)  # (0, pi/2)
    jac = (np.pi / 4.0) * dens.cutoff * np.cos(theta)
    omega = dens.cutoff * np.sin(theta)
    if bath.zero_temperature:
        return omega, gw * jac * dens(omega)
    # Split at w = 0 so each half stays smooth however large beta gets.
    # Positive side carries 1/(1-exp(-beta*w)), negative side reduces to
    # J(|w|) * n_beta(|w|) via the odd extension.
    bw = np.minimum(bath.beta * omega, 700.0)
    pos = gw * jac * dens(omega) / (1.0 - np.exp(-bw))
    nb = np.exp(-bw) / (1.0 - np.exp(-bw))
    neg = gw * jac * dens(omega) * nb
    return np.concatenate([-omega[::-1], omega]), np.concatenate([neg[::-1], pos])


def bath_correlation(t, bath, nodes=DEFAULT_QUAD_NODES):
    """L(t)/hbar in 1/time^2: integral of J(w)*Bose(w)*exp(-i w t)."""
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    if nodes < 32:
        raise ValueError("need at least 32 quadrature nodes")
    if bath.density.kind == "discrete":
        w = np.asarray(bath.density.mode_freqs)
        d2 = np.asarray(bath.density.mode_couplings) ** 2
        if bath.zero_temperature:
            return complex(np.sum(d2 * np.exp(-1j * w * t)))
        nb = 1.0 / np.expm1(bath.beta * w)
        return complex(np.sum(d2 * ((nb + 1.0) * np.exp(-1j * w * t) + nb * np.exp(1j * w * t))))
    omega, weight = _bath_quad_grid(bath, nodes)
    return complex(np.sum(weight * np.exp(-1j * omega * t)))


def chebyshev_eta(k, omega, cutoff):
    """Expansion coefficient eta_k(omega) of the Bessel basis, k >= 1."""
    x = np.asarray(omega, dtype=float) / cutoff
    if np.any(np.abs(x) > 1.0 + 1e-15):
        raise ValueError("chebyshev_eta needs |omega| <= cutoff")
    x = np.clip(x, -1.0, 1.0)
    cheb = np.cos((k - 1) * np.arccos(x))
    val = (2.0 - (k == 1)) * (-1j) ** (k - 1) * cheb / cutoff
    return val if np.ndim(omega) else complex(val)


def _eta_matrix(size, omega, cutoff):
    """Rows eta_k(omega_j) for k = 1..size over a node array."""
    return np.array([chebyshev_eta(k, omega, cutoff) for k in range(1, size + 1)])


def eval_basis(t, basis, coeffs=None):
    """(u_k(t), v_k(t)). v needs the diagonalizing unitary, i.e. coeffs."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if basis.kind == "bessel":
        u = basis.cutoff * bessel_jn_all(basis.size - 1, basis.cutoff * t)
        u = u.astype(complex)
    else:
        u = np.asarray(basis.mode_couplings) * np.exp(
            -1j * np.asarray(basis.mode_freqs) * t
        )
    if coeffs is None:
        return u, None
    return u, coeffs.unitary.T @ u


def compute_weight_matrix(bath, basis, nodes=DEFAULT_QUAD_NODES, check_convergence=False):
    """The Hermitian weight matrix D of the basis expansion of L.

    D[k,k'] = (1/hbar) * integral J(w)*Bose(w)*eta_k(w)*conj(eta_k'(w)) dw,
    symmetrized exactly.  For the discrete-exponential basis D is the
    identity by construction.
    """
    if basis.kind == "discrete_exponential":
        return np.eye(basis.size, dtype=complex)
    omega, weight = _bath_quad_grid(bath, nodes)
    eta = _eta_matrix(basis.size, omega, basis.cutoff)
    d = (eta * weight) @ eta.conj().T
    d = 0.5 * (d + d.conj().T)
    if check_convergence:
        omega2, weight2 = _bath_quad_grid(bath, 2 * nodes)
        eta2 = _eta_matrix(basis.size, omega2, basis.cutoff)
        d2 = (eta2 * weight2) @ eta2.conj().T
        d2 = 0.5 * (d2 + d2.conj().T)
        drift = np.abs(d - d2).max()
        if drift > 1e-10:
            raise QuadratureError(
                f"doubling quadrature nodes moves a D entry by {drift:.3e} > 1e-10"
            )
    return d


def build_bath_coefficients(d, basis):
    """Diagonalize D and assemble all derived bath coefficients."""
    d = np.asarray(d)
    lam, unitary = jacobi_eigh(d)
    if lam.min() < -EIGENVALUE_CLAMP:
        raise BathError(
            f"weight matrix has a significantly negative eigenvalue {lam.min():.3e}"
        )
    lam = np.clip(lam, 0.0, None)
    cbar_matrix = unitary.T @ basis.deriv @ unitary.conj()
    u0, _ = eval_basis(0.0, basis)
    v0 = unitary.T @ u0
    return BathCoefficients(
        size=basis.size,
        lam=lam,
        unitary=unitary,
        cbar_matrix=cbar_matrix,
        v0=v0,
        cbar=lam * np.conj(v0),
        basis=basis,
    )


def bath_coefficients(bath, basis, nodes=DEFAULT_QUAD_NODES):
    """Convenience wrapper: weight matrix + diagonalization in one call."""
    return build_bath_coefficients(compute_weight_matrix(bath, basis, nodes), basis)


def reconstruct_correlation(t, coeffs):
    """hbar * sum_k cbar_k v_k(t): should reproduce L(t) in the basis window."""
    _, v = eval_basis(t, coeffs.basis, coeffs)
    return complex(np.sum(coeffs.cbar * v))


def lambda_cross(t, coeffs, bath, nodes=DEFAULT_QUAD_NODES):
    """Equal/unequal-time commutator table lambda[k,k'](t) of the b-modes.

    (1/hbar) * integral_0^Omega J(w) etabar_k'(w) conj(etabar_k(w))
    exp(-i w t) dw with etabar = U^dagger-rotated eta.  Diagonal equal to
    the lambda_k at t = 0 (zero-temperature weight matrix).
    """
    if coeffs.basis.kind != "bessel":
        raise BathError("lambda_cross is defined for the bessel basis")
    zero_t_bath = BathSpec(bath.density, math.inf)
    omega, weight = _bath_quad_grid(zero_t_bath, nodes)
    eta = _eta_matrix(coeffs.size, omega, coeffs.basis.cutoff)
    etabar = coeffs.unitary.conj().T @ eta
    phase = weight * np.exp(-1j * omega * t)
    return (etabar.conj() * phase) @ etabar.T
