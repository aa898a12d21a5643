"""Coordinate-grid system: the damped-oscillator Hamiltonian (with counter
term), the coupling form factor, and the Gaussian initial state.

Coordinates are measured in oscillator lengths q_S = sqrt(hbar/(M omega_S)),
momenta in hbar/q_S.  In these units H_S reduces to
omega_S * (-d^2/dq^2 + q^2)/2 + kappa * h(q)^2, so the mass never appears
explicitly.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class GridError(Exception):
    pass


@dataclass(frozen=True)
class Grid:
    """Cell-centered grid q_j = q_min + (j + 1/2) dq, in units of q_S."""

    q_min: float
    q_max: float
    dq: float

    def __post_init__(self):
        if self.dq <= 0:
            raise ValueError("dq must be positive")
        n = (self.q_max - self.q_min) / self.dq
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ValueError("(q_max - q_min) must be a positive multiple of dq")

    @property
    def size(self):
        return int(round((self.q_max - self.q_min) / self.dq))

    @property
    def points(self):
        return self.q_min + (np.arange(self.size) + 0.5) * self.dq

    def norm(self, psi):
        """Cell-rule norm integral of |psi|^2."""
        return float(np.sum(np.abs(psi) ** 2).real * self.dq)


def default_grid():
    """The benchmark grid: (-5.5, 5.5) q_S with dq = 0.25 q_S, 44 points."""
    return Grid(-5.5, 5.5, 0.25)


@dataclass(frozen=True)
class SystemSpec:
    """Harmonic system of frequency omega_s (eV) plus the counter term.

    counter (eV) multiplies h(q)^2; form_factor defaults to h(q) = q/q_S.
    """

    omega_s: float
    counter: float = 0.0
    form_factor: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.omega_s < 0:
            raise ValueError("omega_s must be non-negative")
        if self.counter < 0:
            raise ValueError("counter-term coefficient must be non-negative")

    def h(self, grid):
        """Coupling form factor sampled on the grid."""
        if self.form_factor is not None:
            f = np.asarray(self.form_factor, dtype=float)
            if f.shape != (grid.size,):
                raise ValueError("form_factor length must match the grid")
            return f
        return grid.points


def counter_term_coefficient(density, nodes=256):
    """Counter-term strength: sum_i d_i^2/omega_i, or integral J(w)/w dw.

    For the circular-cutoff density the integral is pi*strength/4; the
    quadrature (with the sin substitution) reproduces it to 1e-10.
    """
    if density.kind == "discrete":
        w = np.asarray(density.mode_freqs)
        d = np.asarray(density.mode_couplings)
        return float(np.sum(d * d / w))
    x, gw = np.polynomial.legendre.leggauss(nodes)
    theta = (x + 1.0) * (np.pi / 4.0)
    omega = density.cutoff * np.sin(theta)
    jac = (np.pi / 4.0) * density.cutoff * np.cos(theta)
    vals = density(omega) / omega
    if not np.all(np.isfinite(vals)):
        raise ValueError("J(w)/w is not integrable for this density")
    return float(np.sum(gw * jac * vals))


def laplacian(psi, dq):
    """5-point fourth-order second derivative along the last axis.

    The wavefunction is taken to vanish outside the grid (Dirichlet), so
    the operator matrix is symmetric.
    """
    psi = np.asarray(psi)
    lap = -30.0 * psi.copy()
    lap[..., 1:] += 16.0 * psi[..., :-1]
    lap[..., :-1] += 16.0 * psi[..., 1:]
    lap[..., 2:] -= psi[..., :-2]
    lap[..., :-2] -= psi[..., 2:]
    lap /= 12.0 * dq ** 2
    return lap


def gradient(psi, dq):
    """5-point fourth-order first derivative along the last axis (Dirichlet).

    Antisymmetric by construction, so -i d/dq stays Hermitian.
    """
    psi = np.asarray(psi)
    grad = np.zeros_like(psi)
    grad[..., 1:] -= 8.0 * psi[..., :-1]
    grad[..., :-1] += 8.0 * psi[..., 1:]
    grad[..., 2:] += psi[..., :-2]
    grad[..., :-2] -= psi[..., 2:]
    grad /= 12.0 * dq
    return grad


def apply_hamiltonian(psi, spec, grid):
    """H_S psi with the fourth-order Dirichlet kinetic stencil."""
    psi = np.asarray(psi, dtype=complex)
    q = grid.points
    lap = laplacian(psi, grid.dq)
    h = spec.h(grid)
    return (-0.5 * spec.omega_s) * lap + (0.5 * spec.omega_s * q * q + spec.counter * h * h) * psi


def initial_gaussian(q0, sigma0, p0, grid):
    """Normalized Gaussian wavepacket on the grid (lengths in q_S units)."""
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    q = grid.points
    psi = (2.0 * math.pi * sigma0 ** 2) ** (-0.25) * np.exp(
        -((q - q0) ** 2) / (4.0 * sigma0 ** 2) + 1j * p0 * q
    )
    norm = grid.norm(psi)
    if norm < 0.999:
        raise GridError(
            f"grid too narrow for the requested Gaussian (norm {norm:.6f} < 0.999)"
        )
    return psi / math.sqrt(norm)
