"""Hierarchy right-hand side and fixed-step RK4 time propagation.

The RHS kernel is a single fused numba loop over hierarchy states; each
output row reads only its neighbors from the immutable input buffer, so
results are deterministic and the loop could be parallelized without
reductions.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import observables
from .hierarchy import ABSENT


class PropagationError(Exception):
    pass


@dataclass(frozen=True)
class PropagationConfig:
    dt: float
    steps: int
    stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or self.stride < 1:
            raise ValueError("steps must be >= 0 and stride >= 1")


@dataclass
class HierarchyState:
    """All expansion functions as rows of one complex (states x grid) array."""

    space: object
    psi: np.ndarray
    t: float = 0.0


def initial_state(space, phi):
    """Vacuum multi-index holds the system wavefunction, all others zero."""
    psi = np.zeros((space.size, len(phi)), dtype=complex)
    psi[0] = phi
    return HierarchyState(space, psi, 0.0)


@njit(cache=True)
def _rhs_kernel(psi, out, idx, lower, raise_, diag_c, cbar_m, v0, cbar,
                hvec, pot, kin, sqrt_tab):
    n_states, n_grid = psi.shape
    n_modes = idx.shape[1]
    for s in range(n_states):
        for g in range(n_grid):
            lap = -30.0 * psi[s, g]
            if g >= 1:
                lap += 16.0 * psi[s, g - 1]
            if g >= 2:
                lap -= psi[s, g - 2]
            if g < n_grid - 1:
                lap += 16.0 * psi[s, g + 1]
            if g < n_grid - 2:
                lap -= psi[s, g + 2]
            h_s = -kin * lap + pot[g] * psi[s, g]
            out[s, g] = -1j * h_s + diag_c[s] * psi[s, g]
        for k in range(n_modes):
            jk = idx[s, k]
            if jk > 0:
                m = lower[s, k]
                c = -1j * sqrt_tab[jk] * v0[k]
                for g in range(n_grid):
                    out[s, g] += c * hvec[g] * psi[m, g]
                for kp in range(n_modes):
                    if kp == k:
                        continue
                    a = sqrt_tab[jk] * sqrt_tab[idx[s, kp] + 1] * cbar_m[k, kp]
                    if a == 0.0:
                        continue
                    s2 = raise_[m, kp]
                    for g in range(n_grid):
                        out[s, g] += a * psi[s2, g]
            r = raise_[s, k]
            if r != ABSENT:
                c = -1j * sqrt_tab[idx[s, k] + 1] * cbar[k]
                for g in range(n_grid):
                    out[s, g] += c * hvec[g] * psi[r, g]


class HeomOperator:
    """Precomputed tables for evaluating the hierarchy RHS."""

    def __init__(self, space, coeffs, spec, grid):
        if space.num_modes != coeffs.size:
            raise ValueError("index space and bath coefficients disagree on K")
        self.space = space
        self.coeffs = coeffs
        self.spec = spec
        self.grid = grid
        q = grid.points
        h = spec.h(grid)
        self._idx = space.indices
        self._lower = space.lower
        self._raise = space.raise_
        self._diag_c = space.indices @ np.diag(coeffs.cbar_matrix).astype(complex)
        self._cbar_m = np.ascontiguousarray(coeffs.cbar_matrix, dtype=complex)
        self._v0 = np.ascontiguousarray(coeffs.v0, dtype=complex)
        self._cbar = np.ascontiguousarray(coeffs.cbar, dtype=complex)
        self._hvec = np.ascontiguousarray(h, dtype=float)
        self._pot = np.ascontiguousarray(
            0.5 * spec.omega_s * q * q + spec.counter * h * h, dtype=float)
        self._kin = 0.5 * spec.omega_s / (12.0 * grid.dq ** 2)

    def __call__(self, psi, out=None):
        """d psi / dt for the full hierarchy."""
        if out is None:
            out = np.empty_like(psi)
        _rhs_kernel(psi, out, self._idx, self._lower, self._raise,
                    self._diag_c, self._cbar_m, self._v0, self._cbar,
                    self._hvec, self._pot, self._kin,
                    np.sqrt(np.arange(self.space.n_max + 2, dtype=float)))
        return out

    def stability_check(self, dt):
        """Warn if dt is clearly outside the RK4 stability budget."""
        cbar_max = np.abs(self.coeffs.cbar_matrix).max()
        radius = (64.0 * self._kin + self._pot.max()) + cbar_max * self.space.n_max
        if dt * radius > 2.8:
            warnings.warn(
                f"dt * spectral-radius estimate = {dt * radius:.2f} exceeds the "
                "RK4 stability budget (~2.8); the run may blow up",
                stacklevel=2,
            )


def rk4_step(state, dt, rhs, work=None):
    """Classical fourth-order Runge-Kutta update, in place on state.psi."""
    y = state.psi
    if work is None:
        work = [np.empty_like(y) for _ in range(3)]
    k, ytmp, acc = work
    rhs(y, out=k)                   # k1
    np.multiply(k, dt / 6.0, out=acc)
    np.multiply(k, dt / 2.0, out=ytmp)
    ytmp += y
    rhs(ytmp, out=k)                # k2
    np.multiply(k, dt / 3.0, out=ytmp)
    acc += ytmp
    np.multiply(k, dt / 2.0, out=ytmp)
    ytmp += y
    rhs(ytmp, out=k)                # k3
    np.multiply(k, dt / 3.0, out=ytmp)
    acc += ytmp
    np.multiply(k, dt, out=ytmp)
    ytmp += y
    rhs(ytmp, out=k)                # k4
    np.multiply(k, dt / 6.0, out=ytmp)
    acc += ytmp
    y += acc
    state.t += dt
    total = y.sum()
    if not np.isfinite(total.real) or not np.isfinite(total.imag):
        raise PropagationError(f"non-finite amplitudes after step to t = {state.t:.6g}")
    return state


def propagate(config, operator, phi, progress=None):
    """Run the hierarchy and collect observables every `stride` steps."""
    space = operator.space
    operator.stability_check(config.dt)
    state = initial_state(space, np.asarray(phi, dtype=complex))
    traj = observables.Trajectory(space.n_max)
    lam = operator.coeffs.lam
    grid = operator.grid
    observables.record(traj, state.t, state.psi, space, lam, grid)
    work = [np.empty_like(state.psi) for _ in range(3)]
    for step in range(1, config.steps + 1):
        try:
            rk4_step(state, config.dt, operator, work=work)
        except PropagationError as err:
            raise PropagationError(f"step {step}: {err}") from err
        if step % config.stride == 0 or step == config.steps:
            observables.record(traj, state.t, state.psi, space, lam, grid)
            if progress is not None:
                progress(step, config.steps, state)
    return traj, state


def memory_estimate(n_states, n_grid):
    """Bytes for the propagation buffers (state + RK4 workspace)."""
    return 16 * n_states * n_grid * 5
