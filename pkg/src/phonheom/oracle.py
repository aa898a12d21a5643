"""Two independent checks on the hierarchy engine.

Both replace the continuum bath by M discrete oscillators (midpoint rule on
J) and solve the resulting closed model without any hierarchy machinery:

* moments_oracle: the total Hamiltonian with h(q) = q is quadratic, so the
  Gaussian moments obey closed linear equations; they are propagated exactly
  through the normal modes of the coupled system.
* coupled_channels_oracle: brute-force wavefunction propagation in the
  product basis grid x (n_1..n_M), feasible for a few weakly coupled modes.
"""

from dataclasses import dataclass

import numpy as np

from . import observables, system
from .bath import SpectralDensity


class OracleError(Exception):
    pass


def discretize_bath(density, num_modes):
    """Midpoint discretization: omega_i = (i - 1/2) cutoff / M, d_i^2 = J(omega_i) dw."""
    if density.kind != "ohmic_circular":
        raise OracleError("only the continuum density can be discretized")
    if num_modes < 1:
        raise OracleError("need at least one bath mode")
    dw = density.cutoff / num_modes
    freqs = (np.arange(num_modes) + 0.5) * dw
    couplings = np.sqrt(density(freqs) * dw)
    return SpectralDensity(
        kind="discrete",
        mode_freqs=tuple(freqs),
        mode_couplings=tuple(couplings),
    )


@dataclass
class MomentTrajectory:
    """Exact moments of the discretized model at the requested times."""

    times: np.ndarray
    xi_q: np.ndarray
    xi_p: np.ndarray
    xi_qq: np.ndarray
    xi_pp: np.ndarray


def moments_oracle(density, omega_s, q0, sigma0, p0, times, beta=np.inf, counter=None):
    """Exact first and second system moments for a discrete bath.

    The coupled quadratic Hamiltonian (dimensionless coordinates, couplings
    sqrt(2) d_i q X_i) is diagonalized once; q(t), p(t) are then linear in
    the initial operators, so means and variances follow from the initial
    Gaussian system state and the thermal (or vacuum) bath covariances.
    `counter` defaults to the discrete counter term sum_i d_i^2 / omega_i,
    which keeps the total Hamiltonian positive definite for any coupling.
    """
    if density.kind != "discrete":
        raise OracleError("moments_oracle expects a discrete density")
    if sigma0 <= 0:
        raise OracleError("sigma0 must be positive")
    w = np.asarray(density.mode_freqs, dtype=float)
    d = np.asarray(density.mode_couplings, dtype=float)
    m = len(w)
    if counter is None:
        counter = float(np.sum(d * d / w))

    # x'' = -T V x in stacked coordinates (q, X_1..X_M); symmetrize with
    # y = T^{-1/2} x so the dynamical matrix is B = T^{1/2} V T^{1/2}.
    t_diag = np.concatenate(([omega_s], w))
    v = np.diag(t_diag).astype(float)
    v[0, 0] += 2.0 * counter
    v[0, 1:] += np.sqrt(2.0) * d
    v[1:, 0] += np.sqrt(2.0) * d
    rt = np.sqrt(t_diag)
    b = rt[:, None] * v * rt[None, :]
    nu2, o = np.linalg.eigh(b)
    if nu2[0] <= 0:
        raise OracleError(
            f"coupled model not positive definite (nu^2 min = {nu2[0]:.3e}); "
            "increase the counter term"
        )
    nu = np.sqrt(nu2)

    # Initial means and (diagonal) covariances: system Gaussian, bath modes
    # in thermal equilibrium with <X^2> = <P^2> = coth(beta w / 2) / 2.
    mean_q = np.concatenate(([q0], np.zeros(m)))
    mean_p = np.concatenate(([p0], np.zeros(m)))
    if np.isinf(beta):
        occ = np.full(m, 0.5)
    else:
        occ = 0.5 / np.tanh(0.5 * beta * w)
    var_q = np.concatenate(([sigma0 ** 2], occ))
    var_p = np.concatenate(([1.0 / (4.0 * sigma0 ** 2)], occ))

    # q(t) = f.x(0) + g.p(0) and p(t) = u.x(0) + v.p(0); only the system row
    # of O is needed to form the coefficient vectors.
    c_q = np.sqrt(omega_s) * o[0]
    c_p = o[0] / np.sqrt(omega_s)
    a0_mean = o.T @ (mean_q / rt)
    b0_mean = o.T @ (mean_p * rt)

    times = np.asarray(times, dtype=float)
    xi_q = np.empty_like(times)
    xi_p = np.empty_like(times)
    xi_qq = np.empty_like(times)
    xi_pp = np.empty_like(times)
    for i, t in enumerate(times):
        cos = np.cos(nu * t)
        sin = np.sin(nu * t)
        xi_q[i] = c_q @ (cos * a0_mean + (sin / nu) * b0_mean)
        xi_p[i] = c_p @ (cos * b0_mean - (nu * sin) * a0_mean)
        f = (o @ (c_q * cos)) / rt
        g = (o @ (c_q * sin / nu)) * rt
        u = (o @ (c_p * nu * sin)) / rt
        vv = (o @ (c_p * cos)) * rt
        xi_qq[i] = f @ (var_q * f) + g @ (var_p * g)
        xi_pp[i] = u @ (var_q * u) + vv @ (var_p * vv)
    return MomentTrajectory(times, xi_q, xi_p, xi_qq, xi_pp)


def _bath_tables(cutoffs):
    """Enumerate the product phonon basis and its ladder index tables."""
    dims = [c + 1 for c in cutoffs]
    configs = np.array(list(np.ndindex(*dims)), dtype=np.int64)
    rank = {tuple(cfg): i for i, cfg in enumerate(configs)}
    return configs, rank


def coupled_channels_oracle(density, omega_s, q0, sigma0, p0, grid, dt, steps,
                            cutoffs, counter=None, stride=1):
    """Propagate the full grid x phonon-product wavefunction (T = 0).

    The bath starts in its vacuum; each mode i is truncated at occupation
    cutoffs[i]. Convergence in the cutoffs is the caller's responsibility
    (raise them and compare). Returns (MomentTrajectory, norm array, list of
    reduced density matrices), the latter in the same convention as
    observables.reduced_density (no grid-measure factor).
    """
    if density.kind != "discrete":
        raise OracleError("coupled_channels_oracle expects a discrete density")
    w = np.asarray(density.mode_freqs, dtype=float)
    d = np.asarray(density.mode_couplings, dtype=float)
    if len(cutoffs) != len(w):
        raise OracleError("one occupation cutoff per bath mode")
    if counter is None:
        counter = float(np.sum(d * d / w))
    configs, rank = _bath_tables(cutoffs)
    n_bath = len(configs)

    # Coupling q d_i (b_i + b_i^+): for each mode a gather table of source
    # rows and sqrt factors, applied to the rows where it acts.
    ladder = []
    for i in range(len(w)):
        dst_dn, src_dn, fac_dn = [], [], []
        dst_up, src_up, fac_up = [], [], []
        for s, cfg in enumerate(configs):
            n = cfg[i]
            if n > 0:
                t = tuple(cfg)
                src = rank[t[:i] + (n - 1,) + t[i + 1:]]
                dst_dn.append(s)
                src_dn.append(src)
                fac_dn.append(np.sqrt(n))
            if n < cutoffs[i]:
                t = tuple(cfg)
                src = rank[t[:i] + (n + 1,) + t[i + 1:]]
                dst_up.append(s)
                src_up.append(src)
                fac_up.append(np.sqrt(n + 1))
        ladder.append((
            np.array(dst_dn), np.array(src_dn), np.array(fac_dn)[:, None],
            np.array(dst_up), np.array(src_up), np.array(fac_up)[:, None],
        ))
    e_bath = configs @ w

    q = grid.points
    pot = 0.5 * omega_s * q * q + counter * q * q
    dq = grid.dq

    def rhs(psi):
        h = (-0.5 * omega_s) * system.laplacian(psi, dq) + (pot[None, :] + e_bath[:, None]) * psi
        for i, (ddn, sdn, fdn, dup, sup, fup) in enumerate(ladder):
            coup = d[i] * q[None, :]
            if len(ddn):
                h[ddn] += coup * (fdn * psi[sdn])
            if len(dup):
                h[dup] += coup * (fup * psi[sup])
        return -1j * h

    psi = np.zeros((n_bath, grid.size), dtype=complex)
    psi[0] = system.initial_gaussian(q0, sigma0, p0, grid)

    unit = np.ones(n_bath)
    times, rows, rhos = [], [], []

    def snapshot(t):
        n_s, q_s, q2_s, p_s, p2_s = observables._per_state_moments(psi, grid)
        norm = unit @ n_s
        mq = (unit @ q_s) / norm
        mp = (unit @ p_s) / norm
        times.append(t)
        rows.append((mq, mp, (unit @ q2_s) / norm - mq * mq,
                     (unit @ p2_s) / norm - mp * mp, norm))
        rhos.append(psi.T @ psi.conj())

    snapshot(0.0)
    for step in range(1, steps + 1):
        k1 = rhs(psi)
        k2 = rhs(psi + 0.5 * dt * k1)
        k3 = rhs(psi + 0.5 * dt * k2)
        k4 = rhs(psi + dt * k3)
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0 or step == steps:
            snapshot(step * dt)
    arr = np.array(rows)
    traj = MomentTrajectory(np.array(times), arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
    return traj, arr[:, 4], rhos
