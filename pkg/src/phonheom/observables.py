"""Reduced density matrix assembly and the reported observables.

Every expansion function psi_j enters with weight Lambda_j = prod_k
lambda_k^{j_k}; moments are evaluated streaming (no rho_S materialized)
with q diagonal, p as the fourth-order first difference and p^2 as the
same fourth-order second difference used by the Hamiltonian.
"""

from dataclasses import dataclass, field

import numpy as np

from . import system


@dataclass
class Trajectory:
    """Time series of the reported observables.

    Moments are normalized by Tr rho_S; the raw (unnormalized) first and
    second moments are kept alongside for transparency.
    """

    n_max: int
    times: list = field(default_factory=list)
    xi_q: list = field(default_factory=list)
    xi_p: list = field(default_factory=list)
    xi_qq: list = field(default_factory=list)
    xi_pp: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    weights: list = field(default_factory=list)   # per time: w_0..w_{n_max}
    n_mean: list = field(default_factory=list)
    raw_xi_q: list = field(default_factory=list)
    raw_xi_p: list = field(default_factory=list)
    raw_xi_qq: list = field(default_factory=list)
    raw_xi_pp: list = field(default_factory=list)

    def as_arrays(self):
        out = {
            name: np.asarray(getattr(self, name))
            for name in ("times", "xi_q", "xi_p", "xi_qq", "xi_pp", "norm",
                         "n_mean", "raw_xi_q", "raw_xi_p", "raw_xi_qq", "raw_xi_pp")
        }
        out["weights"] = np.asarray(self.weights).reshape(len(self.times), self.n_max + 1)
        return out


def state_weights(space, lam):
    """Lambda_j = prod_k lambda_k^{j_k} for every state (plain doubles)."""
    lam = np.asarray(lam, dtype=float)
    return np.prod(lam[None, :] ** space.indices, axis=1)


def reduced_density(psi, space, lam, grid):
    """rho_S(q_a, q_b) = sum_j Lambda_j psi_j(q_a) conj(psi_j(q_b))."""
    w = state_weights(space, lam)
    keep = w > 0.0
    scaled = psi[keep] * w[keep, None]
    rho = scaled.T @ psi[keep].conj()
    return rho


def _per_state_moments(psi, grid):
    """Cell-rule <1>, <q>, <q^2>, <p>, <p^2> for every state row."""
    dq = grid.dq
    q = grid.points
    absq = np.abs(psi) ** 2
    norm = absq.sum(axis=1) * dq
    qm = absq @ q * dq
    q2m = absq @ (q * q) * dq

    grad = system.gradient(psi, dq)
    pm = np.sum(psi.conj() * (-1j) * grad, axis=1).real * dq

    lap = system.laplacian(psi, dq)
    p2m = np.sum(psi.conj() * (-lap), axis=1).real * dq
    return norm, qm, q2m, pm, p2m


def moments(psi, space, lam, grid):
    """(xi_q, xi_p, xi_qq, xi_pp, norm) plus the raw moments.

    Returns a dict; normalized values divide by norm = Tr rho_S and the
    variances are taken about the normalized means.
    """
    w = state_weights(space, lam)
    n_s, q_s, q2_s, p_s, p2_s = _per_state_moments(psi, grid)
    norm = float(w @ n_s)
    raw_q = float(w @ q_s)
    raw_q2 = float(w @ q2_s)
    raw_p = float(w @ p_s)
    raw_p2 = float(w @ p2_s)
    if norm < 1e-6:
        raise ValueError(f"reduced-density norm {norm:.3e} too small to normalize")
    mq = raw_q / norm
    mp = raw_p / norm
    return {
        "xi_q": mq,
        "xi_p": mp,
        "xi_qq": raw_q2 / norm - mq * mq,
        "xi_pp": raw_p2 / norm - mp * mp,
        "norm": norm,
        "raw_xi_q": raw_q,
        "raw_xi_p": raw_p,
        "raw_xi_qq": raw_q2,
        "raw_xi_pp": raw_p2,
    }


def phonon_statistics(psi, space, lam, grid):
    """(w_0..w_{n_max}, <n>) with w_n = Tr rho_S^(n)."""
    w = state_weights(space, lam)
    n_s = np.sum(np.abs(psi) ** 2, axis=1) * grid.dq
    contrib = w * n_s
    levels = np.empty(space.n_max + 1)
    for n in range(space.n_max + 1):
        levels[n] = contrib[space.level_slice(n)].sum()
    total = levels.sum()
    n_mean = float(np.arange(space.n_max + 1) @ levels / total)
    return levels, n_mean


def record(traj, t, psi, space, lam, grid):
    """Append one output row of observables to a trajectory."""
    m = moments(psi, space, lam, grid)
    levels, n_mean = phonon_statistics(psi, space, lam, grid)
    traj.times.append(t)
    for key in ("xi_q", "xi_p", "xi_qq", "xi_pp", "norm",
                "raw_xi_q", "raw_xi_p", "raw_xi_qq", "raw_xi_pp"):
        getattr(traj, key).append(m[key])
    traj.weights.append(levels)
    traj.n_mean.append(n_mean)
