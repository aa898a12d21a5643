"""Tests for the hierarchy right-hand side and the RK4 stepper."""

import math
import warnings

import numpy as np
import pytest

from phonheom import bath, hierarchy, observables, propagator, system
from phonheom.hierarchy import ABSENT


def random_coefficients(num_modes, seed=0):
    """Unphysical but structurally valid coefficient tables."""
    rng = np.random.default_rng(seed)
    cbar_m = rng.normal(size=(num_modes,) * 2) + 1j * rng.normal(size=(num_modes,) * 2)
    v0 = rng.normal(size=num_modes) + 1j * rng.normal(size=num_modes)
    cbar = rng.normal(size=num_modes) + 1j * rng.normal(size=num_modes)
    lam = rng.uniform(0.1, 1.0, size=num_modes)
    return bath.BathCoefficients(
        size=num_modes, lam=lam, unitary=np.eye(num_modes, dtype=complex),
        cbar_matrix=cbar_m, v0=v0, cbar=cbar, basis=None)


def dense_rhs(psi, space, coeffs, spec, grid):
    """The equation of motion written out naively, state by state."""
    h = spec.h(grid)
    k_modes = space.num_modes
    out = np.empty_like(psi)
    for s in range(space.size):
        j = space.indices[s]
        acc = -1j * system.apply_hamiltonian(psi[s], spec, grid)
        acc = acc + (j @ np.diag(coeffs.cbar_matrix)) * psi[s]
        for k in range(k_modes):
            for kp in range(k_modes):
                if kp == k:
                    continue
                s2 = space.shift(s, k, kp)
                if s2 != ABSENT:
                    acc = acc + np.sqrt(j[k] * (j[kp] + 1)) * coeffs.cbar_matrix[k, kp] * psi[s2]
            m = space.lower[s, k]
            if m != ABSENT:
                acc = acc - 1j * h * np.sqrt(j[k]) * coeffs.v0[k] * psi[m]
            r = space.raise_[s, k]
            if r != ABSENT:
                acc = acc - 1j * h * np.sqrt(j[k] + 1) * coeffs.cbar[k] * psi[r]
        out[s] = acc
    return out


def test_kernel_matches_dense_reference():
    space = hierarchy.enumerate_space(3, 3)
    grid = system.Grid(-1.25, 1.25, 0.5)
    spec = system.SystemSpec(omega_s=1.3, counter=0.4)
    coeffs = random_coefficients(3, seed=7)
    rng = np.random.default_rng(7)
    psi = rng.normal(size=(space.size, grid.size)) + 1j * rng.normal(
        size=(space.size, grid.size))
    op = propagator.HeomOperator(space, coeffs, spec, grid)
    out = op(psi)
    ref = dense_rhs(psi, space, coeffs, spec, grid)
    assert np.abs(out - ref).max() < 1e-12 * np.abs(ref).max()


def test_rhs_is_linear():
    space = hierarchy.enumerate_space(2, 2)
    grid = system.Grid(-2.0, 2.0, 0.5)
    op = propagator.HeomOperator(space, random_coefficients(2, seed=3),
                                 system.SystemSpec(omega_s=1.0, counter=0.1), grid)
    rng = np.random.default_rng(5)
    x = rng.normal(size=(space.size, grid.size)) + 0j
    y = rng.normal(size=(space.size, grid.size)) + 0j
    lhs = op(2.0 * x + 3.0 * y)
    assert np.abs(lhs - 2.0 * op(x) - 3.0 * op(y)).max() < 1e-12


def test_initial_state_puts_phi_in_vacuum_row():
    space = hierarchy.enumerate_space(2, 1)
    phi = np.array([1.0, 2.0, 3.0], dtype=complex)
    st = propagator.initial_state(space, phi)
    assert np.array_equal(st.psi[0], phi)
    assert np.abs(st.psi[1:]).max() == 0.0
    assert st.t == 0.0


def test_rk4_fourth_order_on_scalar_problem():
    # y' = i w y on a 1x1 hierarchy: halving dt shrinks the error ~16x
    lam = 1.7j

    def rhs(psi, out=None):
        if out is None:
            out = np.empty_like(psi)
        out[:] = lam * psi
        return out

    errs = []
    for dt in (0.1, 0.05):
        state = propagator.HierarchyState(None, np.array([[1.0 + 0j]]), 0.0)
        n = int(round(2.0 / dt))
        for _ in range(n):
            propagator.rk4_step(state, dt, rhs)
        errs.append(abs(state.psi[0, 0] - np.exp(lam * 2.0)))
    ratio = errs[0] / errs[1]
    assert 14.0 < ratio < 18.0


def test_decoupled_run_conserves_norm_and_oscillates():
    dens = bath.SpectralDensity(kind="ohmic_circular", strength=1e-12, cutoff=4.0)
    coeffs = bath.bath_coefficients(bath.BathSpec(density=dens), bath.bessel_basis(4, 4.0))
    grid = system.default_grid()
    spec = system.SystemSpec(omega_s=2.0, counter=system.counter_term_coefficient(dens))
    space = hierarchy.enumerate_space(4, 1)
    phi = system.initial_gaussian(-1.0, 1 / math.sqrt(2), 0.0, grid)
    op = propagator.HeomOperator(space, coeffs, spec, grid)
    cfg = propagator.PropagationConfig(dt=3.125e-3, steps=320, stride=80)
    traj, state = propagator.propagate(cfg, op, phi)
    a = traj.as_arrays()
    assert np.abs(a["norm"] - 1.0).max() < 1e-9
    assert np.abs(a["xi_q"] + np.cos(2.0 * a["times"])).max() < 5e-3
    assert state.t == pytest.approx(320 * 3.125e-3)


def test_propagate_records_expected_rows():
    dens = bath.SpectralDensity(kind="ohmic_circular", strength=0.1, cutoff=4.0)
    coeffs = bath.bath_coefficients(bath.BathSpec(density=dens), bath.bessel_basis(3, 4.0))
    grid = system.Grid(-4.0, 4.0, 0.5)
    spec = system.SystemSpec(omega_s=2.0, counter=system.counter_term_coefficient(dens))
    space = hierarchy.enumerate_space(3, 1)
    phi = system.initial_gaussian(0.0, 1 / math.sqrt(2), 0.0, grid)
    op = propagator.HeomOperator(space, coeffs, spec, grid)
    seen = []
    traj, _ = propagator.propagate(
        propagator.PropagationConfig(1e-3, 10, 4), op, phi,
        progress=lambda step, total, st: seen.append(step))
    assert traj.as_arrays()["times"] == pytest.approx([0.0, 4e-3, 8e-3, 10e-3])
    assert seen == [4, 8, 10]


def test_blowup_raises_propagation_error():
    space = hierarchy.enumerate_space(2, 2)
    grid = system.Grid(-2.0, 2.0, 0.25)
    op = propagator.HeomOperator(space, random_coefficients(2, seed=9),
                                 system.SystemSpec(omega_s=5.0), grid)
    phi = system.initial_gaussian(0.0, 0.5, 0.0, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(propagator.PropagationError):
            propagator.propagate(propagator.PropagationConfig(5.0, 50, 1), op, phi)


def test_stability_warning_for_large_dt():
    space = hierarchy.enumerate_space(2, 1)
    grid = system.Grid(-4.0, 4.0, 0.25)
    op = propagator.HeomOperator(space, random_coefficients(2, seed=2),
                                 system.SystemSpec(omega_s=2.0), grid)
    with pytest.warns(UserWarning):
        op.stability_check(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        propagator.PropagationConfig(dt=-1.0, steps=10)
    with pytest.raises(ValueError):
        propagator.PropagationConfig(dt=0.1, steps=10, stride=0)


def test_memory_estimate_formula():
    assert propagator.memory_estimate(100, 44) == 16 * 100 * 44 * 5


def test_operator_rejects_mode_mismatch():
    space = hierarchy.enumerate_space(3, 1)
    with pytest.raises(ValueError):
        propagator.HeomOperator(space, random_coefficients(2),
                                system.SystemSpec(omega_s=1.0),
                                system.Grid(-2.0, 2.0, 0.5))
