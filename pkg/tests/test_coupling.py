import numpy as np
import pytest

from cavityspin.coupling import (
    InertiaOps,
    RigidState,
    advance_angular_momentum,
    advance_linear_momentum,
    advance_orientation,
    coupled_step,
    make_coupled_state,
    omega_from_state,
    orthonormalize,
    rigid_euler_reference,
    rodrigues,
    translational_velocity,
)
from cavityspin.fluid import FluidParams, InitSpec, initialize_velocity, make_grid, stable_dt, zero_state
from cavityspin.geometry import GeometrySpec, compute_mass_properties


def make_setup(resolution=6):
    spec = GeometrySpec(outer_half_extents=(0.6, 0.6, 0.4),
                        cavity_half_extents=(0.5, 0.5, 0.3),
                        cavity_offset=(0.0, 0.0, 0.0), rho_B=2.0, nu=0.5)
    inertia = compute_mass_properties(spec)
    grid = make_grid(spec, inertia, resolution)
    ops = InertiaOps(inertia.I)
    params = FluidParams(nu=spec.nu)
    return spec, inertia, grid, ops, params


class TestRodrigues:
    def test_zero_is_identity(self):
        assert np.array_equal(rodrigues(np.zeros(3)), np.eye(3))

    def test_quarter_turn(self):
        R = rodrigues(np.array([0.0, 0.0, np.pi / 2]))
        assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_orthogonal(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            R = rodrigues(rng.normal(size=3))
            assert np.allclose(R.T @ R, np.eye(3), atol=1e-14)
            assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-14)


class TestOmegaFromState:
    def test_resting_fluid(self):
        ops = InertiaOps(np.diag([1.0, 2.0, 3.0]))
        A = np.array([2.0, -1.0, 3.0])
        ob, ot, om = omega_from_state(A, np.zeros(3), ops)
        assert np.allclose(ob, ops.solve(A))
        assert np.all(ot == 0.0)
        assert np.array_equal(om, ob)

    def test_diagonal_arithmetic(self):
        ops = InertiaOps(np.diag([1.0, 2.0, 3.0]))
        ob, ot, om = omega_from_state(np.array([0.0, 0.0, 3.0]),
                                      np.array([0.0, 0.0, 1.0]), ops)
        assert np.allclose(ob, [0, 0, 1.0], atol=1e-15)
        assert np.allclose(ot, [0, 0, -1.0 / 3.0], atol=1e-15)
        assert np.allclose(om, [0, 0, 2.0 / 3.0], atol=1e-15)

    def test_tilde_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            S = rng.normal(size=(3, 3))
            I = S @ S.T + 3 * np.eye(3)
            ops = InertiaOps(I)
            m_f = rng.normal(size=3)
            _, ot, _ = omega_from_state(rng.normal(size=3), m_f, ops)
            assert np.linalg.norm(I @ ot + m_f) <= 1e-13 * np.linalg.norm(m_f)


class TestMomentumUpdates:
    def test_rotation_about_self_is_fixed(self):
        A = np.array([0.0, 0.0, 2.5])
        out = advance_angular_momentum(A, np.array([0.0, 0.0, 4.0]), 0.1)
        assert np.allclose(out, A, atol=1e-15)

    def test_closed_form(self):
        omega = np.array([0.0, 0.0, 0.7])
        A = np.array([1.0, 0.0, 0.0])
        dt = 0.3
        out = advance_angular_momentum(A, omega, dt)
        assert np.allclose(out, [np.cos(0.7 * dt), -np.sin(0.7 * dt), 0.0],
                           atol=1e-15)

    def test_modulus_conserved_many_steps(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=3)
        L = rng.normal(size=3)
        a0 = np.linalg.norm(A)
        l0 = np.linalg.norm(L)
        for _ in range(20000):
            om = rng.normal(size=3)
            dt = rng.uniform(1e-4, 1e-2)
            A = advance_angular_momentum(A, om, dt)
            L = advance_linear_momentum(L, om, dt)
        assert abs(np.linalg.norm(A) / a0 - 1.0) <= 1e-12
        assert abs(np.linalg.norm(L) / l0 - 1.0) <= 1e-12

    def test_zero_momentum_stays_zero(self):
        out = advance_linear_momentum(np.zeros(3), np.array([1, 2, 3.0]), 0.1)
        assert np.all(out == 0.0)

    def test_translational_velocity(self):
        m, m_F = 2.0, 0.5
        y_F = np.array([0.1, 0.0, 0.0])
        omega = np.array([0.0, 0.0, 2.0])
        xi = translational_velocity(np.zeros(3), omega, m, m_F, y_F)
        assert np.allclose(xi, -m_F * np.cross(omega, y_F) / m)


class TestOrientation:
    def test_identity_at_rest(self):
        Q = rodrigues(np.array([0.3, 0.1, -0.2]))
        assert np.array_equal(advance_orientation(Q, np.zeros(3), 0.1), Q)

    def test_constant_spin_closed_form(self):
        omega = np.array([0.0, 0.0, 1.3])
        Q = np.eye(3)
        dt = 0.01
        for _ in range(200):
            Q = advance_orientation(Q, omega, dt)
        assert np.allclose(Q, rodrigues(omega * 2.0), atol=1e-12)

    def test_orthonormalize(self):
        rng = np.random.default_rng(3)
        Q = rodrigues(rng.normal(size=3)) + 1e-6 * rng.normal(size=(3, 3))
        R = orthonormalize(Q)
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-14)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


class TestCoupledStep:
    def test_equilibrium_fixed_point(self):
        _, inertia, grid, ops, params = make_setup()
        lam = ops.lams
        for j in range(3):
            A = 0.8 * lam[j] * ops.axes[:, j]
            state = make_coupled_state(0.0, zero_state(grid),
                                       RigidState(A=A.copy(), L=np.zeros(3),
                                                  Q=np.eye(3)), ops)
            dt, _ = stable_dt(state.fluid, params)
            new, report = coupled_step(state, dt, ops, params)
            assert report.picard_iterations <= 2
            assert np.linalg.norm(new.rigid.A - A) <= 1e-12 * np.linalg.norm(A)
            assert np.linalg.norm(new.omega - state.omega) <= 1e-12 * np.linalg.norm(state.omega)
            assert np.all(new.fluid.u == 0.0)

    def test_cached_omegas_consistent(self):
        _, inertia, grid, ops, params = make_setup()
        fluid = initialize_velocity(grid, InitSpec(kind="random", seed=4,
                                                   amplitude=0.3))
        A = ops.apply(np.array([0.4, 0.1, 1.2]))
        state = make_coupled_state(0.0, fluid,
                                   RigidState(A=A, L=np.zeros(3), Q=np.eye(3)),
                                   ops)
        dt, _ = stable_dt(state.fluid, params)
        for _ in range(3):
            state, report = coupled_step(state, dt, ops, params)
            ob, ot, om = omega_from_state(state.rigid.A, state.m_f, ops)
            scale = max(np.linalg.norm(om), 1.0)
            assert np.linalg.norm(state.omega - om) <= 1e-13 * scale
            assert np.linalg.norm(state.omega_bar - ob) <= 1e-13 * scale
            assert np.linalg.norm(state.omega_tilde - ot) <= 1e-13 * scale

    def test_picard_residuals_decrease(self):
        _, inertia, grid, ops, params = make_setup(resolution=8)
        fluid = initialize_velocity(grid, InitSpec(kind="random", seed=5,
                                                   amplitude=0.4))
        A = ops.apply(np.array([0.5, 0.0, 2.0]))
        state = make_coupled_state(0.0, fluid,
                                   RigidState(A=A, L=np.zeros(3), Q=np.eye(3)),
                                   ops)
        dt, _ = stable_dt(state.fluid, params)
        # capture the residual history via a tight tolerance
        from cavityspin.coupling import PicardError
        try:
            _, report = coupled_step(state, dt, ops, params, picard_tol=1e-15,
                                     max_picard=8)
            residuals = None
        except PicardError as err:
            residuals = err.residuals
        if residuals is None:
            _, report = coupled_step(state, dt, ops, params)
            assert report.picard_residual <= 1e-10 * max(
                np.linalg.norm(state.omega), 1.0)
        else:
            assert all(residuals[i + 1] < residuals[i]
                       for i in range(len(residuals) - 1))

    def test_dry_run_matches_rigid_euler(self):
        _, inertia, grid, ops, params = make_setup()
        omega0 = np.array([1.0, 0.05, 0.6])
        A = ops.apply(omega0)
        state = make_coupled_state(0.0, zero_state(grid),
                                   RigidState(A=A, L=np.zeros(3), Q=np.eye(3)),
                                   ops)
        dt = 2e-4
        n = int(round(2.0 / dt))
        for _ in range(n):
            state, _ = coupled_step(state, dt, ops, params, dry_run=True)
        ref = rigid_euler_reference(ops.I, omega0, [0.0, 2.0])[-1]
        assert np.linalg.norm(state.omega - ref) <= 1e-6 * np.linalg.norm(ref)

    def test_inertial_momentum_paths_differ_at_dt_squared(self):
        # halving dt must shrink the worst inertial-momentum drift by ~4
        _, inertia, grid, ops, params = make_setup()
        omega0 = np.array([1.0, 0.05, 0.6])
        A0 = ops.apply(omega0)

        def worst_drift(dt, t_end=1.0):
            state = make_coupled_state(0.0, zero_state(grid),
                                       RigidState(A=A0.copy(), L=np.zeros(3),
                                                  Q=np.eye(3)), ops)
            worst = 0.0
            for _ in range(int(round(t_end / dt))):
                state, _ = coupled_step(state, dt, ops, params, dry_run=True)
                drift = np.linalg.norm(state.rigid.Q @ state.rigid.A - A0)
                worst = max(worst, drift)
            return worst / np.linalg.norm(A0)

        coarse = worst_drift(4e-3)
        fine = worst_drift(2e-3)
        assert coarse > 0
        assert coarse / fine >= 1.8
