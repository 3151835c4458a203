import numpy as np
import pytest

from cavityspin.fluid import (
    CflError,
    FluidParams,
    FluidState,
    InitSpec,
    MacGrid,
    _gradient_square_sum,
    dissipation_rate,
    div_tolerance,
    divergence,
    explicit_rate,
    fluid_angular_momentum,
    fluid_kinetic_energy,
    initialize_velocity,
    make_grid,
    mean_velocity,
    project,
    project_state,
    stable_dt,
    step_fluid,
    zero_state,
)
from cavityspin.geometry import GeometryError, GeometrySpec, compute_mass_properties

NU = 0.7


def make_setup(resolution=(8, 6, 5), offset=(0.0, 0.0, 0.0)):
    spec = GeometrySpec(outer_half_extents=(0.7, 0.6, 0.5),
                        cavity_half_extents=(0.5, 0.45, 0.35),
                        cavity_offset=offset, rho_B=2.0, nu=NU)
    inertia = compute_mass_properties(spec)
    grid = make_grid(spec, inertia, resolution)
    return spec, inertia, grid


def random_state(grid, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    state = zero_state(grid)
    state.u[1:-1, :, :] = scale * rng.standard_normal(state.u[1:-1].shape)
    state.v[:, 1:-1, :] = scale * rng.standard_normal(state.v[:, 1:-1].shape)
    state.w[:, :, 1:-1] = scale * rng.standard_normal(state.w[:, :, 1:-1].shape)
    return state


# -- loop oracles ------------------------------------------------------------


def oracle_rate(grid, comps, Omega, Od, nu, comp):
    """Straightforward per-face evaluation of the explicit update."""
    n = grid.n
    h = grid.h

    def value(c, i, j, k):
        idx = [i, j, k]
        sign = 1.0
        a = comps[c]
        for t in range(3):
            if t == c:
                continue
            if idx[t] < 0:
                idx[t] = 0
                sign = -sign
            elif idx[t] >= a.shape[t]:
                idx[t] = a.shape[t] - 1
                sign = -sign
        return sign * a[tuple(idx)]

    shape = list(comps[comp].shape)
    shape[comp] -= 2
    out = np.zeros(shape)
    ranges = [range(n[a] + 1)[1:-1] if a == comp else range(n[a])
              for a in range(3)]
    for i in ranges[0]:
        for j in ranges[1]:
            for k in ranges[2]:
                f = (i, j, k)
                pos = [grid.corner[a]
                       + (f[a] + (0.0 if a == comp else 0.5)) * h[a]
                       for a in range(3)]
                center = value(comp, *f)
                lap = 0.0
                grad = [0.0] * 3
                for a in range(3):
                    ep = list(f)
                    ep[a] += 1
                    em = list(f)
                    em[a] -= 1
                    vp = value(comp, *ep)
                    vm = value(comp, *em)
                    lap += (vp - 2.0 * center + vm) / h[a] ** 2
                    grad[a] = (vp - vm) / (2.0 * h[a])
                vel = [0.0] * 3
                vel[comp] = center
                for m in range(3):
                    if m == comp:
                        continue
                    s = 0.0
                    for dl in (0, 1):
                        for dm in (0, 1):
                            idx = list(f)
                            idx[comp] = f[comp] - 1 + dl
                            idx[m] = f[m] + dm
                            s += comps[m][tuple(idx)]
                    vel[m] = s / 4.0
                adv = sum(vel[a] * grad[a] for a in range(3))
                c1, c2 = (comp + 1) % 3, (comp + 2) % 3
                cor = 2.0 * (Omega[c1] * vel[c2] - Omega[c2] * vel[c1])
                frc = Od[c1] * pos[c2] - Od[c2] * pos[c1]
                oi = [i, j, k]
                oi[comp] -= 1
                out[tuple(oi)] = nu * lap - adv - cor - frc
    return out


def oracle_gradient_square(grid, comps, include_walls=True):
    total = 0.0
    h = grid.h
    for comp in range(3):
        arr = comps[comp]
        for a in range(3):
            if a == comp:
                d = np.diff(arr, axis=a) / h[a]
                total += float(np.sum(d * d))
            else:
                inner = [slice(None)] * 3
                inner[comp] = slice(1, -1)
                Ai = arr[tuple(inner)]
                d = np.diff(Ai, axis=a) / h[a]
                total += float(np.sum(d * d))
                if include_walls:
                    for edge in (0, Ai.shape[a] - 1):
                        sl = [slice(None)] * 3
                        sl[a] = edge
                        e = Ai[tuple(sl)] / h[a]
                        total += 2.0 * float(np.sum(e * e))
    return total * grid.cell_volume


# -- grid --------------------------------------------------------------------


class TestGrid:
    def test_spacing_matches_cavity(self):
        spec, inertia, grid = make_setup()
        for a in range(3):
            assert grid.h[a] * grid.n[a] == pytest.approx(
                2 * spec.cavity[a], rel=1e-15)

    def test_corner_follows_cavity_center(self):
        spec, inertia, grid = make_setup(offset=(0.05, -0.03, 0.02))
        assert np.allclose(np.asarray(grid.corner) + spec.cavity, inertia.y_F,
                           rtol=1e-14, atol=1e-16)

    def test_minimum_resolution(self):
        with pytest.raises(GeometryError):
            MacGrid(n=(3, 8, 8), h=(0.1, 0.1, 0.1), corner=(0, 0, 0))


# -- explicit update ---------------------------------------------------------


class TestExplicitRate:
    def test_matches_loop_oracle(self):
        _, _, grid = make_setup((6, 5, 4))
        state = random_state(grid, seed=3)
        Omega = np.array([0.4, -1.1, 0.7])
        Od = np.array([0.2, 0.05, -0.6])
        rates = explicit_rate(state, Omega, Od, NU)
        for comp in range(3):
            expect = oracle_rate(grid, state.components(), Omega, Od, NU, comp)
            scale = max(1.0, np.max(np.abs(expect)))
            assert np.max(np.abs(rates[comp] - expect)) < 1e-14 * scale

    def test_pure_diffusion_hand_stencil(self):
        # nu = 1, no rotation: the rate must be the plain 7-point Laplacian
        _, _, grid = make_setup((4, 4, 4))
        state = random_state(grid, seed=5)
        rates = explicit_rate(state, np.zeros(3), np.zeros(3), 1.0)
        for comp in range(3):
            expect = oracle_rate(grid, state.components(), np.zeros(3),
                                 np.zeros(3), 1.0, comp)
            scale = max(1.0, np.max(np.abs(expect)))
            assert np.max(np.abs(rates[comp] - expect)) < 1e-14 * scale

    def test_rest_state_with_spin_is_equilibrium(self):
        _, _, grid = make_setup()
        state = zero_state(grid)
        new, info = step_fluid(state, np.array([0.3, -0.2, 1.5]), np.zeros(3),
                               1e-3, FluidParams(nu=NU))
        assert np.all(new.u == 0.0)
        assert np.all(new.v == 0.0)
        assert np.all(new.w == 0.0)
        assert info.u_l2sq == 0.0
        assert info.cg_iters == 0

    def test_angular_acceleration_forcing(self):
        # from rest with Omega_dot = e3 the pre-projection increment is
        # -dt * (e3 x y); the stepped field is its projection
        _, _, grid = make_setup((6, 6, 6))
        state = zero_state(grid)
        dt = 1e-3
        Od = np.array([0.0, 0.0, 1.0])
        ru, rv, rw = explicit_rate(state, np.zeros(3), Od, NU)
        y1 = grid.centers(0)
        y2 = grid.centers(1)
        assert np.allclose(ru, y2[None, :, None], rtol=0, atol=1e-15)
        assert np.allclose(rv, -y1[:, None, None], rtol=0, atol=1e-15)
        assert np.max(np.abs(rw)) == 0.0

        new, _ = step_fluid(state, np.zeros(3), Od, dt, FluidParams(nu=NU))
        star = zero_state(grid)
        star.u[1:-1] = dt * ru
        star.v[:, 1:-1] = dt * rv
        pu, pv, pw, _, _ = project(grid, star.u, star.v, star.w)
        assert np.max(np.abs(new.u - pu)) < 1e-14
        assert np.max(np.abs(new.v - pv)) < 1e-14
        assert np.max(np.abs(new.w - pw)) < 1e-14


class TestStability:
    def test_cfl_rejects_large_dt(self):
        _, _, grid = make_setup()
        state = zero_state(grid)
        params = FluidParams(nu=NU, dt_safety=1.0)
        dt_max, binding = stable_dt(state, params)
        assert binding == "diffusion"
        with pytest.raises(CflError, match="diffusion"):
            step_fluid(state, np.zeros(3), np.zeros(3), 2 * dt_max, params)

    def test_advective_limit_reported(self):
        _, _, grid = make_setup()
        state = zero_state(grid)
        state.u[1:-1, :, :] = 1e6  # absurd speed: advection binds
        params = FluidParams(nu=NU)
        _, binding = stable_dt(state, params)
        assert binding == "advection-axis-1"


# -- projection --------------------------------------------------------------


class TestProjection:
    def test_divergence_free_input_unchanged(self):
        _, _, grid = make_setup()
        state = project_state(random_state(grid, seed=1))
        u, v, w, phi, _ = project(grid, state.u, state.v, state.w)
        scale = np.max(np.abs(state.u))
        assert np.max(np.abs(u - state.u)) < 1e-10 * scale
        assert np.max(np.abs(phi - phi.mean())) < 1e-9 * scale

    def test_gradient_field_annihilated(self):
        _, _, grid = make_setup()
        rng = np.random.default_rng(2)
        phi = rng.standard_normal(grid.n)
        star = zero_state(grid)
        star.u[1:-1, :, :] = (phi[1:] - phi[:-1]) / grid.h[0]
        star.v[:, 1:-1, :] = (phi[:, 1:] - phi[:, :-1]) / grid.h[1]
        star.w[:, :, 1:-1] = (phi[:, :, 1:] - phi[:, :, :-1]) / grid.h[2]
        u, v, w, _, _ = project(grid, star.u, star.v, star.w)
        scale = max(np.max(np.abs(a)) for a in (star.u, star.v, star.w))
        for a in (u, v, w):
            assert np.max(np.abs(a)) < 1e-9 * scale

    def test_divergence_reduced_below_tolerance(self):
        _, _, grid = make_setup()
        state = random_state(grid, seed=4)
        u, v, w, _, _ = project(grid, state.u, state.v, state.w)
        div = divergence(grid, u, v, w)
        assert np.max(np.abs(div)) <= div_tolerance(grid, u, v, w)

    def test_idempotence(self):
        _, _, grid = make_setup()
        once = project_state(random_state(grid, seed=6))
        twice = project_state(once)
        scale = np.max(np.abs(once.u))
        for a, b in zip(once.components(), twice.components()):
            assert np.max(np.abs(a - b)) < 1e-10 * scale


# -- initial fields ----------------------------------------------------------


class TestInitialize:
    def test_zero(self):
        _, _, grid = make_setup()
        state = initialize_velocity(grid, InitSpec(kind="zero"))
        assert fluid_kinetic_energy(state) == 0.0

    def test_random_solenoidal(self):
        _, _, grid = make_setup()
        amp = 0.4
        state = initialize_velocity(grid, InitSpec(kind="random", seed=1,
                                                   amplitude=amp))
        div = divergence(grid, *state.components())
        assert np.max(np.abs(div)) <= 10 * div_tolerance(grid, *state.components())
        assert fluid_kinetic_energy(state) == pytest.approx(
            amp * amp * grid.volume, rel=1e-12)

    def test_random_is_seeded(self):
        _, _, grid = make_setup()
        a = initialize_velocity(grid, InitSpec(kind="random", seed=9, amplitude=1.0))
        b = initialize_velocity(grid, InitSpec(kind="random", seed=9, amplitude=1.0))
        c = initialize_velocity(grid, InitSpec(kind="random", seed=10, amplitude=1.0))
        assert np.array_equal(a.u, b.u)
        assert not np.array_equal(a.u, c.u)

    def test_vortex_momentum_axis(self):
        _, _, grid = make_setup((8, 8, 8))
        state = initialize_velocity(grid, InitSpec(kind="vortex", axis=3,
                                                   amplitude=0.5))
        m = fluid_angular_momentum(state)
        assert abs(m[2]) > 0
        assert abs(m[0]) < 1e-10 * abs(m[2])
        assert abs(m[1]) < 1e-10 * abs(m[2])

    def test_bad_amplitude(self):
        with pytest.raises(GeometryError):
            InitSpec(kind="random", amplitude=0.0)

    def test_no_slip_faces_exact_zero(self):
        _, _, grid = make_setup()
        state = initialize_velocity(grid, InitSpec(kind="random", seed=2,
                                                   amplitude=1.0))
        assert np.all(state.u[0] == 0.0) and np.all(state.u[-1] == 0.0)
        assert np.all(state.v[:, 0] == 0.0) and np.all(state.v[:, -1] == 0.0)
        assert np.all(state.w[:, :, 0] == 0.0) and np.all(state.w[:, :, -1] == 0.0)


# -- functionals -------------------------------------------------------------


class TestFunctionals:
    def test_zero_field(self):
        _, _, grid = make_setup()
        state = zero_state(grid)
        assert fluid_kinetic_energy(state) == 0.0
        assert np.all(fluid_angular_momentum(state) == 0.0)
        assert np.all(mean_velocity(state) == 0.0)
        assert dissipation_rate(state, NU) == 0.0

    def test_constant_field_energy(self):
        _, _, grid = make_setup()
        state = zero_state(grid)
        c = np.array([0.3, -0.2, 0.5])
        state.u[:] = c[0]
        state.v[:] = c[1]
        state.w[:] = c[2]
        assert fluid_kinetic_energy(state) == pytest.approx(
            np.dot(c, c) * grid.volume, rel=1e-14)
        assert np.allclose(mean_velocity(state), c, rtol=1e-14)

    def test_angular_momentum_reference_point(self):
        # post-projection fields have near-zero mean, so the moment is
        # insensitive to the reference point up to that tolerance
        _, _, grid = make_setup()
        state = project_state(random_state(grid, seed=8))
        shift = np.array([0.21, -0.13, 0.08])
        m0 = fluid_angular_momentum(state)
        m1 = fluid_angular_momentum(state, origin=shift)
        mean = mean_velocity(state) * grid.volume
        expected_gap = np.cross(shift, mean)
        assert np.allclose(m0 - m1, -expected_gap + np.cross(-shift, [0, 0, 0]),
                           atol=np.linalg.norm(mean) * np.linalg.norm(shift)
                           + 1e-12) or np.allclose(m1 - m0, -expected_gap,
                                                   atol=1e-12)
        # and the gap itself is at quadrature-noise level
        assert np.linalg.norm(m1 - m0) <= 10 * np.linalg.norm(shift) * (
            np.linalg.norm(mean) + 1e-12)

    def test_mean_velocity_small_after_projection(self):
        _, _, grid = make_setup()
        state = project_state(random_state(grid, seed=11))
        diam = np.linalg.norm([grid.n[a] * grid.h[a] for a in range(3)])
        tol = 10 * div_tolerance(grid, *state.components()) * diam
        assert np.linalg.norm(mean_velocity(state)) <= tol

    def test_gradient_square_matches_loop_oracle(self):
        _, _, grid = make_setup((6, 5, 4))
        state = random_state(grid, seed=12)
        mine = _gradient_square_sum(grid, state.components())
        ref = oracle_gradient_square(grid, state.components())
        assert mine == pytest.approx(ref, rel=1e-14)

    def test_linear_shear_stencil(self):
        # u1 = gamma * y2 on every stored face, walls ignored: every interior
        # y-difference of u is exactly gamma
        _, _, grid = make_setup((8, 8, 8))
        gamma = 0.7
        state = zero_state(grid)
        y2 = grid.centers(1)
        state.u[:] = gamma * y2[None, :, None]
        interior = _gradient_square_sum(grid, state.components(),
                                        include_walls=False)
        n1, n2, n3 = grid.n
        expected = gamma ** 2 * (n1 - 1) * (n2 - 1) * n3 * grid.cell_volume
        assert 2 * NU * interior == pytest.approx(2 * NU * expected, rel=1e-12)

    def test_dissipation_grid_convergence(self):
        spec = GeometrySpec(outer_half_extents=(0.7, 0.6, 0.5),
                            cavity_half_extents=(0.5, 0.45, 0.35),
                            cavity_offset=(0, 0, 0), rho_B=2.0, nu=NU)
        inertia = compute_mass_properties(spec)
        L = 2 * spec.cavity
        target = (np.pi ** 2 / 8.0) * np.prod(L) * np.sum(1.0 / L ** 2)
        errs = []
        for n in (8, 16, 32):
            grid = make_grid(spec, inertia, n)
            state = zero_state(grid)
            xi0 = (grid.faces(0) - grid.corner[0]) / L[0]
            xi1 = (grid.centers(1) - grid.corner[1]) / L[1]
            xi2 = (grid.centers(2) - grid.corner[2]) / L[2]
            state.u[:] = (np.sin(np.pi * xi0)[:, None, None]
                          * np.sin(np.pi * xi1)[None, :, None]
                          * np.sin(np.pi * xi2)[None, None, :])
            grad_sq = _gradient_square_sum(grid, state.components())
            errs.append(abs(grad_sq - target))
        assert errs[0] > errs[1] > errs[2]

    def test_coriolis_does_no_work_pointwise(self):
        from cavityspin.fluid import _center_velocity
        _, _, grid = make_setup()
        state = project_state(random_state(grid, seed=13))
        Omega = np.array([0.8, -0.5, 1.2])
        uc, vc, wc = _center_velocity(state)
        cx = 2 * (Omega[1] * wc - Omega[2] * vc)
        cy = 2 * (Omega[2] * uc - Omega[0] * wc)
        cz = 2 * (Omega[0] * vc - Omega[1] * uc)
        dot = cx * uc + cy * vc + cz * wc
        scale = 2 * np.linalg.norm(Omega) * (uc * uc + vc * vc + wc * wc)
        assert np.max(np.abs(dot)) <= 1e-14 * max(np.max(scale), 1e-300)


# -- stepping invariants -----------------------------------------------------


class TestSteppingInvariants:
    def test_no_slip_after_steps(self):
        _, _, grid = make_setup()
        params = FluidParams(nu=NU)
        state = initialize_velocity(grid, InitSpec(kind="random", seed=3,
                                                   amplitude=0.5))
        dt, _ = stable_dt(state, params)
        Omega = np.array([0.2, 0.1, 1.0])
        Od = np.array([0.05, -0.02, 0.1])
        diam = np.linalg.norm([grid.n[a] * grid.h[a] for a in range(3)])
        for _ in range(5):
            state, info = step_fluid(state, Omega, Od, dt, params)
            assert np.all(state.u[0] == 0.0) and np.all(state.u[-1] == 0.0)
            assert np.all(state.v[:, 0] == 0.0) and np.all(state.v[:, -1] == 0.0)
            assert np.all(state.w[:, :, 0] == 0.0) and np.all(state.w[:, :, -1] == 0.0)
            assert info.div_max <= max(info.div_tol, 1e-15)
            assert np.linalg.norm(info.mean_u) <= 10 * info.div_tol * diam

    def test_decaying_cavity_flow(self):
        # no rotation: kinetic energy strictly decreases every step
        _, _, grid = make_setup()
        params = FluidParams(nu=NU)
        state = initialize_velocity(grid, InitSpec(kind="random", seed=7,
                                                   amplitude=0.8))
        dt, _ = stable_dt(state, params)
        energy = fluid_kinetic_energy(state)
        for _ in range(20):
            state, info = step_fluid(state, np.zeros(3), np.zeros(3), dt, params)
            assert info.u_l2sq < energy
            energy = info.u_l2sq
