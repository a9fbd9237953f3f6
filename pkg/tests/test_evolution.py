import numpy as np
import pytest
import scipy.sparse as sp

from mpdirac import (DomainTooSmall, ModeIndex, SolveFailure, build_angular_operator, new_black_hole,
                     radial_potentials, reduced_h0_matrix, tortoise_map)
from mpdirac.evolution import (CayleyStepper, bump, build_d0_nm, build_full_h_nm, build_separable, decay_experiment,
                               evolve, gauge_map, gaussian_1d, local_energy, make_grid2d, reflection_free,
                               smootherstep, support_radius, weighted_norm)
from oracles import Spacetime, staggered_oracle

MU, A, B, MASS, N, M = 10.0, 1.3, 0.6, 0.7, 0.5, 1.5
VEC = np.array([1, 0.3 - 0.2j, -0.5j, 0.8])


def scalar(r, th):
    return np.exp(-(r - 5) ** 2 / 3) * np.sin(th) ** 1.5 * np.cos(th) ** 2.5


def test_smootherstep_profile():
    t = np.linspace(-0.5, 1.5, 2001)
    f = smootherstep(t)
    assert f.min() == 0.0 and f.max() == 1.0
    assert np.all(np.diff(f) >= 0)
    h = 1e-4
    for end in (0.0, 1.0):
        d1 = (smootherstep(end + h) - smootherstep(end - h)) / (2 * h)
        d2 = (smootherstep(end + h) - 2 * smootherstep(end) + smootherstep(end - h)) / h ** 2
        assert abs(d1) < 1e-7 and abs(d2) < 1e-3


def test_bump_support():
    x = np.linspace(-20, 20, 4001)
    chi = bump(x, 2.0, 8.0)
    assert np.all(chi[np.abs(x - 2) <= 4] == 1.0)
    assert np.all(chi[np.abs(x - 2) >= 8] == 0.0)


def test_cayley_preserves_norm_and_phase(bh):
    x = np.linspace(-30, 30, 401)
    h = reduced_h0_matrix(bh, 1.0, ModeIndex(1, 0.5, 0.5), 1.5, x)
    u0 = gaussian_1d(x, 0.0, 1.0, [1, 1j, 0, 0.5])
    series, _ = evolve(h, u0, 0.05, 2000, every=200)
    assert series.norm_drift() < 1e-12
    e, v = np.linalg.eigh(h.toarray())
    k = int(np.argmin(np.abs(e - 1.3)))
    dt, steps = 1e-3, 500
    _, u = evolve(h, v[:, k], dt, steps, every=steps)
    theta = 2 * np.arctan(e[k] * dt / 2) / dt
    assert np.linalg.norm(u - np.exp(-1j * theta * dt * steps) * v[:, k]) < 1e-10
    assert np.linalg.norm(u - np.exp(-1j * e[k] * dt * steps) * v[:, k]) < 1e-6


def test_weighted_stepper_conserves_weighted_norm():
    rng = np.random.default_rng(1)
    n = 40
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    d = sp.csr_matrix(a + a.conj().T)
    q = rng.normal(size=(n, n))
    w = sp.csr_matrix(q @ q.T + n * np.eye(n))
    u = rng.normal(size=n) + 0j
    st = CayleyStepper(d, 0.01, weight=w)
    n0 = weighted_norm(u, w)
    for _ in range(300):
        u = st.step(u)
    assert weighted_norm(u, w) == pytest.approx(n0, rel=1e-12)


def test_singular_system_raises():
    h = sp.csr_matrix(np.diag([1.0, 2.0]))
    w = sp.csr_matrix(np.zeros((2, 2)))
    with pytest.raises(SolveFailure):
        CayleyStepper(h * 0, 1.0, weight=w)


def test_local_energy_definition():
    u = np.array([3.0, 4.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]) + 0j
    chi = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    assert local_energy(u, chi, cell=0.25) == pytest.approx(2.5)


def test_reflection_free_geometry():
    r = support_radius(1.0)
    assert r == pytest.approx(np.sqrt(2 * np.log(1e12)))
    assert reflection_free(-60, 60, 0, 1, 0, 8, 80)
    assert not reflection_free(-30, 30, 0, 1, 0, 8, 80)


def test_decay_experiment_needs_room():
    with pytest.raises(DomainTooSmall):
        decay_experiment({"x_min": -20.0, "x_max": 20.0})


def test_decay_experiment_default():
    s = decay_experiment()
    assert s.energy_ratio(40.0) < 0.05
    assert s.rage_at(80.0) < s.rage_at(40.0)
    assert s.norm_drift() < 1e-12


def test_full_h_hermitian_and_static(bh_generic):
    grid = make_grid2d(np.linspace(-10, 10, 21), 16)
    h = build_full_h_nm(bh_generic, MASS, N, M, grid)
    assert abs(h - h.conj().T).max() < 1e-14
    st = new_black_hole(4.0, 0.0, 0.0)
    hs = build_full_h_nm(st, 0.0, N, M, grid)
    d0 = build_d0_nm(st, 0.0, N, M, grid)
    assert abs(hs - d0).max() == 0.0
    ds3 = build_angular_operator(N, M, 0.0, 0.0, st, 16, "S3").matrix
    p = radial_potentials(st, 0.0, grid.x)
    size = grid.theta.size
    for ix in (0, 7, 20):
        blk = hs[ix * size:(ix + 1) * size, ix * size:(ix + 1) * size]
        assert abs(blk - p.a_pot[ix] * ds3).max() == 0.0


def _window(bh, dx, half=20):
    x0 = float(tortoise_map(bh).x_of_r(5.0))
    return x0 + dx * np.arange(-half, half + 1)


def test_lnrf_grid_operator_matches_oracle(bh_generic):
    st = Spacetime(MU, A, B, MASS, N, M)
    tm = tortoise_map(bh_generic)
    errs = []
    for nt in (48, 96):
        grid = make_grid2d(_window(bh_generic, 0.02), nt)
        h = build_full_h_nm(bh_generic, MASS, N, M, grid)

        def u(x, th):
            r = tm.r_of_x(np.ravel(x)).reshape(np.shape(x))
            return (np.sqrt(np.sin(th) * np.cos(th)) * scalar(r, th))[..., None] * VEC

        hu = h @ grid.sample(u)
        r0 = float(tm.r_of_x(np.array([grid.x[20]]))[0])
        idx, want = staggered_oracle(grid, lambda t: st.h_lnrf(scalar, VEC, r0, t), 20)
        errs.append(np.abs(hu[idx] - want).max() / np.abs(want).max())
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] > 3.0


def test_separable_grid_operator_matches_oracle(bh_generic):
    st = Spacetime(MU, A, B, MASS, N, M)
    tm = tortoise_map(bh_generic)
    errs = []
    for nt in (48, 96):
        grid = make_grid2d(_window(bh_generic, 0.02), nt)
        d0, ninv = build_separable(bh_generic, MASS, N, M, grid)

        def v(x, th):
            r = tm.r_of_x(np.ravel(x)).reshape(np.shape(x))
            return (np.sqrt(np.sin(th) * np.cos(th)) * scalar(r, th))[..., None] * VEC

        hv = sp.linalg.spsolve(ninv.tocsc(), d0 @ grid.sample(v))
        r0 = float(tm.r_of_x(np.array([grid.x[20]]))[0])
        idx, want = staggered_oracle(grid, lambda t: st.h_separable(lambda r, th: scalar(r, th) * VEC, r0, t), 20)
        errs.append(np.abs(hv[idx] - want).max() / np.abs(want).max())
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] > 3.0


def test_gauge_map_matches_oracle(bh_generic):
    st = Spacetime(MU, A, B)
    for r, th in [(4.0, 0.4), (6.0, 1.0), (3.1, 0.05)]:
        assert np.abs(gauge_map(bh_generic, r, th) - st.gauge(r, th)).max() < 1e-12


def test_gauge_intertwines_pictures(bh_generic):
    """H (T v) = T (N D0sep v) pointwise, both sides from the frame oracle."""
    st = Spacetime(MU, A, B, MASS, N, M)
    for r, th in [(5.0, 0.7), (3.5, 1.1)]:
        lhs = st.h_lnrf_field(lambda rr, tt: st.gauge(rr, tt) @ (scalar(rr, tt) * VEC), r, th)
        rhs = st.gauge(r, th) @ st.h_separable(lambda rr, tt: scalar(rr, tt) * VEC, r, th)
        assert np.abs(lhs - rhs).max() < 1e-9 * np.abs(rhs).max()
