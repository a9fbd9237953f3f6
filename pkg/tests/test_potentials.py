import numpy as np
import pytest

from mpdirac import gamma_rep, new_black_hole, radial_potentials, tortoise_map
from mpdirac.potentials import (h_minus_one, h_weight, local_fields, m_parts_local, m_potential,
                                mass_identity_defect, omega_decomposition_defect, v0)
from mpdirac.tortoise import decay_order_estimate, left_ladder, right_ladder
from oracles import Spacetime

MU, A, B, MASS, N, M = 10.0, 1.3, 0.6, 0.7, 0.5, 1.5
POINTS = [(5.0, 0.7), (3.5, 1.1), (7.0, 0.3)]


def scalar(r, th):
    return np.exp(-(r - 5) ** 2 / 3) * np.sin(th) ** 1.5 * np.cos(th) ** 2.5


VEC = np.array([1, 0.3 - 0.2j, -0.5j, 0.8])


def fd(f, x0, h):
    return (-f(x0 + 2 * h) + 8 * f(x0 + h) - 8 * f(x0 - h) + f(x0 - 2 * h)) / (12 * h)


def assembled(bh, r, th):
    """h D0 (h u) + M u from the package potentials, with continuum derivatives."""
    rep = gamma_rep()
    tm = tortoise_map(bh)
    x0 = float(tm.x_of_r(r))

    def hu(x, t):
        rr = float(tm.r_of_x(np.array([x]))[0])
        return float(h_weight(bh, np.array([x]), t)[0]) * scalar(rr, t) * VEC

    f0 = hu(x0, th)
    fx = fd(lambda x: hu(x, th), x0, 1e-3)
    ft = fd(lambda t: hu(x0, t), th, 1e-4)
    p = radial_potentials(bh, MASS, np.array([x0]))
    s, c = np.sin(th), np.cos(th)
    ds3 = -1j * rep.Gamma2 @ (ft + 0.5 * (c / s - s / c) * f0) + N / s * rep.Gamma3 @ f0 + M / c * rep.Gamma5 @ f0
    d0 = (-1j * rep.Gamma1 @ fx + p.a_pot[0] * ds3 + p.b_pot[0] * rep.Gamma0 @ f0
          + p.c(N, M)[0] * f0)
    h = float(h_weight(bh, np.array([x0]), th)[0])
    mm = m_potential(bh, MASS, N, M, np.array([x0]), th)[0]
    return h * d0 + mm @ (scalar(r, th) * VEC)


def test_v0_matches_frame_connection(bh_generic):
    st = Spacetime(MU, A, B)
    tm = tortoise_map(bh_generic)
    for r, th in POINTS:
        got = v0(bh_generic, 0.0, tm.x_of_r(np.array([r])), th)[0]
        want = st.v0(r, th)
        assert np.abs(got - want).max() < 1e-12 * max(1.0, np.abs(want).max())


def test_full_hamiltonian_matches_oracle(bh_generic):
    st = Spacetime(MU, A, B, MASS, N, M)
    for r, th in POINTS:
        want = st.h_lnrf(scalar, VEC, r, th)
        got = assembled(bh_generic, r, th)
        assert np.abs(got - want).max() < 1e-8 * np.abs(want).max()


def test_static_limit_collapse():
    bh = new_black_hole(4.0, 0.0, 0.0)
    x = np.linspace(-50, 50, 41)[:, None]
    th = np.linspace(0.1, 1.4, 9)[None, :]
    assert np.abs(h_minus_one(bh, x, th)).max() == 0.0
    assert np.abs(v0(bh, 1.0, x, th)).max() == 0.0
    assert np.abs(m_potential(bh, 1.0, 0.5, 1.5, x, th)).max() == 0.0
    p = radial_potentials(bh, 1.0, x[:, 0])
    assert np.abs(p.c_phi).max() == 0.0 and np.abs(p.c_psi).max() == 0.0


def test_static_radial_values():
    bh = new_black_hole(4.0, 0.0, 0.0)
    p = radial_potentials(bh, 2.0, np.linspace(-10, 10, 11))
    r = p.r
    assert np.allclose(p.a_pot, np.sqrt(r * r - 4) / r ** 2, rtol=1e-13)
    assert np.allclose(p.b_pot, 2.0 * np.sqrt(r * r - 4) / r, rtol=1e-13)


def test_weight_at_least_one(bh_generic):
    x = np.linspace(-80, 200, 300)[:, None]
    th = np.linspace(0.01, 1.56, 20)[None, :]
    assert np.all(h_weight(bh_generic, x, th) >= 1.0)
    assert np.all(h_minus_one(bh_generic, x, th) >= 0.0)


def test_potentials_hermitian(bh_generic):
    x = np.linspace(-30, 30, 25)[:, None]
    th = np.linspace(0.1, 1.4, 7)[None, :]
    mm = m_potential(bh_generic, MASS, N, M, x, th)
    assert np.abs(mm - np.conj(np.swapaxes(mm, -1, -2))).max() == 0.0
    vv = v0(bh_generic, MASS, x, th)
    assert np.abs(vv - np.conj(np.swapaxes(vv, -1, -2))).max() < 1e-15


def test_decomposition_identities(bh_generic):
    x = np.linspace(-40, 100, 200)[:, None]
    th = np.linspace(0.05, 1.5, 11)[None, :]
    assert omega_decomposition_defect(bh_generic, x, th) < 1e-12
    assert mass_identity_defect(bh_generic, MASS, x, th) < 1e-12


def test_horizon_limits(bh_generic):
    p = radial_potentials(bh_generic, MASS, np.array([-400.0]))
    oa = A / (bh_generic.r_plus ** 2 + A * A)
    ob = B / (bh_generic.r_plus ** 2 + B * B)
    assert p.c_phi[0] == pytest.approx(oa, rel=1e-12)
    assert p.c_psi[0] == pytest.approx(ob, rel=1e-12)
    assert p.a_pot[0] < 1e-40 and p.b_pot[0] < 1e-40


def test_decay_orders(bh):
    kp = bh.kappa_plus
    xr, xl = right_ladder(bh), left_ladder(bh)
    pr = radial_potentials(bh, 1.0, xr)
    pl = radial_potentials(bh, 1.0, xl)
    assert decay_order_estimate(pr.a_pot, xr, "+").exponent == pytest.approx(-1, abs=0.05)
    assert decay_order_estimate(pl.a_pot, xl, "-").exponent / kp == pytest.approx(1, abs=0.05)
    assert decay_order_estimate(pl.a_residual, xl, "-").exponent / kp == pytest.approx(3, abs=0.45)
    assert decay_order_estimate(pl.c_phi_offset, xl, "-").exponent / kp == pytest.approx(2, abs=0.2)
    assert decay_order_estimate(h_minus_one(bh, xr, 1.0), xr, "+").exponent == pytest.approx(-2, abs=0.2)
    mphi, mpsi, m0 = m_parts_local(local_fields(bh, xr, 1.0), 1.0, gamma_rep())
    mm = np.abs(0.5 * mphi + 0.5 * mpsi + m0).max(axis=(-2, -1))
    assert decay_order_estimate(mm, xr, "+").exponent == pytest.approx(-2, abs=0.2)


def test_far_field_finite(bh):
    p = radial_potentials(bh, 1.0, np.array([-2000.0, 1e6]))
    assert np.all(np.isfinite([p.a_pot, p.b_pot, p.c_phi, p.c_psi]))
    # the residual a - a_minus exp(kappa x) is a horizon-side quantity
    assert np.isfinite(p.a_residual[0])
