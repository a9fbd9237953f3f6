import numpy as np
import pytest

from mpdirac import AxisModeError, ModeIndex, build_angular_operator, eigen, gamma_rep, lambda_of_omega
from mpdirac.angular import (ThetaGrid, anticommutator_defect, convergence_order, dirac_s3_matrix,
                             spectral_partner_check, spectrum_rows)
from oracles import staggered_oracle


def s3(n, m, size):
    return build_angular_operator(n, m, 0.0, 0.0, (0.0, 0.0), size, "S3")


@pytest.mark.parametrize("n,m", [(0.5, 0.5), (0.5, -0.5)])
def test_half_integer_spectrum(n, m):
    spectrum = eigen(s3(n, m, 1000), n_eigs=10)
    vals = np.abs(spectrum.eigenvalues)
    assert vals.size == 20
    assert np.max(np.abs(vals - (np.floor(vals) + 0.5))) < 1e-3
    assert vals.min() > 1.4
    assert spectrum.symmetry_defect() < 1e-10


@pytest.mark.parametrize("n,m", [(1.5, 0.5), (0.5, 2.5), (-1.5, 0.5), (2.5, -1.5)])
def test_sector_ladder(n, m):
    # S3 Dirac spectrum k + 3/2, restricted to k >= |n| + |m| - 1 in the (n, m) sector
    spectrum = eigen(s3(n, m, 800), n_eigs=4)
    want = abs(n) + abs(m) + 0.5 + np.arange(4)
    assert np.max(np.abs(spectrum.positive - want)) < 1e-3


def test_second_order_convergence():
    sizes = (250, 500, 1000)
    vals = np.array([eigen(s3(0.5, 0.5, s), n_eigs=10).positive for s in sizes]).T
    order = convergence_order(vals, sizes)
    assert np.all(np.abs(order - 2) < 0.3)


def test_exact_hermiticity_and_symmetry():
    op = build_angular_operator(0.5, 1.5, 0.7, 0.3, (1.3, 0.6), 64, "A")
    assert op.hermiticity_defect() == 0.0
    spectrum = eigen(op)
    assert spectrum.symmetry_defect() < 1e-12


def test_dense_and_sparse_agree():
    op = s3(0.5, 0.5, 120)
    assert np.allclose(eigen(op).positive[:5], eigen(op, n_eigs=5).positive, atol=1e-11)


def test_flattening_matches_continuum():
    """The grid operator on sqrt(sin cos) u reproduces sqrt(sin cos) D_S3 u with its connection term."""
    rep = gamma_rep()
    n, m = 0.5, 1.5
    vec = np.array([1.0, 0.3 - 0.2j, -0.5j, 0.8])

    def u(t):
        return np.sin(t) ** 1.5 * np.cos(t) ** 2.5 * np.exp(np.sin(2 * t)) * vec

    def du(t, h=1e-5):
        return (u(t + h) - u(t - h)) / (2 * h)

    def ds3(t):
        s, c = np.sin(t), np.cos(t)
        return (-1j * rep.Gamma2 @ (du(t) + 0.5 * (c / s - s / c) * u(t))
                + n / s * rep.Gamma3 @ u(t) + m / c * rep.Gamma5 @ u(t))

    errs = []
    for size in (100, 200):
        grid = ThetaGrid(size)
        vals = dirac_s3_matrix(grid, n, m) @ grid.sample(
            lambda th: np.sqrt(np.sin(th) * np.cos(th))[:, None] * np.array([u(t) for t in th]))
        idx, want = staggered_oracle(type("G", (), {"theta": grid})(), ds3, 0)
        errs.append(np.abs(vals[idx] - want).max() / np.abs(want).max())
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] > 3.5


def test_static_angular_operator_is_s3():
    a = build_angular_operator(0.5, 0.5, 0.9, 1.0, (0.0, 0.0), 80, "A").matrix
    b = s3(0.5, 0.5, 80).matrix
    assert abs(a - b).max() == 0.0


def test_forms_agree_without_rotation():
    a = build_angular_operator(0.5, 0.5, 0.9, 1.0, (0.0, 0.0), 40, "A", form="p_ratio").matrix
    b = build_angular_operator(0.5, 0.5, 0.9, 1.0, (0.0, 0.0), 40, "A", form="direct").matrix
    assert abs(a - b).max() == 0.0


def test_partner_and_gamma2_structure():
    op = s3(0.5, 0.5, 200)
    res = spectral_partner_check(op, eigen(op, n_eigs=4), count=3)
    for row in res["eigenpairs"]:
        assert row["partner_residual"] < 1e-10
        assert row["gamma2_form"] < 1e-10


def test_anticommutation_second_order():
    rep = gamma_rep()
    d0 = [anticommutator_defect(s3(0.5, 0.5, s), rep.Gamma0, 1.0) for s in (100, 200, 400)]
    d1 = [anticommutator_defect(s3(0.5, 0.5, s), rep.gamma1, -1.0) for s in (100, 200, 400)]
    for d in (d0, d1):
        assert d[2] < d[1] < d[0]
        assert np.log2(d[1] / d[2]) == pytest.approx(2.0, abs=0.3)
    assert anticommutator_defect(s3(0.5, 0.5, 100), rep.Gamma1, 1.0) < 1e-12


def test_lambda_of_omega_equal_rotation_shift(bh):
    # for a = b the perturbation is -(mass + omega) a (sin Gamma3 + cos Gamma5) and
    # moves the lowest (1/2, 1/2) eigenvalue to |3/2 - (mass + omega) a|
    assert lambda_of_omega(0.5, 0.5, 1, 0.0, (0.0, 0.0), 0.0, n_theta=400) == pytest.approx(1.5, abs=1e-4)
    for omega in (-2.0, -1.0, 0.0, 1.0, 2.0):
        lam = lambda_of_omega(0.5, 0.5, 1, 1.0, bh, omega, n_theta=400)
        assert lam == pytest.approx(abs(1.5 - (1.0 + omega)), abs=1e-4)


@pytest.mark.parametrize("bad", [1.0, 0.0, 0.25, 2])
def test_axis_mode_error(bad):
    with pytest.raises(AxisModeError):
        build_angular_operator(bad, 0.5, 0.0, 0.0, (0.0, 0.0), 32)
    with pytest.raises(AxisModeError):
        ModeIndex(1, 0.5, bad)


def test_mode_index_validation():
    with pytest.raises(AxisModeError):
        ModeIndex(0, 0.5, 0.5)
    assert ModeIndex(2, -0.5, 1.5).l == 2


def test_spectrum_rows_layout():
    spectrum = eigen(s3(0.5, 0.5, 64), n_eigs=3)
    rows = spectrum_rows(0.5, 0.5, 0.0, spectrum, 64, count=3)
    assert len(rows) == 6
    assert [r[2] for r in rows] == [1, 2, 3, -1, -2, -3]
    assert all(r[4] * np.sign(r[2]) > 0 for r in rows)
