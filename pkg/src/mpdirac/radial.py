"""Separated radial problem and the reduced 1D Hamiltonians, with the weight operator.

For a sector (l, n, m) with separation constant lam the radial equation is

    [d/dx + i P(x) Gamma1] v = V(x) v,
    P = a n / (r^2+a^2) + b m / (r^2+b^2) - omega,
    V = -i A Gamma1 [ (mass r + (b n + a m)/r - omega a b / r) Gamma0
                      + a b / (2 r^2) gamma1 + lam Gamma2 ],   A = r sqrt(Delta) / R.

With Phi' = P the substitution w = exp(i Phi Gamma1) v gives w' = W w where
W = exp(i Phi Gamma1) V exp(-i Phi Gamma1). W decays like exp(kappa_+ x) at
the horizon, so every solution has a limit w(-infinity).

The antiderivative Phi is available in closed form: with the partial
fractions (r^2+b^2)/Delta = A_+/(r^2-r_+^2) + A_-/(r^2-r_-^2) every term
integrates to a logarithm.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .angular import ModeIndex, lambda_of_omega
from .clifford import GammaRep, gamma_rep
from .errors import StepSizeUnderflow
from .geometry import BlackHole
from .potentials import radial_potentials, tortoise_map


def phase_rotation(phase, rep: GammaRep = None):
    """exp(i phase Gamma1) = cos(phase) I + i sin(phase) Gamma1, batched over phase."""
    rep = rep or gamma_rep()
    phase = np.asarray(phase, dtype=float)
    c = np.cos(phase)[..., None, None]
    s = np.sin(phase)[..., None, None]
    return c * np.eye(4) + 1j * s * rep.Gamma1


class _Partial:
    """Closed form antiderivatives of a (r^2+b^2)/Delta and b (r^2+a^2)/Delta in r."""

    def __init__(self, bh: BlackHole):
        self.bh = bh
        rp, rm = bh.r_plus, bh.r_minus
        gap = rp * rp - rm * rm
        a, b = bh.a, bh.b
        # coefficients of 1/(r^2 - r_+^2) and 1/(r^2 - r_-^2)
        self.phi = (a * (rp * rp + b * b) / gap, -a * (rm * rm + b * b) / gap)
        self.psi = (b * (rp * rp + a * a) / gap, -b * (rm * rm + a * a) / gap)

    def _logs(self, d):
        bh = self.bh
        rp, rm = bh.r_plus, bh.r_minus
        r = rp + d
        lp = (np.log(d) - np.log(r + rp)) / (2.0 * rp)
        if rm > 0.0:
            lm = (np.log(r - rm) - np.log(r + rm)) / (2.0 * rm)
        else:
            lm = -1.0 / r
        return lp, lm

    def integrals(self, d):
        lp, lm = self._logs(d)
        i_phi = self.phi[0] * lp + (self.phi[1] * lm if self.phi[1] != 0.0 else 0.0)
        i_psi = self.psi[0] * lp + (self.psi[1] * lm if self.psi[1] != 0.0 else 0.0)
        return i_phi, i_psi


@dataclass(frozen=True, eq=False)
class RadialSystem:
    bh: BlackHole
    mass: float
    mode: ModeIndex
    omega: float
    lam: float
    rep: GammaRep = field(default_factory=gamma_rep)
    zero_w: bool = False

    def _geom(self, d):
        bh = self.bh
        a, b = bh.a, bh.b
        r = bh.r_plus + d
        dl = (r * r - bh.r_minus ** 2) * d * (r + bh.r_plus)
        big_r = (r * r + a * a) * (r * r + b * b)
        return r, np.sqrt(dl) * r / big_r

    def offset(self, x):
        return tortoise_map(self.bh).offset_of_x(x)

    def p_of_offset(self, d):
        a, b = self.bh.a, self.bh.b
        r = self.bh.r_plus + np.asarray(d, dtype=float)
        n, m = self.mode.n, self.mode.m
        return a * n / (r * r + a * a) + b * m / (r * r + b * b) - self.omega

    def P(self, x):
        return self.p_of_offset(self.offset(x))

    def phase_of_offset(self, d, x):
        """Phi with Phi' = P, up to an additive constant."""
        i_phi, i_psi = _Partial(self.bh).integrals(np.asarray(d, dtype=float))
        return self.mode.n * i_phi + self.mode.m * i_psi - self.omega * np.asarray(x, dtype=float)

    def phase(self, x):
        x = np.asarray(x, dtype=float)
        return self.phase_of_offset(self.offset(x), x)

    def v_of_offset(self, d):
        bh, rep = self.bh, self.rep
        a, b = bh.a, bh.b
        n, m = self.mode.n, self.mode.m
        r, amp = self._geom(np.asarray(d, dtype=float))
        k0 = self.mass * r + (b * n + a * m) / r - self.omega * a * b / r
        k1 = a * b / (2.0 * r * r)
        inner = (k0[..., None, None] * rep.Gamma0 + k1[..., None, None] * rep.gamma1
                 + self.lam * rep.Gamma2)
        return -1j * amp[..., None, None] * (rep.Gamma1 @ inner)

    def V(self, x):
        return self.v_of_offset(self.offset(x))

    def w_of_offset(self, d, x):
        if self.zero_w:
            return np.zeros(np.shape(d) + (4, 4), dtype=complex)
        e = phase_rotation(self.phase_of_offset(d, x), self.rep)
        return e @ self.v_of_offset(d) @ e.conj().swapaxes(-1, -2)

    def W(self, x):
        x = np.asarray(x, dtype=float)
        return self.w_of_offset(self.offset(x), x)


def radial_system(bh: BlackHole, mass, mode: ModeIndex, omega, lam, rep: GammaRep = None) -> RadialSystem:
    return RadialSystem(bh, float(mass), mode, float(omega), float(lam), rep or gamma_rep())


def spectral_norm(mats):
    return np.linalg.norm(mats, ord=2, axis=(-2, -1))


def w_tail_integral(sys: RadialSystem, x_lo, x_hi, n=2001):
    """Trapezoid integral of the spectral norm of W over [x_lo, x_hi]."""
    x = np.linspace(x_lo, x_hi, n)
    return float(np.trapezoid(spectral_norm(sys.W(x)), x))


def _batched_w(systems, d, x):
    """W(x) for several systems of one black hole and sector, stacked on axis 0."""
    s0 = systems[0]
    if len(systems) == 1 or any(s.zero_w for s in systems):
        return np.stack([s.w_of_offset(d, x) for s in systems])
    bh, rep = s0.bh, s0.rep
    a, b = bh.a, bh.b
    n, m = s0.mode.n, s0.mode.m
    omega = np.array([s.omega for s in systems])
    lam = np.array([s.lam for s in systems])
    r, amp = s0._geom(d)
    i_phi, i_psi = _Partial(bh).integrals(d)
    e = phase_rotation(n * i_phi + m * i_psi - omega * x, rep)
    k0 = s0.mass * r + (b * n + a * m) / r - omega * a * b / r
    k1 = a * b / (2.0 * r * r)
    inner = (k0[:, None, None] * rep.Gamma0 + k1 * rep.gamma1 + lam[:, None, None] * rep.Gamma2)
    v = -1j * amp * (rep.Gamma1 @ inner)
    return e @ v @ e.conj().swapaxes(-1, -2)


def _batched_rhs(systems, n_state):
    """Right hand side for the joint flow of several systems sharing one x.

    The state holds log d followed by the flattened solutions of each system.
    """
    tm = tortoise_map(systems[0].bh)
    k = len(systems)

    def rhs(x, y):
        d = np.exp(y[0].real)
        out = np.empty_like(y)
        out[0] = 1.0 / tm._dx_dlogd(d)
        blk = y[1:].reshape(k, 4, -1)
        out[1:] = (_batched_w(systems, d, x) @ blk).ravel()
        return out

    return rhs


def _solve(systems, w0s, x_min, x_max, x_eval, rtol, atol, method="RK45"):
    tm = tortoise_map(systems[0].bh)
    w0s = [np.asarray(w, dtype=complex).reshape(4, -1) for w in w0s]
    n_state = w0s[0].size
    y0 = np.concatenate([[np.log(tm.offset_of_x(x_min)[0])]] + [w.ravel() for w in w0s]).astype(complex)
    sol = solve_ivp(_batched_rhs(systems, n_state), (x_min, x_max), y0, method=method,
                    t_eval=x_eval, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise StepSizeUnderflow(sol.message)
    cols = w0s[0].shape[1]
    out = [sol.y[1 + k * n_state: 1 + (k + 1) * n_state].T.reshape(-1, 4, cols)
           for k in range(len(systems))]
    return sol.t, np.exp(sol.y[0].real), out, sol.nfev


@dataclass(frozen=True, eq=False)
class RadialSolution:
    x: np.ndarray
    w: np.ndarray
    offset: np.ndarray
    tail_bound: float
    duhamel_defect: float
    nfev: int


def horizon_tail(sys: RadialSystem, x_min, decades=40.0):
    """Estimate of the integral of |W| over (-infinity, x_min)."""
    lo = x_min - decades / sys.bh.kappa_plus
    return w_tail_integral(sys, lo, x_min, 4001)


def integrate_radial(sys: RadialSystem, x_min, x_max, w0, n_out=2001, rtol=1e-10, atol=1e-14):
    """Solve w' = W w from w(x_min) = w0 and certify the horizon plateau.

    tail_bound is the integral of |W| over (-infinity, x_min) times |w0|,
    which bounds the error committed by imposing w0 at x_min instead of at
    -infinity (to first order). duhamel_defect is the largest violation of
    |w(x) - w0| <= int_{x_min}^x |W| sup|w| on the output grid; it is
    nonpositive up to rounding for a correct solution.
    """
    kp = sys.bh.kappa_plus
    if x_min > -20.0 / kp:
        raise ValueError(f"x_min must be <= -20/kappa_+ = {-20.0 / kp}")
    w0 = np.asarray(w0, dtype=complex)
    x_eval = np.linspace(x_min, x_max, n_out)
    x, d, (w,), nfev = _solve([sys], [w0], x_min, x_max, x_eval, rtol, atol)
    w = w[..., 0]
    nw = spectral_norm(sys.w_of_offset(d, x))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (nw[1:] + nw[:-1]) * np.diff(x))])
    sup = np.maximum.accumulate(np.linalg.norm(w, axis=1))
    dev = np.linalg.norm(w - w0, axis=1)
    defect = float(np.max(dev - cum * sup - 1e-9 * np.linalg.norm(w0)))
    tail = horizon_tail(sys, x_min) * float(np.linalg.norm(w0))
    return RadialSolution(x, w, d, tail, defect, nfev)


RIGHT_WINDOWS = ((5.0, 10.0), (10.0, 20.0), (20.0, 40.0), (40.0, 80.0))


@dataclass(frozen=True)
class ScanRow:
    omega: float
    lam: float
    plateau_norm: float
    ratios: tuple
    verdict: bool

    def as_row(self):
        return (self.omega, self.lam, self.plateau_norm) + tuple(self.ratios) + (
            "no L2 eigenfunction" if self.verdict else "inconclusive",)


def _scan_chunk(bh, mass, mode, omegas, lams, x_min, rtol, n_per_unit):
    systems = [radial_system(bh, mass, mode, w, l) for w, l in zip(omegas, lams)]
    kp = bh.kappa_plus
    x_max = RIGHT_WINDOWS[-1][1]
    n_out = int((x_max - x_min) * n_per_unit) + 1
    x_eval = np.linspace(x_min, x_max, n_out)
    eye = np.eye(4, dtype=complex)
    x, _, sols, _ = _solve(systems, [eye] * len(systems), x_min, x_max, x_eval, rtol, 1e-14)
    rows = []
    left = x <= x_min + 5.0 / kp
    for w, l, phi in zip(omegas, lams, sols):
        plateau = float(np.min(np.linalg.svd(phi[left], compute_uv=False)[:, -1]))
        dens = np.sum(np.abs(phi) ** 2, axis=(1, 2))
        masses = []
        for lo, hi in RIGHT_WINDOWS:
            sel = (x >= lo) & (x <= hi)
            masses.append(np.trapezoid(dens[sel], x[sel]))
        ratios = tuple(float(masses[k + 1] / masses[k]) for k in range(len(masses) - 1))
        verdict = plateau >= 0.99 and not all(q < 0.5 for q in ratios)
        rows.append(ScanRow(float(w), float(l), plateau, ratios, bool(verdict)))
    return rows


def bound_state_scan(bh: BlackHole, mass, mode: ModeIndex, omega_grid, x_min=None, rtol=1e-10,
                     n_theta=400, n_per_unit=20, threads=1, chunk=None, lams=None):
    """Numerical absence-of-eigenvalue scan for one sector.

    For every omega the 4x4 fundamental matrix Phi with Phi(x_min) = I is
    integrated to x = 80. plateau_norm is the smallest singular value of Phi
    over [x_min, x_min + 5/kappa_+]: a value near one means that every
    nonzero solution keeps a nonzero limit at the horizon and so is not
    square integrable there. The right ratios compare the Frobenius mass of
    Phi, which is the mass of a generic solution, over consecutive dyadic
    windows [5, 10], ..., [40, 80]. The verdict is positive when the plateau
    is at least 0.99 and the ratios are not all below 1/2.
    """
    kp = bh.kappa_plus
    if x_min is None:
        x_min = -20.0 / kp
    omegas = np.asarray(omega_grid, dtype=float)
    if lams is None:
        lams = [lambda_of_omega(mode.n, mode.m, mode.l, mass, bh, w, n_theta) for w in omegas]
    lams = np.asarray(lams, dtype=float)
    # the chunking fixes the shared step sequence, so it must not depend on threads
    chunk = chunk or 16
    pieces = [(omegas[i:i + chunk], lams[i:i + chunk]) for i in range(0, omegas.size, chunk)]
    work = lambda p: _scan_chunk(bh, mass, mode, p[0], p[1], x_min, rtol, n_per_unit)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, pieces))
    else:
        parts = [work(p) for p in pieces]
    return [row for part in parts for row in part]


def fundamental_determinant_check(sys: RadialSystem, x_min, x_max, rtol=1e-10):
    """max |det Phi(x) / exp(int tr W) - 1| for the fundamental matrix."""
    x_eval = np.linspace(x_min, x_max, 501)
    x, d, (phi,), _ = _solve([sys], [np.eye(4, dtype=complex)], x_min, x_max, x_eval, rtol, 1e-14)
    tr = np.trace(sys.w_of_offset(d, x), axis1=1, axis2=2)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (tr[1:] + tr[:-1]) * np.diff(x))])
    return float(np.max(np.abs(np.linalg.det(phi) / np.exp(integral) - 1.0)))


@dataclass(frozen=True, eq=False)
class WeightOperatorN:
    n: np.ndarray
    n_inv: np.ndarray
    m_norm2: np.ndarray

    def product_defect(self):
        return float(np.abs(self.n @ self.n_inv - np.eye(4)).max())

    def norm_defect(self):
        computed = spectral_norm(self.n_inv - np.eye(4)) ** 2
        return float(np.abs(computed - self.m_norm2).max())

    def min_eigenvalue(self):
        herm = 0.5 * (self.n_inv + self.n_inv.conj().swapaxes(-1, -2))
        return float(np.linalg.eigvalsh(herm).min())


def weight_operator(bh: BlackHole, x, theta, form="direct", rep: GammaRep = None) -> WeightOperatorN:
    """N and N^{-1} = I + M on the grid x (first axis) times theta (second axis).

    direct:  M = A (a sin Gamma3 + b cos Gamma5 + a b / r Gamma0)
    p_ratio: M = A ((a^2-b^2) sin cos / p Gamma3 + a b / p Gamma5 + a b / r Gamma0)
    In both cases M^2 = |M|^2 I with |M|^2 = Delta (r^2 q^2 + a^2 b^2) / R^2,
    q^2 = a^2 sin^2 + b^2 cos^2, and N = h^4 (I - M) with h^{-4} = 1 - |M|^2.
    """
    rep = rep or gamma_rep()
    a, b = bh.a, bh.b
    d = tortoise_map(bh).offset_of_x(np.atleast_1d(np.asarray(x, dtype=float)))
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    r = (bh.r_plus + d)[:, None]
    dl = (r * r - bh.r_minus ** 2) * d[:, None] * (r + bh.r_plus)
    big_r = (r * r + a * a) * (r * r + b * b)
    amp = r * np.sqrt(dl) / big_r
    s, c = np.sin(th)[None, :], np.cos(th)[None, :]
    if form == "direct":
        k3, k5 = a * s * np.ones_like(r), b * c * np.ones_like(r)
    elif form == "p_ratio":
        p = np.sqrt(a * a * c * c + b * b * s * s)
        if a == 0.0 and b == 0.0:
            k3 = k5 = np.zeros_like(r * s)
        else:
            k3 = (a * a - b * b) * s * c / p * np.ones_like(r)
            k5 = a * b / p * np.ones_like(r)
    else:
        raise ValueError(f"unknown form {form!r}")
    k0 = a * b / r * np.ones_like(s)
    m = amp[..., None, None] * (k3[..., None, None] * rep.Gamma3 + k5[..., None, None] * rep.Gamma5
                                + k0[..., None, None] * rep.Gamma0)
    q2 = a * a * s * s + b * b * c * c
    norm2 = dl * (r * r * q2 + (a * b) ** 2) / big_r ** 2
    h4 = 1.0 / (1.0 - norm2)
    eye = np.eye(4)
    return WeightOperatorN(h4[..., None, None] * (eye - m), eye + m, norm2)


def x_derivative(nx, dx, order=2):
    """Truncated central difference for d/dx on nx nodes (hard walls)."""
    if order == 2:
        coef = {1: 0.5}
    elif order == 4:
        coef = {1: 2.0 / 3.0, 2: -1.0 / 12.0}
    else:
        raise ValueError("order must be 2 or 4")
    diags, offs = [], []
    for k, v in coef.items():
        diags += [np.full(nx - k, v / dx), np.full(nx - k, -v / dx)]
        offs += [k, -k]
    return sp.diags(diags, offs, shape=(nx, nx), format="csr")


def reduced_h0_matrix(bh: BlackHole, mass, mode: ModeIndex, lam, grid, rep: GammaRep = None, order=2):
    """Gamma1 D_x + lam a(x) Gamma2 + b(x) Gamma0 + c(x) on a uniform x grid.

    D_x = -i d/dx. Nodes are interleaved with their four spinor components
    (index 4 j + k), so the second order stencil has bandwidth 7.
    """
    rep = rep or gamma_rep()
    grid = np.asarray(grid, dtype=float)
    dx = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), dx, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform")
    pots = radial_potentials(bh, mass, grid)
    nx = grid.size
    dmat = -1j * x_derivative(nx, dx, order)
    kin = sp.kron(dmat, sp.csr_matrix(rep.Gamma1))
    c = pots.c(mode.n, mode.m)
    local = (lam * pots.a_pot[:, None, None] * rep.Gamma2 + pots.b_pot[:, None, None] * rep.Gamma0
             + c[:, None, None] * np.eye(4))
    return (kin + sp.block_diag(list(local))).tocsr()
