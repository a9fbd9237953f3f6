"""Unitary time evolution in the two Hamiltonian pictures, with local energy diagnostics.

One dimensional fields on an x grid are stored node major (index 4 j + k).
Two dimensional fields of an (n, m) sector live on the x grid times the
staggered theta grid of the angular module, with index ix * 4 N + local.

Two pictures of the same sector are assembled:
  LNRF:      H = h D0 h + M,  D0 = Gamma1 D_x + a(x) D_S3 + b(x) Gamma0 + c(x)
  separable: i N^{-1} dv/dt = D0sep v, with
      D0sep = Gamma1 D_x + A D_S3 + n (c_phi + b sqrt(Delta)/R Gamma0)
              + m (c_psi + a sqrt(Delta)/R Gamma0) + a b sqrt(Delta)/(2 r R) gamma1
              + mass (r^2 sqrt(Delta)/R Gamma0 - A (b sin Gamma3 + a cos Gamma5)),
      N^{-1} = I + A (a sin Gamma3 + b cos Gamma5 + a b / r Gamma0),  A = r sqrt(Delta)/R.
The pointwise map u = T v of gauge_map intertwines them and T^H T = N^{-1}.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import expm, logm

from .angular import ModeIndex, ThetaGrid, dirac_s3_matrix
from .clifford import GammaRep, gamma_rep
from .errors import DomainTooSmall, SolveFailure
from .geometry import BlackHole, lnrf_frame, point_scalars, separable_frame
from .potentials import local_fields, m_potential, radial_potentials, _h_from_local
from .radial import reduced_h0_matrix, x_derivative


def smootherstep(t):
    """6 t^5 - 15 t^4 + 10 t^3 clipped to [0, 1]; C^2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def bump(x, center, half_width):
    """Smooth cutoff equal to 1 on |x - center| <= half_width / 2 and 0 beyond half_width."""
    x = np.asarray(x, dtype=float)
    return smootherstep(2.0 * (1.0 - np.abs(x - center) / half_width))


@dataclass(frozen=True, eq=False)
class Grid2D:
    x: np.ndarray
    theta: ThetaGrid

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def size(self):
        return self.x.size * self.theta.size

    @property
    def cell(self):
        return self.dx * self.theta.h

    def per_x(self, values):
        """Repeat a per-x array over the angular unknowns."""
        return np.repeat(np.asarray(values), self.theta.size)

    def sample(self, func):
        """Sample func(x, theta) -> (..., 4) spinors on the grid (x varies slowest)."""
        tg = self.theta
        return tg.sample(lambda th: func(self.x[:, None], th[None, :])).ravel()


def make_grid2d(x, n_theta, rep: GammaRep = None) -> Grid2D:
    return Grid2D(np.asarray(x, dtype=float), ThetaGrid(n_theta, rep))


def _xfield(grid: Grid2D, func):
    """Sparse field of a matrix valued func(x, theta) -> (Nx, k, 4, 4)."""
    tg = grid.theta
    x = grid.x[:, None]
    f_prev = func(x, tg.theta_prev[None, :]) if tg.n > 1 else None
    return tg.field(func(x, tg.theta_upper[None, :]), func(x, tg.theta_lower[None, :]),
                    func(x, tg.theta_same[None, :]), f_prev, batch=grid.x.size)


def _x_kinetic(grid: Grid2D, order):
    tg = grid.theta
    g1 = tg.constant(tg.rep.Gamma1)
    dx = -1j * x_derivative(grid.x.size, grid.dx, order)
    return sp.kron(dx, g1, format="csr")


def build_d0_nm(bh: BlackHole, mass, n, m, grid: Grid2D, order=4):
    """D0 = Gamma1 D_x + a(x) D_S3 + b(x) Gamma0 + c(x) of the (n, m) sector."""
    tg = grid.theta
    pots = radial_potentials(bh, mass, grid.x)
    ds3 = dirac_s3_matrix(tg, n, m)
    g0 = tg.constant(tg.rep.Gamma0)
    out = (_x_kinetic(grid, order) + sp.kron(sp.diags(pots.a_pot), ds3)
           + sp.kron(sp.diags(pots.b_pot), g0)
           + sp.diags(grid.per_x(pots.c(n, m))))
    return out.tocsr()


def h_nodes(bh: BlackHole, grid: Grid2D):
    """h at every unknown, in the grid layout."""
    tg = grid.theta
    x = grid.x[:, None]
    hu = _h_from_local(local_fields(bh, x, tg.theta_upper[None, :]))[0]
    hl = _h_from_local(local_fields(bh, x, tg.theta_lower[None, :]))[0]
    nx = grid.x.size
    up = np.repeat(hu, 2, axis=1).reshape(nx, -1)
    lo = np.repeat(hl, 2, axis=1).reshape(nx, -1)
    return np.hstack([up, lo]).ravel()


def build_full_h_nm(bh: BlackHole, mass, n, m, grid: Grid2D, rep: GammaRep = None, order=4):
    """H = h D0 h + M for the (n, m) sector."""
    d0 = build_d0_nm(bh, mass, n, m, grid, order)
    h = sp.diags(h_nodes(bh, grid))
    rep = grid.theta.rep

    def mfun(x, th):
        return m_potential(bh, mass, n, m, x, th, rep)

    return (h @ d0 @ h + _xfield(grid, mfun)).tocsr()


def _sep_scalars(bh: BlackHole, x):
    pots = radial_potentials(bh, 0.0, x)
    r = pots.r
    a, b = bh.a, bh.b
    big_r = (r * r + a * a) * (r * r + b * b)
    sdl = pots.a_pot * big_r / r
    return pots, r, sdl / big_r


def build_separable(bh: BlackHole, mass, n, m, grid: Grid2D, order=4):
    """(D0sep, N^{-1}) of the separable picture on the grid."""
    tg = grid.theta
    rep = tg.rep
    a, b = bh.a, bh.b
    pots, r, q = _sep_scalars(bh, grid.x)
    amp = pots.a_pot
    ds3 = dirac_s3_matrix(tg, n, m)
    nx = grid.x.size
    rr = r[:, None, None, None]
    qq = q[:, None, None, None]
    aa = amp[:, None, None, None]

    def pointwise(x, th):
        s, c = np.sin(th)[..., None, None], np.cos(th)[..., None, None]
        k0 = qq * (b * n + a * m) + mass * rr * rr * qq
        out = (k0 * rep.Gamma0 + a * b * qq / (2.0 * rr) * rep.gamma1
               - mass * aa * (b * s * rep.Gamma3 + a * c * rep.Gamma5))
        return np.broadcast_to(out, (nx,) + np.shape(th)[1:] + (4, 4))

    def ninv(x, th):
        s, c = np.sin(th)[..., None, None], np.cos(th)[..., None, None]
        out = np.eye(4) + aa * (a * s * rep.Gamma3 + b * c * rep.Gamma5 + a * b / rr * rep.Gamma0)
        return np.broadcast_to(out, (nx,) + np.shape(th)[1:] + (4, 4))

    scal = n * pots.c_phi + m * pots.c_psi
    d0 = (_x_kinetic(grid, order) + sp.kron(sp.diags(amp), ds3)
          + sp.diags(grid.per_x(scal)) + _xfield(grid, pointwise))
    return d0.tocsr(), _xfield(grid, ninv).tocsr()


def gauge_map(bh: BlackHole, r, theta, rep: GammaRep = None):
    """Pointwise 4x4 map T(r, theta) with u = T v from the separable to the LNRF picture.

    T = w Delta^{-1/4} S K^{-1} Rot^{-1}, where
      w = (r^2 Delta Sigma tau / R^2)^{1/4},
      S is the spin lift of the Lorentz matrix L taking the LNRF frame to the
        separable frame, S = expm(1/4 w_AB gamma^A gamma^B), w = -logm(L) eta,
      K = sqrt((r + sqrt(Sigma))/2) I + i sqrt((sqrt(Sigma) - r)/2) gamma5,
      Rot = expm(alpha/2 Gamma3 Gamma5) with cos alpha = a cos / p, sin alpha = b sin / p.
    """
    rep = rep or gamma_rep()
    a, b = bh.a, bh.b
    s, c = np.sin(theta), np.cos(theta)
    ps = point_scalars(bh, r, theta)
    dl, sig, tau = float(ps.delta), float(ps.sigma), float(ps.tau)
    big_r = (r * r + a * a) * (r * r + b * b)
    w = (r * r * dl * sig * tau / big_r ** 2) ** 0.25
    lmat = separable_frame(bh, r, theta) @ np.linalg.inv(lnrf_frame(bh, r, theta))
    eta = np.diag([-1.0, 1.0, 1.0, 1.0, 1.0])
    gen = -np.real(logm(lmat)) @ eta
    gam = rep.lower
    sg = sum(0.25 * gen[i, j] * gam[i] @ gam[j] for i in range(5) for j in range(5))
    spin = expm(sg)
    ssig = np.sqrt(sig)
    kmat = np.sqrt((r + ssig) / 2.0) * np.eye(4) + 1j * np.sqrt((ssig - r) / 2.0) * rep.gamma5
    alpha = np.arctan2(b * s, a * c)
    rot = expm(0.5 * alpha * rep.Gamma3 @ rep.Gamma5)
    return w * dl ** -0.25 * spin @ np.linalg.inv(kmat) @ np.linalg.inv(rot)


def separable_to_lnrf(bh: BlackHole, grid: Grid2D, vfunc):
    """Sample u = T v on the grid for a continuous separable-picture spinor vfunc(x, theta)."""
    from .potentials import tortoise_map

    tm = tortoise_map(bh)

    def ufunc(x, th):
        xx, tt = np.broadcast_arrays(x, th)
        r = tm.r_of_x(xx.ravel()).reshape(xx.shape)
        v = vfunc(xx, tt)
        out = np.empty(v.shape, dtype=complex)
        for idx in np.ndindex(xx.shape):
            if np.any(v[idx] != 0):
                out[idx] = gauge_map(bh, float(r[idx]), float(tt[idx])) @ v[idx]
            else:
                out[idx] = 0.0
        return out

    return grid.sample(ufunc)


@dataclass(frozen=True, eq=False)
class DecaySeries:
    t: np.ndarray
    total_norm: np.ndarray
    local_energy: np.ndarray
    rage_avg: np.ndarray

    def norm_drift(self):
        return float(np.max(np.abs(self.total_norm / self.total_norm[0] - 1.0)))

    def energy_ratio(self, t=None):
        """|chi u(t)|^2 / |chi u(0)|^2, at the last recorded time by default."""
        le = self.local_energy[-1] if t is None else np.interp(t, self.t, self.local_energy)
        return float((le / self.local_energy[0]) ** 2)

    def rage_at(self, t):
        return float(np.interp(t, self.t, self.rage_avg))

    def rows(self):
        return list(zip(self.t, self.total_norm, self.local_energy, self.rage_avg))


class CayleyStepper:
    """(W + i dt/2 H) u' = (W - i dt/2 H) u with a reused sparse LU factorization.

    W is the identity or a Hermitian positive weight (the separable picture).
    The weighted norm u^H W u is conserved up to the linear solve accuracy.
    """

    def __init__(self, h, dt, weight=None):
        h = sp.csc_matrix(h)
        size = h.shape[0]
        w = sp.identity(size, format="csc") if weight is None else sp.csc_matrix(weight)
        self.weight = w
        self.rhs_op = (w - 0.5j * dt * h).tocsr()
        try:
            self.lu = spla.splu((w + 0.5j * dt * h).tocsc())
        except RuntimeError as exc:
            raise SolveFailure(str(exc)) from exc

    def step(self, u):
        out = self.lu.solve(self.rhs_op @ u)
        if not np.all(np.isfinite(out)):
            raise SolveFailure("non-finite value in Cayley step")
        return out


def weighted_norm(u, weight=None, cell=1.0):
    wu = u if weight is None else weight @ u
    return float(np.sqrt(cell * np.real(np.vdot(u, wu))))


def local_energy(u, chi, weight=None, cell=1.0):
    """|chi u| in the (weighted) grid norm; chi is given per unknown."""
    cu = chi * u
    return weighted_norm(cu, weight, cell)


def evolve(h, u0, dt, n_steps, chi=None, weight=None, cell=1.0, every=1):
    """Cayley evolution that records the norm together with the local energy.

    rage_avg(t) is (1/t) int_0^t |chi u|^2 by the trapezoid rule (its t = 0
    value is |chi u(0)|^2). Returns (DecaySeries, final field).
    """
    u = np.asarray(u0, dtype=complex).copy()
    chi = np.ones(u.size) if chi is None else np.asarray(chi, dtype=float)
    stepper = CayleyStepper(h, dt, weight)
    w = stepper.weight if weight is not None else None
    ts, norms, les = [0.0], [weighted_norm(u, w, cell)], [local_energy(u, chi, w, cell)]
    for k in range(1, n_steps + 1):
        u = stepper.step(u)
        if k % every == 0 or k == n_steps:
            ts.append(k * dt)
            norms.append(weighted_norm(u, w, cell))
            les.append(local_energy(u, chi, w, cell))
    t = np.array(ts)
    le2 = np.array(les) ** 2
    integ = np.concatenate([[0.0], np.cumsum(0.5 * (le2[1:] + le2[:-1]) * np.diff(t))])
    avg = np.where(t > 0, integ / np.where(t > 0, t, 1.0), le2[0])
    return DecaySeries(t, np.array(norms), np.array(les), avg), u


def gaussian_1d(x, center, width, polarization=None):
    """Gaussian data times a fixed spinor, truncated where it drops below 1e-12."""
    pol = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex) if polarization is None else np.asarray(polarization, complex)
    g = np.exp(-0.5 * ((np.asarray(x) - center) / width) ** 2)
    g[g < 1e-12] = 0.0
    return (g[:, None] * pol[None, :]).ravel()


def support_radius(width):
    """Half width of the Gaussian support after truncation at 1e-12."""
    return float(width * np.sqrt(2.0 * np.log(1e12)))


def reflection_free(x_lo, x_hi, center, width, chi_center, chi_half_width, t_final):
    """True if no wave leaving the initial support at speed 1 and reflected
    at a wall re-enters supp chi before t_final."""
    w = support_radius(width)
    right = (x_hi - (center + w)) + (x_hi - (chi_center + chi_half_width))
    left = ((center - w) - x_lo) + ((chi_center - chi_half_width) - x_lo)
    return min(right, left) > t_final


DEFAULT_DECAY = {
    "mu": 10.0, "a": 1.0, "b": 1.0, "mass": 1.0,
    "l": 1, "n": 0.5, "m": 0.5, "lam": 1.5,
    "x_min": -60.0, "x_max": 60.0, "dx": 0.05, "dt": 0.05, "t_final": 40.0,
    "center": 0.0, "width": 1.0, "chi_center": 0.0, "chi_half_width": 8.0,
    "stencil_order": 4, "every": 10,
}


def decay_experiment(config=None, bh: BlackHole = None):
    """H0 evolution of Gaussian data of one sector; runs to 2 t_final.

    The reflection-free condition is checked up to 2 t_final so that the
    RAGE averages at t_final and 2 t_final are both clean.
    """
    from .geometry import new_black_hole

    cfg = dict(DEFAULT_DECAY)
    cfg.update(config or {})
    if bh is None:
        bh = new_black_hole(cfg["mu"], cfg["a"], cfg["b"])
    t_end = 2.0 * cfg["t_final"]
    if not reflection_free(cfg["x_min"], cfg["x_max"], cfg["center"], cfg["width"],
                           cfg["chi_center"], cfg["chi_half_width"], t_end):
        raise DomainTooSmall("domain too small for a reflection free run to 2 t_final")
    nx = int(round((cfg["x_max"] - cfg["x_min"]) / cfg["dx"])) + 1
    x = np.linspace(cfg["x_min"], cfg["x_max"], nx)
    mode = ModeIndex(int(cfg["l"]), cfg["n"], cfg["m"])
    h = reduced_h0_matrix(bh, cfg["mass"], mode, cfg["lam"], x, order=int(cfg["stencil_order"]))
    u0 = gaussian_1d(x, cfg["center"], cfg["width"])
    chi = np.repeat(bump(x, cfg["chi_center"], cfg["chi_half_width"]), 4)
    n_steps = int(round(t_end / cfg["dt"]))
    series, _ = evolve(h, u0, cfg["dt"], n_steps, chi, cell=x[1] - x[0], every=int(cfg["every"]))
    return series
