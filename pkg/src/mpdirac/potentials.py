"""Scalar and matrix potentials of the Dirac Hamiltonian H = h D0 h + M.

With R = (r^2+a^2)(r^2+b^2) the radial potentials are

    a(x) = r sqrt(Delta) / R,   b(x) = mass r^2 sqrt(Delta) / R,
    c_phi(x) = a / (r^2+a^2),   c_psi(x) = b / (r^2+b^2),

and the weight is h^4 = R^2 / (r^2 tau). The matrix part
M = M_phi n + M_psi m + M0 collects the remainders.

Every quantity is evaluated from the horizon offset d = r - r_+ so that the
deep horizon region keeps full relative precision. Differences that vanish
asymptotically (h - 1, c_phi - omega_a, a - a_- exp(kappa_+ x), mu r - sqrt(tau))
are rewritten in cancellation free form.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .clifford import GammaRep, gamma_rep
from .geometry import BlackHole, horizon_angular_velocities
from .tortoise import TortoiseMap


@lru_cache(maxsize=64)
def tortoise_map(bh: BlackHole) -> TortoiseMap:
    return TortoiseMap(bh)


class _Local:
    """Metric scalars at (r_+ + d, theta) with analytic first derivatives."""

    def __init__(self, bh: BlackHole, d, theta):
        mu, a, b = bh.params
        rp, rm = bh.r_plus, bh.r_minus
        d = np.asarray(d, dtype=float)
        th = np.asarray(theta, dtype=float)
        self.bh = bh
        self.d = d
        r = rp + d
        self.r = r
        self.s, self.c = np.sin(th), np.cos(th)
        s2, c2 = self.s ** 2, self.c ** 2
        self.ra = r * r + a * a
        self.rb = r * r + b * b
        self.R = self.ra * self.rb
        self.dl = (r * r - rm * rm) * d * (r + rp)
        self.sig = r * r + a * a * c2 + b * b * s2
        self.p2 = a * a * c2 + b * b * s2
        self.q2 = a * a * s2 + b * b * c2
        self.al = self.ra * self.sig + a * a * mu * s2
        self.be = self.rb * self.sig + b * b * mu * c2
        self.tau = self.dl * self.sig + mu * self.R
        self.sqtau = np.sqrt(self.tau)

    # derivatives with respect to r and theta
    def d_sig(self):
        a, b = self.bh.a, self.bh.b
        return 2.0 * self.r, 2.0 * (b * b - a * a) * self.s * self.c

    def d_beta(self):
        mu, a, b = self.bh.params
        r, s, c = self.r, self.s, self.c
        dr = 2.0 * r * (self.sig + self.rb)
        dth = 2.0 * s * c * (self.rb * (b * b - a * a) - b * b * mu)
        return dr, dth

    def d_tau(self):
        mu, a, b = self.bh.params
        r = self.r
        ddl = 2.0 * r * (2.0 * r * r + a * a + b * b - mu)
        dR = 2.0 * r * (2.0 * r * r + a * a + b * b)
        sr, sth = self.d_sig()
        return ddl * self.sig + self.dl * sr + mu * dR, self.dl * sth

    def d_omega_a(self):
        mu, a, b = self.bh.params
        tr, tth = self.d_tau()
        om = mu * a * self.rb / self.tau
        return mu * a * 2.0 * self.r / self.tau - om * tr / self.tau, -om * tth / self.tau

    def mu_r_minus_sqrt_tau(self):
        """mu r - sqrt(tau) = -Delta (mu + Sigma) / (mu r + sqrt(tau))."""
        mu = self.bh.mu
        return -self.dl * (mu + self.sig) / (mu * self.r + self.sqtau)

    def one_minus_h_inv4(self):
        """1 - h^-4 = Delta (r^2 q^2 + a^2 b^2) / R^2."""
        a, b = self.bh.a, self.bh.b
        return self.dl * (self.r ** 2 * self.q2 + (a * b) ** 2) / self.R ** 2


def local_fields(bh: BlackHole, x, theta=np.pi / 4) -> _Local:
    d = tortoise_map(bh).offset_of_x(np.asarray(x, dtype=float))
    d = d.reshape(np.shape(x)) if np.ndim(x) else d[0]
    return _Local(bh, d, theta)


@dataclass(frozen=True)
class RadialPotentials:
    x: np.ndarray
    r: np.ndarray
    offset: np.ndarray
    a_pot: np.ndarray
    b_pot: np.ndarray
    c_phi: np.ndarray
    c_psi: np.ndarray
    a_minus: float
    mass: float
    omega_a: float
    omega_b: float
    kappa_plus: float
    a_residual: np.ndarray
    c_phi_offset: np.ndarray
    c_psi_offset: np.ndarray

    def c(self, n, m):
        """Scalar potential c(x) = n c_phi + m c_psi of the (n, m) sector."""
        return n * self.c_phi + m * self.c_psi


def _a_times_exp(bh: BlackHole, tm: TortoiseMap, d):
    """log(a(x) exp(-kappa_+ x)) at offset d; the log(d) terms cancel exactly."""
    rp, rm = bh.r_plus, bh.r_minus
    a, b = bh.a, bh.b
    kp = bh.kappa_plus
    r = rp + d
    out = (np.log(r) + 0.5 * np.log(r * r - rm * rm) + np.log(r + rp)
           - np.log(r * r + a * a) - np.log(r * r + b * b) - kp * (r + tm.c0))
    if rm > 0.0:
        out = out + kp * tm.c_minus * (np.log(r - rm) - np.log(r + rm))
    return out


def _log_g_increment(bh: BlackHole, tm: TortoiseMap, d):
    """log g(r_+ + d) - log g(r_+) for g(r) = a(x) exp(-kappa_+ x), free of cancellation."""
    rp, rm = bh.r_plus, bh.r_minus
    a, b = bh.a, bh.b
    kp = bh.kappa_plus
    u = d * (2.0 * rp + d)  # r^2 - r_+^2
    out = (np.log1p(d / rp) + 0.5 * np.log1p(u / (rp * rp - rm * rm)) + np.log1p(d / (2.0 * rp))
           - np.log1p(u / (rp * rp + a * a)) - np.log1p(u / (rp * rp + b * b)) - kp * d)
    if rm > 0.0:
        out = out + kp * tm.c_minus * (np.log1p(d / (rp - rm)) - np.log1p(d / (rp + rm)))
    return out


def radial_potentials(bh: BlackHole, mass: float, grid) -> RadialPotentials:
    x = np.asarray(grid, dtype=float)
    tm = tortoise_map(bh)
    d = tm.offset_of_x(x).reshape(x.shape)
    loc = _Local(bh, d, 0.0)
    sq = np.sqrt(loc.dl)
    a_pot = loc.r * sq / loc.R
    b_pot = mass * loc.r ** 2 * sq / loc.R
    om_a, om_b = horizon_angular_velocities(bh)
    rp = bh.r_plus
    u = d * (loc.r + rp)
    c_phi = bh.a / loc.ra
    c_psi = bh.b / loc.rb
    c_phi_off = -bh.a * u / (loc.ra * (rp * rp + bh.a ** 2))
    c_psi_off = -bh.b * u / (loc.rb * (rp * rp + bh.b ** 2))
    a_minus = float(np.exp(_a_times_exp(bh, tm, 0.0)))
    inc = _log_g_increment(bh, tm, d)
    with np.errstate(over="ignore", invalid="ignore"):
        lead = a_minus * np.exp(bh.kappa_plus * x)
        a_res = np.where(inc > -0.5, lead * np.expm1(inc), a_pot - lead)
    return RadialPotentials(
        x=x, r=loc.r, offset=d, a_pot=a_pot, b_pot=b_pot, c_phi=c_phi, c_psi=c_psi,
        a_minus=a_minus, mass=float(mass), omega_a=om_a, omega_b=om_b,
        kappa_plus=bh.kappa_plus, a_residual=a_res,
        c_phi_offset=c_phi_off, c_psi_offset=c_psi_off,
    )


def _h_from_local(loc: _Local):
    eps = loc.one_minus_h_inv4()
    return np.exp(-0.25 * np.log1p(-eps)), np.expm1(-0.25 * np.log1p(-eps))


def h_weight(bh: BlackHole, x, theta):
    """The weight h = (R^2 / (r^2 tau))^(1/4) >= 1."""
    loc = local_fields(bh, x, theta)
    return _h_from_local(loc)[0]


def h_minus_one(bh: BlackHole, x, theta):
    """h - 1 evaluated without cancellation."""
    loc = local_fields(bh, x, theta)
    return _h_from_local(loc)[1]


def _outer(coef, mat):
    coef = np.asarray(coef)
    return coef[..., None, None] * mat


def v0_local(loc: _Local, rep: GammaRep):
    """Connection remainder V0 as (..., 4, 4) arrays."""
    mu, a, b = loc.bh.params
    r, s, c = loc.r, loc.s, loc.c
    dl, sig, be, tau = loc.dl, loc.sig, loc.be, loc.tau
    sdl = np.sqrt(dl)
    dor, doth = loc.d_omega_a()
    dbr, dbth = loc.d_beta()
    g1, g2, g3, g5 = rep.gamma1, rep.gamma2, rep.gamma3, rep.gamma5
    sqb = np.sqrt(be)
    sqs = np.sqrt(sig)
    v = _outer(-1j * sdl * loc.sqtau * s * dor / (4.0 * r * sqb * sqs), g1 @ g3)
    v = v + _outer(-1j * loc.sqtau * s * doth / (4.0 * sqb * sqs), g2 @ g3)
    v = v + _outer(1j * b * mu * loc.ra * sdl * c * dbr / (4.0 * r * sig * tau * sqb), g1 @ g5)
    v = v + _outer(1j * b * mu * dl * (b * b - a * a) * c * c * s / (2.0 * sig * tau * sqb), g2 @ g5)
    v = v + _outer(a * b * mu * dl * dbr * s * c / (4.0 * r * be * tau * sqs), g2)
    # 2 cot(theta) - d_theta(beta)/beta
    bracket = 2.0 * c / s - dbth / be
    v = v + _outer(a * b * mu * sdl * s * c / (4.0 * tau * sqs) * bracket, g1)
    return v


def m_parts_local(loc: _Local, mass: float, rep: GammaRep):
    """(M_phi, M_psi, M0) as (..., 4, 4) arrays."""
    mu, a, b = loc.bh.params
    r, s, c = loc.r, loc.s, loc.c
    dl, sig, be, tau = loc.dl, loc.sig, loc.be, loc.tau
    eye = np.eye(4)
    mrt = loc.mu_r_minus_sqrt_tau()
    # sqrt(Sigma beta / tau) - 1 and Sigma / sqrt(beta) - 1 without cancellation
    sb_minus_tau = (be * s * s * (sig * (b * b - a * a) - a * a * mu) + (a * b * mu * c * s) ** 2) / sig
    f_phi = sb_minus_tau / (loc.sqtau * (np.sqrt(sig * be) + loc.sqtau))
    s2_minus_be = sig * (a * a - b * b) * c * c - b * b * mu * c * c
    sqb = np.sqrt(be)
    f_psi = s2_minus_be / (sqb * (sig + sqb))
    sdt = np.sqrt(dl / tau)
    m_phi = _outer(a * loc.rb * mrt / (r * tau), eye) + _outer(sdt / s * f_phi, rep.Gamma3)
    m_psi = (_outer(b * loc.ra * mrt / (r * tau), eye)
             + _outer(-a * b * mu * np.sqrt(dl * sig) * s / (tau * sqb), rep.Gamma3)
             + _outer(sdt / c * f_psi, rep.Gamma5))
    sqs_minus_r = loc.p2 / (np.sqrt(sig) + r)
    m0 = v0_local(loc, rep) + _outer(mass * sdt * sqs_minus_r, rep.Gamma0)
    return m_phi, m_psi, m0


def v0(bh: BlackHole, mass: float, x, theta, rep: GammaRep = None):
    """V0 at tortoise coordinate x and angle theta. Independent of mass."""
    rep = rep or gamma_rep()
    return v0_local(local_fields(bh, x, theta), rep)


def m_potential(bh: BlackHole, mass: float, n, m, x, theta, rep: GammaRep = None):
    """M = M_phi n + M_psi m + M0, Hermitized against round-off."""
    rep = rep or gamma_rep()
    m_phi, m_psi, m0 = m_parts_local(local_fields(bh, x, theta), mass, rep)
    out = n * m_phi + m * m_psi + m0
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def omega_decomposition_defect(bh: BlackHole, x, theta) -> float:
    """max |Omega_a - (h^2 c_phi + M_phi scalar part)| relative to |Omega_a|."""
    loc = local_fields(bh, x, theta)
    mu, a, b = bh.params
    om = mu * a * loc.rb / loc.tau
    h = _h_from_local(loc)[0]
    rest = a * loc.rb * loc.mu_r_minus_sqrt_tau() / (loc.r * loc.tau)
    return float(np.max(np.abs(om - (h * h * a / loc.ra + rest)) / np.maximum(np.abs(om), 1e-300)))


def mass_identity_defect(bh: BlackHole, mass: float, x, theta) -> float:
    """Check mass sqrt(Delta Sigma / tau) = h^2 b(x) + mass sqrt(Delta/tau)(sqrt(Sigma) - r)."""
    loc = local_fields(bh, x, theta)
    h = _h_from_local(loc)[0]
    lhs = mass * np.sqrt(loc.dl * loc.sig / loc.tau)
    b_pot = mass * loc.r ** 2 * np.sqrt(loc.dl) / loc.R
    rhs = h * h * b_pot + mass * np.sqrt(loc.dl / loc.tau) * loc.p2 / (np.sqrt(loc.sig) + loc.r)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)))
