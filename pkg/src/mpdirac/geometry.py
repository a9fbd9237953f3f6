"""Scalar and tensor functions of the five dimensional Myers-Perry metric.

Coordinates are ordered (t, r, theta, phi, psi). The line element is

    ds^2 = -dt^2 + (mu / Sigma) (dt - a sin^2 dphi - b cos^2 dpsi)^2
           + r^2 Sigma / Delta dr^2 + Sigma dtheta^2
           + (r^2 + a^2) sin^2 dphi^2 + (r^2 + b^2) cos^2 dpsi^2

with Sigma = r^2 + a^2 cos^2 + b^2 sin^2 and
Delta = (r^2 + a^2)(r^2 + b^2) - mu r^2 = (r^2 - r_-^2)(r^2 - r_+^2).
All functions accept numpy arrays and broadcast over r and theta.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ExtremalOrNaked


@dataclass(frozen=True)
class BlackHole:
    mu: float
    a: float
    b: float
    r_minus: float
    r_plus: float
    kappa_plus: float
    kappa_minus: float

    @property
    def params(self):
        return (self.mu, self.a, self.b)


def new_black_hole(mu: float, a: float, b: float) -> BlackHole:
    """Validate (mu, a, b) and compute horizons and surface gravities.

    The squared radii r_+-^2 are the roots of x^2 - (mu - a^2 - b^2) x + a^2 b^2.
    The larger root uses the sum form and the smaller one is recovered from
    the product of the roots, so neither suffers from cancellation.
    """
    mu, a, b = float(mu), float(a), float(b)
    if not all(np.isfinite([mu, a, b])) or mu <= 0:
        raise ExtremalOrNaked(f"need finite parameters with mu > 0, got {(mu, a, b)}")
    s = mu - a * a - b * b
    ab = abs(a * b)
    if not s > 2 * ab:
        raise ExtremalOrNaked(
            f"mu = {mu} must exceed a^2 + b^2 + 2|ab| = {a * a + b * b + 2 * ab}"
        )
    disc = np.sqrt((s - 2 * ab) * (s + 2 * ab))
    rp2 = 0.5 * (s + disc)
    rm2 = (a * b) ** 2 / rp2
    r_plus = float(np.sqrt(rp2))
    r_minus = float(np.sqrt(rm2))
    kappa_plus = r_plus * (rp2 - rm2) / ((rp2 + a * a) * (rp2 + b * b))
    if rm2 == 0.0:
        # r_- = 0 (also when (ab)^2 underflows): the formula below is 0/0 and
        # the convention is kappa_- = 0.
        kappa_minus = 0.0
    else:
        kappa_minus = r_minus * (rm2 - rp2) / ((rm2 + a * a) * (rm2 + b * b))
    bh = BlackHole(mu, a, b, r_minus, r_plus, float(kappa_plus), float(kappa_minus))
    scale = (rp2 + a * a) * (rp2 + b * b)
    if abs(delta_expanded(bh, r_plus)) > 1e-12 * scale:
        raise ExtremalOrNaked("horizon root check failed")
    return bh


def delta(bh: BlackHole, r):
    """Delta(r) in the factorized form (r^2 - r_-^2)(r - r_+)(r + r_+)."""
    r = np.asarray(r, dtype=float)
    return (r * r - bh.r_minus ** 2) * (r - bh.r_plus) * (r + bh.r_plus)


def delta_expanded(bh: BlackHole, r):
    """Delta(r) = (r^2 + a^2)(r^2 + b^2) - mu r^2."""
    r = np.asarray(r, dtype=float)
    return (r * r + bh.a ** 2) * (r * r + bh.b ** 2) - bh.mu * r * r


@dataclass(frozen=True)
class PointScalars:
    delta: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    tau: np.ndarray
    p: np.ndarray


def point_scalars(bh: BlackHole, r, theta) -> PointScalars:
    mu, a, b = bh.params
    r = np.asarray(r, dtype=float)
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    sig = r * r + a * a * c2 + b * b * s2
    dl = delta(bh, r)
    alpha = (r * r + a * a) * sig + a * a * mu * s2
    beta = (r * r + b * b) * sig + b * b * mu * c2
    tau = dl * sig + mu * (r * r + a * a) * (r * r + b * b)
    p = np.sqrt(a * a * c2 + b * b * s2)
    return PointScalars(dl, sig, alpha, beta, tau, p)


def tau_forms(bh: BlackHole, r, theta):
    """Three independent evaluations of tau.

    Returns (Delta Sigma + mu R, R Sigma + a^2 mu s^2 (r^2+b^2) + b^2 mu c^2 (r^2+a^2),
    (alpha beta - a^2 b^2 mu^2 c^2 s^2) / Sigma) with R = (r^2+a^2)(r^2+b^2).
    """
    mu, a, b = bh.params
    ps = point_scalars(bh, r, theta)
    r = np.asarray(r, dtype=float)
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    big_r = (r * r + a * a) * (r * r + b * b)
    t1 = ps.delta * ps.sigma + mu * big_r
    t2 = big_r * ps.sigma + a * a * mu * s2 * (r * r + b * b) + b * b * mu * c2 * (r * r + a * a)
    t3 = (ps.alpha * ps.beta - (a * b * mu) ** 2 * c2 * s2) / ps.sigma
    return t1, t2, t3


def identity_defects(bh: BlackHole, r, theta) -> dict:
    """Relative deviations of the scalar identities at the given points."""
    ps = point_scalars(bh, r, theta)
    t1, t2, t3 = tau_forms(bh, r, theta)
    d1 = delta(bh, r)
    d2 = delta_expanded(bh, r)
    mu, a, b = bh.params
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    st = ps.sigma * ps.tau
    st2 = ps.alpha * ps.beta - (a * b * mu) ** 2 * c2 * s2
    return {
        "delta_dual_form": float(np.max(np.abs(d1 - d2) / np.abs(d1))),
        "tau_forms": float(np.max(np.maximum(np.abs(t1 - t2), np.abs(t1 - t3)) / np.abs(t1))),
        "sigma_tau": float(np.max(np.abs(st - st2) / np.abs(st))),
    }


def metric_at(bh: BlackHole, r: float, theta: float) -> np.ndarray:
    mu, a, b = bh.params
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    ps = point_scalars(bh, r, theta)
    sig = ps.sigma
    g = np.zeros((5, 5))
    g[0, 0] = -1.0 + mu / sig
    g[1, 1] = r * r * sig / ps.delta
    g[2, 2] = sig
    g[3, 3] = ps.alpha * s2 / sig
    g[4, 4] = ps.beta * c2 / sig
    g[0, 3] = g[3, 0] = -a * mu * s2 / sig
    g[0, 4] = g[4, 0] = -b * mu * c2 / sig
    g[3, 4] = g[4, 3] = a * b * mu * s2 * c2 / sig
    return g


def inverse_metric_at(bh: BlackHole, r: float, theta: float) -> np.ndarray:
    mu, a, b = bh.params
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    ps = point_scalars(bh, r, theta)
    dl, sig, tau = ps.delta, ps.sigma, ps.tau
    gi = np.zeros((5, 5))
    gi[0, 0] = -tau / (dl * sig)
    gi[1, 1] = dl / (r * r * sig)
    gi[2, 2] = 1.0 / sig
    gi[3, 3] = (1.0 / s2 + ((r * r + b * b) * (b * b - a * a) - mu * b * b) / dl) / sig
    gi[4, 4] = (1.0 / c2 + ((r * r + a * a) * (a * a - b * b) - mu * a * a) / dl) / sig
    gi[0, 3] = gi[3, 0] = -mu * a * (r * r + b * b) / (dl * sig)
    gi[0, 4] = gi[4, 0] = -mu * b * (r * r + a * a) / (dl * sig)
    gi[3, 4] = gi[4, 3] = -mu * a * b / (dl * sig)
    return gi


def omega_profiles(bh: BlackHole, r, theta=np.pi / 4):
    """Angular velocities (Omega_a, Omega_b) of the locally non-rotating observers.

    Both depend on theta through tau. At the event horizon they reduce to the
    theta independent values of horizon_angular_velocities.
    """
    mu, a, b = bh.params
    r = np.asarray(r, dtype=float)
    tau = point_scalars(bh, r, theta).tau
    return mu * a * (r * r + b * b) / tau, mu * b * (r * r + a * a) / tau


def horizon_angular_velocities(bh: BlackHole):
    rp2 = bh.r_plus ** 2
    return bh.a / (rp2 + bh.a ** 2), bh.b / (rp2 + bh.b ** 2)


def lnrf_frame(bh: BlackHole, r: float, theta: float) -> np.ndarray:
    """Frame of the locally non-rotating observers; row A holds e_A in coordinates."""
    mu, a, b = bh.params
    s, c = np.sin(theta), np.cos(theta)
    ps = point_scalars(bh, r, theta)
    dl, sig, be, tau = ps.delta, ps.sigma, ps.beta, ps.tau
    om_a = mu * a * (r * r + b * b) / tau
    om_b = mu * b * (r * r + a * a) / tau
    e = np.zeros((5, 5))
    e[0] = np.sqrt(tau / (dl * sig)) * np.array([1.0, 0.0, 0.0, om_a, om_b])
    e[1, 1] = np.sqrt(dl / (sig * r * r))
    e[2, 2] = 1.0 / np.sqrt(sig)
    e[3] = np.sqrt(be / (tau * s * s)) * np.array([0.0, 0.0, 0.0, 1.0, -a * b * mu * s * s / be])
    e[4, 4] = np.sqrt(sig / (be * c * c))
    return e


def separable_frame(bh: BlackHole, r: float, theta: float) -> np.ndarray:
    """Frame adapted to separation of variables; row A holds f_A in coordinates.

    Requires p = sqrt(a^2 cos^2 + b^2 sin^2) > 0.
    """
    mu, a, b = bh.params
    s, c = np.sin(theta), np.cos(theta)
    ps = point_scalars(bh, r, theta)
    dl, sig, p = ps.delta, ps.sigma, ps.p
    big_r = (r * r + a * a) * (r * r + b * b)
    f = np.zeros((5, 5))
    f[0] = big_r / (r * np.sqrt(dl * sig)) * np.array(
        [1.0, 0.0, 0.0, a / (r * r + a * a), b / (r * r + b * b)]
    )
    f[1, 1] = np.sqrt(dl / (r * r * sig))
    f[2, 2] = 1.0 / np.sqrt(sig)
    f[3] = s * c / (p * np.sqrt(sig)) * np.array([a * a - b * b, 0.0, 0.0, a / (s * s), -b / (c * c)])
    f[4] = np.array([a * b, 0.0, 0.0, b, a]) / (r * p)
    return f


def gram_deviation(bh: BlackHole, frame: np.ndarray, r: float, theta: float) -> float:
    g = metric_at(bh, r, theta)
    eta = np.diag([-1.0, 1.0, 1.0, 1.0, 1.0])
    return float(np.abs(frame @ g @ frame.T - eta).max())


def frame_orthonormality_check(bh: BlackHole, r: float, theta: float) -> float:
    """max |g(e_A, e_B) - eta_AB| for the locally non-rotating frame."""
    return gram_deviation(bh, lnrf_frame(bh, r, theta), r, theta)


def metric_signature(bh: BlackHole, r: float, theta: float):
    ev = np.linalg.eigvalsh(metric_at(bh, r, theta))
    return int(np.sum(ev < 0)), int(np.sum(ev > 0))
