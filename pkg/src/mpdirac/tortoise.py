"""Regge-Wheeler (tortoise) coordinate and decay-order estimators.

dx/dr = (r^2+a^2)(r^2+b^2)/Delta integrates in closed form:

    x(r) = r + C_+ ln((r - r_+)/(r + r_+)) - C_- ln((r - r_-)/(r + r_-)) + c0

with C_+ = 1/(2 kappa_+) = mu r_+ / (2 (r_+^2 - r_-^2)) and
C_- = mu r_- / (2 (r_+^2 - r_-^2)). The coefficient C_- tends to 0 with r_-,
so the same expression covers the case ab = 0.

Near the event horizon r - r_+ ~ exp(2 kappa_+ x) underflows relative to r_+,
so the map is also exposed in terms of the offset d = r - r_+.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDecades
from .geometry import BlackHole


@dataclass(frozen=True)
class TortoiseMap:
    bh: BlackHole
    c0: float = 0.0
    c_plus: float = field(init=False)
    c_minus: float = field(init=False)

    def __post_init__(self):
        rp, rm, mu = self.bh.r_plus, self.bh.r_minus, self.bh.mu
        object.__setattr__(self, "c_plus", mu * rp / (2.0 * (rp * rp - rm * rm)))
        object.__setattr__(self, "c_minus", mu * rm / (2.0 * (rp * rp - rm * rm)))

    def x_of_offset(self, d):
        """Tortoise coordinate at r = r_+ + d, d > 0."""
        d = np.asarray(d, dtype=float)
        return self.x_of_log_offset(np.log(d))

    def x_of_log_offset(self, y):
        """Tortoise coordinate at r = r_+ + exp(y); finite even where exp(y) underflows."""
        y = np.asarray(y, dtype=float)
        d = np.exp(y)
        rp, rm = self.bh.r_plus, self.bh.r_minus
        r = rp + d
        x = r + self.c_plus * (y - np.log(r + rp)) + self.c0
        if rm > 0.0:
            x = x - self.c_minus * (np.log1p(d / (rp - rm)) + np.log(rp - rm) - np.log(r + rm))
        return x

    def x_of_r(self, r):
        r = np.asarray(r, dtype=float)
        return self.x_of_offset(r - self.bh.r_plus)

    def dx_dr(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.bh.a, self.bh.b
        rp, rm = self.bh.r_plus, self.bh.r_minus
        return (r * r + a * a) * (r * r + b * b) / ((r * r - rm * rm) * (r - rp) * (r + rp))

    def _dx_dlogd(self, d):
        # d * dx/dr with the factor (r - r_+) cancelled analytically
        a, b = self.bh.a, self.bh.b
        rp, rm = self.bh.r_plus, self.bh.r_minus
        r = rp + d
        return (r * r + a * a) * (r * r + b * b) / ((r * r - rm * rm) * (r + rp))

    def offset_of_x(self, x, iterations=80):
        """Invert x_of_offset; returns d = r - r_+ (0 where it underflows)."""
        return np.exp(self.log_offset_of_x(x, iterations))

    def log_offset_of_x(self, x, iterations=80):
        """log(r - r_+) at x: bracketed bisection in log space, then Newton."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        kp = self.bh.kappa_plus
        lo = np.minimum(2.0 * kp * x, 0.0) - 10.0
        hi = np.log(np.maximum(np.abs(x), 1.0) + 10.0 * self.bh.r_plus + 10.0)
        for _ in range(200):
            bad = self.x_of_log_offset(lo) > x
            if not bad.any():
                break
            lo = np.where(bad, lo - 20.0, lo)
        for _ in range(200):
            bad = self.x_of_log_offset(hi) < x
            if not bad.any():
                break
            hi = np.where(bad, hi + 2.0, hi)
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            above = self.x_of_log_offset(mid) > x
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        y = 0.5 * (lo + hi)
        for _ in range(3):
            y = y - (self.x_of_log_offset(y) - x) / self._dx_dlogd(np.exp(y))
        return y

    def r_of_x(self, x):
        return self.bh.r_plus + self.offset_of_x(x)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    residual: float
    direction: str


def right_ladder(bh: BlackHole, n=16):
    """Geometric ladder x in [10, 10^4] * r_+."""
    return np.geomspace(10.0, 1.0e4, n) * bh.r_plus


def left_ladder(bh: BlackHole, n=12, start=-5.0, stop=-60.0):
    """Linear ladder x in [start, stop] / kappa_+."""
    return np.linspace(start, stop, n) / bh.kappa_plus


def decay_order_estimate(f, x, direction) -> DecayFit:
    """Fit the decay order of sampled values f(x).

    direction "+" fits log|f| against log <x> and returns the power.
    direction "-" fits log|f| against x and returns the exponential rate, so
    f ~ exp(rate * x) as x -> -infinity.
    The ladder must cover three decades: of x for "+", of |f| for "-".
    """
    f = np.abs(np.asarray(f, dtype=float))
    x = np.asarray(x, dtype=float)
    if f.shape != x.shape or f.size < 3:
        raise InsufficientDecades("need at least three samples")
    if np.any(f == 0) or not np.all(np.isfinite(f)):
        raise InsufficientDecades("samples must be finite and nonzero")
    if direction in ("+", "right", "+inf"):
        span = np.log10(x.max() / x.min()) if x.min() > 0 else 0.0
        if span < 3.0 - 1e-9:
            raise InsufficientDecades(f"x ladder spans {span:.2f} decades")
        t = np.log(np.sqrt(1.0 + x * x))
        name = "+"
    elif direction in ("-", "left", "-inf"):
        span = np.log10(f.max() / f.min())
        if span < 3.0:
            raise InsufficientDecades(f"|f| spans {span:.2f} decades")
        t = x
        name = "-"
    else:
        raise ValueError(f"unknown direction {direction!r}")
    y = np.log(f)
    coef, res, *_ = np.polyfit(t, y, 1, full=True)
    resid = float(np.sqrt(res[0] / t.size)) if res.size else 0.0
    return DecayFit(float(coef[0]), resid, name)
