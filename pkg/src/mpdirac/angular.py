"""Discrete S^3 Dirac operator and the separated angular operator.

Spinors are flattened by (sin theta cos theta)^(1/2), which removes the
cot/tan connection terms, so the operators act on L^2((0, pi/2), dtheta).

Discretization: in a spinor basis where Gamma2 = [[0, I], [I, 0]] while
the other spatial capital gammas are block diagonal, the two "upper" components
live on the nodes (j + 1/4) h and the two "lower" components on (j + 3/4) h,
with h = pi / (2 N). The derivative then becomes a compact two-point
difference between neighbouring half-grids, and the discrete operator is
exactly Hermitian. Pointwise matrices that couple upper and lower
components are split evenly between the two adjacent pairs and evaluated at
their midpoints. No node sits on an axis.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .clifford import GammaRep, gamma_rep
from .errors import AxisModeError, ConvergenceError
from .geometry import BlackHole


@lru_cache(maxsize=1)
def staggered_basis(rep: GammaRep = None) -> np.ndarray:
    """Unitary U whose rows are the new basis vectors.

    The first two rows span the +1 eigenspace of Q = i Gamma1 Gamma3 Gamma5
    and the last two are their images under Gamma2, so that
    U Gamma2 U^H = [[0, I], [I, 0]].
    """
    rep = rep or gamma_rep()
    q = 1j * rep.Gamma1 @ rep.Gamma3 @ rep.Gamma5
    w, v = np.linalg.eigh(q)
    vu = v[:, w > 0]
    vl = rep.Gamma2 @ vu
    return np.hstack([vu, vl]).conj().T


def check_half_integer(value, name):
    twice = 2.0 * float(value)
    if not np.isclose(twice, np.round(twice)) or int(np.round(twice)) % 2 == 0:
        raise AxisModeError(f"{name} = {value} must lie in 1/2 + Z")


class ThetaGrid:
    """Staggered grid on (0, pi/2) with 4 N unknowns."""

    def __init__(self, n_theta: int, rep: GammaRep = None):
        if n_theta < 1:
            raise ValueError("n_theta must be positive")
        self.n = int(n_theta)
        self.rep = rep or gamma_rep()
        self.h = np.pi / (2 * self.n)
        j = np.arange(self.n)
        self.theta_upper = (j + 0.25) * self.h
        self.theta_lower = (j + 0.75) * self.h
        self.theta_same = (j + 0.5) * self.h
        self.theta_prev = j[1:] * self.h
        self.basis = staggered_basis(self.rep)
        self.size = 4 * self.n

    def to_staggered(self, mat):
        u = self.basis
        return u @ np.asarray(mat) @ u.conj().T

    def field(self, f_upper, f_lower, f_same=None, f_prev=None, batch=None):
        """Sparse matrix of a pointwise Hermitian 4x4 field.

        f_upper, f_lower: values at the upper and lower nodes, shape (B, N, 4, 4)
        or (N, 4, 4) or a constant (4, 4). Only their diagonal blocks are used.
        f_same, f_prev: values at (j + 1/2) h and j h (j >= 1). Only their
        upper-lower block is used; it enters with weight 1/2 on each pair.
        With batch B > 1 the result is block diagonal over the batch index.
        """
        n = self.n
        u = self.basis
        uh = u.conj().T

        def prep(arr, count):
            arr = np.asarray(arr, dtype=complex)
            if arr.ndim == 2:
                arr = np.broadcast_to(arr, (count, 4, 4))
            if arr.ndim == 3:
                arr = arr[None]
            return u @ arr @ uh

        fu = prep(f_upper, n)
        fl = prep(f_lower, n)
        nb = fu.shape[0] if batch is None else batch
        fu = np.broadcast_to(fu, (nb, n, 4, 4))
        fl = np.broadcast_to(fl, (nb, n, 4, 4))
        rows, cols, vals = [], [], []
        jj = np.arange(n)
        base = (np.arange(nb) * self.size)[:, None, None, None]
        al = np.arange(2)[None, None, :, None]
        be = np.arange(2)[None, None, None, :]
        up_idx = lambda j: 2 * j[None, :, None, None] + base
        lo_idx = lambda j: 2 * n + 2 * j[None, :, None, None] + base
        shp = (nb, n, 2, 2)
        rows.append(np.broadcast_to(up_idx(jj) + al, shp).ravel())
        cols.append(np.broadcast_to(up_idx(jj) + be, shp).ravel())
        vals.append(fu[..., :2, :2].ravel())
        rows.append(np.broadcast_to(lo_idx(jj) + al, shp).ravel())
        cols.append(np.broadcast_to(lo_idx(jj) + be, shp).ravel())
        vals.append(fl[..., 2:, 2:].ravel())
        if f_same is not None:
            fs = np.broadcast_to(prep(f_same, n), (nb, n, 4, 4))
            x = 0.5 * fs[..., :2, 2:]
            r_ = np.broadcast_to(up_idx(jj) + al, shp).ravel()
            c_ = np.broadcast_to(lo_idx(jj) + be, shp).ravel()
            rows += [r_, c_]
            cols += [c_, r_]
            vals += [x.ravel(), x.conj().ravel()]
        if f_prev is not None and n > 1:
            fp = np.broadcast_to(prep(f_prev, n - 1), (nb, n - 1, 4, 4))
            x = 0.5 * fp[..., :2, 2:]
            shp1 = (nb, n - 1, 2, 2)
            r_ = np.broadcast_to(up_idx(jj[1:]) + al, shp1).ravel()
            c_ = np.broadcast_to(lo_idx(jj[:-1]) + be, shp1).ravel()
            rows += [r_, c_]
            cols += [c_, r_]
            vals += [x.ravel(), x.conj().ravel()]
        total = nb * self.size
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(total, total),
        )
        return mat.tocsr()

    def constant(self, mat):
        """Field matrix of a constant 4x4 matrix (split into node and midpoint parts)."""
        mat = np.asarray(mat, dtype=complex)
        return self.field(mat, mat, mat, mat)

    def derivative(self):
        """-i Gamma2 d/dtheta as a Hermitian 4N x 4N matrix."""
        n, h = self.n, self.h
        dm = sp.diags([np.ones(n), -np.ones(n - 1)], [0, -1], shape=(n, n)) / h
        blk = sp.kron(-1j * dm, sp.identity(2))
        return sp.bmat([[None, blk], [blk.conj().T, None]]).tocsr()

    def sample(self, func):
        """Sample a spinor valued function func(theta) -> (..., 4) on the grid.

        Returns the 4N vector in staggered layout.
        """
        u = self.basis
        up = np.einsum("ij,...j->...i", u, func(self.theta_upper))[..., :2]
        lo = np.einsum("ij,...j->...i", u, func(self.theta_lower))[..., 2:]
        return np.concatenate([up.reshape(up.shape[:-2] + (-1,)), lo.reshape(lo.shape[:-2] + (-1,))], axis=-1)


def s3_field(grid: ThetaGrid, n, m):
    rep = grid.rep

    def f(th):
        return (n / np.sin(th))[:, None, None] * rep.Gamma3 + (m / np.cos(th))[:, None, None] * rep.Gamma5

    return grid.field(f(grid.theta_upper), f(grid.theta_lower))


def dirac_s3_matrix(grid: ThetaGrid, n, m):
    """Flattened D_S3 = -i Gamma2 d/dtheta + Gamma3 n / sin + Gamma5 m / cos."""
    return (grid.derivative() + s3_field(grid, n, m)).tocsr()


def angular_perturbation(grid: ThetaGrid, a, b, omega, mass, form="direct"):
    """Pointwise part of the angular operator beyond D_S3.

    direct:  -mass (b sin Gamma3 + a cos Gamma5) - omega (a sin Gamma3 + b cos Gamma5)
    p_ratio: -mass p Gamma5 - omega ((a^2 - b^2) sin cos / p Gamma3 + a b / p Gamma5)
    """
    rep = grid.rep
    if form == "direct":
        def f(th):
            s, c = np.sin(th)[:, None, None], np.cos(th)[:, None, None]
            return (-(mass * b + omega * a) * s * rep.Gamma3
                    - (mass * a + omega * b) * c * rep.Gamma5)
    elif form == "p_ratio":
        if a == 0 and b == 0:
            return sp.csr_matrix((grid.size, grid.size), dtype=complex)

        def f(th):
            s, c = np.sin(th)[:, None, None], np.cos(th)[:, None, None]
            p = np.sqrt(a * a * c * c + b * b * s * s)
            return (-mass * p * rep.Gamma5
                    - omega * ((a * a - b * b) * s * c / p * rep.Gamma3 + a * b / p * rep.Gamma5))
    else:
        raise ValueError(f"unknown form {form!r}")
    return grid.field(f(grid.theta_upper), f(grid.theta_lower))


@dataclass(frozen=True)
class ModeIndex:
    l: int
    n: float
    m: float

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise AxisModeError(f"l = {self.l} must be a positive integer")
        check_half_integer(self.n, "n")
        check_half_integer(self.m, "m")


@dataclass(frozen=True, eq=False)
class AngularOperator:
    grid: ThetaGrid
    matrix: sp.csr_matrix
    n: float
    m: float
    omega: float
    mass: float
    which: str
    form: str = "direct"

    @property
    def n_theta(self):
        return self.grid.n

    def hermiticity_defect(self):
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0


def _ab(bh_p_params):
    if isinstance(bh_p_params, BlackHole):
        return bh_p_params.a, bh_p_params.b
    a, b = bh_p_params
    return float(a), float(b)


def build_angular_operator(n, m, omega, mass, bh_p_params, n_theta, which="S3", form="direct"):
    check_half_integer(n, "n")
    check_half_integer(m, "m")
    if n_theta < 16:
        raise ValueError("n_theta must be at least 16")
    grid = ThetaGrid(n_theta)
    mat = dirac_s3_matrix(grid, n, m)
    if which == "A":
        a, b = _ab(bh_p_params)
        mat = (mat + angular_perturbation(grid, a, b, omega, mass, form)).tocsr()
    elif which == "S3":
        omega, mass = 0.0, 0.0
    else:
        raise ValueError(f"which must be 'S3' or 'A', got {which!r}")
    return AngularOperator(grid, mat, float(n), float(m), float(omega), float(mass), which, form)


@dataclass(frozen=True, eq=False)
class AngularSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    positive: np.ndarray = field(init=False)
    negative: np.ndarray = field(init=False)

    def __post_init__(self):
        ev = self.eigenvalues
        object.__setattr__(self, "positive", np.sort(ev[ev > 0]))
        object.__setattr__(self, "negative", np.sort(-ev[ev < 0]))

    def lam(self, l: int) -> float:
        return float(self.positive[l - 1])

    def symmetry_defect(self, count=None) -> float:
        k = min(self.positive.size, self.negative.size)
        if count is not None:
            k = min(k, count)
        return float(np.max(np.abs(self.positive[:k] - self.negative[:k]))) if k else 0.0


def eigen(op: AngularOperator, n_eigs=None) -> AngularSpectrum:
    """Eigenpairs of the angular operator.

    With n_eigs None the full spectrum is computed by a dense solver. Otherwise
    the n_eigs eigenvalues of each sign closest to zero are computed by
    shift-invert Lanczos (zero is never an eigenvalue of these operators).
    """
    size = op.matrix.shape[0]
    try:
        if n_eigs is None or 2 * n_eigs + 4 >= size:
            w, v = np.linalg.eigh(op.matrix.toarray())
        else:
            k = 2 * n_eigs + 4
            start = np.random.default_rng(0).standard_normal(size).astype(complex)
            w, v = spla.eigsh(op.matrix.tocsc(), k=k, sigma=0.0, which="LM", tol=1e-13, v0=start)
            order = np.argsort(w)
            w, v = w[order], v[:, order]
    except (np.linalg.LinAlgError, spla.ArpackNoConvergence) as exc:
        raise ConvergenceError(str(exc)) from exc
    if n_eigs is not None:
        pos = np.flatnonzero(w > 0)[:n_eigs]
        neg = np.flatnonzero(w < 0)[::-1][:n_eigs]
        keep = np.sort(np.concatenate([neg, pos]))
        w, v = w[keep], v[:, keep]
    return AngularSpectrum(w, v)


def lambda_of_omega(n, m, l, mass, bh, omega, n_theta=200, form="direct") -> float:
    """The l-th positive eigenvalue of the angular operator at frequency omega."""
    op = build_angular_operator(n, m, omega, mass, bh, n_theta, "A", form)
    return eigen(op, n_eigs=l).lam(l)


def convergence_order(values, sizes):
    """Observed order from three refinements by Richardson's ratio."""
    v = np.asarray(values, dtype=float)
    ratio = np.abs(v[..., 1] - v[..., 0]) / np.abs(v[..., 2] - v[..., 1])
    return np.log(ratio) / np.log(sizes[1] / sizes[0])


def smooth_test_spinor(grid: ThetaGrid, lo=0.3, hi=1.2, seed=0):
    """A smooth spinor supported in [lo, hi], sampled on the staggered grid."""
    vec = np.random.default_rng(seed).normal(size=4) + 1j * np.random.default_rng(seed + 1).normal(size=4)

    def f(th):
        t = np.clip((th - lo) / (hi - lo), 0.0, 1.0)
        bump = (t * (1.0 - t)) ** 4 * 256.0
        return bump[:, None] * np.cos(3.0 * th)[:, None] * vec[None, :]

    return grid.sample(f)


def anticommutator_defect(op: AngularOperator, mat, sign=1.0, seed=0):
    """|| (A G + sign G A) u || / || u || on a smooth test spinor away from the axes.

    G is the discrete field of the constant matrix mat. In the continuum this
    vanishes for G = Gamma0 or Gamma1 with sign = +1 and for G = gamma1 with
    sign = -1. On the grid the Gamma1 version is exact; the others converge at
    the discretization order.
    """
    grid = op.grid
    g = grid.constant(mat)
    u = smooth_test_spinor(grid, seed=seed)
    a = op.matrix
    return float(np.linalg.norm(a @ (g @ u) + sign * (g @ (a @ u))) / np.linalg.norm(u))


def spectral_partner_check(op: AngularOperator, spectrum: AngularSpectrum, count=3):
    """Structure of the eigenvectors behind the sector decomposition.

    For each of the first `count` positive eigenpairs (lam, Y):
      partner_residual: || A (Gamma1 Y) + lam Gamma1 Y || / || Y ||, so Gamma1 Y
        is the eigenvector of -lam (exact on the grid)
      gamma2_form: max entry of B^H A B / lam - diag(1, -1) with B = [Y, Gamma1 Y],
        the two dimensional form A v = lam Gamma2 v with Gamma2 = diag(1, -1)
    plus the smooth-data anticommutation defects of Gamma0 and gamma1 (the
    commutation of gamma1 with A), which shrink under grid refinement.
    """
    grid = op.grid
    rep = grid.rep
    g1 = grid.constant(rep.Gamma1)
    a = op.matrix
    ev = spectrum.eigenvalues
    rows = []
    for i in np.flatnonzero(ev > 0)[:count]:
        lam = ev[i]
        y = spectrum.eigenvectors[:, i]
        y = y / np.linalg.norm(y)
        z = g1 @ y
        res = np.linalg.norm(a @ z + lam * z)
        b = np.column_stack([y, z])
        form = b.conj().T @ (a @ b) / lam - np.diag([1.0, -1.0])
        rows.append({"lambda": float(lam), "partner_residual": float(res),
                     "gamma2_form": float(np.abs(form).max())})
    return {
        "eigenpairs": rows,
        "gamma0_anticommutator": anticommutator_defect(op, rep.Gamma0, 1.0),
        "gamma1_commutator": anticommutator_defect(op, rep.gamma1, -1.0),
    }


def spectrum_rows(n, m, omega, spectrum: AngularSpectrum, grid_size, est_error=None, count=None):
    """Rows (n, m, l, omega, lambda, grid_size, est_error) for CSV output."""
    pos = spectrum.positive if count is None else spectrum.positive[:count]
    rows = []
    for l, lam in enumerate(pos, start=1):
        err = float("nan") if est_error is None else float(est_error[l - 1])
        rows.append((n, m, l, omega, float(lam), grid_size, err))
    neg = spectrum.negative if count is None else spectrum.negative[:count]
    for l, lam in enumerate(neg, start=1):
        err = float("nan") if est_error is None else float(est_error[l - 1])
        rows.append((n, m, -l, omega, -float(lam), grid_size, err))
    return rows
