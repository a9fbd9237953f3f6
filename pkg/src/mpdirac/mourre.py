"""Conjugate operators with their commutator formula, plus a Mourre window diagnostic.

On one angular sector D_S3 acts as multiplication by k = lam. With the
cutoffs j_-, j_+, j_1 (scaled by S) the conjugate operators are

    A_- = R_-(x, k) Gamma1,  R_-(x, k) = y j_-^2(y / S),  y = x + ln(k) / kappa_+,
    A_+ = (D_x R_+ + R_+ D_x) / 2,  R_+(x) = x j_+^2(x / S),

and i[H0, A_-] = R_-' + 2 i k a R_- Gamma2 Gamma1 + 2 i b R_- Gamma0 Gamma1.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .clifford import GammaRep, gamma_rep
from .errors import WindowAtThreshold
from .evolution import smootherstep
from .geometry import BlackHole, horizon_angular_velocities
from .potentials import radial_potentials
from .radial import x_derivative


def _smoother_prime(t):
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, 30.0 * t * t * (t - 1.0) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffFamily:
    """j_- = 1 on (-inf, 1/2], 0 on [1, inf); j_+ = 0 on (-inf, 3/2], 1 on [2, inf);
    j_1 = 1 on (-inf, 1], 0 on [3/2, inf). Each is a C^2 quintic transition."""

    scale: float = 1.0

    def j_minus(self, x):
        return 1.0 - smootherstep(2.0 * (np.asarray(x) / self.scale - 0.5))

    def j_plus(self, x):
        return smootherstep(2.0 * (np.asarray(x) / self.scale - 1.5))

    def j_one(self, x):
        return 1.0 - smootherstep(2.0 * (np.asarray(x) / self.scale - 1.0))

    def j_minus_prime(self, x):
        return -2.0 / self.scale * _smoother_prime(2.0 * (np.asarray(x) / self.scale - 0.5))

    def j_plus_prime(self, x):
        return 2.0 / self.scale * _smoother_prime(2.0 * (np.asarray(x) / self.scale - 1.5))


def r_minus(x, k, scale, kappa_plus):
    y = np.asarray(x, dtype=float) + np.log(k) / kappa_plus
    return y * CutoffFamily(scale).j_minus(y) ** 2


def r_minus_prime(x, k, scale, kappa_plus):
    cf = CutoffFamily(scale)
    y = np.asarray(x, dtype=float) + np.log(k) / kappa_plus
    j = cf.j_minus(y)
    return j * j + 2.0 * y * j * cf.j_minus_prime(y)


def r_plus(x, scale):
    x = np.asarray(x, dtype=float)
    return x * CutoffFamily(scale).j_plus(x) ** 2


@dataclass(frozen=True, eq=False)
class ConjugateOperators:
    a_minus: sp.csr_matrix
    a_plus: sp.csr_matrix
    r_minus: np.ndarray
    r_plus: np.ndarray
    k: float
    scale: float

    def hermiticity_defects(self):
        out = []
        for mat in (self.a_minus, self.a_plus):
            d = mat - mat.conj().T
            out.append(float(abs(d).max()) if d.nnz else 0.0)
        return tuple(out)

    def combined(self, sign=1.0):
        """A_- + sign A_+."""
        return (self.a_minus + sign * self.a_plus).tocsr()


def build_conjugates(k, scale, grid, rep: GammaRep = None, bh: BlackHole = None, order=2):
    rep = rep or gamma_rep()
    x = np.asarray(grid, dtype=float)
    dx = x[1] - x[0]
    rm = r_minus(x, k, scale, bh.kappa_plus)
    rp = r_plus(x, scale)
    a_m = sp.kron(sp.diags(rm), sp.csr_matrix(rep.Gamma1), format="csr")
    d = sp.kron(-1j * x_derivative(x.size, dx, order), sp.identity(4), format="csr")
    rpd = sp.kron(sp.diags(rp), sp.identity(4), format="csr")
    a_p = 0.5 * (d @ rpd + rpd @ d)
    return ConjugateOperators(a_m, a_p.tocsr(), rm, rp, float(k), float(scale))


def closed_form_commutator(bh: BlackHole, mass, k, scale, grid, rep: GammaRep = None):
    """Block diagonal matrix of R_-' + 2 i k a R_- Gamma2 Gamma1 + 2 i b R_- Gamma0 Gamma1."""
    rep = rep or gamma_rep()
    x = np.asarray(grid, dtype=float)
    pots = radial_potentials(bh, mass, x)
    rm = r_minus(x, k, scale, bh.kappa_plus)
    rmp = r_minus_prime(x, k, scale, bh.kappa_plus)
    blocks = (rmp[:, None, None] * np.eye(4)
              + 2j * k * (pots.a_pot * rm)[:, None, None] * (rep.Gamma2 @ rep.Gamma1)
              + 2j * (pots.b_pot * rm)[:, None, None] * (rep.Gamma0 @ rep.Gamma1))
    return sp.block_diag(list(blocks), format="csr")


def discrete_commutator(h, a):
    """i [H, A] as a sparse matrix."""
    return (1j * (h @ a - a @ h)).tocsr()


def commutator_check(bh: BlackHole, mass, mode, k, scale, x_lo, x_hi, nodes=(400, 800, 1600),
                     order=2, rep: GammaRep = None):
    """Deviation of the discrete i[H0, A_-] from the closed form under refinement.

    The deviation is measured on a smooth Gaussian test spinor, on nodes at
    least 10 percent of the box away from the walls. Returns a dict with
    the per-refinement step sizes and errors, plus the fitted order.
    """
    from .radial import reduced_h0_matrix

    rep = rep or gamma_rep()
    pol = np.array([1.0, 0.5j, -0.3, 0.2 + 0.1j])
    errs, dxs = [], []
    for nx in nodes:
        x = np.linspace(x_lo, x_hi, nx)
        h0 = reduced_h0_matrix(bh, mass, mode, k, x, rep, order)
        conj = build_conjugates(k, scale, x, rep, bh, order)
        disc = discrete_commutator(h0, conj.a_minus)
        closed = closed_form_commutator(bh, mass, k, scale, x, rep)
        mid = 0.5 * (x_lo + x_hi)
        f = (np.exp(-0.5 * ((x - mid) / (0.12 * (x_hi - x_lo))) ** 2)[:, None] * pol).ravel()
        diff = (disc - closed) @ f
        margin = 0.1 * (x_hi - x_lo)
        inner = np.repeat((x > x_lo + margin) & (x < x_hi - margin), 4)
        errs.append(float(np.abs(diff[inner]).max()))
        dxs.append(float(x[1] - x[0]))
    errs, dxs = np.array(errs), np.array(dxs)
    fit = np.polyfit(np.log(dxs), np.log(errs), 1)[0]
    return {"dx": dxs.tolist(), "errors": errs.tolist(), "order": float(fit)}


def disjoint_support_product(scale, grid):
    """max |j_1(x/S)^2 j_+(x/S)^2| on the grid; exactly 0 because the supports only touch."""
    cf = CutoffFamily(scale)
    x = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(cf.j_one(x) ** 2 * cf.j_plus(x) ** 2)))


def conjugate_profile_bounds(ks, scale, grid, kappa_plus):
    """sup |R_-|/<x>, sup |R_-'|, sup |R_-''| for every k (second derivative by differences)."""
    x = np.asarray(grid, dtype=float)
    dx = x[1] - x[0]
    rows = []
    for k in ks:
        rm = r_minus(x, k, scale, kappa_plus)
        rmp = r_minus_prime(x, k, scale, kappa_plus)
        rmpp = np.gradient(rmp, dx)
        rows.append((float(np.max(np.abs(rm) / np.sqrt(1.0 + x * x))),
                     float(np.max(np.abs(rmp))), float(np.max(np.abs(rmpp)))))
    return np.array(rows)


def build_he(k, grid, rep: GammaRep = None, bh: BlackHole = None, n=0.5, m=0.5, order=2):
    """H_e = Gamma1 D_x + a_- exp(kappa_+ x) k Gamma2 + (n omega_a + m omega_b)."""
    rep = rep or gamma_rep()
    x = np.asarray(grid, dtype=float)
    dx = x[1] - x[0]
    a_minus = radial_potentials(bh, 0.0, x[:1]).a_minus
    om_a, om_b = horizon_angular_velocities(bh)
    c_minus = n * om_a + m * om_b
    kin = sp.kron(-1j * x_derivative(x.size, dx, order), sp.csr_matrix(rep.Gamma1))
    pot = a_minus * np.exp(bh.kappa_plus * x) * k
    local = pot[:, None, None] * rep.Gamma2 + c_minus * np.eye(4)
    return (kin + sp.block_diag(list(local))).tocsr()


def he_shift_defect(bh: BlackHole, k, shift_nodes=20, nx=400, n=0.5, m=0.5, rep: GammaRep = None):
    """Compare H_e(k) with the translated H_e(1) on a grid whose step divides ln(k)/kappa_+.

    Rows and columns of H_e(k) at nodes i correspond to those of H_e(1) at
    nodes i + shift_nodes. Returns the max entry deviation over the overlap.
    """
    s = np.log(k) / bh.kappa_plus
    dx = s / shift_nodes
    x = -nx * dx + dx * np.arange(nx + shift_nodes)
    hk = build_he(k, x, rep, bh, n, m).toarray()
    h1 = build_he(1.0, x, rep, bh, n, m).toarray()
    size = 4 * nx
    off = 4 * shift_nodes
    # interior block avoids the truncated stencil rows at the ends
    lo, hi = 4, size - 4
    return float(np.abs(hk[lo:hi, lo:hi] - h1[off + lo:off + hi, off + lo:off + hi]).max())


def he_difference_profile(bh: BlackHole, mass, n, m, k, cut_centers, x_width=10.0, nx=2001):
    """sup over x of the potential part of j(x)(H0 - H_e) for left cutoffs at each center.

    j is 1 left of center - x_width/2 and 0 right of center (C^2 transition).
    """
    om_a, om_b = horizon_angular_velocities(bh)
    out = []
    for c in cut_centers:
        x = np.linspace(c - 3.0 * x_width, c, nx)
        pots = radial_potentials(bh, mass, x)
        j = 1.0 - smootherstep((x - (c - 0.5 * x_width)) / (0.5 * x_width))
        diff = np.abs(k * pots.a_residual) + np.abs(pots.b_pot) + np.abs(
            n * pots.c_phi_offset + m * pots.c_psi_offset)
        out.append(float(np.max(j * diff)))
    return np.array(out)


def closed_form_conjugate_commutator(bh: BlackHole, mass, mode, k, scale, grid, sign=1.0,
                                     rep: GammaRep = None, order=2):
    """Continuum formula for i[H0, A_- + sign A_+] sampled on the grid.

    i[H0, A_+] = (D_x R_+' + R_+' D_x)/2 Gamma1 - R_+ V' with V = k a Gamma2 + b Gamma0 + c.
    Unlike the discrete commutator it carries no wall contributions, so its
    expectation in eigenvectors of the box Hamiltonian is not forced to vanish.
    """
    rep = rep or gamma_rep()
    x = np.asarray(grid, dtype=float)
    dx = x[1] - x[0]
    pots = radial_potentials(bh, mass, x)
    cf = CutoffFamily(scale)
    rp = r_plus(x, scale)
    jp = cf.j_plus(x)
    rpp = jp * jp + 2.0 * x * jp * cf.j_plus_prime(x)
    d = -1j * x_derivative(x.size, dx, order)
    kin = 0.5 * (d @ sp.diags(rpp) + sp.diags(rpp) @ d)
    c = pots.c(mode.n, mode.m)
    da, db, dc = (np.gradient(f, dx, edge_order=2) for f in (pots.a_pot, pots.b_pot, c))
    vprime = (k * da[:, None, None] * rep.Gamma2 + db[:, None, None] * rep.Gamma0
              + dc[:, None, None] * np.eye(4))
    plus = sp.kron(kin, sp.csr_matrix(rep.Gamma1)) - sp.block_diag(list(rp[:, None, None] * vprime))
    return (closed_form_commutator(bh, mass, k, scale, x, rep) + sign * plus).tocsr()


def mourre_window_diagnostic(h, a, center, half_width, mass, eps=0.0, r_max=5, meta=None,
                             commutator=None):
    """Spectrum of the compressed form E i[H, A] E on the spectral window of H.

    E is the spectral projector of the finite matrix H onto
    [center - half_width, center + half_width]. The worst r directions,
    r = 0 .. r_max, are discarded to mimic a compact remainder.
    When `commutator` is given it replaces the discrete i[H, A]. The discrete
    commutator has zero expectation in every eigenvector of H (finite
    dimensional virial identity), so a meaningful diagnostic needs the
    continuum formula of closed_form_conjugate_commutator.
    """
    if abs(center - mass) <= half_width or abs(center + mass) <= half_width:
        raise WindowAtThreshold(
            f"window [{center - half_width}, {center + half_width}] touches +-{mass}")
    hd = h.toarray() if sp.issparse(h) else np.asarray(h)
    ad = a.toarray() if sp.issparse(a) else np.asarray(a)
    e, v = np.linalg.eigh(hd)
    sel = np.abs(e - center) <= half_width
    vs = v[:, sel]
    es = e[sel]
    if commutator is None:
        at = vs.conj().T @ ad @ vs
        form = 1j * (es[:, None] - es[None, :]) * at
    else:
        cd = commutator.toarray() if sp.issparse(commutator) else np.asarray(commutator)
        form = vs.conj().T @ cd @ vs
    form = 0.5 * (form + form.conj().T)
    vals = np.linalg.eigvalsh(form) if es.size else np.array([])
    report = {
        "window": [float(center - half_width), float(center + half_width)],
        "eps": float(eps),
        "box_size": int(hd.shape[0]),
        "dimension": int(es.size),
        "quantiles": ([float(q) for q in np.quantile(vals, [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0])]
                      if vals.size else []),
        "negative_counts": [int(max(0, np.sum(vals < -eps) - r)) for r in range(r_max + 1)],
        "lower_bounds": [float(vals[r]) if r < vals.size else None for r in range(r_max + 1)],
        "positive_fraction": float(np.mean(vals > eps)) if vals.size else None,
    }
    if meta:
        report.update(meta)
    return report


def dump_report(report, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
