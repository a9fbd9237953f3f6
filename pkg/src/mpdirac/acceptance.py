"""The thirteen acceptance checks with their frozen tolerances.

Each check returns a CheckResult with its measured values and its verdict.
A run that exceeds its runtime budget counts as a failure.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import eigsh

from .angular import ModeIndex, build_angular_operator, convergence_order, eigen
from .clifford import clifford_defects, gamma_rep
from .evolution import (build_d0_nm, build_full_h_nm, build_separable, bump, decay_experiment,
                        evolve, make_grid2d, separable_to_lnrf)
from .geometry import (delta_expanded, frame_orthonormality_check, identity_defects,
                       inverse_metric_at, metric_at, new_black_hole)
from .mourre import commutator_check, disjoint_support_product
from .potentials import (h_minus_one, local_fields, m_parts_local, m_potential, radial_potentials,
                         tortoise_map, v0)
from .radial import bound_state_scan, radial_system, reduced_h0_matrix, weight_operator
from .tortoise import decay_order_estimate, left_ladder, right_ladder


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool = False
    values: dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: float = 0.0
    error: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        parts = []
        for key, val in self.values.items():
            if isinstance(val, float):
                parts.append(f"{key}={val:.3g}")
            else:
                parts.append(f"{key}={val}")
        msg = ", ".join(parts)
        if self.error:
            msg = f"{msg}, error={self.error}" if msg else f"error={self.error}"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {msg}; runtime {self.runtime:.1f}s (budget {self.budget:.0f}s)"

    def as_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "values": {k: (v if not isinstance(v, np.generic) else v.item()) for k, v in self.values.items()},
                "runtime": self.runtime, "budget": self.budget, "error": self.error}


def _run(number, name, budget, body):
    res = CheckResult(number, name, budget=budget)
    t0 = time.perf_counter()
    try:
        ok, values = body()
        res.values = values
        res.passed = bool(ok)
    except Exception as exc:  # reported as a failure with its message
        res.error = f"{type(exc).__name__}: {exc}"
        res.passed = False
    res.runtime = time.perf_counter() - t0
    if res.runtime > budget:
        res.passed = False
    return res


def check_identities(seed=0, n_points=10_000):
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        rng = np.random.default_rng(seed)
        r = rng.uniform(1.01 * bh.r_plus, 20.0 * bh.r_plus, n_points)
        th = rng.uniform(0.0, np.pi / 2, n_points)
        th = np.clip(th, 1e-3, np.pi / 2 - 1e-3)
        ids = identity_defects(bh, r, th)
        inv_dev = 0.0
        frame_dev = 0.0
        eye = np.eye(5)
        for ri, ti in zip(r, th):
            g = metric_at(bh, ri, ti)
            inv_dev = max(inv_dev, float(np.abs(g @ inverse_metric_at(bh, ri, ti) - eye).max()))
            frame_dev = max(frame_dev, frame_orthonormality_check(bh, ri, ti))
        vals = dict(ids, metric_inverse=inv_dev, frame=frame_dev)
        return max(vals.values()) < 1e-10, vals

    return _run(1, "algebraic identities", 5.0, body)


def check_horizons():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        scale = (bh.r_plus ** 2 + 1.0) ** 2
        d_plus = abs(float(delta_expanded(bh, bh.r_plus))) / scale
        d_minus = abs(float(delta_expanded(bh, bh.r_minus))) / scale
        st = new_black_hole(4.0, 0.0, 0.0)
        vals = {"delta_r_plus": d_plus, "delta_r_minus": d_minus, "kappa_plus": bh.kappa_plus,
                "static_r_plus_err": abs(st.r_plus - 2.0), "static_kappa_err": abs(st.kappa_plus - 0.5)}
        ok = (d_plus < 1e-12 and d_minus < 1e-12 and bh.kappa_plus > 0
              and vals["static_r_plus_err"] < 1e-14 and vals["static_kappa_err"] < 1e-14)
        return ok, vals

    return _run(2, "horizons and surface gravity", 1.0, body)


def check_clifford():
    def body():
        vals = {k: float(v) for k, v in clifford_defects(gamma_rep()).items()}
        return max(vals.values()) < 1e-14, vals

    return _run(3, "Clifford identities", 1.0, body)


def check_static_limit():
    def body():
        bh = new_black_hole(4.0, 0.0, 0.0)
        x = np.linspace(-60.0, 60.0, 121)[:, None]
        th = np.linspace(0.05, np.pi / 2 - 0.05, 31)[None, :]
        rep = gamma_rep()
        hm1 = float(np.abs(h_minus_one(bh, x, th)).max())
        v = float(np.abs(v0(bh, 1.0, x, th, rep)).max())
        m = float(np.abs(m_potential(bh, 1.0, 0.5, -1.5, x, th, rep)).max())
        pots = radial_potentials(bh, 1.0, x[:, 0])
        c = float(max(np.abs(pots.c_phi).max(), np.abs(pots.c_psi).max()))
        vals = {"h_minus_1": hm1, "v0": v, "m": m, "c": c}
        return max(vals.values()) < 1e-12, vals

    return _run(4, "static limit collapse", 2.0, body)


def check_tortoise():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        tm = tortoise_map(bh)
        x = np.linspace(-60.0 / bh.kappa_plus, 1000.0, 20001)
        d = tm.offset_of_x(x)
        rt = float(np.max(np.abs(tm.x_of_offset(d) - x) / np.maximum(1.0, np.abs(x))))
        r = np.geomspace(1.05 * bh.r_plus, 200.0 * bh.r_plus, 200)
        hstep = 1e-6 * r
        fd = (tm.x_of_r(r + hstep) - tm.x_of_r(r - hstep)) / (2.0 * hstep)
        dxdr = float(np.max(np.abs(fd / tm.dx_dr(r) - 1.0)))
        xl = left_ladder(bh)
        fit = decay_order_estimate(tm.offset_of_x(xl), xl, "-")
        rate = fit.exponent / (2.0 * bh.kappa_plus)
        vals = {"round_trip": rt, "dxdr_rel": dxdr, "left_rate_over_2kappa": rate}
        return rt < 1e-10 and dxdr < 1e-6 and abs(rate - 1.0) < 0.05, vals

    return _run(5, "tortoise map", 5.0, body)


def check_decay_orders():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        kp = bh.kappa_plus
        xr = right_ladder(bh)
        xl = left_ladder(bh)
        pr = radial_potentials(bh, 1.0, xr)
        pl = radial_potentials(bh, 1.0, xl)
        th = np.pi / 3
        a_right = decay_order_estimate(pr.a_pot, xr, "+").exponent
        a_left = decay_order_estimate(pl.a_pot, xl, "-").exponent / kp
        res_left = decay_order_estimate(pl.a_residual, xl, "-").exponent / kp
        c_left = decay_order_estimate(pl.c_phi_offset, xl, "-").exponent / kp
        h_right = decay_order_estimate(h_minus_one(bh, xr, th), xr, "+").exponent
        loc = local_fields(bh, xr, th)
        rep = gamma_rep()
        mphi, mpsi, m0 = m_parts_local(loc, 1.0, rep)
        mm = np.abs(0.5 * mphi + 0.5 * mpsi + m0).max(axis=(-2, -1))
        m_right = decay_order_estimate(mm, xr, "+").exponent
        vals = {"a_plus_inf": a_right, "a_minus_inf": a_left, "a_residual": res_left,
                "c_phi_minus_omega_a": c_left, "h_minus_1": h_right, "M_entries": m_right}
        ok = (abs(a_right + 1.0) < 0.05 and abs(a_left - 1.0) < 0.05 and abs(res_left - 3.0) < 0.45
              and abs(c_left - 2.0) < 0.2 and abs(h_right + 2.0) < 0.2 and abs(m_right + 2.0) < 0.2)
        return ok, vals

    return _run(6, "decay orders", 30.0, body)


def check_angular():
    def body():
        sizes = (250, 500, 1000)
        vals = {}
        ok = True
        for n, m in ((0.5, 0.5), (0.5, -0.5)):
            lams = []
            for nt in sizes:
                spectrum = eigen(build_angular_operator(n, m, 0.0, 0.0, (1.0, 1.0), nt, "S3"), n_eigs=10)
                lams.append(spectrum.positive[:10])
                if nt == sizes[-1]:
                    allv = np.abs(spectrum.eigenvalues)
                    half_err = float(np.max(np.abs(allv - (np.floor(allv) + 0.5))))
                    sym = spectrum.symmetry_defect()
                    small = float(allv.min())
            order = convergence_order(np.array(lams).T, sizes)
            tag = f"({n:g},{m:g})"
            vals[f"half_int_err{tag}"] = half_err
            vals[f"symmetry{tag}"] = sym
            vals[f"order_min{tag}"] = float(order.min())
            vals[f"order_max{tag}"] = float(order.max())
            ok = ok and half_err < 1e-3 and small > 1.4 and sym < 1e-10 and abs(order - 2.0).max() < 0.3
        return ok, vals

    return _run(7, "angular spectrum", 60.0, body)


def check_weight():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        x = np.linspace(-40.0, 40.0, 201)
        th = (np.arange(64) + 0.5) * np.pi / 128
        w = weight_operator(bh, x, th)
        vals = {"product": w.product_defect(), "norm_closed_form": w.norm_defect(),
                "max_norm2": float(w.m_norm2.max())}
        return vals["product"] < 1e-12 and vals["norm_closed_form"] < 1e-12 and vals["max_norm2"] < 1, vals

    return _run(8, "weight operator", 5.0, body)


def check_bound_scan(threads=1):
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        mode = ModeIndex(1, 0.5, 0.5)
        omegas = np.linspace(-3.0, 3.0, 61)
        rows = bound_state_scan(bh, 1.0, mode, omegas, threads=threads)
        fine = bound_state_scan(bh, 1.0, mode, omegas, x_min=-30.0 / bh.kappa_plus,
                                n_theta=800, n_per_unit=40, rtol=1e-11, threads=threads)
        verdicts = [r.verdict for r in rows]
        stable = verdicts == [r.verdict for r in fine]
        vals = {"all_no_l2": all(verdicts), "stable": stable,
                "min_plateau": min(r.plateau_norm for r in rows),
                "min_max_ratio": min(max(r.ratios) for r in rows)}
        return all(verdicts) and stable, vals

    return _run(9, "bound state scan", 300.0, body)


def check_unitarity():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        mode = ModeIndex(1, 0.5, 0.5)
        x = np.linspace(-40.0, 40.0, 801)
        h = reduced_h0_matrix(bh, 1.0, mode, 1.5, x)
        u0 = np.exp(-0.5 * x ** 2)[:, None] * np.array([1.0, 0.5j, 0.0, 0.2])
        series, _ = evolve(h, u0.ravel(), 0.05, 10_000, every=100)
        drift = series.norm_drift()
        e, v = eigsh(h.tocsc(), k=1, sigma=0.0, which="LM", tol=1e-14)
        vec = v[:, 0] / np.linalg.norm(v[:, 0])
        dt, steps = 1e-3, 1000
        _, u = evolve(h, vec, dt, steps, every=steps)
        phase_err = float(np.linalg.norm(u - np.exp(-1j * e[0] * dt * steps) * vec))
        vals = {"norm_drift": drift, "phase_error": phase_err, "energy": float(e[0])}
        return drift < 1e-8 and phase_err < 1e-6, vals

    return _run(10, "evolution unitarity", 60.0, body)


def check_local_decay():
    def body():
        series = decay_experiment()
        t_final = 40.0
        vals = {"t_final": t_final, "energy_ratio_T": series.energy_ratio(t_final),
                "rage_T": series.rage_at(t_final), "rage_2T": series.rage_at(2 * t_final),
                "norm_drift": series.norm_drift()}
        ok = vals["energy_ratio_T"] < 0.05 and vals["rage_2T"] < vals["rage_T"]
        return ok, vals

    return _run(11, "local energy decay", 180.0, body)


def check_commutator():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        rep = commutator_check(bh, 1.0, ModeIndex(1, 0.5, 0.5), 1.5, 10.0, -30.0, 30.0)
        disj = disjoint_support_product(10.0, np.linspace(-100.0, 100.0, 20001))
        vals = {"order": rep["order"], "finest_error": rep["errors"][-1], "disjoint_product": disj}
        return abs(rep["order"] - 2.0) < 0.3 and disj == 0.0, vals

    return _run(12, "commutator identity", 60.0, body)


def gauge_cross_check(bh, mass=1.0, n=0.5, m=0.5, half_length=30.0, dx=0.1, n_theta=16,
                      dt=0.05, t_final=20.0, every=10):
    """Local energy series of the two pictures from the same physical data."""
    grid = make_grid2d(np.arange(-half_length, half_length + dx / 2, dx), n_theta)
    pol = np.array([1.0, 0.3 - 0.2j, -0.5j, 0.8])

    def vfun(x, th):
        g = np.exp(-0.5 * (x / 1.5) ** 2)
        g = np.where(g < 1e-12, 0.0, g)
        return (g * np.sin(th) ** 1.5 * np.cos(th) ** 1.5)[..., None] * pol

    v0_ = grid.sample(vfun)
    u0_ = separable_to_lnrf(bh, grid, vfun)
    h = build_full_h_nm(bh, mass, n, m, grid)
    d0, ninv = build_separable(bh, mass, n, m, grid)
    chi = grid.per_x(bump(grid.x, 0.0, 8.0))
    steps = int(round(t_final / dt))
    s1, _ = evolve(h, u0_, dt, steps, chi, cell=grid.cell, every=every)
    s2, _ = evolve(d0, v0_, dt, steps, chi, weight=ninv, cell=grid.cell, every=every)
    dev = np.abs(s1.local_energy ** 2 - s2.local_energy ** 2) / s1.local_energy ** 2
    return float(dev.max()), s1, s2


def check_cross_form():
    def body():
        bh = new_black_hole(10.0, 1.0, 1.0)
        mode = ModeIndex(1, 0.5, 0.5)
        x = np.linspace(-60.0, 60.0, 241)
        pots = radial_potentials(bh, 1.0, x)
        omega = 0.7
        sysr = radial_system(bh, 1.0, mode, omega, 1.5)
        p_dev = float(np.abs(sysr.p_of_offset(pots.offset) - (pots.c(0.5, 0.5) - omega)).max())
        grid = make_grid2d(np.linspace(-20.0, 20.0, 41), 24)
        d0 = build_d0_nm(bh, 0.0, 0.5, 0.5, grid)
        size = grid.theta.size
        ds3 = build_angular_operator(0.5, 0.5, 0.0, 0.0, bh, 24, "S3").matrix
        gp = radial_potentials(bh, 0.0, grid.x)
        block = 0.0
        for ix in range(grid.x.size):
            blk = d0[ix * size:(ix + 1) * size, ix * size:(ix + 1) * size]
            ref = gp.a_pot[ix] * ds3 + gp.c(0.5, 0.5)[ix] * np.eye(size)
            block = max(block, float(np.abs(blk - ref).max()))
        st = new_black_hole(4.0, 0.0, 0.0)
        hs = build_full_h_nm(st, 0.0, 0.5, 0.5, grid)
        sp_ = radial_potentials(st, 0.0, grid.x)
        for ix in range(grid.x.size):
            blk = hs[ix * size:(ix + 1) * size, ix * size:(ix + 1) * size]
            block = max(block, float(np.abs(blk - sp_.a_pot[ix] * ds3).max()))
        gauge, _, _ = gauge_cross_check(bh)
        vals = {"P_identity": p_dev, "block": block, "gauge_rel_dev": gauge}
        return p_dev < 1e-12 and block < 1e-10 and gauge < 0.05, vals

    return _run(13, "cross-form consistency", 120.0, body)


CHECKS = {
    1: check_identities, 2: check_horizons, 3: check_clifford, 4: check_static_limit,
    5: check_tortoise, 6: check_decay_orders, 7: check_angular, 8: check_weight,
    9: check_bound_scan, 10: check_unitarity, 11: check_local_decay, 12: check_commutator,
    13: check_cross_form,
}


def run_all(seed=0, threads=1, only=None):
    out = []
    for num, fn in CHECKS.items():
        if only and num not in only:
            continue
        if num == 1:
            out.append(fn(seed=seed))
        elif num == 9:
            out.append(fn(threads=threads))
        else:
            out.append(fn())
    return out
