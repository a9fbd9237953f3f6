"""Command line runner with one subcommand per module and deterministic output files."""

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import acceptance
from .angular import ModeIndex, build_angular_operator, check_half_integer, eigen, spectrum_rows
from .clifford import clifford_defects, gamma_rep
from .errors import ConfigError, MPDiracError
from .evolution import bump, evolve, gaussian_1d, reflection_free, support_radius
from .geometry import (delta_expanded, frame_orthonormality_check, gram_deviation, identity_defects,
                       inverse_metric_at, metric_at, new_black_hole, separable_frame)
from .mourre import (build_conjugates, closed_form_conjugate_commutator, dump_report,
                     mourre_window_diagnostic)
from .potentials import h_minus_one, local_fields, m_parts_local, radial_potentials, v0_local
from .radial import bound_state_scan, reduced_h0_matrix
from .tortoise import decay_order_estimate, left_ladder, right_ladder

SUBCOMMANDS = ("geometry-check", "frame-check", "potentials-table", "asymptotics",
               "angular-spectrum", "bound-scan", "evolve", "mourre-lab", "all-acceptance")

DEFAULT_CONFIG = {
    "black_hole": {"mu": 10.0, "a": 1.0, "b": 1.0},
    "mass": 1.0,
    "modes": [[1, 0.5, 0.5]],
    "grid": {"x_min": -60.0, "x_max": 60.0, "n_x": 2401, "n_theta": 200},
    "evolution": {"dt": 0.05, "n_steps": 1600, "chi_center": 0.0, "chi_halfwidth": 8.0,
                  "u0_center": 0.0, "u0_width": 1.0},
    "scan": {"omega_min": -3.0, "omega_max": 3.0, "n_omega": 61},
    "mourre": {"S": 5.0, "window": [1.5, 2.0], "epsilon": 0.0, "sign": 1.0,
               "half_length": 20.0, "n_per_unit": 5},
    "angular": {"which": "S3", "omega": 0.0, "n_eigs": 10},
    "n_points": 10000,
    "output": "out",
    "seed": 0,
}

_INT_KEYS = {("grid", "n_x"), ("grid", "n_theta"), ("evolution", "n_steps"), ("scan", "n_omega"),
             ("angular", "n_eigs"), ("mourre", "n_per_unit"), ("n_points",),
             ("seed",)}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate_config(raw):
    """Merge raw JSON data over the defaults and check every field.

    Raises ConfigError on the first violation.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, val in raw.items():
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(cfg[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{key} must be an object")
            for sub, sv in val.items():
                if sub not in cfg[key]:
                    raise ConfigError(f"unknown config key {key}.{sub}")
                cfg[key][sub] = sv
        else:
            cfg[key] = val

    for section, body in cfg.items():
        items = body.items() if isinstance(body, dict) else [(None, body)]
        for sub, val in items:
            path = (section, sub) if sub is not None else (section,)
            name = ".".join(p for p in path)
            if section in ("modes", "output", "black_hole") or (section, sub) in {
                    ("mourre", "window"), ("angular", "which")}:
                continue
            if not _is_number(val):
                raise ConfigError(f"{name} must be a finite number, got {val!r}")
            if path in _INT_KEYS and (not float(val).is_integer()):
                raise ConfigError(f"{name} must be an integer, got {val!r}")

    bhc = cfg["black_hole"]
    for k in ("mu", "a", "b"):
        if not _is_number(bhc[k]):
            raise ConfigError(f"black_hole.{k} must be a finite number")
    try:
        new_black_hole(bhc["mu"], bhc["a"], bhc["b"])
    except MPDiracError as exc:
        raise ConfigError(f"black_hole: {exc}") from exc

    if not isinstance(cfg["modes"], list) or not cfg["modes"]:
        raise ConfigError("modes must be a nonempty list of [l, n, m]")
    for mode in cfg["modes"]:
        if not (isinstance(mode, list) and len(mode) == 3 and all(_is_number(v) for v in mode)):
            raise ConfigError(f"mode {mode!r} must be [l, n, m] numbers")
        if not float(mode[0]).is_integer() or mode[0] < 1:
            raise ConfigError(f"mode {mode!r}: l must be a positive integer")
        for v, nm in ((mode[1], "n"), (mode[2], "m")):
            try:
                check_half_integer(v, nm)
            except MPDiracError as exc:
                raise ConfigError(f"mode {mode!r}: {exc}") from exc

    g = cfg["grid"]
    if not g["x_min"] < g["x_max"]:
        raise ConfigError("grid.x_min must be below grid.x_max")
    if g["n_x"] < 2:
        raise ConfigError("grid.n_x must be at least 2")
    if g["n_theta"] < 16:
        raise ConfigError("grid.n_theta must be at least 16")
    for path in (("evolution", "n_steps"), ("scan", "n_omega"), ("angular", "n_eigs"),
                 ("n_points",)):
        val = cfg[path[0]] if len(path) == 1 else cfg[path[0]][path[1]]
        if val < 1:
            raise ConfigError(f"{'.'.join(path)} must be at least 1")
    if cfg["evolution"]["dt"] <= 0:
        raise ConfigError("evolution.dt must be positive")
    if cfg["evolution"]["u0_width"] <= 0 or cfg["evolution"]["chi_halfwidth"] <= 0:
        raise ConfigError("evolution widths must be positive")
    if cfg["scan"]["omega_min"] > cfg["scan"]["omega_max"]:
        raise ConfigError("scan.omega_min must not exceed scan.omega_max")
    if cfg["mass"] < 0:
        raise ConfigError("mass must be nonnegative")
    win = cfg["mourre"]["window"]
    if not (isinstance(win, list) and len(win) == 2 and all(_is_number(v) for v in win) and win[0] < win[1]):
        raise ConfigError("mourre.window must be [lo, hi] with lo < hi")
    for key in ("S", "half_length", "n_per_unit"):
        if cfg["mourre"][key] <= 0:
            raise ConfigError(f"mourre.{key} must be positive")
    if cfg["angular"]["which"] not in ("S3", "A"):
        raise ConfigError("angular.which must be 'S3' or 'A'")
    if not isinstance(cfg["output"], str):
        raise ConfigError("output must be a string")
    return cfg


def load_config(path):
    if path is None:
        return validate_config({})
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(raw)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _check(name, passed, **values):
    return {"name": name, "passed": bool(passed),
            "values": {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in values.items()}}


def _bh(cfg):
    b = cfg["black_hole"]
    return new_black_hole(b["mu"], b["a"], b["b"])


def _modes(cfg):
    return [ModeIndex(int(l), float(n), float(m)) for l, n, m in cfg["modes"]]


def _x_grid(cfg):
    g = cfg["grid"]
    return np.linspace(g["x_min"], g["x_max"], int(g["n_x"]))


def cmd_geometry_check(cfg, out, seed, threads):
    bh = _bh(cfg)
    rng = np.random.default_rng(seed)
    n = int(cfg["n_points"])
    r = rng.uniform(1.01 * bh.r_plus, 20.0 * bh.r_plus, n)
    th = np.clip(rng.uniform(0.0, np.pi / 2, n), 1e-3, np.pi / 2 - 1e-3)
    ids = identity_defects(bh, r, th)
    eye = np.eye(5)
    inv_dev = max(float(np.abs(metric_at(bh, a, t) @ inverse_metric_at(bh, a, t) - eye).max())
                  for a, t in zip(r, th))
    scale = (bh.r_plus ** 2 + bh.a ** 2) * (bh.r_plus ** 2 + bh.b ** 2)
    dp = abs(float(delta_expanded(bh, bh.r_plus))) / scale
    dm = abs(float(delta_expanded(bh, bh.r_minus))) / scale
    checks = [_check(f"identity:{k}", v < 1e-10, value=v) for k, v in ids.items()]
    checks.append(_check("metric_inverse", inv_dev < 1e-10, value=inv_dev))
    checks.append(_check("delta_at_r_plus", dp < 1e-12, value=dp))
    checks.append(_check("delta_at_r_minus", dm < 1e-12, value=dm))
    checks.append(_check("kappa_plus_positive", bh.kappa_plus > 0, value=bh.kappa_plus))
    rows = [(c["name"], c["values"]["value"], c["passed"]) for c in checks]
    write_csv(os.path.join(out, "geometry-check.csv"), ("check", "value", "passed"), rows)
    return checks


def cmd_frame_check(cfg, out, seed, threads):
    bh = _bh(cfg)
    rep = gamma_rep()
    rng = np.random.default_rng(seed)
    n = min(int(cfg["n_points"]), 2000)
    r = rng.uniform(1.01 * bh.r_plus, 20.0 * bh.r_plus, n)
    th = np.clip(rng.uniform(0.0, np.pi / 2, n), 1e-3, np.pi / 2 - 1e-3)
    lnrf = max(frame_orthonormality_check(bh, a, t) for a, t in zip(r, th))
    sep = max(gram_deviation(bh, separable_frame(bh, a, t), a, t) for a, t in zip(r, th))
    checks = [_check("lnrf_frame", lnrf < 1e-10, value=lnrf),
              _check("separable_frame", sep < 1e-10, value=sep)]
    for k, v in clifford_defects(rep).items():
        checks.append(_check(f"clifford:{k}", v < 1e-14, value=float(v)))
    rows = [(c["name"], c["values"]["value"], c["passed"]) for c in checks]
    write_csv(os.path.join(out, "frame-check.csv"), ("check", "value", "passed"), rows)
    return checks


def cmd_potentials_table(cfg, out, seed, threads):
    bh = _bh(cfg)
    rep = gamma_rep()
    x = _x_grid(cfg)
    pots = radial_potentials(bh, cfg["mass"], x)
    th = np.pi / 4
    loc = local_fields(bh, x, th)
    v0n = np.linalg.norm(v0_local(loc, rep), ord=2, axis=(-2, -1))
    mphi, mpsi, m0 = m_parts_local(loc, cfg["mass"], rep)
    hm1 = h_minus_one(bh, x, th)
    mode = _modes(cfg)[0]
    mn = np.linalg.norm(mode.n * mphi + mode.m * mpsi + m0, ord=2, axis=(-2, -1))
    rows = zip(x, pots.r, pots.a_pot, pots.b_pot, pots.c_phi, pots.c_psi, hm1, v0n, mn)
    write_csv(os.path.join(out, "potentials-table.csv"),
              ("x", "r", "a", "b", "c_phi", "c_psi", "h_minus_1", "v0_norm", "m_norm"), rows)
    finite = bool(np.all(np.isfinite([pots.a_pot, pots.b_pot, pots.c_phi, pots.c_psi])))
    return [_check("finite_potentials", finite), _check("a_positive", np.all(pots.a_pot > 0))]


def cmd_asymptotics(cfg, out, seed, threads):
    bh = _bh(cfg)
    rep = gamma_rep()
    kp = bh.kappa_plus
    xr, xl = right_ladder(bh), left_ladder(bh)
    pr = radial_potentials(bh, cfg["mass"], xr)
    pl = radial_potentials(bh, cfg["mass"], xl)
    th = np.pi / 3
    mode = _modes(cfg)[0]
    loc = local_fields(bh, xr, th)
    mphi, mpsi, m0 = m_parts_local(loc, cfg["mass"], rep)
    mm = np.abs(mode.n * mphi + mode.m * mpsi + m0).max(axis=(-2, -1))
    fits = [
        ("a_pot", "+inf", decay_order_estimate(pr.a_pot, xr, "+").exponent, -1.0, 0.05),
        ("a_pot", "-inf", decay_order_estimate(pl.a_pot, xl, "-").exponent / kp, 1.0, 0.05),
        ("a_residual", "-inf", decay_order_estimate(pl.a_residual, xl, "-").exponent / kp, 3.0, 0.45),
        ("c_phi_minus_omega_a", "-inf", decay_order_estimate(pl.c_phi_offset, xl, "-").exponent / kp, 2.0, 0.2),
        ("h_minus_1", "+inf", decay_order_estimate(h_minus_one(bh, xr, th), xr, "+").exponent, -2.0, 0.2),
        ("m_entries", "+inf", decay_order_estimate(mm, xr, "+").exponent, -2.0, 0.2),
    ]
    checks = [_check(f"{name}@{end}", abs(val - exp) < tol, exponent=val, expected=exp, tolerance=tol)
              for name, end, val, exp, tol in fits]
    write_csv(os.path.join(out, "asymptotics.csv"), ("quantity", "end", "exponent", "expected", "tolerance"),
              [(n, e, v, x, t) for n, e, v, x, t in fits])
    return checks


def cmd_angular_spectrum(cfg, out, seed, threads):
    bh = _bh(cfg)
    ang = cfg["angular"]
    nt = int(cfg["grid"]["n_theta"])
    count = int(ang["n_eigs"])
    rows, checks = [], []
    for mode in _modes(cfg):
        ops = [build_angular_operator(mode.n, mode.m, ang["omega"], cfg["mass"], bh, size, ang["which"])
               for size in (nt, 2 * nt)]
        specs = [eigen(op, n_eigs=count) for op in ops]
        est = np.abs(specs[1].positive[:count] - specs[0].positive[:count]) / 3.0
        rows.extend(spectrum_rows(mode.n, mode.m, ang["omega"], specs[1], 2 * nt, est, count))
        sym = specs[1].symmetry_defect()
        checks.append(_check(f"symmetry({mode.n:g},{mode.m:g})", sym < 1e-10, value=sym))
        if ang["which"] == "S3" or (bh.a == 0 and bh.b == 0):
            vals = np.abs(specs[1].eigenvalues)
            err = float(np.max(np.abs(vals - (np.floor(vals) + 0.5))))
            checks.append(_check(f"half_integers({mode.n:g},{mode.m:g})",
                                 err < 1e-3 and vals.min() > 1.4, value=err))
    write_csv(os.path.join(out, "angular-spectrum.csv"),
              ("n", "m", "l", "omega", "lambda", "grid_size", "est_error"), rows)
    return checks


def _omegas(cfg):
    s = cfg["scan"]
    return np.linspace(s["omega_min"], s["omega_max"], int(s["n_omega"]))


def cmd_bound_scan(cfg, out, seed, threads):
    bh = _bh(cfg)
    rows, checks = [], []
    for mode in _modes(cfg):
        res = bound_state_scan(bh, cfg["mass"], mode, _omegas(cfg), n_theta=int(cfg["grid"]["n_theta"]),
                               threads=threads)
        for r in res:
            rows.append((mode.l, mode.n, mode.m) + r.as_row())
        checks.append(_check(f"no_l2({mode.l},{mode.n:g},{mode.m:g})", all(r.verdict for r in res),
                             min_plateau=min(r.plateau_norm for r in res)))
    write_csv(os.path.join(out, "bound-scan.csv"),
              ("l", "n", "m", "omega", "lambda", "plateau_norm", "ratio_1", "ratio_2", "ratio_3", "verdict"),
              rows)
    return checks


def cmd_evolve(cfg, out, seed, threads):
    from .angular import lambda_of_omega

    bh = _bh(cfg)
    ev = cfg["evolution"]
    x = _x_grid(cfg)
    t_final = ev["dt"] * ev["n_steps"]
    checks = [_check("reflection_free", reflection_free(
        x[0], x[-1], ev["u0_center"], ev["u0_width"], ev["chi_center"], ev["chi_halfwidth"], t_final),
        t_final=t_final, support_radius=support_radius(ev["u0_width"]))]
    rows = []
    every = max(1, int(ev["n_steps"]) // 400)
    for mode in _modes(cfg):
        lam = lambda_of_omega(mode.n, mode.m, mode.l, cfg["mass"], bh, 0.0, int(cfg["grid"]["n_theta"]))
        h = reduced_h0_matrix(bh, cfg["mass"], mode, lam, x, order=4)
        u0 = gaussian_1d(x, ev["u0_center"], ev["u0_width"])
        chi = np.repeat(bump(x, ev["chi_center"], ev["chi_halfwidth"]), 4)
        series, _ = evolve(h, u0, ev["dt"], int(ev["n_steps"]), chi, cell=x[1] - x[0], every=every)
        for row in series.rows():
            rows.append((mode.l, mode.n, mode.m) + tuple(row))
        drift = series.norm_drift()
        checks.append(_check(f"norm_drift({mode.l},{mode.n:g},{mode.m:g})", drift < 1e-8, value=drift,
                             energy_ratio=series.energy_ratio(), lam=lam))
    write_csv(os.path.join(out, "evolve.csv"),
              ("l", "n", "m", "t", "norm", "local_energy", "rage_avg"), rows)
    return checks


def cmd_mourre_lab(cfg, out, seed, threads):
    bh = _bh(cfg)
    mo = cfg["mourre"]
    half_len = mo["half_length"]
    x = np.linspace(-half_len, half_len, int(round(2 * half_len * mo["n_per_unit"])) + 1)
    lo, hi = mo["window"]
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    reports, checks = [], []
    for mode in _modes(cfg):
        # D_S3 acts on the (l, n, m) sector as multiplication by this eigenvalue
        lam = abs(mode.n) + abs(mode.m) + mode.l - 0.5
        h = reduced_h0_matrix(bh, cfg["mass"], mode, lam, x)
        conj = build_conjugates(lam, mo["S"], x, bh=bh)
        a = conj.combined(mo["sign"])
        comm = closed_form_conjugate_commutator(bh, cfg["mass"], mode, lam, mo["S"], x, sign=mo["sign"])
        meta = {"mode": [mode.l, mode.n, mode.m], "S": mo["S"], "k": lam, "sign": mo["sign"]}
        rep = mourre_window_diagnostic(h, a, center, half, cfg["mass"], mo["epsilon"], meta=meta,
                                       commutator=comm)
        reports.append(rep)
        herm = max(conj.hermiticity_defects())
        checks.append(_check(f"conjugate_hermiticity({mode.l},{mode.n:g},{mode.m:g})", herm < 1e-12,
                             value=herm, positive_fraction=rep["positive_fraction"]))
    dump_report({"reports": reports}, os.path.join(out, "mourre-lab.json"))
    return checks


def cmd_all_acceptance(cfg, out, seed, threads):
    results = acceptance.run_all(seed=seed, threads=threads)
    for res in results:
        print(res.line(), flush=True)
    dump_report({"criteria": [r.as_dict() for r in results]}, os.path.join(out, "all-acceptance.json"))
    return [_check(f"criterion_{r.number}:{r.name}", r.passed, runtime=r.runtime,
                   **{k: v for k, v in r.values.items()}) for r in results]


COMMANDS = {
    "geometry-check": cmd_geometry_check, "frame-check": cmd_frame_check,
    "potentials-table": cmd_potentials_table, "asymptotics": cmd_asymptotics,
    "angular-spectrum": cmd_angular_spectrum, "bound-scan": cmd_bound_scan, "evolve": cmd_evolve,
    "mourre-lab": cmd_mourre_lab, "all-acceptance": cmd_all_acceptance,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    return obj


def run(subcommand, config_path=None, out=None, seed=None, threads=1):
    """Run one subcommand and return its exit status.

    Status 0 means every hard check passed, 1 means a check failed,
    2 means the configuration was rejected (nothing is written then).
    """
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    cfg = load_config(config_path)
    seed = int(cfg["seed"] if seed is None else seed)
    out = out or cfg["output"]
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    try:
        checks = COMMANDS[subcommand](cfg, out, seed, threads)
        error = ""
    except MPDiracError as exc:
        checks = []
        error = f"{subcommand}: {type(exc).__name__}: {exc}"
    passed = bool(checks) and not error and all(c["passed"] for c in checks)
    summary = {"subcommand": subcommand, "seed": seed, "prng": "PCG64 (numpy default_rng)",
               "passed": passed, "error": error, "runtime": time.perf_counter() - t0,
               "checks": checks}
    dump_report(_jsonable(summary), os.path.join(out, "summary.json"))
    if error:
        print(error, file=sys.stderr)
    return 0 if passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="mpdirac", description="Dirac fields on 5D rotating black holes.")
    p.add_argument("command", nargs="?", choices=SUBCOMMANDS, help="subcommand to run")
    p.add_argument("--subcommand", dest="subcommand", choices=SUBCOMMANDS, help="alternative to the positional")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="seed for the PCG64 generator")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    name = args.subcommand or args.command
    if name is None or (args.subcommand and args.command and args.subcommand != args.command):
        print("error: give exactly one subcommand", file=sys.stderr)
        return 2
    try:
        return run(name, args.config, args.out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
