"""Command-line entry point: ``ptl <experiment> --config FILE``.

Exit status: 0 success, 2 invalid input, 3 finished but a sanity check
failed (bound violation, sum-rule defect, flagged fit).
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .green import (check_combes_thomas, check_cramer, check_transfer_green_bounds,
                    window_policy)
from .ids import MeasureApprox, PreconditionError, certify_lipschitz, check_borel_bounds, ids_curve
from .io import SCHEMAS, SchemaError, emit_plot_data, write_csv, write_manifest
from .lyapunov import (calibrate_c4, corollary_expectation, event_probability, fit_D, lyapunov)
from .model import materialize, sample_realization
from .moments import decomposition_scan, fit_exponents, moments_green, moments_spectral
from .transfer import find_critical_energies

EXIT_OK, EXIT_INVALID, EXIT_ANOMALY = 0, 2, 3


class _Result:
    def __init__(self):
        self.outputs: list[Path] = []
        self.anomalies: list[str] = []


# -- pre-flight checks that need the model -------------------------------------------

def _preflight(cfg: ExperimentConfig) -> None:
    p, spec, L = cfg.params, cfg.spec, cfg.spec.correlation_length
    if cfg.kind == "lyapunov" and p["N"] < 10 * L:
        raise ConfigError(f"N: must be >= 10 * correlation length = {10 * L}")
    if cfg.kind == "deviation-scan" and min(p["N_list"]) < L:
        raise ConfigError(f"N_list: entries must be >= correlation length {L}")
    if cfg.kind in ("moments", "exponents") and p["route"] == "spectral":
        for T in p["T_grid"]:
            need = math.ceil(4.0 * T * spec.t_max)
            if p["window"] < need:
                raise ConfigError(f"window: {p['window']} below {need} needed for T = {T:g}")
    if cfg.kind == "exponents":
        Ts = [T for T in p["T_grid"]
              if (p["fit_t_min"] is None or T >= p["fit_t_min"])
              and (p["fit_t_max"] is None or T <= p["fit_t_max"])]
        if len(Ts) < 5 or math.log10(max(Ts) / min(Ts)) < 1.5 - 1e-9:
            raise ConfigError("T_grid: the fit needs >= 5 points spanning >= 1.5 decades")
    if cfg.kind == "verify-bounds":
        w = _bounds_window(cfg)
        if max(p["N_list"]) + 1 > w:
            raise ConfigError(f"N_list: largest N does not fit the window {w}")
        if w < L:
            raise ConfigError(f"window: must be >= correlation length {L}")
    if cfg.kind == "borel" and not Path(p["density_file"]).is_file():
        raise ConfigError(f"density_file: {p['density_file']} not found")


def _bounds_window(cfg: ExperimentConfig) -> int:
    p = cfg.params
    if p["window"] is not None:
        return p["window"]
    T = 1.0 / min(p["etas"])
    return max(window_policy(T, cfg.spec.t_max, max(p["N_list"])), cfg.spec.correlation_length)


# -- experiments ---------------------------------------------------------------------------

def _critical_scan(cfg, out, res):
    p = cfg.params
    interval = None
    if p["e_min"] is not None or p["e_max"] is not None:
        lo, hi = cfg.spec.spectrum_bracket()
        interval = (p["e_min"] if p["e_min"] is not None else lo,
                    p["e_max"] if p["e_max"] is not None else hi)
    reps = find_critical_energies(cfg.spec, interval, p["grid_step"], p["tol"])
    rows = [(r.energy, r.trace_plus.real, r.trace_minus.real, r.commutator_norm, r.eta_plus,
             r.eta_minus, r.flag_2eta, r.flag_4eta) for r in reps]
    res.outputs.append(write_csv(out / "critical_scan.csv", SCHEMAS["critical-scan"], rows))


def _lyapunov(cfg, out, res):
    p = cfg.params
    kw = dict(estimator=p["estimator"], burn_in=p["burn_in"], threads=cfg.threads)
    if p["energies"] is not None:
        zs = [E + 1j * p["eta"] for E in p["energies"]]
    else:
        zs = [p["e_c"] + e + 1j * p["eta"] for e in p["epsilons"]]
    rows = []
    for z in zs:
        est = lyapunov(cfg.spec, z, p["N"], cfg.samples, cfg.seed, **kw)
        rows.append((z.real, z.imag, est.N, est.samples, est.gamma, est.stderr))
    res.outputs.append(write_csv(out / "lyapunov.csv", SCHEMAS["lyapunov"], rows))
    if p["e_c"] is not None and p["eta"] == 0.0 and len(p["epsilons"]) >= 2 \
            and max(p["epsilons"]) >= 10 * min(p["epsilons"]):
        fit = fit_D(cfg.spec, p["e_c"], p["epsilons"], p["N"], cfg.samples, cfg.seed,
                    threads=cfg.threads, burn_in=p["burn_in"])
        res.outputs.append(write_csv(
            out / "d_fit.csv", ["D_hat", "D_stderr", "cubic", "cubic_stderr", "ratio_spread", "flagged"],
            [(fit.D_hat, fit.D_stderr, fit.cubic, fit.cubic_stderr, fit.ratio_spread, fit.flagged)]))
        if fit.flagged:
            res.anomalies.append(fit.message)


def _deviation_scan(cfg, out, res):
    p = cfg.params
    z = p["energy"] + 1j * p["eta"]
    rows = []
    c4 = None
    if p["event"] == "uniform_bounded" and p["c4_calibrate_N"] is not None:
        c4 = calibrate_c4(cfg.spec, p["energy"], p["c4_calibrate_N"], cfg.samples,
                          (cfg.seed + 1) % 2 ** 64, alpha=p["alpha"], c5=p["c5"],
                          quantile=p["c4_quantile"], n_eps=p["n_eps"], n_delta=p["n_delta"],
                          threads=cfg.threads)
    for N in p["N_list"]:
        if p["event"] == "corollary":
            v = corollary_expectation(cfg.spec, z, N, cfg.samples, cfg.seed, threads=cfg.threads)
            rows.append((z.real, z.imag, N, cfg.samples, v, math.nan, math.nan, math.nan))
            continue
        if c4 is not None:
            thr = c4
        elif p["log_threshold"] is not None:
            thr = p["log_threshold"]
        else:
            thr = p["threshold_scale"] * N ** p["threshold_power"]
        ev = event_probability(cfg.spec, p["event"], z, N, thr, cfg.samples, cfg.seed,
                               alpha=p["alpha"], c5=p["c5"], n_eps=p["n_eps"],
                               n_delta=p["n_delta"], threads=cfg.threads)
        rows.append((z.real, z.imag, N, ev.samples, ev.p_hat, ev.wilson_interval[0],
                     ev.wilson_interval[1], ev.log_threshold))
    res.outputs.append(write_csv(out / "deviation_scan.csv", SCHEMAS["deviation-scan"], rows))


def _verify_bounds(cfg, out, res):
    p = cfg.params
    kinds = [b.strip() for b in p["bounds"].split(",")]
    w = _bounds_window(cfg)
    zs = [E + 1j * eta for E in p["energies"] for eta in p["etas"]]
    rows = []
    for i in range(p["instances"]):
        r = sample_realization(cfg.spec, cfg.seed, i, w)
        reps = []
        for z in zs:
            if "combes_thomas" in kinds:
                reps.append(check_combes_thomas(materialize(r), z))
            if "cramer" in kinds:
                for N in p["N_list"]:
                    reps += check_cramer(r, z, N)
            if "transfer" in kinds:
                reps += check_transfer_green_bounds(r, z, p["N_list"])
        for b in reps:
            rows.append((b.bound_kind, cfg.seed, i, b.z.real, b.z.imag, b.N, b.lhs, b.rhs,
                         b.margin, b.satisfied))
            if not b.satisfied:
                res.anomalies.append(f"{b.bound_kind} violated: sample {i}, z = {b.z}, "
                                     f"N = {b.N}, lhs = {b.lhs:.6g} > rhs = {b.rhs:.6g}")
    res.outputs.append(write_csv(out / "verify_bounds.csv", SCHEMAS["verify-bounds"], rows))


def _moment_table(cfg):
    p = cfg.params
    if p["route"] == "spectral":
        return moments_spectral(cfg.spec, p["q_grid"], p["T_grid"], cfg.samples, cfg.seed,
                                window=p["window"], threads=cfg.threads)
    ew = (p["e_lo"], p["e_hi"]) if p["e_lo"] is not None else None
    return moments_green(cfg.spec, p["q_grid"], p["T_grid"], cfg.samples, cfg.seed, ew,
                         window=p["window"], points_per_width=p["points_per_width"],
                         tol=p["tol"], tails=p["tails"], threads=cfg.threads)


def _write_moments(table, out, res):
    rows = [(float(q), float(T), table.route, table.samples, float(table.m[i, k]),
             float(table.stderr[i, k]), float(table.normalization_defect[k]))
            for i, q in enumerate(table.q_grid) for k, T in enumerate(table.T_grid)]
    path = write_csv(out / "moments.csv", SCHEMAS["moments"], rows)
    res.outputs.append(path)
    res.outputs += emit_plot_data(path, "moments")
    if table.flagged:
        res.anomalies.append(f"normalization defect {table.normalization_defect.max():.3g} "
                             f"exceeds 1e-2")


def _moments(cfg, out, res):
    _write_moments(_moment_table(cfg), out, res)


def _exponents(cfg, out, res):
    p = cfg.params
    table = _moment_table(cfg)
    _write_moments(table, out, res)
    lo = p["fit_t_min"] if p["fit_t_min"] is not None else min(p["T_grid"])
    hi = p["fit_t_max"] if p["fit_t_max"] is not None else max(p["T_grid"])
    fits = fit_exponents(table, (lo, hi))
    path = write_csv(out / "exponents.csv", SCHEMAS["exponents"],
                     [(f.q, f.beta_hat, f.beta_minus, f.beta_plus, f.stderr) for f in fits])
    res.outputs.append(path)
    res.outputs += emit_plot_data(path, "exponents")
    res.anomalies += [f"q = {f.q:g}: {f.message}" for f in fits if f.flagged]


def _decomposition(cfg, out, res):
    p = cfg.params
    rep = decomposition_scan(cfg.spec, p["q"], p["T_grid"], p["alpha"], cfg.samples, cfg.seed,
                             E_c=p["e_c"], eps0=p["eps0"], points_per_width=p["points_per_width"],
                             tol=p["tol"], threads=cfg.threads)
    rows = [(float(T), rep.central[k], rep.main[k], rep.boundary[k], rep.remainder[k],
             rep.total[k]) for k, T in enumerate(rep.T_grid)]
    res.outputs.append(write_csv(out / "decomposition.csv",
                                 ["T", "central", "main", "boundary", "remainder", "total"], rows))
    res.outputs.append(write_csv(out / "decomposition_slopes.csv",
                                 ["piece", "slope", "predicted", "E_c", "eps0"],
                                 [(k, rep.slopes[k], rep.predicted[k], rep.E_c, rep.eps0)
                                  for k in ("central", "main", "boundary")]))
    parts = rep.central + rep.main + rep.boundary + rep.remainder
    err = np.abs(parts / rep.total - 1.0)
    if np.any(err > 0.05):
        res.anomalies.append(f"pieces miss the total by {err.max():.3g} (> 5%)")


def _ids(cfg, out, res):
    p = cfg.params
    c = ids_curve(cfg.spec, p["energies"], p["window"], cfg.samples, cfg.seed,
                  smoothing=p["smoothing"], threads=cfg.threads)
    res.outputs.append(write_csv(out / "ids.csv", SCHEMAS["ids"],
                                 list(zip(c.energies, c.N_hat, c.stderr))))


def _read_density(path: str, normalize: bool) -> MeasureApprox:
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as e:
        raise ConfigError(f"density_file: {e}") from None
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise ConfigError("density_file: need two columns (edge, density) and >= 2 rows")
    try:
        return MeasureApprox.from_density(data[:, 0], data[:-1, 1], normalize=normalize)
    except ValueError as e:
        raise ConfigError(f"density_file: {e}") from None


def _borel(cfg, out, res):
    p = cfg.params
    mu = _read_density(p["density_file"], p["normalize"])
    C = p["C"] if p["C"] is not None else certify_lipschitz(mu, p["energy"], p["eps_min"])
    try:
        reps = check_borel_bounds(mu, p["energy"], C, p["deltas"], p["eps0s"], p["eps_min"])
    except PreconditionError as e:
        raise ConfigError(f"C: {e}") from None
    rows = []
    for b in reps:
        eps0 = float(b.instance.rsplit("eps0=", 1)[1]) if "eps0=" in b.instance else math.nan
        rows.append((b.bound_kind, p["energy"], b.z.imag, eps0, C, b.lhs, b.rhs, b.margin,
                     b.satisfied))
        if not b.satisfied:
            res.anomalies.append(f"{b.bound_kind} violated: {b.instance}")
    res.outputs.append(write_csv(out / "borel.csv", ["bound_kind", "E", "delta", "eps0", "C",
                                                     "lhs", "rhs", "margin", "satisfied"], rows))


_RUNNERS = {
    "critical-scan": _critical_scan,
    "lyapunov": _lyapunov,
    "deviation-scan": _deviation_scan,
    "verify-bounds": _verify_bounds,
    "moments": _moments,
    "exponents": _exponents,
    "decomposition-scan": _decomposition,
    "ids": _ids,
    "borel": _borel,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute a validated config; returns the exit status."""
    started = datetime.now(timezone.utc)
    out = Path(cfg.out)
    try:
        _preflight(cfg)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as e:
        print(f"ptl: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"ptl: error: out: cannot create {out}: {e.strerror}", file=sys.stderr)
        return EXIT_INVALID
    res = _Result()
    try:
        _RUNNERS[cfg.kind](cfg, out, res)
    except ConfigError as e:
        print(f"ptl: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    status = EXIT_ANOMALY if res.anomalies else EXIT_OK
    for msg in res.anomalies:
        print(f"ptl: anomaly: {msg}", file=sys.stderr)
    write_manifest(out / "manifest.json", cfg.resolved(), cfg.digest(), __version__, started,
                   res.outputs, status, res.anomalies)
    return status


_HELP = {
    "critical-scan": "critical energies of a polymer model",
    "lyapunov": "Lyapunov exponents on an energy grid",
    "deviation-scan": "empirical probabilities of transfer-matrix growth events",
    "verify-bounds": "check Green's function identities and bounds on random windows",
    "moments": "disorder-averaged moments of the position operator",
    "exponents": "moments plus fitted diffusion exponents",
    "decomposition-scan": "partial moments split by energy and distance",
    "ids": "integrated density of states by eigenvalue counting",
    "borel": "Borel transform bounds for a density read from file",
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ptl", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ptl {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=_HELP[kind])
        sp.add_argument("--config", required=True, help="INI config or a run manifest (.json)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out")
    pp = sub.add_parser("plot", help="plot-ready data files from a CSV")
    pp.add_argument("csv")
    pp.add_argument("--kind", required=True, choices=("moments", "exponents"))
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "plot":
        try:
            for p in emit_plot_data(args.csv, args.kind):
                print(p)
        except (SchemaError, OSError) as e:
            print(f"ptl: error: {e}", file=sys.stderr)
            return EXIT_INVALID
        return EXIT_OK
    try:
        cfg = load_config(args.config, args.command)
        changes = {}
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed: must lie in [0, 2^64)")
            changes["seed"] = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads: must be >= 1")
            changes["threads"] = args.threads
        if args.out is not None:
            changes["out"] = args.out
        cfg = dataclasses.replace(cfg, **changes)
    except ConfigError as e:
        print(f"ptl: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
