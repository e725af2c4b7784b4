"""
Command-line driver.

Subcommands ``density``, ``asymptotics``, ``diagnose``, ``turan`` and
``bounds`` read a flat key/value config and write CSV/JSON artifacts.

Exit codes: 0 ok, 2 config error, 3 more than half of the grid failed,
4 internal error.
"""

import argparse
import csv
import json
import math
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .asymptotics import fit_sine_law, phase_limit_gap
from .config import load
from .density import density_profile
from .errors import ConfigError, JacobiError
from .families import limit_matrix, make_family
from .jacobi_core import block_stack, discriminant
from .stolz import (CONSISTENT, INCONCLUSIVE, INCONSISTENT, carleman_check,
                    entrywise_sequences, stolz_diagnose)
from .turan import eigenvector_bounds, estimate_g
from .uniform_diag import build_chain, reconstruct_sweep

EXIT_OK, EXIT_CONFIG, EXIT_MAJORITY, EXIT_INTERNAL = 0, 2, 3, 4


class MajorityFailure(Exception):
    pass


def version_string():
    """``git describe`` of the source tree when available, else the package version."""
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=here, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def fmt(v):
    """17 significant digits for floats; stable text for everything else."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(t) for k, t in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(t) for t in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(t) for t in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c, "")) for c in columns])


def write_json(path, cfg, command, payload, wall):
    doc = {"command": command, "version": version_string(), "wall_time_s": wall,
           "config": cfg.to_dict(), **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _map_points(fn, xs, threads):
    """Apply ``fn`` per grid point; results come back in grid order."""
    if threads <= 1:
        return [fn(j, x) for j, x in enumerate(xs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(xs)), xs))


def _check_majority(statuses):
    failed = sum(s != "ok" for s in statuses)
    if failed * 2 > len(statuses):
        raise MajorityFailure(f"{failed} of {len(statuses)} grid points failed")


def _limit(cfg, x):
    try:
        return limit_matrix(cfg.family, cfg.i, x)
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# Commands.  Each returns {stem: (columns, rows, payload)} plus statuses.
# ---------------------------------------------------------------------------

def cmd_density(cfg, threads=1):
    model = make_family(cfg.family)
    N = cfg.period
    prof = density_profile(model, N, cfg.i, cfg.grid, r=cfg.r, tol=cfg.tol, n_max=cfg.n_max,
                           window=cfg.window, ladder=cfg.ladder, delta_min=cfg.delta_min)
    Ls = sorted(prof.mu_L)
    cols = ["x", "g", "h", "nu_prime", "converged", "status"] + [f"mu_L_{L}" for L in Ls]
    rows = []
    for j, x in enumerate(prof.grid):
        row = {"x": x, "g": prof.g[j], "h": prof.h[j], "nu_prime": prof.nu_prime[j],
               "converged": prof.converged[j], "status": prof.status[j]}
        row.update({f"mu_L_{L}": prof.mu_L[L][j] for L in Ls})
        rows.append(row)
    payload = {"points": rows, "ladder_gaps": prof.ladder_gaps() if any(prof.ok) else {},
               "sup_norm_X": float(np.max(prof.meta["sup_norm_X"]))}
    return {"density": (cols, rows, payload)}, prof.status


def cmd_turan(cfg, threads=1):
    model = make_family(cfg.family)
    N = cfg.period
    xs = cfg.grid
    k_last = (cfg.n_max - N - cfg.i) // N
    X = block_stack(model, N, cfg.i, k_last, k_last + 1, xs)[0]
    ell = discriminant(X) < -cfg.delta_min
    g = np.full(xs.size, np.nan)
    conv = np.zeros(xs.size, bool)
    spread = np.full(xs.size, np.nan)
    if ell.any():
        g[ell], conv[ell], trace = estimate_g(model, N, cfg.i, xs[ell], tol=cfg.tol,
                                              n_max=cfg.n_max, window=cfg.window,
                                              check_elliptic=False)
        spread[ell] = trace.cauchy_profile[-1] / np.abs(trace.values[-1])
    status = ["ok" if e else "non-elliptic" for e in ell]
    cols = ["x", "g", "converged", "final_spread", "status"]
    rows = [{"x": x, "g": g[j], "converged": conv[j], "final_spread": spread[j],
             "status": status[j]} for j, x in enumerate(xs)]
    return {"turan": (cols, rows, {"points": rows})}, status


def cmd_bounds(cfg, threads=1):
    model = make_family(cfg.family)
    N = cfg.period
    xs = cfg.grid
    th = np.pi * np.arange(cfg.angles) / cfg.angles

    def one(j, x):
        try:
            lo, hi = eigenvector_bounds(model, N, cfg.i, x, (np.cos(th), np.sin(th)), cfg.n_max)
            c_low, c_high = float(lo.min()), float(hi.max())
            return {"x": x, "c_low": c_low, "c_high": c_high,
                    "c": max(1 / c_low, c_high), "status": "ok"}
        except JacobiError as exc:
            return {"x": x, "status": type(exc).__name__}

    rows = _map_points(one, xs, threads)
    cols = ["x", "c_low", "c_high", "c", "status"]
    return {"bounds": (cols, rows, {"points": rows, "angles": cfg.angles})}, \
        [r["status"] for r in rows]


def cmd_asymptotics(cfg, threads=1):
    model = make_family(cfg.family)
    N = cfg.period
    xs = cfg.grid
    prof = density_profile(model, N, cfg.i, xs, r=cfg.r, tol=cfg.tol, n_max=cfg.n_max,
                           window=cfg.window, delta_min=cfg.delta_min)

    def one(j, x):
        row = {"x": x}
        if prof.status[j] != "ok":
            row["status"] = prof.status[j]
            return row
        try:
            chain = build_chain(model, N, cfg.i, cfg.r, x, n_max=cfg.n_max,
                                delta_min=cfg.delta_min, delta=cfg.delta_guard)
            X = _limit(cfg, x)
            fit = fit_sine_law(model, N, cfg.i, x, chain, prof.nu_prime[j], prof.h[j],
                               X_limit=X, rms_fraction=cfg.rms_fraction)
            X = X if X is not None else block_stack(model, N, cfg.i, chain.k_max,
                                                    chain.k_max + 1, np.array([x]))[0, 0]
            row.update({"A": fit.amplitude, "eta": fit.eta, "tail_rms": fit.tail_rms,
                        "rms_over_A": fit.tail_rms / fit.amplitude,
                        "theta_gap": phase_limit_gap(chain, X), "M": chain.M,
                        "fit_ok": fit.ok, "stale_limit": fit.stale_limit,
                        "status": "ok" if fit.ok else "fit-rejected"})
        except (JacobiError, ValueError) as exc:
            row["status"] = type(exc).__name__
        return row

    rows = _map_points(one, xs, threads)
    cols = ["x", "A", "eta", "tail_rms", "rms_over_A", "theta_gap", "M", "fit_ok", "stale_limit",
            "status"]
    return {"sinefit": (cols, rows, {"points": rows})}, [r["status"] for r in rows]


def _combine(verdicts):
    if any(v == INCONSISTENT for v in verdicts):
        return INCONSISTENT
    if all(v == CONSISTENT for v in verdicts):
        return CONSISTENT
    return INCONCLUSIVE


def cmd_diagnose(cfg, threads=1):
    model = make_family(cfg.family)
    N = cfg.period
    xs = cfg.grid

    # Stolz reports for the entrywise sequences of every residue
    stolz = {"orders": {}}
    for r in cfg.orders:
        by_s = {}
        for s in range(r):
            seqs = {}
            for i in range(N):
                for name, seq in entrywise_sequences(model, N, i, cfg.n_max).items():
                    seqs[f"{name}[i={i}]"] = stolz_diagnose(seq, r, s).as_dict()
            by_s[str(s)] = {"verdict": _combine([v["verdict"] for v in seqs.values()]),
                            "sequences": seqs}
        # direct check on the transfer matrices over the grid, residue run.i
        n_blocks = min((cfg.n_max - cfg.i) // N, 20_000)
        k0 = 0 if cfg.i >= 1 else 1
        idx = np.arange(k0, n_blocks) * N + cfg.i
        a, b = model.coefficients(int(idx[-1]) + 1)
        Bs = np.zeros((idx.size, xs.size, 2, 2))
        Bs[..., 0, 1] = 1.0
        Bs[..., 1, 0] = (-a[idx - 1] / a[idx])[:, None]
        Bs[..., 1, 1] = (xs[None, :] - b[idx][:, None]) / a[idx][:, None]
        direct = stolz_diagnose(Bs, r, 0, xs).as_dict()
        stolz["orders"][str(r)] = {"verdict": by_s["0"]["verdict"], "by_s": by_s,
                                   "transfer_matrices": direct}
    stolz["verdict_by_r"] = {r: v["verdict"] for r, v in stolz["orders"].items()}

    car = carleman_check(model, cfg.n_max)
    carleman = {"partial_sum": car.partial_sum, "tail_slope": car.tail_slope,
                "divergent": car.divergent, "n_max": cfg.n_max}

    def one(j, x):
        try:
            chain = build_chain(model, N, cfg.i, cfg.r, x, n_max=cfg.n_max,
                                delta_min=cfg.delta_min, delta=cfg.delta_guard)
            m = chain.M + 1
            dev = reconstruct_sweep(chain, model, m, m + cfg.span)
            return {"x": x, "M": chain.M, "max_relative_deviation": dev, "status": "ok"}
        except (JacobiError, ValueError, IndexError) as exc:
            return {"x": x, "status": type(exc).__name__}

    rows = _map_points(one, xs, threads)
    devs = [r["max_relative_deviation"] for r in rows if r["status"] == "ok"]
    recon = {"r": cfg.r, "span": cfg.span, "points": rows,
             "worst_relative_deviation": max(devs) if devs else None}
    cols = ["x", "M", "max_relative_deviation", "status"]
    out = {"stolz": (None, None, stolz), "carleman": (None, None, carleman),
           "reconstruction": (cols, rows, recon)}
    # Stolz and Carleman reports do not depend on the grid
    return out, [r["status"] for r in rows]


COMMANDS = {"density": cmd_density, "asymptotics": cmd_asymptotics,
            "diagnose": cmd_diagnose, "turan": cmd_turan, "bounds": cmd_bounds}

# diagnose writes JSON only
_JSON_ONLY = {"stolz", "carleman", "reconstruction"}


def run(command, cfg, out_dir=None, threads=1, formats=None):
    """Run a subcommand and write its artifacts; returns the written paths."""
    out_dir = out_dir or cfg.out_dir
    formats = formats or cfg.formats
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    results, statuses = COMMANDS[command](cfg, threads)
    wall = time.perf_counter() - t0
    paths = []
    for stem, (cols, rows, payload) in results.items():
        if "csv" in formats and cols is not None and stem not in _JSON_ONLY:
            p = os.path.join(out_dir, f"{stem}.csv")
            write_csv(p, cols, rows)
            paths.append(p)
        if "json" in formats or stem in _JSON_ONLY:
            p = os.path.join(out_dir, f"{stem}.json")
            write_json(p, cfg, command, payload, wall)
            paths.append(p)
    _check_majority(statuses)
    return paths


def build_parser():
    p = argparse.ArgumentParser(prog="jacobi-stolz", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", help="comma separated subset of csv,json")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config)
        if args.format:
            fm = tuple(t.strip() for t in args.format.split(",") if t.strip())
            if not fm or set(fm) - {"csv", "json"}:
                raise ConfigError(f"bad --format {args.format!r}")
            cfg = replace(cfg, formats=fm)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        for path in run(args.command, cfg, args.out, args.threads):
            print(path)
    except MajorityFailure as exc:
        print(json.dumps({"error": "majority-failure", "message": str(exc)}), file=sys.stderr)
        return EXIT_MAJORITY
    except Exception as exc:  # noqa: BLE001 - reported as a structured internal error
        print(json.dumps({"error": "internal", "type": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
