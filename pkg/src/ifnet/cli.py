"""Command-line surface.

Subcommands: simulate, analyze, cycles, synchro, expansion, contract, sweep.
Every run is deterministic in (config, seed): randomness flows through
counter-based Philox streams, sweep cells derive their seeds as
blake2b(seed, cell-index) and results merge in cell order, so output bytes do
not depend on thread count (cap threads with IFNET_THREADS).

Exit codes: 0 ok, 2 config error, 3 hypothesis violated, 4 numerical stall,
1 any other operation error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

from . import contraction as contr
from . import cycles as cyc
from . import dynamics as dyn
from .config import RunConfig, dump_json, fmt, load_config, params_to_doc
from .errors import (
    HypothesisViolated,
    IfnetError,
    NoFixedPoint,
    NumericalStall,
    PreconditionFailed,
    RejectConfig,
)
from .params import check_hypotheses, classify_neurons, derived_constants, validate

DEFAULTS = dict(seed=0, samples=1000, eta=1e-6, tol=1e-12, max_iter=2000)


def _threads() -> int:
    env = os.environ.get("IFNET_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _cycle_doc(entry: cyc.CensusEntry) -> dict:
    c = entry.cycle
    cert = None
    if c.certificate is not None:
        cert = {"lambda": c.certificate.lam, "ball_radius": c.certificate.ball_radius,
                "residual": c.certificate.residual}
    return {
        "period": c.period,
        "time_period": c.time_period,
        "points": [[float(x) for x in pt] for pt in c.points],
        "itinerary": [str(p) for p in c.itinerary],
        "min_margin": c.min_margin,
        "certificate": cert,
        "certified": c.certified,
        "basin_fraction": entry.basin_fraction,
    }


def cmd_analyze(cfg: RunConfig, opts) -> dict:
    params = cfg.params
    dc = derived_constants(params)
    rep = check_hypotheses(params)
    doc = {
        "config": params_to_doc(params),
        "constants": {
            "c_star": dc.c_star, "beta_plus": dc.beta_plus, "c_bar": dc.c_bar,
            "epsilon": dc.epsilon, "lambda_0": dc.lambda_0, "mu_jump": dc.mu_jump,
            "T_max": dc.T_max, "m_min_pos": dc.m_min_pos, "min_abs_H": dc.min_abs_H,
            "p0": dc.p0,
        },
        "hypotheses": {
            "H3": rep.h3, "H4": rep.h4, "sync_size": rep.sync_size,
            "O_pairs": [[i + 1, j + 1] for i, j in rep.o_pairs],
        },
        "neuron_classes": [k.value for k in classify_neurons(params)],
    }
    try:
        v0, x = dyn.antiphase_state(params)
        two = dyn.return_map(params, dyn.return_map(params, v0).state).state
        doc["antiphase"] = {
            "x": x, "point": [float(t) for t in v0],
            "residual": float(np.max(np.abs(two - v0))),
        }
    except PreconditionFailed:
        pass
    return doc


def _spike_rows(params, v0, steps):
    rows = []
    for k, st in enumerate(dyn.orbit(params, v0, steps)):
        rows.append({
            "step": k,
            "t_bar": st.t_bar,
            "cum_time": st.cum_time,
            "firing_set": ";".join(str(int(i) + 1) for i in st.fired),
            "V_after": ";".join(fmt(x) for x in st.state),
        })
    return rows


def cmd_simulate(cfg: RunConfig, opts) -> dict:
    params = cfg.params
    v0 = cfg.v0 if cfg.v0 is not None else np.zeros(params.n)
    steps = opts.max_iter
    rows = _spike_rows(params, v0, steps)
    doc = {"steps": steps, "v0": [float(x) for x in np.asarray(v0)], "spikes": rows}
    if opts.out is not None:
        path = Path(opts.out) / "spikes.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "t_bar", "cum_time", "firing_set", "V_after"])
            for r in rows:
                w.writerow([r["step"], fmt(r["t_bar"]), fmt(r["cum_time"]),
                            r["firing_set"], r["V_after"]])
        doc["spikes_csv"] = path.name
    if opts.dt is not None and opts.t_total is not None:
        times, values, post = dyn.sample_trajectory(params, v0, opts.dt, opts.t_total)
        doc["trajectory_rows"] = len(times)
        if opts.out is not None:
            path = Path(opts.out) / "trajectory.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t"] + [f"V{i + 1}" for i in range(params.n)] + ["post_spike"])
                for t, row, flag in zip(times, values, post):
                    w.writerow([fmt(t)] + [fmt(x) for x in row] + [int(flag)])
            doc["trajectory_csv"] = path.name
    return doc


def cmd_cycles(cfg: RunConfig, opts) -> dict:
    report = cyc.cycle_census(
        cfg.params, sample_count=opts.samples, seed=opts.seed,
        max_iter=opts.max_iter, eta=opts.eta, tol=opts.tol, threads=_threads(),
    )
    doc = {
        "samples": report.samples,
        "synchronized_fraction": report.synchronized_fraction,
        "grazing_fraction": report.grazing_fraction,
        "unresolved_fraction": report.unresolved_fraction,
        "cycles": [_cycle_doc(e) for e in report.entries],
    }
    if opts.out is not None:
        for idx, entry in enumerate(report.entries):
            path = Path(opts.out) / f"cycle_{idx:02d}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["index"] + [f"V{i + 1}" for i in range(cfg.params.n)])
                for j, pt in enumerate(entry.cycle.points):
                    w.writerow([j] + [fmt(x) for x in pt])
    return doc


def cmd_synchro(cfg: RunConfig, opts) -> dict:
    rep = cyc.sync_test(cfg.params, sample_count=opts.samples, seed=opts.seed)
    return {
        "ok": rep.ok, "max_returns": rep.max_returns, "bound_p": rep.bound_p,
        "max_time": rep.max_time, "bound_t_trans": rep.bound_t_trans,
        "samples": rep.samples,
    }


def cmd_expansion(cfg: RunConfig, opts) -> dict:
    params = cfg.params
    dc = derived_constants(params)
    pairs = []
    witness_doc = None
    for i in range(params.n):
        for j in range(i + 1, params.n):
            conds = contr.check_O_conditions(params, i, j)
            entry = {"pair": [i + 1, j + 1], "O1": conds[0], "O2": conds[1], "O3": conds[2]}
            if all(conds):
                try:
                    rep = contr.repeller(params, i, j)
                    entry["repeller"] = {
                        "interval": list(rep.interval),
                        "fixed_point": rep.fixed_point,
                        "multiplier": rep.multiplier,
                    }
                except (NoFixedPoint, PreconditionFailed) as exc:
                    entry["repeller_error"] = str(exc)
                if witness_doc is None:
                    witness_doc = _witness_sweep(params, dc, i, max(8, opts.samples))
                    witness_doc["pair"] = [i + 1, j + 1]
            pairs.append(entry)
    return {"c_star": dc.c_star, "pairs": pairs, "witnesses": witness_doc}


def _witness_sweep(params, dc, i, grid_points):
    xs = np.linspace(dc.c_star, params.theta, grid_points + 2)[1:-1]
    rows = []
    for a, b in zip(xs[:-1], xs[1:]):
        v = np.zeros(params.n)
        w = np.zeros(params.n)
        v[i], w[i] = a, b
        try:
            wit = contr.expansion_witness(params, i, v, w)
        except PreconditionFailed as exc:
            rows.append({"v_i": float(a), "w_i": float(b), "error": str(exc)})
            continue
        rows.append({
            "v_i": float(a), "w_i": float(b), "ratio": wit.ratio,
            "lower_bound": wit.lower_bound, "expanded": wit.expanded,
        })
    return {"gamma_index": i + 1, "rows": rows}


def cmd_contract(cfg: RunConfig, opts) -> dict:
    params = cfg.params
    dc = derived_constants(params)
    zones = []
    for c in (0.0, dc.c_bar / 4, dc.c_bar / 2, 3 * dc.c_bar / 4):
        rep = contr.verify_contraction(params, c, opts.samples, opts.seed)
        zones.append({
            "c": rep.c, "lambda_c": rep.lambda_c, "max_ratio": rep.max_ratio,
            "pairs": rep.pairs, "violations": len(rep.violations),
        })
    absorb = contr.absorption_check(params, opts.samples, opts.seed)
    est = contr.estimate_lipschitz_c(params, max(100, opts.samples // 10), opts.seed + 1)
    metric = _metric_check(params, est, max(100, opts.samples // 10), opts.seed + 2)
    return {
        "zones": zones,
        "absorption": {
            "max_steps_outside": absorb.max_steps_outside,
            "bound_p0_plus_1": absorb.bound_p0_plus_1,
            "post_entry_bound": absorb.post_entry_bound,
            "ok": absorb.ok,
        },
        "adapted_metric": {
            "c_hat": est.c_hat, "n0": est.n0, "mu_tilde": est.mu_tilde,
            "lambda": est.lam, **metric,
        },
    }


def _metric_check(params, est, count, seed):
    """Spot-check d(rho V, rho W) <= mu_tilde d(V, W) on same-itinerary pairs."""
    from . import _kernels
    from ._sampling import rng_stream

    rng = rng_stream(seed, 0)
    used = 0
    worst = 0.0
    attempts = 0
    while used < count and attempts < 50 * count:
        V, W = contr._perturbed_pairs(rng, params, min(count, 2048))
        for v, w in zip(V, W):
            attempts += 1
            if np.array_equal(v, w):
                continue
            _, n_common = _kernels.track_pair(
                v, w, params.H, params.beta, params.theta, params.alpha,
                params.gamma, params.tie_tol(), est.n0 + 1,
            )
            if n_common < est.n0 + 1:
                continue
            d0 = contr.adapted_distance(params, v, w, est.n0, est.mu_tilde)
            rv = dyn.return_map(params, v).state
            rw = dyn.return_map(params, w).state
            d1 = contr.adapted_distance(params, rv, rw, est.n0, est.mu_tilde)
            if d0 > 0:
                worst = max(worst, d1 / d0)
            used += 1
            if used >= count:
                break
    return {"pairs_checked": used, "max_d_ratio": worst,
            "ok": bool(worst <= est.mu_tilde + 1e-9)}


_CELL_COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "cycles": cmd_cycles,
    "synchro": cmd_synchro,
    "expansion": cmd_expansion,
    "contract": cmd_contract,
}

_GRID_PARAMS = ("beta", "gamma", "theta", "alpha", "H")


def _cell_seed(seed: int, index: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _apply_override(base_doc: dict, name: str, value: float) -> RunConfig:
    from .config import parse_config

    doc = dict(base_doc)
    if name == "H":
        n = doc["n"]
        doc["H"] = [[0.0 if r == c else value for c in range(n)] for r in range(n)]
    else:
        doc.pop("K", None)
        doc[name] = value
    return parse_config(doc)


def _parse_grid(axis: str):
    try:
        name, lo, hi, steps = axis.split(":")
        name = name.strip()
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise RejectConfig(f"bad --grid axis {axis!r}, expected PARAM:LO:HI:STEPS") from exc
    if name not in _GRID_PARAMS:
        raise RejectConfig(f"unknown grid parameter {name!r}, choose from {_GRID_PARAMS}")
    if steps < 1:
        raise RejectConfig("grid needs at least one step")
    return name, np.linspace(lo, hi, steps)


def cmd_sweep(cfg: RunConfig, opts) -> dict:
    if not opts.grid:
        raise RejectConfig("sweep requires at least one --grid")
    if len(opts.grid) > 2:
        raise RejectConfig("sweep supports at most two --grid axes")
    if opts.cell not in _CELL_COMMANDS:
        raise RejectConfig(f"unknown cell command {opts.cell!r}")
    axes = [_parse_grid(g) for g in opts.grid]
    cells = []
    if len(axes) == 1:
        name, values = axes[0]
        cells = [{name: float(v)} for v in values]
    else:
        (na, va), (nb, vb) = axes
        if na == nb:
            raise RejectConfig("two --grid axes must name different parameters")
        cells = [{na: float(a), nb: float(b)} for a in va for b in vb]
    fn = _CELL_COMMANDS[opts.cell]

    def run_cell(index: int) -> dict:
        overrides = cells[index]
        entry = {"index": index, "overrides": overrides}
        try:
            sub = cfg
            for name, value in overrides.items():
                sub = _apply_override(dict(sub.raw or params_to_doc(cfg.params)), name, value)
                sub = RunConfig(params=sub.params, v0=cfg.v0, raw=sub.raw)
            cell_opts = argparse.Namespace(**vars(opts))
            cell_opts.seed = _cell_seed(opts.seed, index)
            cell_opts.out = None  # cells report through the sweep document only
            entry["status"] = "ok"
            entry["result"] = fn(sub, cell_opts)
        except IfnetError as exc:
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
        return entry

    threads = _threads()
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_cell, range(len(cells))))
    else:
        results = [run_cell(i) for i in range(len(cells))]
    return {"cell_command": opts.cell, "grid": [g for g in opts.grid], "cells": results}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ifnet", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "analyze", "cycles", "synchro", "expansion", "contract", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=DEFAULTS["seed"])
        p.add_argument("--samples", type=int, default=DEFAULTS["samples"])
        p.add_argument("--eta", type=float, default=DEFAULTS["eta"])
        p.add_argument("--tol", type=float, default=DEFAULTS["tol"])
        p.add_argument("--max-iter", type=int, default=DEFAULTS["max_iter"])
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-total", type=float, default=None)
        if name == "sweep":
            p.add_argument("--grid", action="append", default=[],
                           help="PARAM:LO:HI:STEPS, repeat for a 2-D sweep")
            p.add_argument("--cell", default="analyze",
                           help="command to run per grid cell")
    return ap


def run_command(cmd: str, cfg: RunConfig, opts) -> dict:
    commands = dict(_CELL_COMMANDS)
    commands["sweep"] = cmd_sweep
    return commands[cmd](cfg, opts)


def main(argv=None) -> int:
    opts = build_parser().parse_args(argv)
    try:
        cfg = load_config(opts.config)
        if opts.out is not None:
            Path(opts.out).mkdir(parents=True, exist_ok=True)
        doc = run_command(opts.command, cfg, opts)
        text = dump_json(_jsonable(doc))
        if opts.out is not None:
            (Path(opts.out) / f"{opts.command}.json").write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        if opts.command == "sweep":
            failed = sum(1 for c in doc["cells"] if c["status"] != "ok")
            if failed:
                print(f"{failed} sweep cell(s) failed", file=sys.stderr)
                return 1
        return 0
    except RejectConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HypothesisViolated as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return 3
    except NumericalStall as exc:
        print(f"numerical stall: {exc}", file=sys.stderr)
        return 4
    except IfnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
