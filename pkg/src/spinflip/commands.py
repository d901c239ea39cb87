"""Table-producing subcommands.

Every command splits its work into independent tasks, runs them through
``parallel_map`` (results come back in task order) and assembles a
ResultTable single-threaded, so output does not depend on worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable

import numpy as np

from . import __version__
from . import cherry as ch
from . import classical as cl
from . import quantum as qd
from .config import RunConfig
from .table import ResultTable


def parallel_map(func: Callable, tasks: Iterable, workers: int = 1) -> list:
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(func, tasks, chunksize=1))


def _table(cfg: RunConfig, columns, units=None) -> ResultTable:
    meta = {"tool": "spinflip", "version": __version__, "config": cfg.provenance(), "config_hash": cfg.digest()}
    return ResultTable(list(columns), list(units) if units else [], [], meta)


def _regime(p: qd.SpinParams) -> str:
    return "CU" if cl.is_complex_unstable(p) else "EE"


# ---------------------------------------------------------------- fidelity

def _fidelity_task(task):
    (j, k1, k2, eps), t_grid = task
    p = qd.SpinParams(j, k1, k2, eps)
    return qd.fidelity_curve(p, t_grid).values


def cmd_fidelity(cfg: RunConfig) -> ResultTable:
    v = cfg.values
    sets = [qd.SpinParams(*s) for s in v["params"]]
    windows = []
    for p in sets:
        if v["t_max"] is not None:
            windows.append(v["t_max"])
        elif cl.is_complex_unstable(p):
            windows.append(v["tau_max"] * cl.averaged_transfer_time(p, p.N))
        else:
            windows.append(None)
    # EE sets borrow the longest CU window of the run
    known = [w for w in windows if w is not None]
    fallback = max(known) if known else qd.default_window(sets[0]) if sets else 0.0
    windows = [fallback if w is None else w for w in windows]
    grids = [np.linspace(0.0, w, v["points"]) for w in windows]
    curves = parallel_map(
        _fidelity_task, [((p.j, p.k1, p.k2, p.epsilon), g) for p, g in zip(sets, grids)], cfg.workers
    )

    table = _table(cfg, ["set", "j", "k1", "k2", "epsilon", "regime", "t", "tau", "F"],
                   ["", "", "", "", "", "", "time", "t_cl", ""])
    peaks = []
    for i, (p, grid, values) in enumerate(zip(sets, grids, curves)):
        t_cl = cl.averaged_transfer_time(p, p.N) if cl.is_complex_unstable(p) else None
        for t, f in zip(grid, values):
            tau = t / t_cl if t_cl else None
            table.append([i, p.j, p.k1, p.k2, p.epsilon, _regime(p), float(t), tau, float(f)])
        try:
            t_tr, f_tr = qd.transfer_time(qd.FidelityCurve(grid, values), v["threshold"])
            peaks.append({"set": i, "t_trans": t_tr, "F": f_tr, "tau": t_tr / t_cl if t_cl else None})
        except qd.NoTransferDetected:
            peaks.append({"set": i, "t_trans": None, "F": float(np.max(values)) if values.size else None,
                          "tau": None, "status": "no transfer detected"})
        if p.k1 != p.k2:
            peaks[-1]["note"] = "k1 != k2: fidelity of evolved |+x,-x> against |-x,+x>"
    table.metadata["peaks"] = peaks
    return table


# ------------------------------------------------------------------ levels

def _level_task(task):
    p_tuple, threshold, keep = task
    return qd.level_row(qd.SpinParams(*p_tuple), threshold, keep)


LEVEL_COLUMNS = [
    "epsilon", "regime", "crossover", "levels",
    "initial_index", "initial_energy", "initial_overlap", "initial_top2",
    "flipped_index", "flipped_energy", "flipped_overlap",
    "plus_index", "plus_energy", "minus_index", "minus_energy",
    "t_dyn", "t_trans", "F_trans", "status",
]


def cmd_levels(cfg: RunConfig) -> ResultTable:
    v = cfg.values
    base = qd.SpinParams(v["j"], v["k1"], v["k2"], 0.0)
    tasks = [((base.j, base.k1, base.k2, e), v["threshold"], v["spectrum"]) for e in v["eps"]]
    rows = parallel_map(_level_task, tasks, cfg.workers)
    columns = list(LEVEL_COLUMNS)
    if v["spectrum"]:
        columns += [f"E{n}" for n in range(base.N**2)]
    table = _table(cfg, columns)
    width = 1.0 / base.N
    table.metadata["eps_crit"] = base.eps_crit
    table.metadata["crossover_halfwidth"] = width
    for row in rows:
        p = base.replace(epsilon=row["epsilon"])
        row["regime"] = _regime(p)
        row["crossover"] = abs(row["epsilon"] - base.eps_crit) <= width
        out = [row.get(c) for c in LEVEL_COLUMNS]
        if v["spectrum"]:
            out += [float(e) for e in row["spectrum"]]
        table.append(out)
    return table


# --------------------------------------------------------------- stability

def _stability_task(task):
    k1, k2, eps, which = task
    p = qd.SpinParams(1, k1, k2, eps)
    rep = cl.stability(p, which)
    rates = cl.growth_rates(p)
    quartet = list(rep.quartet) + [complex(math.nan, math.nan)] * (4 - len(rep.quartet))
    return rep.stability_class, rep.c1, rep.c2, rates, quartet[:4]


def cmd_stability(cfg: RunConfig) -> ResultTable:
    v = cfg.values
    points = [(k1, k2, e, v["equilibrium"]) for k1 in v["k1"] for k2 in v["k2"] for e in v["eps"]]
    results = parallel_map(_stability_task, points, cfg.workers)
    cols = ["k1", "k2", "epsilon", "eps_crit", "class", "c1", "c2", "c1_formula", "c2_formula"]
    for i in range(4):
        cols += [f"lambda{i}_re", f"lambda{i}_im"]
    table = _table(cfg, cols)
    for (k1, k2, e, _), (cls_, c1, c2, rates, quartet) in zip(points, results):
        row = [k1, k2, e, (k1 + k2) / 2, cls_, c1, c2, rates.c1, rates.c2]
        for lam in quartet:
            row += [float(lam.real), float(lam.imag)]
        table.append(row)
    return table


# ---------------------------------------------------------------- ensemble

def _ensemble_task(task):
    k1, k2, eps, delta, count, seed, tol = task
    p = qd.SpinParams(1, k1, k2, eps)
    res = cl.ensemble_equator_time(p, cl.EnsembleSpec(delta, count, seed), tol)
    return res.mean, res.stddev, res.censored_fraction, cl.analytic_transfer_time(delta, p)


def cmd_ensemble(cfg: RunConfig) -> ResultTable:
    v = cfg.values
    tasks = [(v["k1"], v["k2"], e, d, v["count"], cfg.seed, v["tol"]) for e in v["eps"] for d in v["delta"]]
    for e in v["eps"]:
        p = qd.SpinParams(1, v["k1"], v["k2"], e)
        if not cl.is_complex_unstable(p):
            raise cl.EllipticRegimeError(f"eps={e} is not complex unstable (eps_crit={p.eps_crit})")
    results = parallel_map(_ensemble_task, tasks, cfg.workers)
    table = _table(cfg, ["epsilon", "delta", "mean", "stddev", "censored_fraction", "analytic", "ratio", "flag"],
                   ["", "rad", "time", "time", "", "time", "", ""])
    censored_rows = 0
    for task, (mean, sd, cens, analytic) in zip(tasks, results):
        flag = "CENSORED" if cens > 0 else "ok"
        censored_rows += cens > 0
        table.append([task[2], task[3], mean, sd, cens, analytic, mean / analytic, flag])
    table.metadata["censored_rows"] = censored_rows
    return table


# ------------------------------------------------------------------ cherry

def _cherry_task(task):
    M, delta, mu, fit_M = task
    w = 1.0 + delta
    cmp_ = ch.cluster_vs_cherry_check(M, w, mu)
    gers = ch.gersgorin_bounds(ch.build_cluster_hamiltonian(ch.ClusterParams(M, delta, mu)))
    fit = None
    analytic = None
    if 0 < mu < delta:
        fit = ch.ground_state_localization(ch.ClusterParams(fit_M, delta, mu))
        analytic = ch.analytic_localization_length(delta, mu)
    pr = ch.participation_ratio(ch.top_eigenvector(ch.ClusterParams(fit_M, delta, mu)))
    return cmp_, gers, fit, analytic, pr


def cmd_cherry(cfg: RunConfig) -> ResultTable:
    v = cfg.values
    M, delta = v["M"], v["Delta"]
    w = 1.0 + delta
    mu_crit = abs(ch.cherry_critical_mu(w))
    crossing = ch.bound_crossing(M, delta) if M >= 3 else None
    tasks = [(M, delta, mu, v["fit_M"]) for mu in v["mu"]]
    results = parallel_map(_cherry_task, tasks, cfg.workers)
    cols = ["mu", "regime", "deviation", "min_weight", "ambiguous", "cluster_range",
            "gersgorin_upper", "gersgorin_lower", "l_fit", "l_analytic", "fit_flagged", "participation"]
    cols += [f"cherry{n}" for n in range(M)] + [f"cluster{n}" for n in range(M)]
    table = _table(cfg, cols)
    table.metadata.update({
        "w": w, "mu_crit": mu_crit,
        "mu_star": crossing.mu_star if crossing else None,
        "mu_claimed": crossing.mu_claimed if crossing else None,
    })
    for (_, _, mu, _), (cmp_, gers, fit, analytic, pr) in zip(tasks, results):
        regime = "CU" if abs(mu) > mu_crit else "EE"
        row = [mu, regime, cmp_.deviation, cmp_.min_weight, cmp_.ambiguous,
               float(np.ptp(cmp_.cluster_levels)), gers.upper_envelope, gers.lower_envelope,
               fit.length if fit else None, analytic, fit.flagged if fit else None, pr]
        row += [float(x) for x in cmp_.cherry_levels] + [float(x) for x in cmp_.cluster_levels]
        table.append(row)
    return table


# ------------------------------------------------------------------- sweep

def _sweep_task(task):
    j, k1, k2, eps, quantum, threshold = task
    p = qd.SpinParams(j, k1, k2, eps)
    rep = cl.stability(p)
    rates = cl.growth_rates(p)
    out = {"class": rep.stability_class, "c1": rates.c1, "c2": rates.c2, "t_cl": None,
           "t_dyn": None, "t_trans": None, "F_trans": None, "status": "ok"}
    if cl.is_complex_unstable(p):
        out["t_cl"] = cl.averaged_transfer_time(p, p.N)
    if quantum:
        row = qd.level_row(p, threshold)
        out.update({k: row[k] for k in ("t_dyn", "t_trans", "F_trans", "status")})
    return out


def cmd_sweep(cfg: RunConfig) -> ResultTable:
    v = cfg.values
    points = [(v["j"], k1, k2, e) for k1 in v["k1"] for k2 in v["k2"] for e in v["eps"]]
    results = parallel_map(_sweep_task, [pt + (v["quantum"], v["threshold"]) for pt in points], cfg.workers)
    cols = ["j", "k1", "k2", "epsilon", "eps_crit", "class", "c1", "c2", "t_cl", "t_dyn", "t_trans", "F_trans", "status"]
    table = _table(cfg, cols)
    for (j, k1, k2, e), r in zip(points, results):
        table.append([j, k1, k2, e, (k1 + k2) / 2, r["class"], r["c1"], r["c2"], r["t_cl"],
                      r["t_dyn"], r["t_trans"], r["F_trans"], r["status"]])
    return table


COMMANDS = {
    "fidelity": cmd_fidelity,
    "levels": cmd_levels,
    "stability": cmd_stability,
    "ensemble": cmd_ensemble,
    "cherry": cmd_cherry,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig) -> ResultTable:
    start = time.perf_counter()
    table = COMMANDS[cfg.command](cfg)
    if cfg.timing:
        table.metadata["wall_time_s"] = time.perf_counter() - start
    return table
