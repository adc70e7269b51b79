"""Trajectory runs and randomized tightness sweeps, with CSV/JSON output."""
import csv
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bounds import bound_report
from .dynamics import bohr_frequencies, build_jump_decomposition, evolve

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "t",
    "speed_tr",
    "fss",
    "vs",
    "qfi",
    "current_xprime",
    "fisher_term_qfi",
    "entropy_term_qfi",
    "sigma_dot",
    "activity",
    "mobility_m",
    "mobility_mprime",
    "heat_flux",
    "entropy_flux",
    "purity",
)
BOUND_NAMES = ("current_xprime", "qfi", "vs", "fss")
# below this speed the ratio bound/speed carries no information
RATIO_SPEED_FLOOR = 1e-9

SWEEP_COLUMNS = (
    "model",
    "dim",
    "beta",
    "points",
    "violations",
    "min_sigma_dot",
    "max_route_gap",
    "median_ratio_current_xprime",
    "median_ratio_qfi",
    "median_ratio_vs",
    "median_ratio_fss",
    "error",
)


def fmt(x):
    """Round-trippable text for a CSV cell; infinities become 'inf' / '-inf'."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_json(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def summary_path_for(out_path):
    root, _ = os.path.splitext(out_path)
    return root + ".summary.json"


def evaluate(scenario, stride=None):
    """Integrate the scenario and return its BoundReports (one per sampled step)."""
    model = scenario.model()
    traj = evolve(
        model, scenario.rho0, scenario.t_span, scenario.dt, stride or scenario.stride
    )
    return [bound_report(model, pt.state, pt.time) for pt in traj.points()]


def tightness(reports):
    """Min/median/max of bound/speed for every bound.

    Points slower than 1e-9 and points with divergent sigma_dot are left out.
    """
    out = {}
    moving = [r for r in reports if r.finite and r.speed_tr > RATIO_SPEED_FLOOR]
    for name in BOUND_NAMES:
        ratios = [getattr(r, name) / r.speed_tr for r in moving]
        out[name] = {
            "min": min(ratios) if ratios else None,
            "max": max(ratios) if ratios else None,
            "median": statistics.median(ratios) if ratios else None,
        }
    return out


def run_and_emit(scenario, out_path, stride=None, summary_path=None):
    """Run ``scenario``, write the time-series CSV and a JSON summary.

    Returns the summary dict; ``summary["violations"] == 0`` is the success
    condition the CLI turns into its exit status.
    """
    start = time.perf_counter()
    reports = evaluate(scenario, stride)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow([fmt(getattr(r, "time" if c == "t" else c)) for c in CSV_COLUMNS])
    runtime = time.perf_counter() - start

    violating = [r for r in reports if r.violations]
    last = reports[-1]
    summary = {
        "scenario": scenario.name,
        "rows": len(reports),
        "stride": int(stride or scenario.stride),
        "violations": len(violating),
        "violation_details": [
            {"t": r.time, "links": r.violations} for r in violating[:20]
        ],
        "tightness": tightness(reports),
        "fisher_term_below_speed": any(r.fisher_term_qfi < r.speed_tr for r in reports),
        "entropy_term_below_speed": any(r.entropy_term_qfi < r.speed_tr for r in reports),
        "final": {
            "t": last.time,
            "sigma_dot": last.sigma_dot,
            "speed_tr": last.speed_tr,
            "entropy_term_qfi": last.entropy_term_qfi,
        },
        "runtime_s": runtime,
        "csv": os.path.abspath(out_path),
    }
    write_json(summary, summary_path or summary_path_for(out_path))
    if violating:
        logger.error("%d sampled points violate the bound chain", len(violating))
    return summary


# --------------------------------------------------------------------------
# random models
# --------------------------------------------------------------------------


def _random_hermitian(rng, d, scale=1.0):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (a + a.conj().T) / (2.0 * math.sqrt(d))


def random_model(rng, dim, couplings=1):
    """Random detailed-balance model: Hermitian H, Hermitian system-bath couplings.

    Every positive Bohr frequency gets gamma(omega) ~ U(0.2, 2), its partner
    gamma(-omega) = gamma(omega) exp(-beta omega); dephasing rates ~ U(0.1, 1).
    """
    h = _random_hermitian(rng, dim)
    beta = float(rng.uniform(0.1, 2.0))
    omegas = bohr_frequencies(h)
    jumps = []
    rates = {}
    for c in range(couplings):
        label = f"A{c}"
        jumps.append((label, _random_hermitian(rng, dim)))
        for w in omegas:
            if w > 0:
                g = float(rng.uniform(0.2, 2.0))
                partner = float(omegas[np.argmin(np.abs(omegas + w))])
                rates[(label, float(w))] = g
                rates[(label, partner)] = g * math.exp(-beta * w)
            elif w == 0:
                rates[(label, 0.0)] = float(rng.uniform(0.1, 1.0))
    model = build_jump_decomposition(h, jumps, rates, beta)
    return model


def random_state(rng, dim):
    """Full-rank density matrix G G^dagger / Tr from a Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))


def _sweep_one(task):
    index, dim, seed_seq, t_span, dt, stride = task
    rng = np.random.default_rng(seed_seq)
    row = {"model": index, "dim": dim}
    try:
        model = random_model(rng, dim)
        row["beta"] = model.beta
        traj = evolve(model, random_state(rng, dim), t_span, dt, stride)
        reports = [bound_report(model, pt.state, pt.time) for pt in traj.points()]
    except Exception as exc:  # recorded per model, the sweep goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row["points"] = len(reports)
    row["violations"] = sum(1 for r in reports if r.violations)
    row["min_sigma_dot"] = min(r.sigma_dot for r in reports)
    finite = [r for r in reports if math.isfinite(r.sigma_dot_flux)]
    row["max_route_gap"] = max(
        (abs(r.sigma_dot - r.sigma_dot_flux) for r in finite), default=0.0
    )
    for name, stats in tightness(reports).items():
        row[f"median_ratio_{name}"] = stats["median"]
    return row


def _cell(row, col):
    value = row.get(col)
    if value is None:
        return ""
    return fmt(value)


def sweep(dims, count, seed, out_path, jobs=1, t_span=(0.0, 1.0), dt=1e-3, stride=100,
          summary_path=None):
    """Bound tightness over ``count`` random models, dims cycled from ``dims``.

    Each model draws from its own child of ``SeedSequence(seed)``, so results do
    not depend on ``jobs``. Returns the aggregate summary.
    """
    dims = [int(d) for d in dims]
    if not dims or any(d < 2 or d > 6 for d in dims):
        raise ValueError(f"dims must lie in 2..6, got {dims}")
    if count < 1:
        raise ValueError("count must be >= 1")
    children = np.random.SeedSequence(seed).spawn(count)
    tasks = [
        (i, dims[i % len(dims)], children[i], tuple(t_span), dt, stride) for i in range(count)
    ]
    start = time.perf_counter()
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, tasks, chunksize=max(1, count // (4 * jobs))))
    else:
        rows = [_sweep_one(t) for t in tasks]
    runtime = time.perf_counter() - start

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row, c) for c in SWEEP_COLUMNS])

    ok = [r for r in rows if "error" not in r]
    aggregate = {}
    for name in BOUND_NAMES:
        vals = [r[f"median_ratio_{name}"] for r in ok if r.get(f"median_ratio_{name}") is not None]
        aggregate[name] = statistics.median(vals) if vals else None
    summary = {
        "models": count,
        "dims": dims,
        "seed": seed,
        "failed_models": len(rows) - len(ok),
        "violations": sum(r["violations"] for r in ok),
        "min_sigma_dot": min((r["min_sigma_dot"] for r in ok), default=None),
        "max_route_gap": max((r["max_route_gap"] for r in ok), default=None),
        "median_tightness": aggregate,
        "qfi_tighter_than_vs": (
            aggregate["qfi"] is not None and aggregate["qfi"] < aggregate["vs"]
        ),
        "runtime_s": runtime,
    }
    write_json(summary, summary_path or summary_path_for(out_path))
    return summary, rows
