"""Experiment harness: warm start, robust optimization, evaluation and reports.

Every run follows the same two stages.  A plain GRAPE ascent on the nominal
``δ`` from a random guess provides ``θ₀`` (retrying with fresh guesses until
the nominal fidelity reaches the warm-start target); the selected robust
optimizer then starts from ``θ₀``.  The reported numbers are always measured
on a separate evaluation grid (9 points per axis by default).

Under a fixed seed the only nondeterministic report fields are wall-clock
times (:data:`TIMING_FIELDS`), unless a ``time_budget`` is set.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as cfgmod
from . import engine, optimizers, spinmodel, uncertainty
from .errors import RobustQaoaError

log = logging.getLogger(__name__)

LOG_INFIDELITY_CAP = 16.0
TIMING_FIELDS = ("wall_time", "warm_time", "robust_time")
FLOAT_FORMAT = "%.9g"


@dataclass
class RestartRecord:
    index: int
    warm_fidelity: float
    warm_attempts: int
    train_worst: float
    theta: list
    trace: dict
    warm_time: float = 0.0
    robust_time: float = 0.0


@dataclass
class RunReport:
    config: dict
    seed: int
    depth: int
    restarts: list
    best_restart: int
    theta: list
    worst_infidelity: float
    avg_infidelity: float
    nominal_infidelity: float
    train_worst_infidelity: float
    n_train_samples: int
    grid: list                      # rows (δ..., F) on the evaluation grid
    wall_time: float = 0.0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["restarts"] = [r if isinstance(r, RestartRecord) else RestartRecord(**r) for r in data["restarts"]]
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def grid_fidelities(self):
        return np.array([row[-1] for row in self.grid], dtype=float)


def strip_timing(obj):
    """Copy of a report dict with every wall-clock field zeroed."""
    if isinstance(obj, dict):
        return {k: (0.0 if k in TIMING_FIELDS else strip_timing(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


# --- building blocks -----------------------------------------------------------

def instance_for(config, depth=None):
    return spinmodel.build_instance(config.system, config.n_sites, depth or config.resolved_depth(),
                                    config.theta_max)


def _rng(config, *stream):
    return np.random.default_rng([config.sampler.seed, *stream])


def warm_start(instance, config, restart):
    """Nominal GRAPE from seeded random guesses.

    Returns ``(θ₀, nominal fidelity, attempts used)``; if no attempt reaches
    the target the best one is returned.
    """
    ws = config.warm_start
    gcfg = optimizers.GrapeConfig(learning_rate=ws.learning_rate, momentum=ws.momentum,
                                  iterations=ws.iterations, target=ws.target, decay_window=0)
    high = config.resolved_init_high()
    nominal = np.asarray(instance.nominal_delta, dtype=float)
    best = (None, -1.0)
    for attempt in range(ws.attempts):
        guess = _rng(config, restart, attempt).uniform(0.0, high, instance.n_controls)
        res = optimizers.grape_optimize(instance, guess, nominal, gcfg)
        if res.best_value > best[1]:
            best = (res.theta, res.best_value)
        if res.best_value >= ws.target:
            return res.theta, res.best_value, attempt + 1
    log.warning("warm start stayed below %.4g (best %.6g)", ws.target, best[1])
    return best[0], best[1], ws.attempts


def _scp_config(config):
    merged = {**cfgmod.SCP_DEFAULTS[config.system], **config.optimizer_config}
    return optimizers.ScpConfig(**merged)


def _grape_config(config):
    iters = cfgmod.BGRAPE_ITERATIONS.get(config.system, cfgmod.BGRAPE_ITERATIONS_MULTI)
    return optimizers.GrapeConfig(**{"iterations": iters, **config.optimizer_config})


def _agrape_config(config):
    over = dict(config.optimizer_config)
    inner = optimizers.GrapeConfig(**{"iterations": 1000, **over.pop("inner", {})})
    rounds = cfgmod.AGRAPE_ROUNDS.get(config.system, cfgmod.AGRAPE_ROUNDS_DEFAULT)
    return optimizers.AGrapeConfig(**{"rounds": rounds, **over, "inner": inner})


def robust_stage(instance, config, theta0, train, restart):
    """Run the configured optimizer from ``theta0``; returns ``(θ, trace summary)``."""
    name = config.optimizer
    if name == "grape_nominal":
        return np.asarray(theta0, dtype=float), {"optimizer": name}
    if name == "scp":
        theta, trace = optimizers.scp_optimize(instance, theta0, train, _scp_config(config))
        worst_path = [r.worst for r in trace.iterations if r.accepted]
        return theta, {"optimizer": name, "stop_reason": trace.stop_reason,
                       "iterations": len(trace.iterations), "accepted": trace.n_accepted,
                       "initial_worst": trace.initial_worst, "final_worst": trace.best_worst,
                       "final_d": trace.iterations[-1].d if trace.iterations else _scp_config(config).initial_d,
                       "accepted_worst": worst_path}
    box = config.box
    if name == "bgrape":
        res = optimizers.bgrape_optimize(instance, theta0, box, _grape_config(config),
                                         seed=[config.sampler.seed, restart, 7919])
        return res.theta, {"optimizer": name, "iterations": int(res.history.size),
                           "final_learning_rate": res.learning_rate}
    res = optimizers.agrape_optimize(instance, theta0, box, _agrape_config(config))
    return res.theta, {"optimizer": name, "rounds": len(res.memory_sizes), "memory_sizes": res.memory_sizes,
                       "adversarial": [[*map(float, d), float(f)] for d, f in res.adversarial]}


def evaluate_grid(instance, theta, box, points_per_axis):
    """Rows ``(δ..., F)`` over the evaluation grid, in grid order."""
    grid = uncertainty.sample_grid(box, points_per_axis)
    values, _ = engine.evaluate_samples(instance, theta, list(grid), with_gradient=False)
    return [[*map(float, d), float(v)] for d, v in zip(grid, values)]


def _train_set(config):
    return uncertainty.sample_grid(config.box, config.resolved_points())


def _report(instance, config, records, best, theta, train, wall):
    grid = evaluate_grid(instance, theta, config.box, config.evaluation.points_per_axis)
    fids = np.array([row[-1] for row in grid])
    nominal = engine.fidelity(instance, theta, instance.nominal_delta)
    return RunReport(
        config=config.to_dict(), seed=config.sampler.seed, depth=instance.depth,
        restarts=records, best_restart=best, theta=[float(x) for x in theta],
        worst_infidelity=float(1.0 - fids.min()), avg_infidelity=float(1.0 - fids.mean()),
        nominal_infidelity=float(1.0 - nominal), train_worst_infidelity=float(1.0 - records[best].train_worst),
        n_train_samples=len(train), grid=grid, wall_time=wall)


def run_experiment(config, extra_starts=()):
    """Warm start, robust optimization and grid evaluation for one config.

    ``extra_starts`` are additional initial control vectors tried after the
    seeded restarts (used to chain related runs); the restart with the best
    worst case over the training samples wins.
    """
    start = time.perf_counter()
    instance = instance_for(config)
    train = _train_set(config)
    records, thetas = [], []
    starts = [None] * config.resolved_restarts() + [np.asarray(t, dtype=float) for t in extra_starts]
    for k, theta0 in enumerate(starts):
        t0 = time.perf_counter()
        if theta0 is None:
            theta0, warm_fid, attempts = warm_start(instance, config, k)
        else:
            warm_fid, attempts = engine.fidelity(instance, theta0, instance.nominal_delta), 0
        t1 = time.perf_counter()
        theta, trace = robust_stage(instance, config, theta0, train, k)
        t2 = time.perf_counter()
        worst, _, _ = uncertainty.worst_and_average(instance, theta, train)
        records.append(RestartRecord(k, float(warm_fid), attempts, worst, [float(x) for x in theta], trace,
                                     t1 - t0, t2 - t1))
        thetas.append(theta)
        log.info("restart %d: warm F=%.6f, train worst infidelity %.4g", k, warm_fid, 1 - worst)
    best = int(np.argmax([r.train_worst for r in records]))
    return _report(instance, config, records, best, thetas[best], train, time.perf_counter() - start)


def run_depth_sweep(config, extra_starts=None):
    """One report per depth in ``config.depths``.

    Every depth runs the normal restart protocol plus one more start: the
    previous depth's solution padded with zeros, which reproduces the
    previous fidelities exactly because ``U(H, 0) = I``.  When training and
    evaluation grids coincide the reported worst case is therefore
    non-decreasing in ``p``.  ``extra_starts`` optionally maps a depth to
    further candidate control vectors.
    """
    if not config.depths:
        raise ValueError("config has no depth sweep")
    extra_starts = extra_starts or {}
    reports = []
    previous = None
    for p in config.depths:
        cfg = replace(config, depth=p, depths=None)
        starts = list(extra_starts.get(p, ()))
        if previous is not None:
            padded = np.zeros(2 * p)
            padded[:len(previous)] = previous
            starts.append(padded)
        rep = run_experiment(cfg, extra_starts=starts)
        previous = np.array(rep.theta)
        reports.append(rep)
    return reports


# --- landscape scans -----------------------------------------------------------

@dataclass(frozen=True)
class ScanRecord:
    delta: tuple
    fidelity: float

    @property
    def log_infidelity(self):
        infid = 1.0 - self.fidelity
        if infid <= 0.0:
            return LOG_INFIDELITY_CAP
        return min(-math.log10(infid), LOG_INFIDELITY_CAP)


def landscape_scan(instance, theta, box, points_per_axis):
    """Fidelity and ``-log10(1 - F)`` on a grid over ``box``."""
    grid = uncertainty.sample_grid(box, points_per_axis)
    return [ScanRecord(tuple(d), engine.fidelity(instance, theta, d)) for d in grid]


def _fmt(x):
    return FLOAT_FORMAT % x


def write_scan_csv(records, stream):
    writer = csv.writer(stream, lineterminator="\n")
    dim = len(records[0].delta)
    writer.writerow([f"delta_{k + 1}" for k in range(dim)] + ["fidelity", "log_infidelity"])
    for r in records:
        writer.writerow([_fmt(x) for x in r.delta] + [_fmt(r.fidelity), _fmt(r.log_infidelity)])


def write_report_csv(reports, stream):
    """One summary row per report."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["system", "n_sites", "depth", "optimizer", "worst_infidelity", "avg_infidelity",
                     "nominal_infidelity", "wall_time"])
    for r in reports:
        c = r.config
        writer.writerow([c["system"], c["n_sites"], r.depth, c["optimizer"], _fmt(r.worst_infidelity),
                         _fmt(r.avg_infidelity), _fmt(r.nominal_infidelity), _fmt(r.wall_time)])


# --- comparison tables ----------------------------------------------------------

@dataclass
class TableEntry:
    optimizer: str
    worst_infidelity: Optional[float] = None
    avg_infidelity: Optional[float] = None
    time: Optional[float] = None
    error: Optional[str] = None
    best_accuracy: bool = False
    best_time: bool = False


@dataclass
class TableRow:
    system: str
    n_sites: int
    depth: int
    box: tuple
    entries: list = field(default_factory=list)

    def key(self):
        return (self.system, self.n_sites, self.depth, self.box)


@dataclass
class ComparisonTable:
    rows: list

    def to_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["system", "n_sites", "depth", "box_lower", "box_upper", "optimizer",
                         "worst_infidelity", "avg_infidelity", "time", "best_accuracy", "best_time", "error"])
        for row in self.rows:
            lo = " ".join(_fmt(x) for x in row.box[0])
            hi = " ".join(_fmt(x) for x in row.box[1])
            for e in row.entries:
                num = [("" if v is None else _fmt(v)) for v in (e.worst_infidelity, e.avg_infidelity, e.time)]
                writer.writerow([row.system, row.n_sites, row.depth, lo, hi, e.optimizer, *num,
                                 int(e.best_accuracy), int(e.best_time), e.error or ""])

    def to_text(self):
        """Aligned text; ``*`` marks the best accuracy and ``+`` the fastest per row."""
        lines = []
        header = f"{'optimizer':<14}{'w-c':>12}{'avg':>12}{'time[s]':>11}"
        for row in self.rows:
            lo, hi = row.box
            lines.append(f"{row.system} N={row.n_sites} p={row.depth} box={list(lo)}..{list(hi)}")
            lines.append("  " + header)
            for e in row.entries:
                if e.error is not None:
                    lines.append(f"  {e.optimizer:<14}FAILED: {e.error}")
                    continue
                mark = ("*" if e.best_accuracy else " ") + ("+" if e.best_time else " ")
                lines.append(f"  {e.optimizer:<14}{e.worst_infidelity:>12.3e}{e.avg_infidelity:>12.3e}"
                             f"{e.time:>11.2f} {mark}")
        return "\n".join(lines) + "\n"


def compare_table(configs, runner=run_experiment):
    """Run every config and group the results by (system, N, p, box).

    A failing cell is recorded with its error message and the table is
    still produced.  Cells run one after another.
    """
    rows = {}
    for cfg in configs:
        lo_hi = (tuple(cfg.box.lower), tuple(cfg.box.upper))
        key = (cfg.system, cfg.n_sites, cfg.resolved_depth(), lo_hi)
        row = rows.setdefault(key, TableRow(*key))
        name = cfg.label or cfg.optimizer
        try:
            rep = runner(cfg)
        except (RobustQaoaError, ArithmeticError, ValueError) as exc:
            row.entries.append(TableEntry(name, error=f"{type(exc).__name__}: {exc}"))
            continue
        row.entries.append(TableEntry(name, rep.worst_infidelity, rep.avg_infidelity, rep.wall_time))
    for row in rows.values():
        ok = [e for e in row.entries if e.error is None]
        if ok:
            min(ok, key=lambda e: e.worst_infidelity).best_accuracy = True
            min(ok, key=lambda e: e.time).best_time = True
    return ComparisonTable(list(rows.values()))


def write_outputs(directory, reports):
    """``report.json`` (or ``sweep.json``), ``summary.csv`` and ``grid.csv`` under ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    if len(reports) == 1:
        (out / "report.json").write_text(reports[0].to_json())
    else:
        (out / "sweep.json").write_text(json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=1))
    with open(out / "summary.csv", "w", newline="") as fh:
        write_report_csv(reports, fh)
    with open(out / "grid.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        dim = len(reports[0].grid[0]) - 1
        writer.writerow(["depth"] + [f"delta_{k + 1}" for k in range(dim)] + ["fidelity"])
        for r in reports:
            for row in r.grid:
                writer.writerow([r.depth] + [_fmt(x) for x in row])
