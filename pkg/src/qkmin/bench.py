"""Seeded sweeps over (algorithm, N, k) cells and their summary statistics.

Every trial derives its own seed from ``(master_seed, cell id, trial)``
through a keyed hash, so results do not depend on how trials are scheduled
across threads.  Aggregation folds reports in trial order.
"""
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as _stats

from .algorithms import ALGORITHMS, BACKENDS, QC_MODES, RunReport, run_algorithm
from .oracle import DISTRIBUTIONS, STRATEGIES, generate_dataset

CSV_COLUMNS = (
    "algo", "backend", "dist", "N", "k", "seed", "trials", "success_rate", "mean_queries",
    "median_queries", "p95_queries", "mean_kprime_ratio", "mean_wall_ns",
)

# algorithms whose result does not depend on k; they run once per N
_K_FREE = ("fm", "fmax")


@dataclass
class SweepConfig:
    algorithms: List[str]
    n_grid: List[int]
    k_grid: List[int]
    distribution: str = "permutation"
    trials: int = 100
    master_seed: int = 0
    backend: str = "analytic"
    qc_mode: str = "exact"
    budget_multipliers: Dict[str, float] = field(default_factory=dict)
    output: str = "results.csv"
    format: str = "csv"
    strategy: str = "max"
    retries: int = 3
    timing: bool = False


class ConfigError(ValueError):
    """Invalid sweep configuration; ``key`` names the first offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _int_list(key, v):
    if not isinstance(v, list) or not v:
        raise ConfigError(key, "must be a nonempty list")
    for i, x in enumerate(v):
        if not _is_int(x) or x < 1:
            raise ConfigError(f"{key}[{i}]", f"must be a positive integer, got {x!r}")
    return list(v)


def _choice(key, v, options):
    if v not in options:
        raise ConfigError(key, f"must be one of {list(options)}, got {v!r}")
    return v


def config_from_dict(doc: dict) -> SweepConfig:
    """Validate a parsed config document; raises :class:`ConfigError` on the first bad key."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a single mapping")
    known = {f.name for f in fields(SweepConfig)}
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown key")
    for key in ("algorithms", "n_grid", "k_grid"):
        if key not in doc:
            raise ConfigError(key, "missing required key")

    algos = doc["algorithms"]
    if not isinstance(algos, list) or not algos:
        raise ConfigError("algorithms", "must be a nonempty list")
    for i, a in enumerate(algos):
        _choice(f"algorithms[{i}]", a, ALGORITHMS)
    cfg = SweepConfig(algorithms=list(algos), n_grid=_int_list("n_grid", doc["n_grid"]),
                      k_grid=_int_list("k_grid", doc["k_grid"]))

    if "distribution" in doc:
        cfg.distribution = _choice("distribution", doc["distribution"], DISTRIBUTIONS)
    if "trials" in doc:
        if not _is_int(doc["trials"]) or doc["trials"] < 1:
            raise ConfigError("trials", "must be an integer >= 1")
        cfg.trials = doc["trials"]
    if "master_seed" in doc:
        if not _is_int(doc["master_seed"]) or doc["master_seed"] < 0:
            raise ConfigError("master_seed", "must be a nonnegative integer")
        cfg.master_seed = doc["master_seed"]
    if "backend" in doc:
        cfg.backend = _choice("backend", doc["backend"], BACKENDS)
    if "qc_mode" in doc:
        cfg.qc_mode = _choice("qc_mode", doc["qc_mode"], QC_MODES)
    if "strategy" in doc:
        cfg.strategy = _choice("strategy", doc["strategy"], STRATEGIES)
    if "format" in doc:
        cfg.format = _choice("format", doc["format"], ("csv", "json"))
    if "output" in doc:
        if not isinstance(doc["output"], str) or not doc["output"]:
            raise ConfigError("output", "must be a nonempty path string")
        cfg.output = doc["output"]
    if "retries" in doc:
        if not _is_int(doc["retries"]) or doc["retries"] < 0:
            raise ConfigError("retries", "must be a nonnegative integer")
        cfg.retries = doc["retries"]
    if "timing" in doc:
        if not isinstance(doc["timing"], bool):
            raise ConfigError("timing", "must be true or false")
        cfg.timing = doc["timing"]
    if "budget_multipliers" in doc:
        bm = doc["budget_multipliers"]
        if not isinstance(bm, dict):
            raise ConfigError("budget_multipliers", "must be a mapping of algorithm to factor")
        for a, f in bm.items():
            _choice(f"budget_multipliers.{a}", a, ALGORITHMS)
            if not isinstance(f, (int, float)) or isinstance(f, bool) or f <= 0:
                raise ConfigError(f"budget_multipliers.{a}", "must be a positive number")
        cfg.budget_multipliers = {a: float(f) for a, f in bm.items()}
    return cfg


def load_config(path) -> SweepConfig:
    """Read a JSON sweep config file."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return config_from_dict(doc)


@dataclass(frozen=True)
class Cell:
    algo: str
    N: int
    k: int
    dist: str = "permutation"
    backend: str = "analytic"
    qc_mode: str = "exact"
    strategy: str = "max"
    trials: int = 100
    master_seed: int = 0
    budget_multiplier: float = 1.0
    retries: int = 3
    timing: bool = False

    @property
    def cell_id(self) -> str:
        return (f"{self.algo}|{self.backend}|{self.dist}|{self.qc_mode}|{self.strategy}"
                f"|N={self.N}|k={self.k}")


def trial_seed(master_seed: int, cell_id: str, trial: int) -> int:
    """64-bit seed from a keyed hash; stable across processes and platforms."""
    h = hashlib.blake2b(f"{master_seed}|{cell_id}|{trial}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


@dataclass
class CellStats:
    algo: str
    backend: str
    dist: str
    N: int
    k: int
    seed: int
    trials: int
    success_rate: float
    mean_queries: float
    median_queries: float
    p95_queries: float
    mean_kprime_ratio: Optional[float]
    mean_wall_ns: float
    mean_queries_success: Optional[float] = None


def cells_from_config(cfg: SweepConfig) -> List[Cell]:
    out = []
    for algo in cfg.algorithms:
        ks = [1] if algo in _K_FREE else cfg.k_grid
        for N in cfg.n_grid:
            for k in ks:
                if k > N:
                    continue
                out.append(Cell(algo, N, k, cfg.distribution, cfg.backend, cfg.qc_mode, cfg.strategy,
                                cfg.trials, cfg.master_seed, cfg.budget_multipliers.get(algo, 1.0),
                                cfg.retries, cfg.timing))
    return out


def run_trial(cell: Cell, trial: int) -> RunReport:
    seed = trial_seed(cell.master_seed, cell.cell_id, trial)
    data_seed, algo_seed = np.random.SeedSequence(seed).generate_state(2)
    dataset = generate_dataset(cell.N, cell.dist, int(data_seed))
    report = run_algorithm(cell.algo, dataset, cell.k, int(algo_seed), cell.backend, cell.qc_mode,
                           cell.strategy, budget_multiplier=cell.budget_multiplier,
                           max_retries=cell.retries)
    report.seed = seed
    if not cell.timing:
        report.wall_ns = 0
    return report


def default_threads() -> int:
    env = os.environ.get("QKMIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"QKMIN_THREADS must be an integer, got {env!r}") from None
    return 1


def aggregate(cell: Cell, reports: Sequence[RunReport]) -> CellStats:
    q = np.array([r.queries for r in reports], dtype=float)
    ok = np.array([r.success for r in reports], dtype=bool)
    ratios = [r.k_prime / r.k for r in reports if r.k_prime is not None and r.k]
    return CellStats(
        algo=cell.algo, backend=cell.backend, dist=cell.dist, N=cell.N, k=cell.k,
        seed=cell.master_seed, trials=len(reports),
        success_rate=float(ok.mean()),
        mean_queries=float(q.mean()),
        median_queries=float(np.median(q)),
        p95_queries=float(np.percentile(q, 95)),
        mean_kprime_ratio=float(np.mean(ratios)) if ratios else None,
        mean_wall_ns=float(np.mean([r.wall_ns for r in reports])),
        mean_queries_success=float(q[ok].mean()) if ok.any() else None,
    )


def run_cell(cell: Cell, threads: Optional[int] = None, keep_reports: bool = False):
    """Run every trial of ``cell``; returns ``CellStats`` (and the reports if asked)."""
    if cell.trials < 1:
        raise ValueError("a cell needs at least one trial")
    threads = default_threads() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda i: run_trial(cell, i), range(cell.trials)))
    else:
        reports = [run_trial(cell, i) for i in range(cell.trials)]
    stats = aggregate(cell, reports)
    return (stats, reports) if keep_reports else stats


def run_sweep(cfg: SweepConfig, threads: Optional[int] = None) -> List[CellStats]:
    return [run_cell(c, threads) for c in cells_from_config(cfg)]


def fit_loglog_slope(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Least-squares slope (and its standard error) of ``log y`` against ``log x``."""
    pts = list(points)
    if len(pts) < 4:
        raise ValueError(f"need at least 4 points, got {len(pts)}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("log-log fit needs strictly positive values")
    res = _stats.linregress(np.log(x), np.log(y))
    return float(res.slope), float(res.stderr)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(stats: Sequence[CellStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in stats:
        d = asdict(s)
        writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def format_json(stats: Sequence[CellStats]) -> str:
    return json.dumps([asdict(s) for s in stats], indent=2) + "\n"


def emit_results(stats: Sequence[CellStats], format: str = "csv", path="-") -> str:
    """Write ``stats`` as CSV or JSON to ``path`` (``-`` for stdout); returns the text."""
    if format == "csv":
        text = format_csv(stats)
    elif format == "json":
        text = format_json(stats)
    else:
        raise ValueError(f"unknown format {format!r}")
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def load_results_json(path) -> List[CellStats]:
    with open(path) as fh:
        return [CellStats(**d) for d in json.load(fh)]


def summary_table(stats: Sequence[CellStats]) -> str:
    head = f"{'algo':<11}{'N':>8}{'k':>5}{'trials':>8}{'success':>9}{'mean_q':>11}{'p95_q':>10}"
    lines = [head, "-" * len(head)]
    for s in stats:
        lines.append(f"{s.algo:<11}{s.N:>8}{s.k:>5}{s.trials:>8}{s.success_rate:>9.3f}"
                     f"{s.mean_queries:>11.1f}{s.p95_queries:>10.1f}")
    return "\n".join(lines)


def scaling_slopes(stats: Sequence[CellStats], algo: str) -> Dict[str, Tuple[float, float]]:
    """Slopes over N (at each k) and over k (at each N) for one algorithm, where fittable."""
    rows = [s for s in stats if s.algo == algo]
    out = {}
    for k in sorted({s.k for s in rows}):
        pts = sorted((s.N, s.mean_queries) for s in rows if s.k == k)
        if len(pts) >= 4:
            out[f"N@k={k}"] = fit_loglog_slope(pts)
    for N in sorted({s.N for s in rows}):
        pts = sorted((s.k, s.mean_queries) for s in rows if s.N == N)
        if len(pts) >= 4:
            out[f"k@N={N}"] = fit_loglog_slope(pts)
    return out

