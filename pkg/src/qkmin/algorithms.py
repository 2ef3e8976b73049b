"""Amplitude amplification and the k-minima algorithms built on it.

All costs are counted on the oracle's :class:`~qkmin.oracle.QueryLedger`.
The classical peeks used to maintain found sets, pick ``argmax`` over a
classical set, or to verify answers in tests are free.
"""
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import sim
from .errors import PartialResultError
from .oracle import (
    Dataset,
    ExclusionOracle,
    MultiThresholdOracle,
    QueryLedger,
    ThresholdOracle,
    evaluate,
    select_threshold,
)

BACKENDS = ("statevector", "analytic")
QC_MODES = ("sampled", "exact")

GROWTH = 6 / 5
# extra rounds at the capped schedule before a search declares "nothing marked"
CONFIRM_ROUNDS = 6


def fm_budget(N: int) -> int:
    """Query budget of the minimum search: ``22.5 sqrt(N) + 1.4 log2(N)^2``."""
    return math.ceil(22.5 * math.sqrt(N) + 1.4 * math.log2(N) ** 2)


def search_all_budget(N: int, k_expected: int) -> int:
    return math.ceil(9 * math.sqrt((k_expected + 1) * N))


def conventional_budget(N: int, k: int) -> int:
    return math.ceil(40 * math.sqrt(k * N))


def nominal_count_cost(N: int) -> int:
    """Query charge of one exact-mode count: ``ceil(2 pi sqrt(N))``."""
    return math.ceil(2 * math.pi * math.sqrt(N))


def default_counting_qubits(N: int) -> int:
    """Counting register whose ``2**p - 1`` cost matches the nominal count cost."""
    return max(1, math.ceil(math.log2(nominal_count_cost(N))))


def _check_backend(backend):
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def prepare(oracle, j: int, backend: str = "analytic"):
    """Uniform superposition followed by ``j`` Grover iterations."""
    _check_backend(backend)
    if backend == "statevector":
        state = sim.init_uniform(oracle.n_qubits)
    else:
        state = sim.uniform_rotation(oracle)
    return sim.grover_iterate(state, oracle, j)


def aa_search_known(oracle, k: int, rng: np.random.Generator, backend: str = "analytic",
                    N: Optional[int] = None) -> Optional[int]:
    """One amplitude-amplification shot with a known marked count ``k``.

    Runs ``floor(pi/4 sqrt(N/k))`` iterations and measures once.
    """
    if k < 1:
        raise ValueError("known-count search needs k >= 1; use aa_search_unknown")
    N = oracle.size if N is None else N
    j = math.floor(math.pi / 4 * math.sqrt(N / k))
    outcome = sim.measure(prepare(oracle, j, backend), rng, oracle)
    return outcome.index if outcome.was_marked else None


def aa_search_unknown(oracle, rng: np.random.Generator, backend: str = "analytic",
                      budget: Optional[int] = None, confirm_rounds: Optional[int] = None,
                      growth: float = GROWTH) -> Optional[int]:
    """Exponential search for a marked index when the marked count is unknown.

    Each round draws ``j`` uniformly from ``[0, ceil(m))``, runs ``j``
    iterations from a fresh uniform state, measures, and spends one query to
    check the outcome.  ``m`` grows by ``growth`` up to ``sqrt(size)``.

    Returns ``None`` when ``budget`` queries have been spent (the last round
    is shortened so exactly ``budget`` are used) or, if ``confirm_rounds``
    is given, after that many failed rounds at the capped ``m``.
    """
    if budget is None and confirm_rounds is None:
        raise ValueError("need a budget or a confirmation round count to guarantee termination")
    ledger = oracle.ledger
    start = ledger.count
    cap = math.sqrt(oracle.size)
    m = 1.0
    capped_rounds = 0
    while True:
        remaining = math.inf if budget is None else budget - (ledger.count - start)
        if remaining <= 0:
            return None
        if confirm_rounds is not None and capped_rounds >= confirm_rounds:
            return None
        if m >= cap:
            capped_rounds += 1
        j = int(rng.integers(math.ceil(m)))
        j = int(min(j, remaining - 1))
        outcome = sim.measure(prepare(oracle, j, backend), rng, oracle)
        if evaluate(oracle, outcome.index):
            return outcome.index
        m = min(growth * m, cap)


@dataclass
class FMTrace:
    """Thresholds visited by the minimum search, in discovery order."""

    thresholds: List[int] = field(default_factory=list)
    budget_used: int = 0

    def __len__(self):
        return len(self.thresholds)


def find_minimum(dataset: Dataset, rng: np.random.Generator, budget: Optional[int] = None,
                 backend: str = "analytic", ledger: Optional[QueryLedger] = None,
                 exact_stop: bool = False):
    """Threshold-descent minimum search.

    Starts from a uniformly random threshold and repeatedly replaces it with
    any index below it, found by :func:`aa_search_unknown`, until ``budget``
    queries are spent.  With ``exact_stop`` the loop also ends as soon as the
    threshold is the true minimum (a free classical check for testing).

    Returns ``(index, trace)``.
    """
    ledger = QueryLedger() if ledger is None else ledger
    budget = fm_budget(dataset.N) if budget is None else budget
    if budget <= 0:
        raise ValueError("budget must be positive")
    start = ledger.count
    t = int(rng.integers(dataset.N))
    trace = FMTrace([t])
    while True:
        if exact_stop and dataset.rank[t] == 0:
            break
        remaining = budget - (ledger.count - start)
        if remaining <= 0:
            break
        x = aa_search_unknown(ThresholdOracle(dataset, t, ledger), rng, backend, budget=remaining)
        if x is None:
            break
        t = x
        trace.thresholds.append(t)
    trace.budget_used = ledger.count - start
    return t, trace


def find_maximum(dataset: Dataset, rng: np.random.Generator, budget: Optional[int] = None,
                 backend: str = "analytic", ledger: Optional[QueryLedger] = None,
                 exact_stop: bool = False) -> int:
    """Minimum search under the reversed key order."""
    index, _ = find_minimum(dataset.reversed(), rng, budget, backend, ledger, exact_stop)
    return index


@dataclass
class CountEstimate:
    k_hat: float
    p: int
    exact: bool = False


def quantum_count(oracle, p: int, rng: np.random.Generator, mode: str = "sampled") -> CountEstimate:
    """Estimate the number of marked indices.

    ``sampled`` draws a phase reading ``y`` and returns ``size sin^2(pi y / 2**p)``.
    ``exact`` returns the true count and charges the nominal counting cost.
    """
    if p < 1:
        raise ValueError("need at least one counting qubit")
    if mode == "exact":
        oracle.ledger.charge(nominal_count_cost(oracle.size))
        return CountEstimate(float(oracle.count()), p, exact=True)
    if mode != "sampled":
        raise ValueError(f"unknown counting mode {mode!r}; choose from {QC_MODES}")
    y = sim.phase_estimate_grover(oracle.size, oracle.count(), p, rng, oracle.ledger)
    return CountEstimate(oracle.size * math.sin(math.pi * y / (1 << p)) ** 2, p)


@dataclass
class Bracket:
    """Outcome of the threshold binary search.

    ``threshold`` marks ``k_prime`` indices (``None`` is the ``+inf``
    sentinel).  ``below`` is the next threshold in the trace, estimated to
    mark at most ``k``; ``None`` when the window ran out.
    """

    threshold: Optional[int]
    k_prime: int
    below: Optional[int]
    probes: int
    window: List[Optional[int]]


def threshold_binary_search(trace: FMTrace, k: int, dataset: Dataset, rng: np.random.Generator,
                            p: Optional[int] = None, mode: str = "exact",
                            ledger: Optional[QueryLedger] = None) -> Bracket:
    """Find consecutive trace thresholds with ``h(below) <= k < h(threshold)``.

    Only the last ``k + 2`` thresholds are searched, behind a sentinel whose
    count is ``N``.  Counts come from :func:`quantum_count`.
    """
    if not trace.thresholds:
        raise ValueError("empty threshold trace")
    N = dataset.N
    if not 1 <= k:
        raise ValueError(f"k must be at least 1, got {k}")
    ledger = QueryLedger() if ledger is None else ledger
    p = default_counting_qubits(dataset.size) if p is None else p
    if k >= N:
        return Bracket(None, N, None, 0, [None])
    window = [None] + list(trace.thresholds[-(k + 2):])
    counts = {0: N}
    lo, hi = 0, len(window)
    probes = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        est = quantum_count(ThresholdOracle(dataset, window[mid], ledger), p, rng, mode)
        probes += 1
        c = int(round(est.k_hat))
        if c > k:
            lo = mid
            counts[mid] = c
        else:
            hi = mid
    below = window[hi] if hi < len(window) else None
    return Bracket(window[lo], counts[lo], below, probes, window)


def search_all_marked(oracle, rng: np.random.Generator, backend: str = "analytic",
                      k_expected: Optional[int] = None, budget: Optional[int] = None,
                      confirm_rounds: int = CONFIRM_ROUNDS) -> set:
    """Collect every marked index by repeated search under an exclusion oracle.

    Stops once a full search with confirmation finds nothing.  Raises
    :class:`PartialResultError` if the budget (default
    ``9 sqrt((k_expected + 1) N)``) runs out first.
    """
    if budget is None and k_expected is not None:
        budget = search_all_budget(oracle.size, k_expected)
    ledger = oracle.ledger
    start = ledger.count
    excl = ExclusionOracle(oracle, ledger=ledger)
    while True:
        remaining = None if budget is None else budget - (ledger.count - start)
        if remaining is not None and remaining <= 0:
            raise PartialResultError("search-all budget exhausted", excl.T, "search-all",
                                     ledger.count - start)
        x = aa_search_unknown(excl, rng, backend, budget=remaining, confirm_rounds=confirm_rounds)
        if x is None:
            if budget is not None and ledger.count - start >= budget:
                raise PartialResultError("search-all budget exhausted", excl.T, "search-all",
                                         ledger.count - start)
            return set(excl.T)
        excl.exclude(x)


def kminima_conventional(dataset: Dataset, k: int, rng: np.random.Generator, strategy: str = "max",
                         backend: str = "analytic", budget: Optional[int] = None,
                         ledger: Optional[QueryLedger] = None, charge_argmax: bool = False,
                         confirm_rounds: int = CONFIRM_ROUNDS) -> set:
    """Greedy k-minima with a classical set ``T`` of ``k`` thresholds.

    Each round searches below one member of ``T`` (chosen by ``strategy``),
    excluding ``T`` itself, and swaps the found index for the largest member.
    A round that finds nothing confirms its threshold; the run ends once the
    largest member of ``T`` is confirmed, which certifies ``T``.  Under the
    ``min`` strategy that never happens and the budget runs out.
    """
    N = dataset.N
    if not 1 <= k <= N:
        raise ValueError(f"k={k} outside [1, {N}]")
    ledger = QueryLedger() if ledger is None else ledger
    if k == N:
        return set(range(N))
    budget = conventional_budget(N, k) if budget is None else budget
    start = ledger.count
    T = set(int(x) for x in rng.choice(N, size=k, replace=False))
    confirmed = set()
    while True:
        t_max = select_threshold(T, "max", rng, dataset)
        if t_max in confirmed:
            return T
        remaining = budget - (ledger.count - start)
        if remaining <= 0:
            raise PartialResultError("conventional k-minima budget exhausted", T, "kmin-conv",
                                     ledger.count - start)
        oracle = MultiThresholdOracle(dataset, T, strategy, rng, ledger)
        x = aa_search_unknown(oracle, rng, backend, budget=remaining, confirm_rounds=confirm_rounds)
        if x is None:
            confirmed.add(oracle.selected)
            continue
        if charge_argmax:
            ledger.charge(math.ceil(math.sqrt(k)))
        T.remove(t_max)
        confirmed.discard(t_max)
        T.add(int(x))


@dataclass
class KMinimaResult:
    indices: set
    trace: FMTrace
    bracket: Bracket
    found: set
    phases: dict


def kminima_proposed(dataset: Dataset, k: int, rng: np.random.Generator, backend: str = "analytic",
                     qc_mode: str = "exact", p: Optional[int] = None,
                     fm_budget_: Optional[int] = None, search_budget: Optional[int] = None,
                     ledger: Optional[QueryLedger] = None,
                     confirm_rounds: int = CONFIRM_ROUNDS) -> KMinimaResult:
    """Threshold search followed by collection of everything below the threshold.

    1. minimum search, keeping its threshold trace;
    2. binary search over the trace tail for a threshold marking ``k' > k``;
    3. search-all-marked below that threshold;
    4. classical selection of the ``k`` smallest of the ``k'`` found.

    In ``exact`` mode the minimum search stops at the true minimum.
    """
    N = dataset.N
    if not 1 <= k <= N:
        raise ValueError(f"k={k} outside [1, {N}]")
    if qc_mode not in QC_MODES:
        raise ValueError(f"unknown counting mode {qc_mode!r}; choose from {QC_MODES}")
    ledger = QueryLedger() if ledger is None else ledger
    with ledger.phase("fm"):
        fm_start = ledger.count
        _, trace = find_minimum(dataset, rng, fm_budget_, backend, ledger, exact_stop=qc_mode == "exact")
    with ledger.phase("count"):
        bracket = threshold_binary_search(trace, k, dataset, rng, p, qc_mode, ledger)
    with ledger.phase("search-all"):
        base = ThresholdOracle(dataset, bracket.threshold, ledger)
        budget = search_all_budget(dataset.size, bracket.k_prime) if search_budget is None else search_budget
        try:
            found = search_all_marked(base, rng, backend, bracket.k_prime, budget, confirm_rounds)
        except PartialResultError as exc:
            exc.queries = ledger.count - fm_start
            raise
    if len(found) < k:
        raise PartialResultError(f"threshold marked only {len(found)} < k={k} indices", found,
                                 "count", ledger.count - fm_start)
    chosen = sorted(found, key=lambda x: dataset.rank[x])[:k]
    return KMinimaResult(set(chosen), trace, bracket, found, dict(ledger.phases))


ALGORITHMS = ("grover", "aa-unknown", "fm", "fmax", "count", "search-all", "kmin-conv", "kmin-prop")


@dataclass
class RunReport:
    algo: str
    backend: str
    seed: int
    N: int
    k: int
    queries: int
    success: bool
    found: List[int]
    wall_ns: int = 0
    phases: dict = field(default_factory=dict)
    k_prime: Optional[int] = None
    estimate: Optional[float] = None
    retries: int = 0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "algo": self.algo, "backend": self.backend, "seed": self.seed, "N": self.N,
            "k": self.k, "queries": self.queries, "success": self.success,
            "found": list(self.found), "wall_ns": self.wall_ns, "phases": dict(self.phases),
            "k_prime": self.k_prime, "estimate": self.estimate, "retries": self.retries,
            "error": self.error,
        }


def _k_smallest_oracle(dataset: Dataset, k: int, ledger: QueryLedger) -> ThresholdOracle:
    """Threshold oracle marking exactly the ``k`` smallest indices."""
    t = None if k >= dataset.N else int(dataset.order[k])
    return ThresholdOracle(dataset, t, ledger)


def run_algorithm(algo: str, dataset: Dataset, k: int, seed: int, backend: str = "analytic",
                  qc_mode: str = "exact", strategy: str = "max", p: Optional[int] = None,
                  budget_multiplier: float = 1.0, max_retries: int = 3) -> RunReport:
    """Run one algorithm once (plus bounded retries for k-minima) and verify it."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    _check_backend(backend)
    N = dataset.N
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside [0, {N}]")
    rng = np.random.default_rng(seed)
    ledger = QueryLedger()
    report = RunReport(algo, backend, seed, N, k, 0, False, [])
    scale = budget_multiplier
    t0 = time.perf_counter_ns()

    if algo in ("grover", "aa-unknown", "count", "search-all"):
        oracle = _k_smallest_oracle(dataset, k, ledger)
        truth = dataset.smallest(k)
        with ledger.phase(algo):
            if algo == "grover":
                x = aa_search_known(oracle, max(k, 1), rng, backend) if k else None
                report.found = [] if x is None else [x]
                report.success = x is not None and x in truth
            elif algo == "aa-unknown":
                budget = math.ceil(scale * 9 * math.sqrt(oracle.size / max(k, 1)))
                x = aa_search_unknown(oracle, rng, backend, budget=budget)
                report.found = [] if x is None else [x]
                report.success = x in truth if x is not None else k == 0
            elif algo == "count":
                pp = default_counting_qubits(oracle.size) if p is None else p
                est = quantum_count(oracle, pp, rng, qc_mode)
                report.estimate = est.k_hat
                report.success = int(round(est.k_hat)) == k
            else:
                budget = math.ceil(scale * search_all_budget(oracle.size, k))
                try:
                    got = search_all_marked(oracle, rng, backend, k, budget)
                    report.success = got == truth
                except PartialResultError as exc:
                    got = exc.found
                    report.error = str(exc)
                report.found = sorted(got)
    elif algo in ("fm", "fmax"):
        budget = math.ceil(scale * fm_budget(N))
        with ledger.phase(algo):
            if algo == "fm":
                x, _ = find_minimum(dataset, rng, budget, backend, ledger)
                report.success = dataset.rank[x] == 0
            else:
                x = find_maximum(dataset, rng, budget, backend, ledger)
                report.success = dataset.rank[x] == N - 1
        report.found = [int(x)]
    else:
        truth = dataset.smallest(k)
        for attempt in range(max_retries + 1):
            report.retries = attempt
            try:
                if algo == "kmin-conv":
                    budget = math.ceil(scale * conventional_budget(N, k))
                    with ledger.phase("kmin-conv"):
                        got = kminima_conventional(dataset, k, rng, strategy, backend, budget, ledger)
                else:
                    res = kminima_proposed(dataset, k, rng, backend, qc_mode, p,
                                           fm_budget_=math.ceil(scale * fm_budget(N)), ledger=ledger)
                    got = res.indices
                    report.k_prime = res.bracket.k_prime
                report.error = None
            except PartialResultError as exc:
                got = exc.found
                report.error = f"{exc.phase}: {exc}"
            report.found = sorted(got)
            report.success = report.error is None and set(got) == truth
            if report.success:
                break

    report.wall_ns = time.perf_counter_ns() - t0
    report.queries = ledger.count
    report.phases = dict(ledger.phases)
    report.success = bool(report.success)
    return report
