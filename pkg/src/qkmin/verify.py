"""Invariant suites run by ``qkmin verify``.

Each suite returns a :class:`SuiteResult`; ``quick`` shrinks the grids so the
whole set finishes in well under a minute.
"""
import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import sim
from .algorithms import kminima_proposed, search_all_marked
from .errors import PartialResultError
from .oracle import IndexSetOracle, generate_dataset, marked_set


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def backend_equivalence(quick: bool = False) -> SuiteResult:
    """Statevector marked probability against the closed form, every (N, k, j)."""
    max_n = 8 if quick else 10
    j_max = 40
    rng = np.random.default_rng(20240601)
    worst = 0.0
    checked = 0
    for n in range(1, max_n + 1):
        N = 1 << n
        for k in range(0, min(N, 16) + 1):
            oracle = IndexSetOracle(N, rng.choice(N, size=k, replace=False))
            state = sim.init_uniform(n)
            for j in range(j_max + 1):
                if j:
                    state = sim.grover_iterate(state, oracle, 1)
                err = abs(state.marked_probability(oracle) - sim.success_probability(N, k, j))
                worst = max(worst, err)
                checked += 1
    return SuiteResult("backend-equivalence", worst <= 1e-10,
                       f"{checked} (N,k,j) cases, max deviation {worst:.3e}")


def set_equality(quick: bool = False) -> SuiteResult:
    """search_all_marked returns exactly M on every successful run."""
    rng = np.random.default_rng(7)
    sizes = [2, 4, 8, 16, 32, 64] + ([] if quick else [128, 256])
    bad = runs = partial = 0
    for N in sizes:
        sets = [{x} for x in range(N)] if N <= 64 else [{int(x)} for x in rng.choice(N, 16, replace=False)]
        for size in range(0, min(N, 16) + 1):
            sets.append({int(x) for x in rng.choice(N, size=size, replace=False)})
        for M in sets:
            runs += 1
            try:
                got = search_all_marked(IndexSetOracle(N, M), rng, k_expected=len(M))
            except PartialResultError:
                partial += 1
                continue
            bad += got != M
    return SuiteResult("set-equality", bad == 0,
                       f"{runs} runs, {bad} wrong sets, {partial} budget-exhausted")


def binary_search_postcondition(quick: bool = False) -> SuiteResult:
    """h(below) <= k < h(threshold) after every exact-count k-minima run."""
    cases = [(256, 1), (256, 5), (1024, 8)] if quick else [(256, 1), (256, 5), (1024, 8), (4096, 16), (4096, 64)]
    trials = 10 if quick else 30
    bad = runs = 0
    for N, k in cases:
        for s in range(trials):
            ds = generate_dataset(N, "permutation", 1000 * N + s)
            rng = np.random.default_rng(s)
            try:
                res = kminima_proposed(ds, k, rng, qc_mode="exact")
            except PartialResultError:
                continue
            runs += 1
            b = res.bracket
            h_top = N if b.threshold is None else len(marked_set(ds, b.threshold))
            h_below = math.inf if b.below is None else len(marked_set(ds, b.below))
            if not (h_below <= k < h_top and h_top == b.k_prime):
                bad += 1
    return SuiteResult("binary-search-postcondition", bad == 0 and runs > 0, f"{runs} runs, {bad} violations")


def sum_bound(quick: bool = False) -> SuiteResult:
    """sum_{t<=k} 1/sqrt(t) < 2 sqrt(k) - 1 for k >= 2 (equality at k = 1)."""
    ks = [2, 3, 10, 100, 10**4] + ([] if quick else [10**6])
    bad = [k for k in ks if not harmonic_sqrt_sum(k) < 2 * math.sqrt(k) - 1]
    edge = math.isclose(harmonic_sqrt_sum(1), 2 * math.sqrt(1) - 1)
    return SuiteResult("sum-bound", not bad and edge, f"k={ks}, violations {bad}, k=1 equality {edge}")


def harmonic_sqrt_sum(k: int) -> float:
    t = np.arange(1, k + 1, dtype=float)
    return float(math.fsum(1.0 / np.sqrt(t)))


SUITES: List[Callable[[bool], SuiteResult]] = [
    backend_equivalence,
    set_equality,
    binary_search_postcondition,
    sum_bound,
]


def run_all(quick: bool = False) -> List[SuiteResult]:
    return [suite(quick) for suite in SUITES]
