"""
Finding the k smallest values
=============================

The threshold-descent minimum search leaves behind a trail of thresholds.
The proposed k-minima method counts marked indices along that trail to
pick a threshold just above the k-th smallest, then collects everything
below it.  The greedy conventional method keeps k candidates and swaps
them out one at a time.
"""

import numpy as np

from qkmin.algorithms import find_minimum, kminima_conventional, kminima_proposed
from qkmin.errors import PartialResultError
from qkmin.oracle import QueryLedger, generate_dataset, marked_set

N, k = 4096, 10
data = generate_dataset(N, "gaussian", seed=1)
rng = np.random.default_rng(1)

# Minimum search on its own
ledger = QueryLedger()
best, trace = find_minimum(data, rng, ledger=ledger)
print("minimum found:", best == data.order[0], "after", ledger.count, "queries")
print("threshold trail (how many indices lie below each):",
      [len(marked_set(data, t)) for t in trace.thresholds])

# Proposed method: phases are accounted separately
ledger = QueryLedger()
res = kminima_proposed(data, k, rng, ledger=ledger)
print("\nproposed k-minima correct:", res.indices == data.smallest(k))
print("bracketing threshold marks k' =", res.bracket.k_prime, "indices; probes used:", res.bracket.probes)
for phase, q in res.phases.items():
    print(f"  {phase:<11}{q:>7} queries")
print(f"  {'total':<11}{ledger.count:>7}")

# Conventional method with the two selection strategies
for strategy in ("max", "min"):
    ledger = QueryLedger()
    try:
        got = kminima_conventional(data, k, rng, strategy, ledger=ledger)
        print(f"\nconventional/{strategy}: correct={got == data.smallest(k)}, {ledger.count} queries")
    except PartialResultError as exc:
        print(f"\nconventional/{strategy}: gave up after {ledger.count} queries ({exc})")
