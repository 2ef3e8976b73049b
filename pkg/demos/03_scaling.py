"""
Query scaling
=============

Mean query counts over seeded trials, fitted on log-log axes.  The slope
against N should sit near 1/2.  The slope against k comes out well below
1/2 at these sizes: the counting probes and the final emptiness check cost
a fixed multiple of sqrt(N) regardless of k.
"""

from qkmin import bench

trials = 20
rows = [bench.run_cell(bench.Cell("kmin-prop", N, 8, trials=trials, master_seed=3))
        for N in (256, 1024, 4096, 16384)]
print(bench.summary_table(rows))
slope, err = bench.fit_loglog_slope([(r.N, r.mean_queries) for r in rows])
print(f"slope vs N at k=8: {slope:.3f} +- {err:.3f}\n")

rows = [bench.run_cell(bench.Cell("kmin-prop", 4096, k, trials=trials, master_seed=3))
        for k in (1, 2, 4, 8, 16, 32, 64)]
print(bench.summary_table(rows))
slope, err = bench.fit_loglog_slope([(r.k, r.mean_queries) for r in rows])
print(f"slope vs k at N=4096: {slope:.3f} +- {err:.3f}")
