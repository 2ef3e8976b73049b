import csv
import io
import math

import pytest

from qkmin import bench


def small_config(**kw):
    doc = {"algorithms": ["kmin-prop", "fm"], "n_grid": [64, 128], "k_grid": [2, 4],
           "trials": 6, "master_seed": 11}
    doc.update(kw)
    return bench.config_from_dict(doc)


def test_trial_seed_stable():
    a = bench.trial_seed(1, "cell", 0)
    assert a == bench.trial_seed(1, "cell", 0)
    assert len({bench.trial_seed(1, "cell", t) for t in range(100)}) == 100
    assert a != bench.trial_seed(2, "cell", 0)


def test_cells_skip_k_for_k_free_algorithms():
    cells = bench.cells_from_config(small_config())
    fm = [c for c in cells if c.algo == "fm"]
    assert [(c.N, c.k) for c in fm] == [(64, 1), (128, 1)]
    assert len([c for c in cells if c.algo == "kmin-prop"]) == 4


def test_run_cell_deterministic():
    cell = bench.Cell("kmin-prop", 1024, 4, trials=100, master_seed=5)
    a = bench.run_cell(cell)
    b = bench.run_cell(cell)
    assert a == b
    assert 0.0 <= a.success_rate <= 1.0


def test_run_cell_grover_certain():
    stats = bench.run_cell(bench.Cell("grover", 4, 1, trials=50))
    assert stats.success_rate == 1.0


def test_run_cell_fm_rate():
    stats = bench.run_cell(bench.Cell("fm", 1024, 1, trials=500, master_seed=3))
    assert stats.success_rate >= 0.5


def test_run_cell_reports_recompute_aggregate():
    cell = bench.Cell("search-all", 256, 5, trials=20)
    stats, reports = bench.run_cell(cell, keep_reports=True)
    assert stats.mean_queries == pytest.approx(sum(r.queries for r in reports) / 20)
    assert stats.success_rate == sum(r.success for r in reports) / 20


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_threads_do_not_change_results(threads):
    cell = bench.Cell("kmin-conv", 256, 3, trials=12, master_seed=9)
    assert bench.run_cell(cell, threads=threads) == bench.run_cell(cell, threads=1)


def test_timing_off_gives_zero_wall():
    stats = bench.run_cell(bench.Cell("grover", 16, 1, trials=3))
    assert stats.mean_wall_ns == 0.0
    timed = bench.run_cell(bench.Cell("grover", 16, 1, trials=3, timing=True))
    assert timed.mean_wall_ns > 0


def test_slope_sqrt():
    xs = [256, 1024, 4096, 16384]
    slope, _ = bench.fit_loglog_slope([(x, 3.7 * math.sqrt(x)) for x in xs])
    assert abs(slope - 0.5) < 1e-9


def test_slope_constant():
    slope, _ = bench.fit_loglog_slope([(x, 42.0) for x in [1, 2, 4, 8, 16]])
    assert abs(slope) < 1e-9


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2), (3, 3)], [(1, 1), (2, 0), (3, 3), (4, 4)]])
def test_slope_rejects_bad_input(pts):
    with pytest.raises(ValueError):
        bench.fit_loglog_slope(pts)


def _stats(n):
    cell = bench.Cell("kmin-prop", 128, 3, trials=5, master_seed=n)
    return bench.run_cell(cell)


def test_csv_one_row(tmp_path):
    path = tmp_path / "out.csv"
    bench.emit_results([_stats(1)], "csv", str(path))
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == list(bench.CSV_COLUMNS)
    assert len(rows) == 2


def test_csv_empty_header_only():
    text = bench.format_csv([])
    assert text == ",".join(bench.CSV_COLUMNS) + "\n"


def test_json_round_trip(tmp_path):
    stats = [_stats(1), _stats(2), bench.run_cell(bench.Cell("grover", 8, 1, trials=4))]
    path = tmp_path / "out.json"
    bench.emit_results(stats, "json", str(path))
    assert bench.load_results_json(path) == stats


def test_emit_stdout(capsys):
    bench.emit_results([], "csv", "-")
    assert capsys.readouterr().out.startswith("algo,backend")


def test_emit_unknown_format():
    with pytest.raises(ValueError):
        bench.emit_results([], "xml", "-")


@pytest.mark.parametrize("doc, key", [
    ({"algorithms": [], "n_grid": [4], "k_grid": [1]}, "algorithms"),
    ({"algorithms": ["grover"], "n_grid": [], "k_grid": [1]}, "n_grid"),
    ({"algorithms": ["grover"], "n_grid": [4], "k_grid": []}, "k_grid"),
    ({"algorithms": ["nope"], "n_grid": [4], "k_grid": [1]}, "algorithms[0]"),
    ({"algorithms": ["grover"], "n_grid": [4], "k_grid": [1], "trials": 0}, "trials"),
    ({"algorithms": ["grover"], "n_grid": [4], "k_grid": [1], "backend": "gpu"}, "backend"),
    ({"algorithms": ["grover"], "n_grid": [4], "k_grid": [1], "colour": 1}, "colour"),
    ({"n_grid": [4], "k_grid": [1]}, "algorithms"),
])
def test_config_errors_name_key(doc, key):
    with pytest.raises(bench.ConfigError) as info:
        bench.config_from_dict(doc)
    assert info.value.key == key


def test_load_config_reports_position(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text('{\n  "algorithms": ["grover"],\n  "n_grid": [4,]\n}\n')
    with pytest.raises(bench.ConfigError, match="line 3"):
        bench.load_config(path)


def test_bundled_config_loads():
    from importlib import resources
    cfg = bench.load_config(resources.files("qkmin") / "data" / "scaling.cfg")
    assert set(cfg.algorithms) == {"kmin-prop", "kmin-conv"}
    assert cfg.n_grid == [2 ** e for e in range(8, 15)]


def test_sweep_bytes_identical_across_threads():
    cfg = small_config()
    one = bench.format_csv(bench.run_sweep(cfg, threads=1))
    three = bench.format_csv(bench.run_sweep(cfg, threads=3))
    assert one == three


def test_scaling_slopes_keys():
    stats = [bench.CellStats("kmin-prop", "analytic", "permutation", N, k, 0, 1, 1.0,
                             float(math.sqrt(N * k)), 0.0, 0.0, None, 0.0)
             for N in (64, 128, 256, 512) for k in (1, 2, 4, 8)]
    slopes = bench.scaling_slopes(stats, "kmin-prop")
    assert slopes["N@k=2"][0] == pytest.approx(0.5)
    assert slopes["k@N=256"][0] == pytest.approx(0.5)
    assert bench.summary_table(stats).count("kmin-prop") == 16
