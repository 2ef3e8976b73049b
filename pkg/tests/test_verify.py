import math
import time

import pytest

from qkmin import cli, sim, verify


def test_quick_suites_pass_fast():
    start = time.perf_counter()
    results = verify.run_all(quick=True)
    assert time.perf_counter() - start < 60
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_diffusion_sign_fault_detected(monkeypatch, capsys):
    # sign slip on the mean term: -2<a> - a instead of 2<a> - a
    monkeypatch.setattr(sim, "diffusion", lambda amps: -2.0 * amps.mean() - amps)
    assert not verify.backend_equivalence(quick=True).passed
    assert cli.main(["verify", "--quick"]) == 2
    assert "FAIL  backend-equivalence" in capsys.readouterr().out


def test_global_sign_flip_is_invisible(monkeypatch):
    # negating the whole diffusion output is a global phase, so nothing observable changes
    monkeypatch.setattr(sim, "diffusion", lambda amps: amps - 2.0 * amps.mean())
    assert verify.backend_equivalence(quick=True).passed


def test_dropped_phase_flip_detected(monkeypatch):
    monkeypatch.setattr(sim, "apply_oracle_phase", lambda state, oracle: state)
    assert not verify.backend_equivalence(quick=True).passed


@pytest.mark.parametrize("k", [2, 3, 10, 100, 10 ** 4, 10 ** 6])
def test_sum_bound_strict(k):
    assert verify.harmonic_sqrt_sum(k) < 2 * math.sqrt(k) - 1


def test_sum_bound_equality_at_one():
    assert verify.harmonic_sqrt_sum(1) == 2 * math.sqrt(1) - 1 == 1.0


def test_harmonic_sum_against_direct_loop():
    direct = math.fsum(1 / math.sqrt(t) for t in range(1, 1001))
    assert verify.harmonic_sqrt_sum(1000) == pytest.approx(direct, rel=1e-14)
