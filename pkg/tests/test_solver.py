import math

import pytest
from mpmath import mp

from conftest import oracle_ps_members, oracle_sieve
from pslab.context import PSContext, ValidationError
from pslab.solver import SearchTask, exceptional_scan, find_solutions

CTX = PSContext(gamma=0.95, c=1.2)


def test_task_validation():
    with pytest.raises(ValidationError):
        SearchTask(N=100.0, s=7, epsilon=0.1)
    with pytest.raises(ValidationError):
        SearchTask(N=100.0, s=2, epsilon=-1.0)
    with pytest.raises(ValidationError):
        SearchTask(N=100.0, s=2, epsilon=0.1, mode="some")
    with pytest.raises(ValidationError):
        SearchTask(N=-5.0, s=2, epsilon=0.1)


def test_count_matches_brute_force():
    task = SearchTask(N=3000.0, s=2, epsilon=0.1)
    lo, hi = task.range_bounds(CTX)
    flags = oracle_sieve(math.floor(hi))
    members = oracle_ps_members(math.floor(hi), 0.95)
    primes = sorted(p for p in members if p > lo and flags[p])
    with mp.workprec(150):
        powers = {p: mp.mpf(p) ** mp.mpf(1.2) for p in primes}
        want = sum(
            1
            for p in primes
            for q in primes
            if abs(powers[p] + powers[q] - 3000) < mp.mpf("0.1")
        )
    assert find_solutions(task, CTX) == want


def test_modes_agree():
    task_c = SearchTask(N=3000.0, s=2, epsilon=0.3, mode="count")
    task_a = SearchTask(N=3000.0, s=2, epsilon=0.3, mode="all")
    task_f = SearchTask(N=3000.0, s=2, epsilon=0.3, mode="first")
    n = find_solutions(task_c, CTX)
    sols = find_solutions(task_a, CTX)
    assert len(sols) == n
    for sol in sols:
        assert abs(sol.defect) < 0.3
        assert sol.weight == pytest.approx(math.prod(math.log(p) for p in sol.primes))
    first = find_solutions(task_f, CTX)
    assert len(first) == (1 if n else 0)


def test_explicit_range_and_empty_result():
    # a window with no Piatetski-Shapiro primes yields no solutions
    task = SearchTask(N=50.0, s=2, epsilon=1e-9, prime_floor=2.0, prime_ceiling=3.0)
    assert find_solutions(task, CTX) == 0


def test_exceptional_scan_shape_and_determinism():
    frac1, hist1 = exceptional_scan(10_000.0, 200, CTX, seed=5)
    frac2, hist2 = exceptional_scan(10_000.0, 200, CTX, seed=5)
    assert frac1 == frac2 and hist1 == hist2
    assert 0.0 <= frac1 <= 1.0
    assert sum(hist1["counts"]) <= 200
    with pytest.raises(ValidationError):
        exceptional_scan(10_000.0, 10, CTX)
