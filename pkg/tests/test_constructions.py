import math

import numpy as np
import pytest

from maxorder.constructions import (
    ChampionScheduleError,
    ResourceCeilingError,
    ScheduleCeilingError,
    build_champion,
    build_counterexample,
    build_phi_champion,
    champion_series,
    counterexample_scan,
    default_schedule,
    empirical_scan,
    height_probes,
    max_exponent,
    scan_ratios,
    unbounded_witness,
)
from maxorder.divisors import builtin_system, pathological_two_power_system
from maxorder.extremal import EXP_GAMMA, EXP_MINUS_GAMMA, PrimeSetFilter
from maxorder.functions import constant_one, id_over_phi, sigma_over_id
from maxorder.primes import factorize

SIGMA = sigma_over_id(builtin_system("standard"))


def brute_sigma(n):
    return sum(d for d in range(1, n + 1) if n % d == 0)


def test_max_exponent():
    assert max_exponent(2, 1024) == 10
    assert max_exponent(2, 1023) == 9
    assert max_exponent(7, 6) == 0


def test_scan_matches_brute_force():
    r = scan_ratios(SIGMA, 3000)
    assert np.isnan(r[:16]).all()
    for n in range(16, 3001):
        want = brute_sigma(n) / n / math.log(math.log(n))
        assert r[n] == pytest.approx(want, rel=1e-12)


def test_scan_records_frozen():
    recs = empirical_scan(SIGMA, 10**5)
    assert [r.n for r in recs] == [16, 18, 24]
    assert recs[-1].ratio == pytest.approx(2.1621266211826424, rel=1e-12)
    assert scan_ratios(SIGMA, 100)[60] == pytest.approx(1.98637, abs=5e-6)


def test_scan_constant_one():
    recs = empirical_scan(constant_one(), 1000)
    assert [r.n for r in recs] == [16]


def test_superabundant_exponents_non_increasing():
    # records of sigma(n)/n have non-increasing exponents over consecutive primes
    vals = [brute_sigma(n) / n for n in range(1, 5001)]
    best = 0.0
    records = []
    for n, v in enumerate(vals, start=1):
        if v > best:
            best = v
            records.append(n)
    assert records[:8] == [1, 2, 4, 6, 12, 24, 36, 48]
    for n in records:
        f = factorize(n)
        exps = [f.exponent(p) for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43)]
        assert all(a >= b for a, b in zip(exps, exps[1:])), n


def test_empirical_scan_limits():
    with pytest.raises(ValueError):
        empirical_scan(SIGMA, 10**7 + 1)


def test_default_schedule_shape():
    s = default_schedule(SIGMA, 1000, P=3)
    assert s.exponents[0] == max_exponent(2, 1000)
    assert all(e >= 1 for e in s.exponents)


def test_champion_ratios_approach_constant():
    pts = champion_series(SIGMA, [10**3, 10**4, 10**5], eps=1e-2)
    devs = [p.deviation for p in pts]
    assert all(a > b for a, b in zip(devs, devs[1:]))
    assert all(p.ratio < 1.02 * EXP_GAMMA for p in pts)
    assert pts[-1].target == pytest.approx(EXP_GAMMA, rel=1e-6)


def test_champion_tail_violation():
    with pytest.raises(ChampionScheduleError):
        build_champion(SIGMA, 10**4, P=2, eps=1e-6)


def test_phi_champion():
    pt = build_phi_champion(builtin_system("standard"), 10**5, target=EXP_MINUS_GAMMA)
    assert pt.kind == "minimal"
    assert abs(pt.ratio / EXP_MINUS_GAMMA - 1) < 0.01


def test_counterexample_partial_schedule():
    S = PrimeSetFilter.residue_class(4, 3)
    with pytest.raises(ScheduleCeilingError) as info:
        build_counterexample(S, 8, 10**6)
    cf = info.value.partial
    assert [(q.j, q.p, q.nu) for q in cf.schedule] == [(1, 3, 1)]
    assert all(q.g_at_log_q >= q.j**q.j for q in cf.schedule)


def test_counterexample_values():
    S = PrimeSetFilter.residue_class(4, 3)
    cf = build_counterexample(S, 1, 10**5)
    assert cf.value_at(3, 1) == 1.0
    assert cf.value_at(5, 2) == pytest.approx(1.2)
    assert cf.value_at(7, 1) == 1.0
    lit = build_counterexample(S, 1, 10**5, literal_base=True)
    assert lit.value_at(7, 1) == pytest.approx(8 / 7)


def test_counterexample_rejects_thin_set():
    with pytest.raises(ValueError):
        build_counterexample(PrimeSetFilter.finite([3]), 2, 1000)


def test_counterexample_probes():
    S = PrimeSetFilter.residue_class(4, 3)
    cf = build_counterexample(S, 1, 10**6)
    rep = counterexample_scan(cf, height_probes(cf, [1e2, 1e3, 1e4]))
    assert rep.factorial_bound_ok and rep.free_part_ok
    assert rep.heights_non_increasing


def test_unbounded_witness():
    s = pathological_two_power_system([2**k for k in range(1, 21)])
    f = id_over_phi(s)
    w = unbounded_witness(f, PrimeSetFilter.finite([2]), 10 * EXP_GAMMA)
    assert w.ratio >= 10 * EXP_GAMMA
    assert w.x <= 10**6


@pytest.mark.parametrize("kind", ["standard", "unitary", "exponential"])
def test_champion_deviation_decreases_for_sigma_types(kind):
    f = sigma_over_id(builtin_system(kind))
    pts = champion_series(f, [10**4, 10**5, 10**6], eps=1e-2)
    devs = [p.deviation for p in pts]
    assert all(a > b for a, b in zip(devs, devs[1:]))


def test_exponential_champion_uses_square_exponents():
    f = sigma_over_id(builtin_system("exponential"))
    s = default_schedule(f, 10**4)
    # nu = 2 is kept above sqrt(x), where f(p) = 1 would lose a factor 1 + 1/p
    assert s.exponent(9973) == 2
    assert s.exponent(101) == 2


def test_unitary_phi_champion_target():
    pt = build_phi_champion(builtin_system("unitary"), 10**6, target=EXP_MINUS_GAMMA)
    assert abs(pt.ratio / EXP_MINUS_GAMMA - 1) < 0.01


def test_witness_ceiling_reports_best():
    s = pathological_two_power_system([2, 4, 8])
    with pytest.raises(ResourceCeilingError) as info:
        unbounded_witness(id_over_phi(s), PrimeSetFilter.finite([2]), 1e6, x_max=10**4)
    assert info.value.best.ratio > 1.0


def test_counterexample_empty_set():
    with pytest.raises(ValueError):
        build_counterexample(PrimeSetFilter.residue_class(4, 3), 1, 2)
