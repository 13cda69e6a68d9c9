import math
import random
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from maxorder.divisors import a_divisors, builtin_system, pathological_two_power_system, table_system
from maxorder.extremal import rho
from maxorder.functions import (
    Unsolvable,
    evaluate,
    id_over_phi,
    identity,
    log_evaluate,
    phi_a,
    phi_bounds_check,
    phi_exponential_closed_form,
    sigma_a,
    sigma_over_id,
    solve_phi,
    table_function,
)
from maxorder.primes import Factored, factor_range, factorize

BUILTINS = ("standard", "unitary", "exponential")


def members(system, n):
    return [d.value for d in a_divisors(system, factorize(n))]


def top_down_phi(system):
    """phi_A(n) = n - sum of phi_A(d) over proper d in A(n), on plain integers."""

    @lru_cache(maxsize=None)
    def phi(n):
        return n - sum(phi(d) for d in members(system, n) if d != n)

    return phi


def totient(n):
    return sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)


@pytest.mark.parametrize("kind", BUILTINS)
def test_sigma_matches_enumeration(kind):
    system = builtin_system(kind)
    for n in range(1, 5001):
        assert sigma_a(system, factorize(n)) == sum(members(system, n))


def test_sigma_small_values():
    n = factorize(12)
    assert [sigma_a(builtin_system(k), n) for k in BUILTINS] == [28, 20, 18]


@pytest.mark.parametrize("kind", BUILTINS)
def test_phi_matches_top_down_oracle(kind):
    system = builtin_system(kind)
    phi = top_down_phi(system)
    for n in range(1, 3001):
        assert phi_a(system, factorize(n)) == phi(n), n


def test_standard_phi_is_totient():
    system = builtin_system("standard")
    assert all(phi_a(system, factorize(n)) == totient(n) for n in range(1, 1001))


def test_unitary_phi_closed_form():
    system = builtin_system("unitary")
    for n in range(1, 2001):
        want = math.prod(p**v - 1 for p, v in factorize(n).factors)
        assert phi_a(system, factorize(n)) == want


def test_exponential_phi_values():
    assert solve_phi(builtin_system("exponential"), 2, 6).values == (1, 2, 2, 6, 12, 30, 54)


@pytest.mark.parametrize("p", [2, 3, 5, 7, 97])
def test_exponential_closed_form(p):
    t = solve_phi(builtin_system("exponential"), p, 30)
    assert all(t[nu] == phi_exponential_closed_form(p, nu) for nu in range(1, 31))


@pytest.mark.parametrize("kind", BUILTINS)
def test_reconstruction_identity(kind):
    system = builtin_system(kind)
    table = factor_range(3000)
    for n in range(1, 3001):
        assert sum(phi_a(system, d) for d in a_divisors(system, table[n])) == n


def test_pathological_small_table():
    s = pathological_two_power_system([2])
    assert solve_phi(s, 2, 3).values == (1, 2, 1, 8)


def test_unsolvable_reported_at_first_missing_exponent():
    s = table_system("gap", {(3, 4): (0, 1, 2), (3, 6): (0,)})
    with pytest.raises(Unsolvable) as info:
        solve_phi(s, 3, 10)
    assert (info.value.p, info.value.nu) == (3, 4)
    # a smaller request still succeeds
    assert solve_phi(s, 3, 3)[3] == 18
    with pytest.raises(Unsolvable):
        solve_phi(s, 3, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_random_solvable_systems_reconstruct(seed):
    rng = random.Random(seed)
    table = {}
    for p in (2, 3, 5):
        for nu in range(1, 9):
            table[(p, nu)] = [d for d in range(nu) if rng.random() < 0.5] + [nu]
    s = table_system("rand", table)
    for n in range(1, 400):
        fn = factorize(n)
        assert sum(phi_a(s, d) for d in a_divisors(s, fn)) == n


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=10**6), st.integers(min_value=1, max_value=10**6),
       st.sampled_from(BUILTINS))
def test_phi_and_sigma_multiplicative(a, b, kind):
    g = math.gcd(a, b)
    a //= g
    if math.gcd(a, b) != 1:
        return
    system = builtin_system(kind)
    fa, fb, fab = factorize(a), factorize(b), factorize(a * b)
    assert phi_a(system, fab) == phi_a(system, fa) * phi_a(system, fb)
    assert sigma_a(system, fab) == sigma_a(system, fa) * sigma_a(system, fb)


@pytest.mark.parametrize("kind", BUILTINS)
def test_sigma_rho_hint_is_supremum(kind):
    f = sigma_over_id(builtin_system(kind))
    for p in (2, 3, 5, 101):
        r = rho(f, p).value
        scanned = max(f.at(p, nu) for nu in range(0, 200))
        assert scanned <= r * (1 + 1e-15)
        assert scanned == pytest.approx(r, rel=1e-12)


def test_sigma_rho_values():
    assert rho(sigma_over_id(builtin_system("standard")), 3).value == pytest.approx(1.5)
    assert rho(sigma_over_id(builtin_system("unitary")), 3).value == pytest.approx(4 / 3)
    assert rho(sigma_over_id(builtin_system("exponential")), 3).value == pytest.approx(4 / 3)


@pytest.mark.parametrize("kind", BUILTINS)
def test_phi_rho_hint_is_supremum(kind):
    f = id_over_phi(builtin_system(kind))
    for p in (2, 3, 5, 31):
        r = rho(f, p).value
        assert max(f.at(p, nu) for nu in range(0, 60)) == pytest.approx(r, rel=1e-15)


def test_pathological_rho_at_two():
    s = pathological_two_power_system([2**k for k in range(1, 6)])
    f = id_over_phi(s)
    # largest gap in N is 16 -> 32
    assert rho(f, 2).value == 2.0**16
    assert max(f.at(2, nu) for nu in range(40)) == 2.0**16


def test_evaluate_log_space():
    f = identity()
    n = Factored.of({2: 400, 3: 300})
    assert log_evaluate(f, n) == pytest.approx(400 * math.log(2) + 300 * math.log(3))
    assert evaluate(f, n) == pytest.approx(2.0**400 * 3.0**300, rel=1e-12)
    assert evaluate(f, Factored.of({2: 800, 3: 600})) == math.inf
    assert evaluate(f, factorize(360)) == 360.0


def test_table_function():
    f = table_function("t", {(2, 1): 3.0}, default=lambda p, nu: 1.0 + 1.0 / p)
    assert f.at(2, 1) == 3.0 and f.at(3, 1) == pytest.approx(4 / 3) and f.at(5, 0) == 1.0
    with pytest.raises(ValueError):
        table_function("bad", {(2, 1): -1.0})


@pytest.mark.parametrize("kind", BUILTINS)
def test_phi_bounds(kind):
    for p in (3, 5, 7, 11, 97):
        rep = phi_bounds_check(builtin_system(kind), p, 30)
        assert rep.passed, rep.failures
        assert rep.e_p is not None


def test_phi_bounds_rejects_two():
    with pytest.raises(ValueError):
        phi_bounds_check(builtin_system("standard"), 2, 5)
