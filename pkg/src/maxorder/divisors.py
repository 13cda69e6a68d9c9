"""Multiplicative divisor systems described by admissible exponent sets.

A system A is fixed by the sets AE_p(nu) = {delta : p^delta in A(p^nu)}; for a
multiplicative system A(n) is the elementwise product of the prime-local
pieces.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Iterable, Mapping

from .primes import ONE, Factored, divisors_of, factorize

Rule = Callable[[int, int], Iterable[int]]


class ContractError(ValueError):
    """An operation was called outside its documented preconditions."""


class InvalidSystemError(ValueError):
    """A divisor-system rule returned an out-of-range or unnormalized set."""


@dataclass(eq=False)
class DivisorSystem:
    name: str
    rule: Rule
    claims_multiplicative: bool = True
    kind: str = "custom"
    # The definer's own A(n) on plain integers, for systems that are not
    # given prime-locally; only check_multiplicative looks at it.
    members: Callable[[int], Iterable[int]] | None = None
    params: dict = field(default_factory=dict)
    _phi_cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def admissible(self, p: int, nu: int) -> frozenset[int]:
        if nu == 0:
            got = frozenset(self.rule(p, 0))
            if got != {0}:
                raise InvalidSystemError(
                    f"system {self.name!r}: AE_{p}(0) must be {{0}}, got {sorted(got)}"
                )
            return got
        got = frozenset(int(d) for d in self.rule(p, nu))
        bad = [d for d in got if d < 0 or d > nu]
        if bad:
            raise InvalidSystemError(
                f"system {self.name!r}: AE_{p}({nu}) contains out-of-range {sorted(bad)}"
            )
        return got

    def solvable_at(self, p: int, nu: int) -> bool:
        return nu in self.admissible(p, nu)

    def __repr__(self) -> str:
        return f"DivisorSystem({self.name!r})"


def _standard(p: int, nu: int) -> range:
    return range(nu + 1)


def _unitary(p: int, nu: int) -> tuple[int, ...]:
    return (0,) if nu == 0 else (0, nu)


def _exponential(p: int, nu: int) -> list[int]:
    if nu == 0:
        return [0]
    return [d for d in range(1, nu + 1) if nu % d == 0]


_BUILTINS = {"standard": _standard, "unitary": _unitary, "exponential": _exponential}


def builtin_system(kind: str) -> DivisorSystem:
    try:
        rule = _BUILTINS[kind]
    except KeyError:
        raise ValueError(f"unknown builtin system {kind!r}; expected one of {sorted(_BUILTINS)}")
    return DivisorSystem(name=kind, rule=rule, kind=kind)


def pathological_two_power_system(N: Iterable[int] | Callable[[int], bool]) -> DivisorSystem:
    """Standard at odd primes; at 2, AE_2(n) is {0..n} for n in N and {n} otherwise.

    ``N`` is a finite strictly increasing collection of positive integers or a
    membership predicate for an infinite one.
    """
    if callable(N):
        member = N
        listed = None
    else:
        listed = tuple(int(n) for n in N)
        if not listed:
            raise ValueError("N must be nonempty")
        if any(b <= a for a, b in zip(listed, listed[1:])) or listed[0] < 1:
            raise ValueError("N must be a strictly increasing set of positive integers")
        lookup = frozenset(listed)
        member = lookup.__contains__

    def rule(p: int, nu: int):
        if p != 2 or nu == 0:
            return range(nu + 1)
        return range(nu + 1) if member(nu) else (nu,)

    return DivisorSystem(name="pathological", rule=rule, kind="pathological",
                         params={"N": listed, "member": member})


def table_system(name: str, table: Mapping[tuple[int, int], Iterable[int]],
                 fallback: str = "standard") -> DivisorSystem:
    """Explicit AE table {(p, nu): set}; entries not listed come from a builtin."""
    frozen = {(int(p), int(nu)): tuple(sorted(set(v))) for (p, nu), v in table.items()}
    base = _BUILTINS[fallback]

    def rule(p: int, nu: int):
        return frozen.get((p, nu), base(p, nu))

    return DivisorSystem(name=name, rule=rule, kind="table",
                         params={"table": frozen, "fallback": fallback})


def a_divisors(system: DivisorSystem, n: Factored) -> list[Factored]:
    """A(n) as the product of prime-local exponent choices, lexicographic order."""
    if not system.claims_multiplicative:
        raise ContractError(
            f"a_divisors needs a multiplicative system; {system.name!r} does not claim it"
        )
    choices = [sorted(system.admissible(p, nu)) for p, nu in n.factors]
    ps = n.primes()
    out = []
    for exps in itertools.product(*choices):
        out.append(Factored(tuple((p, e) for p, e in zip(ps, exps) if e)))
    return out


@dataclass(frozen=True)
class SystemWitness:
    verdict: str  # "multiplicative-up-to-bound" | "violated"
    bound: int
    violation: tuple[int, int, int] | None = None

    @property
    def ok(self) -> bool:
        return self.verdict == "multiplicative-up-to-bound"


def _direct_members(system: DivisorSystem, n: int) -> frozenset[int]:
    if system.members is not None:
        return frozenset(int(d) for d in system.members(n))
    fn = factorize(n)
    allowed = {p: system.admissible(p, nu) for p, nu in fn.factors}
    again = {p: system.admissible(p, nu) for p, nu in fn.factors}
    if allowed != again:
        raise InvalidSystemError(f"system {system.name!r} rule is not deterministic at n={n}")
    out = set()
    for d in divisors_of(fn):
        if all(d.exponent(p) in allowed[p] for p in fn.primes()):
            out.add(d.value)
    return frozenset(out)


def check_multiplicative(system: DivisorSystem, bound: int) -> SystemWitness:
    """Test A(n1 n2) == A(n1) A(n2) for every coprime pair with n1 n2 <= bound.

    Reports the first violation in (n1, n2) order as (n1, n2, d) where d lies
    in exactly one of the two sides.
    """
    if bound > 10**4:
        raise ContractError("check_multiplicative bound must be <= 10**4")
    cache: dict[int, frozenset[int]] = {}

    def A(n: int) -> frozenset[int]:
        if n not in cache:
            cache[n] = _direct_members(system, n)
        return cache[n]

    if A(1) != {1}:
        return SystemWitness("violated", bound, (1, 1, min(A(1) ^ {1})))
    for n1 in range(2, bound + 1):
        for n2 in range(n1 + 1, bound // n1 + 1):
            if gcd(n1, n2) != 1:
                continue
            left = A(n1 * n2)
            right = frozenset(a * b for a in A(n1) for b in A(n2))
            if left != right:
                return SystemWitness("violated", bound, (n1, n2, min(left ^ right)))
    return SystemWitness("multiplicative-up-to-bound", bound)


def convolve_at(system: DivisorSystem, f, g, n: Factored) -> float:
    """(f *_A g)(n) = sum over d in A(n) of f(d) g(n/d)."""
    from .functions import evaluate

    return sum(evaluate(f, d) * evaluate(g, n.quotient(d)) for d in a_divisors(system, n))


__all__ = [
    "ONE", "ContractError", "DivisorSystem", "InvalidSystemError", "SystemWitness",
    "a_divisors", "builtin_system", "check_multiplicative", "convolve_at",
    "pathological_two_power_system", "table_system",
]
