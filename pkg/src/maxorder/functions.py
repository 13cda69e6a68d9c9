"""Multiplicative functions given by prime-power values, sigma_A and phi_A."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .divisors import DivisorSystem
from .primes import Factored, factorize, mobius

BIG = 1e100


class Unsolvable(ValueError):
    """sum_{d in A(n)} phi_A(d) = n has no solution: nu is missing from AE_p(nu)."""

    def __init__(self, system: DivisorSystem, p: int, nu: int):
        super().__init__(
            f"phi_A undefined for system {system.name!r}: {nu} not in AE_{p}({nu})"
        )
        self.system = system
        self.p = p
        self.nu = nu


@dataclass(frozen=True)
class RhoHint:
    """Closed-form sup_nu f(p^nu).

    ``value(p)`` may return ``math.inf`` or ``None`` (unknown at that prime,
    fall back to scanning). ``attained_at(p)`` gives an exponent where the sup
    is reached, or ``None`` if it is only a limit.
    """

    value: Callable[[int], float | None]
    attained_at: Callable[[int], int | None] = lambda p: None


@dataclass(frozen=True)
class TailEnvelope:
    """|(1 - 1/p) rho(p) - 1| <= C / p**2 for every prime p > p0."""

    C: float
    p0: int = 2
    # hypothesis the envelope relies on beyond the audited range, if any
    assumes: str | None = None


@dataclass(eq=False)
class MultFn:
    name: str
    value_at: Callable[[int, int], float]
    rho_hint: RhoHint | None = None
    envelope: TailEnvelope | None = None
    log_value_at: Callable[[int, int], float] | None = None
    # analytic upper bound for rho(p), used to bracket scan-bounded values
    rho_ceiling: Callable[[int], float] | None = None
    # values are non-increasing in nu from this exponent on
    monotone_from: int | None = None
    sigma_system: DivisorSystem | None = None
    phi_system: DivisorSystem | None = None
    meta: dict = field(default_factory=dict)

    def at(self, p: int, nu: int) -> float:
        if nu == 0:
            return 1.0
        return self.value_at(p, nu)

    def log_at(self, p: int, nu: int) -> float:
        if nu == 0:
            return 0.0
        if self.log_value_at is not None:
            return self.log_value_at(p, nu)
        v = self.value_at(p, nu)
        return math.log(v) if v > 0 else -math.inf

    def __repr__(self) -> str:
        return f"MultFn({self.name!r})"


def evaluate(f: MultFn, n: Factored) -> float:
    vals = [f.at(p, v) for p, v in n.factors]
    if any(v > BIG for v in vals):
        lv = log_evaluate(f, n)
        return math.exp(lv) if lv < 709.7 else math.inf
    out = 1.0
    for v in vals:
        out *= v
    return out


def log_evaluate(f: MultFn, n: Factored) -> float:
    return math.fsum(f.log_at(p, v) for p, v in n.factors)


def table_function(name: str, table: dict[tuple[int, int], float],
                   default: float | Callable[[int, int], float] = 1.0) -> MultFn:
    """A user function from explicit prime-power values; carries no rho metadata.

    Unlisted prime powers take ``default``, a constant or a rule (p, nu) -> value.
    """
    frozen = {(int(p), int(nu)): float(v) for (p, nu), v in table.items()}
    for (p, nu), v in frozen.items():
        if nu == 0 and v != 1.0:
            raise ValueError(f"f({p}^0) must be 1, got {v}")
        if v < 0 or not math.isfinite(v):
            raise ValueError(f"f({p}^{nu}) must be finite and nonnegative, got {v}")
    rule = default if callable(default) else (lambda p, nu, d=float(default): d)

    def value_at(p: int, nu: int) -> float:
        v = frozen.get((p, nu))
        return rule(p, nu) if v is None else v

    return MultFn(name=name, value_at=value_at, meta={"table": frozen, "default": default})


def constant_one() -> MultFn:
    return MultFn(name="one", value_at=lambda p, nu: 1.0,
                  rho_hint=RhoHint(lambda p: 1.0, lambda p: 0),
                  envelope=TailEnvelope(0.0))


def identity() -> MultFn:
    return MultFn(name="id", value_at=lambda p, nu: float(p) ** nu,
                  log_value_at=lambda p, nu: nu * math.log(p),
                  rho_hint=RhoHint(lambda p: math.inf))


# --- sigma_A -----------------------------------------------------------------

def sigma_a(system: DivisorSystem, n: Factored) -> int:
    out = 1
    for p, nu in n.factors:
        out *= sum(p**d for d in system.admissible(p, nu))
    return out


def _sigma_local(system: DivisorSystem, p: int, nu: int) -> float:
    fp = float(p)
    return math.fsum(fp ** (d - nu) for d in system.admissible(p, nu))


def sigma_over_id(system: DivisorSystem) -> MultFn:
    """f(n) = sigma_A(n) / n."""
    kind = system.kind
    hint = None
    envelope = TailEnvelope(1.0, 2, assumes="p^e, p^(e-1) in A(p^e) for some e at every prime")
    if kind == "standard":
        hint = RhoHint(lambda p: p / (p - 1))
        envelope = TailEnvelope(0.0)
    elif kind in ("unitary", "exponential"):
        e = 1 if kind == "unitary" else 2
        hint = RhoHint(lambda p: 1.0 + 1.0 / p, lambda p, e=e: e)
        envelope = TailEnvelope(1.0)
    elif kind == "pathological":
        # standard away from 2, so every tail factor is exactly 1
        hint = RhoHint(lambda p: p / (p - 1) if p != 2 else None)
        envelope = TailEnvelope(0.0)
    return MultFn(
        name=f"sigma_{system.name}/id",
        value_at=lambda p, nu: _sigma_local(system, p, nu),
        rho_hint=hint,
        envelope=envelope,
        rho_ceiling=lambda p: p / (p - 1),
        sigma_system=system,
    )


# --- phi_A -------------------------------------------------------------------

@dataclass(frozen=True)
class PhiTable:
    system: DivisorSystem
    p: int
    values: tuple[int, ...]

    def __getitem__(self, nu: int) -> int:
        return self.values[nu]

    @property
    def nu_max(self) -> int:
        return len(self.values) - 1

    def entries(self) -> dict[tuple[int, int], int]:
        return {(self.p, nu): v for nu, v in enumerate(self.values)}


def solve_phi(system: DivisorSystem, p: int, nu_max: int) -> PhiTable:
    """phi_A(p^nu) for 0 <= nu <= nu_max from
    phi_A(p^nu) = p^nu - sum_{delta in AE_p(nu), delta < nu} phi_A(p^delta).

    Tables are memoized per (system, p) and extended on demand.
    """
    if nu_max < 0:
        raise ValueError("nu_max must be nonnegative")
    with system._lock:
        entry = system._phi_cache.get(p)
        if entry is None:
            entry = system._phi_cache[p] = {"values": [1], "prefix": [1], "bad": None}
        values, prefix = entry["values"], entry["prefix"]
        if entry["bad"] is not None and entry["bad"] <= nu_max:
            raise Unsolvable(system, p, entry["bad"])
        for nu in range(len(values), nu_max + 1):
            ae = system.admissible(p, nu)
            if nu not in ae:
                entry["bad"] = nu
                raise Unsolvable(system, p, nu)
            if len(ae) == nu + 1:
                below = prefix[nu - 1]
            else:
                below = sum(values[d] for d in ae if d < nu)
            v = p**nu - below
            values.append(v)
            prefix.append(prefix[-1] + v)
        return PhiTable(system, p, tuple(values[: nu_max + 1]))


def phi_exponential_closed_form(p: int, nu: int) -> int:
    """sum over kappa | nu of mu(nu / kappa) p^kappa."""
    if nu < 1:
        raise ValueError("nu must be positive")
    return sum(mobius(nu // k) * p**k for k in range(1, nu + 1) if nu % k == 0)


def phi_a(system: DivisorSystem, n: Factored, tables: dict[int, PhiTable] | None = None) -> int:
    out = 1
    for p, nu in n.factors:
        t = tables.get(p) if tables is not None else None
        if t is None or t.nu_max < nu:
            t = solve_phi(system, p, nu)
            if tables is not None:
                tables[p] = t
        out *= t[nu]
    return out


def _ratio_float(num: int, den: int) -> float:
    try:
        return num / den
    except OverflowError:
        return math.inf


def id_over_phi(system: DivisorSystem) -> MultFn:
    """f(n) = n / phi_A(n); its minimal-order constant is e^-gamma / R(f)."""
    kind = system.kind

    def value(p: int, nu: int) -> float:
        return _ratio_float(p**nu, solve_phi(system, p, nu)[nu])

    def log_value(p: int, nu: int) -> float:
        return nu * math.log(p) - math.log(solve_phi(system, p, nu)[nu])

    hint = None
    envelope = TailEnvelope(3.0, 2, assumes="p^(e-1) in A(p^e) for some e at every odd prime")
    if kind in ("standard", "unitary", "exponential"):
        e = 2 if kind == "exponential" else 1
        hint = RhoHint(lambda p: p / (p - 1), lambda p, e=e: e)
        envelope = TailEnvelope(0.0)
    elif kind == "pathological":
        listed = system.params["N"]
        if listed is not None:
            gaps = [b - a for a, b in zip((0,) + listed, listed)]
            top = max(gaps)
            where = listed[gaps.index(top)]
            # 2^top is finite but may exceed the float range
            rho2 = (2.0**top if top < 1024 else math.inf, where)
        else:
            rho2 = (None, None)

        def rv(p, rho2=rho2):
            return rho2[0] if p == 2 else p / (p - 1)

        def ra(p, rho2=rho2):
            return rho2[1] if p == 2 else 1

        hint = RhoHint(rv, ra)
        envelope = TailEnvelope(0.0)

    return MultFn(
        name=f"id/phi_{system.name}",
        value_at=value,
        log_value_at=log_value,
        rho_hint=hint,
        envelope=envelope,
        rho_ceiling=lambda p: (p - 1) / (p - 2) if p > 2 else math.inf,
        phi_system=system,
    )


@dataclass(frozen=True)
class PhiBoundsReport:
    p: int
    nu_max: int
    passed: bool
    max_ratio: float
    upper_bound: float
    upper_margin: float
    e_p: int | None
    lower_ratio: float | None
    lower_bound: float
    lower_margin: float | None
    rho_source: str
    failures: tuple[str, ...] = ()


def phi_bounds_check(system: DivisorSystem, p: int, nu_max: int) -> PhiBoundsReport:
    """Audit p^nu / phi_A(p^nu) < (p-1)/(p-2) for nu <= nu_max and, at the
    smallest e with e-1 in AE_p(e), f(p^e)/rho(p) >= p(p-2)/(p^2-2p+2).

    Exact rational arithmetic throughout.
    """
    if p <= 2:
        raise ValueError("phi_bounds_check needs an odd prime")
    table = solve_phi(system, p, nu_max)
    upper = Fraction(p - 1, p - 2)
    ratios = [Fraction(p**nu, table[nu]) for nu in range(nu_max + 1)]
    failures = []
    for nu, r in enumerate(ratios):
        if not r < upper:
            failures.append(f"nu={nu}: p^nu/phi = {float(r)} >= {float(upper)}")
    max_ratio = max(ratios)

    f = id_over_phi(system)
    rho: Fraction
    source = "scan"
    if f.rho_hint is not None and f.rho_hint.value(p) is not None:
        at = f.rho_hint.attained_at(p)
        if at is not None:
            t = solve_phi(system, p, at)
            rho = Fraction(p**at, t[at])
        else:
            rho = Fraction(f.rho_hint.value(p))
        source = "hint"
    else:
        rho = max_ratio

    lower_bound = Fraction(p * (p - 2), p * p - 2 * p + 2)
    e_p = next((e for e in range(1, nu_max + 1) if e - 1 in system.admissible(p, e)), None)
    lower_ratio = lower_margin = None
    if e_p is not None:
        lr = ratios[e_p] / rho
        if lr < lower_bound:
            failures.append(f"e_p={e_p}: f(p^e)/rho = {float(lr)} < {float(lower_bound)}")
        lower_ratio = float(lr)
        lower_margin = float(lr - lower_bound)
    return PhiBoundsReport(
        p=p, nu_max=nu_max, passed=not failures,
        max_ratio=float(max_ratio), upper_bound=float(upper),
        upper_margin=float(upper - max_ratio),
        e_p=e_p, lower_ratio=lower_ratio, lower_bound=float(lower_bound),
        lower_margin=lower_margin, rho_source=source, failures=tuple(failures),
    )


def phi_of(system: DivisorSystem, n: int) -> int:
    return phi_a(system, factorize(n))
