"""rho(p), the Euler product R = prod (1 - 1/p) rho(p) with certified tails,
and the maximal/minimal order constants built from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .divisors import ContractError, DivisorSystem
from .functions import MultFn, Unsolvable, id_over_phi, solve_phi
from .primes import primes_up_to

# e^gamma and 6/pi^2, embedded to double precision
EXP_GAMMA = 1.7810724179901979852
EXP_MINUS_GAMMA = 0.56145948356688516982
SIX_OVER_PI2 = 0.60792710185402662866
FLOAT_SLACK = 1e-10

ROUTES = ("unconditional-convergence", "small-excess")


class InfiniteLocalFactor(ArithmeticError):
    def __init__(self, p: int):
        super().__init__(f"rho({p}) is infinite; local factor undefined")
        self.p = p


class HypothesisViolation(ValueError):
    def __init__(self, p: int, inequality: str):
        super().__init__(f"hypothesis fails at p={p}: {inequality}")
        self.p = p
        self.inequality = inequality


@dataclass(frozen=True)
class RhoEstimate:
    p: int
    value: float
    attained_at: int | None
    status: str  # "exact" | "scan-bounded"
    source: str = "scan"  # "hint" | "monotone" | "scan"

    @property
    def exact(self) -> bool:
        return self.status == "exact"


@dataclass(frozen=True)
class ProductEstimate:
    lower: float
    upper: float
    cutoff: int
    tail_source: str  # "envelope" | "exact-hint" | "none"
    certified: bool = True
    notes: tuple[str, ...] = ()
    audit: dict | None = None

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"empty enclosure [{self.lower}, {self.upper}]")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        if math.isinf(self.upper):
            return math.inf
        return 0.5 * (self.lower + self.upper)

    def scaled(self, lo: float, hi: float | None = None) -> "ProductEstimate":
        """Multiply by a nonnegative interval [lo, hi]."""
        hi = lo if hi is None else hi
        return replace(self, lower=_mul(self.lower, lo), upper=_mul(self.upper, hi))

    def reciprocal(self) -> "ProductEstimate":
        lo = 0.0 if math.isinf(self.upper) else (math.inf if self.upper == 0 else 1.0 / self.upper)
        hi = math.inf if self.lower == 0 else 1.0 / self.lower
        return replace(self, lower=lo, upper=hi)

    def to_dict(self) -> dict:
        return {
            "lower": _json_float(self.lower),
            "upper": _json_float(self.upper),
            "cutoff": self.cutoff,
            "tail_source": self.tail_source,
            "certified": self.certified,
            "notes": list(self.notes),
        }


def _mul(a: float, b: float) -> float:
    if a == 0 or b == 0:
        return 0.0
    return a * b


def _json_float(v: float):
    return "inf" if math.isinf(v) else v


@dataclass(frozen=True)
class PrimeSetFilter:
    """A set S of primes given by a membership rule.

    ``members`` lists S exactly when it is finite. ``reciprocal_tail(x)``, if
    given, bounds sum_{p in S, p > x} 1/p.
    """

    membership: Callable[[int], bool]
    declared_thin: bool
    members: tuple[int, ...] | None = None
    reciprocal_tail: Callable[[int], float] | None = None
    label: str = "S"

    @classmethod
    def finite(cls, primes: Iterable[int], label: str | None = None) -> "PrimeSetFilter":
        ps = tuple(sorted(set(int(p) for p in primes)))
        look = frozenset(ps)
        return cls(look.__contains__, True, ps, lambda x: 0.0,
                   label or "{" + ",".join(map(str, ps)) + "}")

    @classmethod
    def residue_class(cls, modulus: int, residue: int) -> "PrimeSetFilter":
        # every such class with gcd(residue, modulus) = 1 has divergent sum 1/p
        return cls(lambda p: p % modulus == residue, False,
                   label=f"p = {residue} mod {modulus}")

    def __call__(self, p: int) -> bool:
        return bool(self.membership(p))

    def mask(self, primes: np.ndarray) -> np.ndarray:
        if self.members is not None:
            return np.isin(primes, np.asarray(self.members, dtype=np.int64))
        return np.fromiter((self.membership(int(p)) for p in primes), dtype=bool,
                           count=len(primes))


def rho(f: MultFn, p: int, scan_limit: int = 64) -> RhoEstimate:
    """sup over nu >= 0 of f(p^nu).

    A hint is trusted as exact. Otherwise the maximum over nu <= scan_limit is
    returned, exact only when f declares its values non-increasing from some
    exponent within the scanned range.
    """
    if scan_limit < 1:
        raise ValueError("scan_limit must be >= 1")
    if f.rho_hint is not None:
        v = f.rho_hint.value(p)
        if v is not None:
            return RhoEstimate(p, float(v), f.rho_hint.attained_at(p), "exact", "hint")
    best, where = 1.0, 0
    for nu in range(1, scan_limit + 1):
        v = f.at(p, nu)
        if v > best:
            best, where = v, nu
    exact = f.monotone_from is not None and f.monotone_from <= scan_limit
    if exact:
        return RhoEstimate(p, best, where, "exact", "monotone")
    return RhoEstimate(p, best, where, "scan-bounded", "scan")


def local_factor(f: MultFn, p: int, scan_limit: int = 64) -> float:
    r = rho(f, p, scan_limit)
    if math.isinf(r.value):
        raise InfiniteLocalFactor(p)
    return (1.0 - 1.0 / p) * r.value


def _local_bracket(f: MultFn, p: int, scan_limit: int) -> tuple[float, float, bool]:
    r = rho(f, p, scan_limit)
    if math.isinf(r.value):
        raise InfiniteLocalFactor(p)
    w = 1.0 - 1.0 / p
    if r.exact:
        v = w * r.value
        return v, v, True
    hi = f.rho_ceiling(p) if f.rho_ceiling is not None else math.inf
    return w * r.value, w * max(hi, r.value), False


def r_product(f: MultFn, cutoff: int, filter: PrimeSetFilter | None = None,
              scan_limit: int = 64, require_certified: bool = False) -> ProductEstimate:
    """Enclosure of prod over primes p not in S of (1 - 1/p) rho(p).

    Primes up to the cutoff (raised to the envelope threshold if needed) are
    multiplied out in log space; the rest is bounded by the tail envelope:
    |log(1 + c_p)| <= 2|c_p| <= 2C/p^2, and sum_{p > x} p^-2 <= 1/x.
    """
    env = f.envelope
    eff = cutoff
    if env is not None:
        eff = max(cutoff, env.p0, math.ceil(2 * env.C))
    ps = primes_up_to(eff).primes
    if filter is not None:
        ps = ps[~filter.mask(ps)]
    lo_logs, hi_logs = [], []
    lo_zero = hi_zero = False
    scanned = 0
    for p in ps.tolist():
        lo, hi, exact = _local_bracket(f, p, scan_limit)
        scanned += not exact
        if lo == 0:
            lo_zero = True
        else:
            lo_logs.append(math.log(lo))
        if hi == 0:
            hi_zero = True
        elif math.isinf(hi):
            hi_logs.append(math.inf)
        else:
            hi_logs.append(math.log(hi))
    lower = 0.0 if lo_zero else math.exp(math.fsum(lo_logs))
    if hi_zero:
        upper = 0.0
    elif any(math.isinf(v) for v in hi_logs):
        upper = math.inf
    else:
        upper = math.exp(math.fsum(hi_logs))

    notes = []
    if scanned:
        notes.append(f"rho scan-bounded at {scanned} primes")
    if env is not None:
        t = 2.0 * env.C / eff
        lower *= math.exp(-t)
        upper = upper * math.exp(t) if not math.isinf(upper) else upper
        source = "envelope" if env.C > 0 else "exact-hint"
        certified = not math.isinf(upper)
        if env.assumes:
            notes.append(f"tail assumes: {env.assumes}")
    else:
        source = "none"
        certified = False
        notes.append("uncertified: no tail envelope")
        if require_certified:
            lower, upper = 0.0, math.inf
    if len(ps):
        lower = max(0.0, lower - FLOAT_SLACK)
        upper = upper + FLOAT_SLACK
    return ProductEstimate(lower, upper, eff, source, certified, tuple(notes))


def excluded_prefactor(filter: PrimeSetFilter, cutoff: int) -> tuple[float, float, bool]:
    """Bracket for prod_{p in S} (1 - 1/p)."""
    ps = primes_up_to(cutoff).primes
    inside = ps[filter.mask(ps)].astype(np.float64)
    head = math.exp(math.fsum(np.log1p(-1.0 / inside).tolist())) if len(inside) else 1.0
    if filter.members is not None and (not filter.members or max(filter.members) <= cutoff):
        return head, head, True
    if filter.reciprocal_tail is not None:
        s = filter.reciprocal_tail(cutoff)
        # log(1 - 1/p) >= -2/p once p >= 2
        return head * math.exp(-2.0 * s), head, True
    return 0.0, head, False


def audit_upper_lower(f: MultFn, cutoff: int, filter: PrimeSetFilter | None = None,
                      scan_limit: int = 64, tol: float = 1e-12) -> dict:
    """Check rho(p) <= (1 - 1/p)^-1 and f(p^e) >= 1 + 1/p for some e, p <= cutoff."""
    ps = primes_up_to(cutoff).primes
    if filter is not None:
        ps = ps[~filter.mask(ps)]
    worst_rho = math.inf
    worst_e = math.inf
    exps: dict[int, int] = {}
    for p in ps.tolist():
        r = rho(f, p, scan_limit)
        margin = p / (p - 1) - r.value
        if margin < -tol * r.value:
            raise HypothesisViolation(p, f"rho(p) = {r.value} > (1 - 1/p)^-1 = {p / (p - 1)}")
        worst_rho = min(worst_rho, margin)
        need = 1.0 + 1.0 / p
        cand = [r.attained_at] if r.attained_at else []
        found = None
        for e in cand + list(range(1, scan_limit + 1)):
            v = f.at(p, e)
            if v >= need * (1 - tol):
                found = e
                worst_e = min(worst_e, v - need)
                break
        if found is None:
            raise HypothesisViolation(
                p, f"no e <= {scan_limit} with f(p^e) >= 1 + 1/p = {need}")
        if len(exps) < 32:
            exps[p] = found
    return {
        "checked_up_to": cutoff,
        "primes_checked": int(len(ps)),
        "min_rho_margin": worst_rho if len(ps) else None,
        "min_excess_margin": worst_e if len(ps) else None,
        "sample_exponents": {str(k): v for k, v in exps.items()},
    }


def maximal_order_constant(f: MultFn, cutoff: int, filter: PrimeSetFilter | None = None,
                           route: str = "unconditional-convergence", scan_limit: int = 64,
                           audit: bool = True) -> ProductEstimate:
    """Enclosure of e^gamma R (or e^gamma prod_{p in S}(1 - 1/p) R_S with a filter).

    ``route`` records which upper-bound hypothesis the caller asserts for the
    infinite product: unconditional convergence, or plain convergence together
    with rho(p) <= 1 + o(log p / p). Neither can be checked by finite
    computation.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    report = audit_upper_lower(f, cutoff, filter, scan_limit) if audit else None
    r = r_product(f, cutoff, filter, scan_limit)
    est = r.scaled(EXP_GAMMA)
    notes = list(r.notes)
    if filter is not None:
        lo, hi, ok = excluded_prefactor(filter, r.cutoff)
        est = est.scaled(lo, hi)
        if not filter.declared_thin:
            notes.append("excluded set not declared thin; restricted bound does not apply")
        if not ok:
            notes.append("excluded-set prefactor has no tail bound")
            est = replace(est, certified=False)
    notes.append(f"asserted upper-bound route: {route}")
    return replace(est, notes=tuple(notes), audit=report)


def minimal_order_constant_phi(system: DivisorSystem, cutoff: int,
                               scan_limit: int = 64,
                               audit_limit: int = 10**4) -> ProductEstimate:
    """Enclosure of liminf phi_A(n) log log n / n.

    Equals e^-gamma times prod_p (1 - 1/p)^-1 inf_nu phi_A(p^nu)/p^nu, i.e.
    e^-gamma / R(n/phi_A). The factor at p = 2 is kept apart because
    rho(2) may be infinite, which makes the constant 0. Hypotheses are
    audited for p <= min(cutoff, audit_limit).
    """
    f = id_over_phi(system)
    checked = max(3, min(cutoff, audit_limit))
    ps = primes_up_to(checked).primes.tolist()
    missing = []
    for p in ps:
        try:
            solve_phi(system, p, scan_limit)
        except Unsolvable as exc:
            raise HypothesisViolation(p, f"phi_A unsolvable: {exc.nu} not in AE_{p}({exc.nu})")
        if p > 2 and not any(e - 1 in system.admissible(p, e) for e in range(1, scan_limit + 1)):
            missing.append(p)
    if missing:
        raise HypothesisViolation(missing[0], f"no e <= {scan_limit} with e-1 in AE_p(e)")

    odd = PrimeSetFilter.finite([2])
    r_odd = r_product(f, cutoff, odd, scan_limit)
    r2 = rho(f, 2, scan_limit)
    notes = list(r_odd.notes)
    if math.isinf(r2.value):
        lo2 = hi2 = 0.0
        notes.append("rho(2) infinite: constant vanishes")
    elif r2.exact:
        lo2 = hi2 = 2.0 / r2.value
    else:
        lo2, hi2 = 0.0, 2.0 / r2.value
        notes.append("rho(2) scan-bounded: factor at 2 may vanish")
    est = r_odd.reciprocal().scaled(lo2, hi2).scaled(EXP_MINUS_GAMMA)
    audit = {"checked_up_to": checked, "solvable": True,
             "rho2": _json_float(r2.value), "rho2_status": r2.status}
    return replace(est, notes=tuple(notes), audit=audit)


def _digit_set(system: DivisorSystem, p: int, nu: int, depth: int) -> tuple[int, ...]:
    ones = {nu - d for d in system.admissible(p, nu)}
    return tuple(1 if i in ones else 0 for i in range(depth))


def alternating_decomposition(f: MultFn, p: int, depth: int = 64) -> list[int]:
    """Exponents a_1 < a_2 < ... with
    (1 - 1/p) rho(p) = 1 - p^-a_1 + p^-a_2 - p^-a_3 + ...

    rho(p) = sum of p^-i over a 0/1 digit string; each run of ones i = s..t
    telescopes to p^-s - p^-(t+1) after multiplying by (1 - 1/p). A run still
    open at the truncation depth contributes no closing exponent.
    """
    system = f.sigma_system
    if system is None:
        raise ContractError(f"{f.name} is not of the form sigma_A/id")
    r = rho(f, p, depth)
    if not r.exact:
        raise ContractError(f"rho({p}) for {f.name} is not certified")
    if r.attained_at is not None:
        digits = _digit_set(system, p, r.attained_at, depth)
    else:
        digits = max(_digit_set(system, p, nu, depth) for nu in range(depth + 1))
    total = math.fsum(float(p) ** -i for i, b in enumerate(digits) if b)
    if abs(total - r.value) > 1e-12 * r.value:
        raise ContractError(f"digit expansion {total} disagrees with rho({p}) = {r.value}")
    exps = []
    i = 0
    while i < depth:
        if digits[i]:
            j = i
            while j + 1 < depth and digits[j + 1]:
                j += 1
            if i > 0:
                exps.append(i)
            if j + 1 < depth:
                exps.append(j + 1)
            i = j + 1
        else:
            i += 1
    return exps


def alternating_sum(p: int, exps: list[int]) -> float:
    return 1.0 + math.fsum((-1) ** (k + 1) * float(p) ** -a for k, a in enumerate(exps))
