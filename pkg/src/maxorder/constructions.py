"""Champion numbers realizing the limsup, brute-force scans, and the
constructions that separate thin from fat sets of exceptional primes.

Champions are kept in log form throughout; n(10**7) has millions of digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .divisors import DivisorSystem
from .extremal import (
    EXP_GAMMA,
    InfiniteLocalFactor,
    PrimeSetFilter,
    r_product,
    rho,
)
from .functions import MultFn, RhoHint, id_over_phi, log_evaluate
from .primes import Factored, primes_up_to, sieve_ceiling

DEFAULT_EPS = 1e-3
SCAN_FLOOR = 16
NU_CEILING = 10**6


class ChampionScheduleError(ValueError):
    def __init__(self, p: int, message: str):
        super().__init__(f"champion schedule fails at p={p}: {message}")
        self.p = p


class ResourceCeilingError(RuntimeError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


def max_exponent(p: int, x: int) -> int:
    """Largest nu with p**nu <= x."""
    nu, q = 0, p
    while q <= x:
        nu += 1
        q *= p
    return nu


@dataclass(frozen=True)
class ExponentSchedule:
    x: int
    P: int
    primes: np.ndarray
    exponents: np.ndarray
    log_values: np.ndarray  # log f(p^exponent)

    def exponent(self, p: int) -> int:
        i = int(np.searchsorted(self.primes, p))
        if i == len(self.primes) or self.primes[i] != p:
            return 0
        return int(self.exponents[i])


def _best_exponent(f: MultFn, p: int, top: int) -> tuple[int, float]:
    """Smallest nu in [0, top] maximizing f(p^nu), with log f(p^nu)."""
    if f.rho_hint is not None:
        a = f.rho_hint.attained_at(p)
        v = f.rho_hint.value(p)
        if a is not None and v is not None and a <= top and math.isfinite(v):
            return a, math.log(v) if a else 0.0
    best_nu, best = 0, 0.0
    for nu in range(1, top + 1):
        lv = f.log_at(p, nu)
        if lv > best:
            best_nu, best = nu, lv
    return best_nu, best


def default_schedule(f: MultFn, x: int, P: int = 2) -> ExponentSchedule:
    """k_p (p <= P) and e_p (P < p <= x): the smallest exponent maximizing
    f(p^nu) over nu <= floor(log x / log p). Capping at that range keeps
    e_p = p^o(1) along any sequence of x. An exponent where a hint says rho(p)
    is attained is always allowed, so log n(x) stays O(x) while, for example,
    exponential divisors still get nu = 2 above sqrt(x)."""
    ps = primes_up_to(x).primes
    exps = np.zeros(len(ps), dtype=np.int64)
    logs = np.zeros(len(ps), dtype=np.float64)
    root = math.isqrt(x)
    for i, p in enumerate(ps.tolist()):
        top = 1 if p > root else max_exponent(p, x)
        if f.rho_hint is not None:
            top = max(top, f.rho_hint.attained_at(p) or 0)
        exps[i], logs[i] = _best_exponent(f, p, top)
    return ExponentSchedule(x, P, ps, exps, logs)


@dataclass(frozen=True)
class ChampionPoint:
    x: int
    log_n: float
    log_f: float
    ratio: float
    P: int | None = None
    kind: str = "maximal"  # "maximal": f(n)/log log n; "minimal": log log n / f(n)
    eps: float | None = None
    head_margin: float | None = None  # log prod_{p<=P} f(p^k)/rho - log(1-eps)
    tail_margin: float | None = None  # log prod_{P<p<=x} f(p^e)/rho - log(1-eps)
    target: float | None = None
    deviation: float | None = None

    def with_target(self, target: float | None) -> "ChampionPoint":
        if target is None or not math.isfinite(target):
            return self
        return replace(self, target=target, deviation=abs(self.ratio - target))


def _loglog_gate(log_n: float) -> float:
    if not log_n > math.e:
        raise ValueError(f"log n = {log_n:.4g} <= e, so log log n <= 1")
    return math.log(log_n)


def build_champion(f: MultFn, x: int, P: int | None = None, eps: float = DEFAULT_EPS,
                   schedule: ExponentSchedule | None = None,
                   scan_limit: int = 64) -> ChampionPoint:
    """n(x) = prod_{p<=P} p^k_p * prod_{P<p<=x} p^e_p, evaluated in log space.

    Verifies prod_{P<p<=x} f(p^e_p)/rho(p) >= 1 - eps and
    prod_{p<=P} f(p^k_p) >= (1 - eps) prod_{p<=P} rho(p). With P omitted the
    smallest prime satisfying the first inequality is used.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if P is not None and not P < x:
        raise ValueError(f"need P < x, got P={P}, x={x}")
    if x < 3:
        raise ValueError("x must be at least 3")
    sched = schedule or default_schedule(f, x)
    ps = sched.primes
    log_rho = np.empty(len(ps))
    for i, p in enumerate(ps.tolist()):
        r = rho(f, p, scan_limit)
        if math.isinf(r.value):
            raise InfiniteLocalFactor(p)
        log_rho[i] = math.log(r.value)
    deficit = sched.log_values - log_rho
    floor = math.log1p(-eps)
    # suffix[i] = sum of deficits over primes with index >= i
    suffix = np.concatenate([np.cumsum(deficit[::-1])[::-1], [0.0]])
    if P is None:
        ok = np.flatnonzero(suffix[1:] >= floor)
        ok = ok[ps[ok] < x]
        if not len(ok):
            raise ChampionScheduleError(int(ps[-1]), "no P < x meets the tail inequality")
        k = int(ok[0])
        P = int(ps[k])
    else:
        k = int(np.searchsorted(ps, P, side="right")) - 1
    head = float(np.sum(deficit[: k + 1]))
    tail = float(suffix[k + 1])
    if tail < floor:
        worst = int(ps[k + 1 + int(np.argmin(deficit[k + 1:]))])
        raise ChampionScheduleError(worst, f"tail product {math.exp(tail):.6g} < 1 - eps")
    if head < floor:
        worst = int(ps[int(np.argmin(deficit[: k + 1]))])
        raise ChampionScheduleError(
            worst, f"head product ratio {math.exp(head):.6g} < 1 - eps = {1 - eps}")
    log_n = math.fsum((sched.exponents * np.log(ps.astype(np.float64))).tolist())
    log_f = math.fsum(sched.log_values.tolist())
    ratio = math.exp(log_f) / _loglog_gate(log_n)
    return ChampionPoint(x=x, log_n=log_n, log_f=log_f, ratio=ratio, P=P, eps=eps,
                         head_margin=head - floor, tail_margin=tail - floor)


def maximal_target(f: MultFn, cutoff: int = 10**5) -> float | None:
    """e^gamma R from a certified enclosure, or None."""
    try:
        r = r_product(f, cutoff)
    except InfiniteLocalFactor:
        return None
    if not r.certified:
        return None
    return EXP_GAMMA * r.mid


def champion_series(f: MultFn, x_grid: Sequence[int], eps: float = DEFAULT_EPS,
                    target: float | None = None, cutoff: int = 10**5) -> list[ChampionPoint]:
    if any(b <= a for a, b in zip(x_grid, x_grid[1:])):
        raise ValueError("x_grid must be increasing")
    if target is None:
        target = maximal_target(f, cutoff)
    return [build_champion(f, x, eps=eps).with_target(target) for x in x_grid]


def build_phi_champion(system: DivisorSystem, x: int, scan_limit: int = 64,
                       target: float | None = None) -> ChampionPoint:
    """n(x) = prod_{p<=x} p^e_p with e_p minimizing phi_A(p^nu)/p^nu; the
    reported ratio is phi_A(n) log log n / n."""
    if x < 3:
        raise ValueError("x must be at least 3")
    f = id_over_phi(system)
    ps = primes_up_to(x).primes
    exps = np.zeros(len(ps), dtype=np.int64)
    logs = np.zeros(len(ps))
    for i, p in enumerate(ps.tolist()):
        exps[i], logs[i] = _best_exponent(f, p, scan_limit)
    log_n = math.fsum((exps * np.log(ps.astype(np.float64))).tolist())
    log_f = math.fsum(logs.tolist())
    ratio = _loglog_gate(log_n) * math.exp(-log_f)
    pt = ChampionPoint(x=x, log_n=log_n, log_f=log_f, ratio=ratio, kind="minimal")
    return pt.with_target(target)


def phi_champion_series(system: DivisorSystem, x_grid: Sequence[int],
                        target: float | None = None) -> list[ChampionPoint]:
    return [build_phi_champion(system, x, target=target) for x in x_grid]


# --- brute force ---------------------------------------------------------------

@dataclass(frozen=True)
class ScanRecord:
    n: int
    ratio: float


def scan_ratios(f: MultFn, n_max: int) -> np.ndarray:
    """f(n) / log log n for every n <= n_max (entries below 16 are nan).

    log f(n) is accumulated by adding log f(p^nu) - log f(p^(nu-1)) to every
    multiple of p^nu; zeros of f are tracked separately.
    """
    logf = np.zeros(n_max + 1)
    zeros = np.zeros(n_max + 1, dtype=np.int32)
    for p in primes_up_to(n_max).primes.tolist():
        prev_log, prev_zero = 0.0, 0
        pk, nu = p, 1
        while pk <= n_max:
            v = f.at(p, nu)
            is_zero = int(v == 0)
            cur = 0.0 if is_zero else f.log_at(p, nu)
            if cur != prev_log:
                logf[pk::pk] += cur - prev_log
            if is_zero != prev_zero:
                zeros[pk::pk] += is_zero - prev_zero
            prev_log, prev_zero = cur, is_zero
            pk *= p
            nu += 1
    n = np.arange(n_max + 1, dtype=np.float64)
    out = np.full(n_max + 1, np.nan)
    lo = SCAN_FLOOR
    with np.errstate(over="ignore"):
        out[lo:] = np.exp(logf[lo:]) / np.log(np.log(n[lo:]))
    out[lo:][zeros[lo:] > 0] = 0.0
    return out


def empirical_scan(f: MultFn, n_max: int) -> list[ScanRecord]:
    """Running maxima of f(n)/log log n for 16 <= n <= n_max."""
    if not SCAN_FLOOR <= n_max <= 10**7:
        raise ValueError("n_max must lie in [16, 10**7]")
    r = scan_ratios(f, n_max)[SCAN_FLOOR:]
    best = np.maximum.accumulate(r)
    prev = np.concatenate([[-np.inf], best[:-1]])
    idx = np.flatnonzero(r > prev)
    return [ScanRecord(int(i) + SCAN_FLOOR, float(r[i])) for i in idx]


# --- fat exceptional sets ------------------------------------------------------

@dataclass(frozen=True)
class ScheduledPower:
    j: int
    p: int
    nu: int
    log_q: float
    g_at_log_q: float


class ScheduleCeilingError(ResourceCeilingError):
    def __init__(self, message: str, partial: "CounterexampleFn"):
        super().__init__(message, best=partial)
        self.partial = partial


def _s_growth(S: PrimeSetFilter, bound: int) -> tuple[np.ndarray, np.ndarray]:
    ps = primes_up_to(bound).primes
    s_primes = ps[S.mask(ps)]
    cum = np.cumsum(np.log1p(1.0 / s_primes.astype(np.float64)))
    return s_primes, cum


@dataclass(eq=False)
class CounterexampleFn:
    """f(q_j) = j on the schedule; 1 + 1/p at other powers of primes outside S.

    Powers of S-primes off the schedule take the value 1 unless
    ``literal_base`` is set, in which case they also take 1 + 1/p.
    """

    S: PrimeSetFilter
    schedule: tuple[ScheduledPower, ...]
    bound: int
    literal_base: bool = False
    _s_primes: np.ndarray = field(default=None, repr=False)
    _cum: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._s_primes is None:
            self._s_primes, self._cum = _s_growth(self.S, self.bound)
        self._lookup = {(q.p, q.nu): q.j for q in self.schedule}

    def g(self, y: float) -> float:
        """prod_{p in S, p <= y} (1 + 1/p); exact for y <= bound."""
        if y > self.bound:
            raise ValueError(f"g({y:.4g}) needs S-primes beyond the sieve bound {self.bound}")
        return self.g_lower(y)

    def g_lower(self, y: float) -> float:
        """A lower bound for g(y) valid for every y (exact up to the bound)."""
        k = int(np.searchsorted(self._s_primes, y, side="right"))
        return 1.0 if k == 0 else math.exp(float(self._cum[k - 1]))

    def value_at(self, p: int, nu: int) -> float:
        if nu == 0:
            return 1.0
        j = self._lookup.get((p, nu))
        if j is not None:
            return float(j)
        if self.S(p) and not self.literal_base:
            return 1.0
        return 1.0 + 1.0 / p

    def as_multfn(self) -> MultFn:
        return MultFn(
            name=f"counterexample[{self.S.label}]",
            value_at=self.value_at,
            rho_hint=RhoHint(lambda p: math.inf if self.S(p) else 1.0 + 1.0 / p,
                             lambda p: None if self.S(p) else 1),
        )

    def rho_report(self, upto: int) -> list[tuple[int, float]]:
        f = self.as_multfn()
        return [(p, f.rho_hint.value(p)) for p in primes_up_to(upto).primes.tolist()]


def build_counterexample(S: PrimeSetFilter, j_max: int, bound: int,
                         nu_ceiling: int = NU_CEILING,
                         literal_base: bool = False) -> CounterexampleFn:
    """q_j = p_j^nu_j with p_j taken round-robin from the S-primes <= bound
    and nu_j minimal such that g(log q_j) >= j^j and q_j > q_(j-1).

    g is known exactly only up to the sieve bound; a level j^j above
    g(bound) cannot be certified and raises ScheduleCeilingError carrying
    the schedule built so far.
    """
    if S.declared_thin:
        raise ValueError("the counterexample needs a set S with divergent sum of 1/p")
    s_primes, cum = _s_growth(S, bound)
    if not len(s_primes):
        raise ValueError(f"S has no primes <= {bound}")
    sched: list[ScheduledPower] = []

    def partial() -> CounterexampleFn:
        return CounterexampleFn(S, tuple(sched), bound, literal_base, s_primes, cum)

    prev_log_q = 0.0
    for j in range(1, j_max + 1):
        need = j * math.log(j)  # log j^j
        k = int(np.searchsorted(cum, need - 1e-12, side="left")) if need > 0 else -1
        if k >= len(cum):
            raise ScheduleCeilingError(
                f"j={j}: g reaches only {math.exp(cum[-1]):.6g} on S-primes <= {bound}, "
                f"below j^j = {j**j}; a larger bound is required", partial())
        y_need = float(s_primes[k]) if k >= 0 else 0.0
        p = int(s_primes[(j - 1) % len(s_primes)])
        lp = math.log(p)
        nu = max(1, math.ceil(y_need / lp))
        while nu * lp < y_need:
            nu += 1
        while nu * lp <= prev_log_q:
            nu += 1
        if nu > nu_ceiling:
            raise ScheduleCeilingError(
                f"j={j}: nu_{j} = {nu} exceeds the ceiling {nu_ceiling}; "
                f"raise the ceiling or the prime bound", partial())
        log_q = nu * lp
        g_val = math.exp(float(cum[np.searchsorted(s_primes, log_q, side="right") - 1])) \
            if log_q >= s_primes[0] else 1.0
        sched.append(ScheduledPower(j, p, nu, log_q, g_val))
        prev_log_q = log_q
    return partial()


@dataclass(frozen=True)
class ProbeResult:
    label: float | None
    log_n: float
    ratio: float
    k: int
    f_n1: float
    factorial_ok: bool
    free_bound: float  # prod over p | n2 of (1 + 1/p)
    free_ok: bool


@dataclass(frozen=True)
class CounterexampleReport:
    probes: tuple[ProbeResult, ...]
    running_max: tuple[float, ...]
    height_max: dict
    factorial_bound_ok: bool
    free_part_ok: bool

    @property
    def heights_non_increasing(self) -> bool:
        vals = [self.height_max[h] for h in sorted(self.height_max)]
        return all(b <= a for a, b in zip(vals, vals[1:]))


def counterexample_scan(cf: CounterexampleFn,
                        probes: Iterable[Factored | tuple[float, Factored]]) -> CounterexampleReport:
    """f(n)/log log n along the probes, checking f(n_1) <= k! where n_1 is the
    scheduled part of n and k the largest j with q_j exactly dividing n_1."""
    f = cf.as_multfn()
    out: list[ProbeResult] = []
    run: list[float] = []
    by_height: dict = {}
    for item in probes:
        label, n = item if isinstance(item, tuple) else (None, item)
        js = [cf._lookup[(p, v)] for p, v in n.factors if (p, v) in cf._lookup]
        k = max(js, default=0)
        f_n1 = float(math.prod(js)) if js else 1.0
        fact_ok = f_n1 <= math.factorial(k)
        free = [p for p, v in n.factors if (p, v) not in cf._lookup]
        free_bound = math.prod(1.0 + 1.0 / p for p in free)
        log_f = log_evaluate(f, n)
        log_n = n.log_value
        ratio = math.exp(log_f) / _loglog_gate(log_n)
        free_ok = math.exp(log_f) <= f_n1 * free_bound * (1 + 1e-12)
        out.append(ProbeResult(label, log_n, ratio, k, f_n1, fact_ok, free_bound, free_ok))
        run.append(max(ratio, run[-1]) if run else ratio)
        if label is not None:
            by_height[label] = max(ratio, by_height.get(label, 0.0))
    return CounterexampleReport(
        probes=tuple(out), running_max=tuple(run), height_max=by_height,
        factorial_bound_ok=all(r.factorial_ok for r in out),
        free_part_ok=all(r.free_ok for r in out),
    )


def height_probes(cf: CounterexampleFn, heights: Sequence[float]) -> list[tuple[float, Factored]]:
    """Probe numbers with log n close to each height: squarefree products of
    the primes outside S, with and without the scheduled q_j, and products
    of all primes in order."""
    top = max(heights)
    limit = min(sieve_ceiling(), int(3 * top) + 100)
    ps = primes_up_to(limit).primes
    in_s = cf.S.mask(ps)
    logs = np.log(ps.astype(np.float64))
    out: list[tuple[float, Factored]] = []
    sched = sorted(cf.schedule, key=lambda q: q.log_q)

    def fill(head: dict[int, int], head_log: float, use_all: bool, H: float) -> Factored:
        pairs = dict(head)
        total = head_log
        for p, lp, s in zip(ps.tolist(), logs.tolist(), in_s.tolist()):
            if total >= H:
                break
            if p in pairs or (s and not use_all):
                continue
            if (p, 1) in cf._lookup and not use_all:
                continue
            pairs[p] = 1
            total += lp
        return Factored.of(pairs)

    for H in heights:
        heads: list[tuple[dict[int, int], float]] = [({}, 0.0)]
        acc: dict[int, int] = {}
        acc_log = 0.0
        for q in sched:
            if q.log_q < H / 2:
                heads.append(({q.p: q.nu}, q.log_q))
            if acc_log + q.log_q < H / 2 and q.p not in acc:
                acc[q.p] = q.nu
                acc_log += q.log_q
                heads.append((dict(acc), acc_log))
        for head, head_log in heads:
            out.append((H, fill(head, head_log, False, H)))
            out.append((H, fill(head, head_log, True, H)))
    return out


# --- thin exceptional sets -----------------------------------------------------

@dataclass(frozen=True)
class WitnessResult:
    n1: Factored
    x: int
    log_n: float
    log_f: float
    ratio: float


def unbounded_witness(f: MultFn, S: PrimeSetFilter, target: float, x_max: int = 10**6,
                      candidates: dict[int, Sequence[int]] | None = None,
                      scan_limit: int = 64) -> WitnessResult:
    """Find n = n_1 n_2 with f(n)/log log n >= target.

    n_1 is built on the (finite, thin) set S by walking the candidate
    exponents at each S-prime; n_2 is the champion over primes <= x outside
    S. The walk raises x by decades up to x_max.
    """
    if not S.declared_thin or S.members is None:
        raise ValueError("unbounded_witness needs a finite set S declared thin")
    if target <= 0:
        raise ValueError("target must be positive")
    recip = sum(1.0 / p for p in S.members)
    if not math.isfinite(recip):
        raise ValueError("sum of 1/p over S diverges")
    if candidates is None:
        candidates = {}
        sys = f.phi_system or f.sigma_system
        for p in S.members:
            listed = sys.params.get("N") if sys is not None and p == 2 else None
            candidates[p] = list(listed) if listed else list(range(1, scan_limit + 1))
    depth = max(len(c) for c in candidates.values())
    best: WitnessResult | None = None
    x = 100
    while True:
        x = min(x, x_max)
        ps = primes_up_to(x).primes.tolist()
        log_n2 = log_f2 = 0.0
        root = math.isqrt(x)
        for p in ps:
            if p in S.members:
                continue
            nu, lv = _best_exponent(f, p, 1 if p > root else max_exponent(p, x))
            log_n2 += nu * math.log(p)
            log_f2 += lv
        chosen: dict[int, tuple[int, float]] = {p: (0, 0.0) for p in S.members}
        for i in range(depth):
            for p in S.members:
                cand = candidates[p]
                if i < len(cand):
                    lv = f.log_at(p, cand[i])
                    if lv > chosen[p][1]:
                        chosen[p] = (cand[i], lv)
            log_n1 = sum(nu * math.log(p) for p, (nu, _) in chosen.items())
            log_f1 = sum(lv for _, lv in chosen.values())
            log_n = log_n1 + log_n2
            if log_n <= math.e:
                continue
            ratio = math.exp(min(log_f1 + log_f2, 700.0)) / math.log(log_n)
            res = WitnessResult(Factored.of({p: nu for p, (nu, _) in chosen.items()}),
                                x, log_n, log_f1 + log_f2, ratio)
            if best is None or ratio > best.ratio:
                best = res
            if ratio >= target:
                return res
        if x >= x_max:
            raise ResourceCeilingError(
                f"target {target} not reached with x <= {x_max}; best ratio "
                f"{best.ratio if best else float('nan'):.6g}", best)
        x *= 10
