"""Prime tables, 64-bit factorization and the Mertens product."""

from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass
from math import gcd, isqrt
from typing import Iterator

import numpy as np

DEFAULT_SIEVE_CEILING = 10**8
TRIAL_DIVISION_LIMIT = 10**6
SEGMENT_SIZE = 1 << 22

# Deterministic for every n < 3.3e24, which covers all 64-bit inputs.
MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class SieveCeilingError(RuntimeError):
    def __init__(self, requested: int, ceiling: int):
        super().__init__(
            f"sieve request {requested} exceeds the configured ceiling {ceiling}"
        )
        self.requested = requested
        self.ceiling = ceiling


_ceiling = DEFAULT_SIEVE_CEILING
_cache_lock = threading.Lock()
_cached_limit = 1
_cached_primes = np.zeros(0, dtype=np.int64)


def set_sieve_ceiling(ceiling: int) -> None:
    global _ceiling
    if ceiling < 2:
        raise ValueError("sieve ceiling must be at least 2")
    _ceiling = int(ceiling)


def sieve_ceiling() -> int:
    return _ceiling


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self) -> Iterator[int]:
        return iter(self.primes.tolist())

    def __contains__(self, n: object) -> bool:
        if not isinstance(n, (int, np.integer)):
            return False
        i = np.searchsorted(self.primes, n)
        return bool(i < len(self.primes) and self.primes[i] == n)

    def tolist(self) -> list[int]:
        return self.primes.tolist()


def _small_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _segmented_sieve(limit: int) -> np.ndarray:
    """Odd-only segmented sieve of Eratosthenes."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    base = _small_sieve(isqrt(limit))[1:]  # odd base primes
    chunks = [np.array([2], dtype=np.int64)]
    low = 3
    while low <= limit:
        high = min(low + 2 * SEGMENT_SIZE, limit + 1)
        count = (high - low + 1) // 2
        mask = np.ones(count, dtype=bool)
        for p in base.tolist():
            sq = p * p
            if sq >= high:
                break
            start = max(sq, -(-low // p) * p)
            if start % 2 == 0:
                start += p
            mask[(start - low) // 2 :: p] = False
        seg = low + 2 * np.flatnonzero(mask).astype(np.int64)
        chunks.append(seg[seg <= limit])
        low = high if high % 2 == 1 else high + 1
    out = np.concatenate(chunks)
    # 1 is never produced since low starts at 3
    return out


def primes_up_to(x: int) -> PrimeTable:
    """All primes <= x. Tables are cached and sliced for smaller requests."""
    global _cached_limit, _cached_primes
    x = int(x)
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x > _ceiling:
        raise SieveCeilingError(x, _ceiling)
    with _cache_lock:
        if x > _cached_limit:
            # grow geometrically so repeated slightly-larger requests stay cheap
            target = min(_ceiling, max(x, min(2 * _cached_limit, 4 * 10**6)))
            _cached_primes = _segmented_sieve(target)
            _cached_primes.setflags(write=False)
            _cached_limit = target
        arr = _cached_primes
    hi = int(np.searchsorted(arr, x, side="right"))
    view = arr[:hi]
    return PrimeTable(limit=x, primes=view)


def mertens_product(x: int) -> float:
    """prod_{p <= x} (1 - 1/p)^-1, accumulated as a sum of logarithms."""
    if x < 2:
        raise ValueError("mertens_product needs x >= 2")
    ps = primes_up_to(x).primes.astype(np.float64)
    return math.exp(-math.fsum(np.log1p(-1.0 / ps).tolist()))


@dataclass(frozen=True)
class Factored:
    """Canonical factorization ((p1, v1), (p2, v2), ...) with p1 < p2 < ..."""

    factors: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        last = 1
        for p, v in self.factors:
            if p <= last or v < 1:
                raise ValueError(f"non-canonical factorization {self.factors!r}")
            last = p

    @classmethod
    def of(cls, pairs) -> "Factored":
        """Build from any iterable of (p, v) pairs or a {p: v} mapping; zero exponents dropped."""
        if isinstance(pairs, dict):
            pairs = pairs.items()
        merged: dict[int, int] = {}
        for p, v in pairs:
            if v:
                merged[int(p)] = merged.get(int(p), 0) + int(v)
        return cls(tuple(sorted(merged.items())))

    @property
    def value(self) -> int:
        out = 1
        for p, v in self.factors:
            out *= p**v
        return out

    @property
    def log_value(self) -> float:
        return math.fsum(v * math.log(p) for p, v in self.factors)

    def exponent(self, p: int) -> int:
        for q, v in self.factors:
            if q == p:
                return v
        return 0

    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __mul__(self, other: "Factored") -> "Factored":
        return Factored.of(self.factors + other.factors)

    def quotient(self, d: "Factored") -> "Factored":
        """n / d for a divisor d of n."""
        mine = dict(self.factors)
        for p, v in d.factors:
            if mine.get(p, 0) < v:
                raise ValueError(f"{d} does not divide {self}")
            mine[p] -= v
        return Factored.of(mine)

    def coprime_to(self, other: "Factored") -> bool:
        return not set(self.primes()) & set(other.primes())

    def __repr__(self) -> str:
        if not self.factors:
            return "Factored(1)"
        body = "*".join(f"{p}^{v}" if v > 1 else str(p) for p, v in self.factors)
        return f"Factored({body})"


ONE = Factored()


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    for p in MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g


def _split(n: int, out: dict[int, int], rng: random.Random) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    d = _pollard_brent(n, rng)
    _split(d, out, rng)
    _split(n // d, out, rng)


def factorize(n: int) -> Factored:
    """Canonical factorization of 1 <= n < 2**64.

    Trial division by primes up to 10**6 (or sqrt(n)), then Pollard-Brent on
    the cofactor with Miller-Rabin certification of every prime factor.
    """
    n = int(n)
    if n < 1 or n >= 1 << 64:
        raise ValueError(f"factorize supports 1 <= n < 2**64, got {n}")
    out: dict[int, int] = {}
    limit = min(TRIAL_DIVISION_LIMIT, isqrt(n))
    if limit >= 2:
        for p in primes_up_to(limit).primes.tolist():
            if p * p > n:
                break
            if n % p == 0:
                v = 0
                while n % p == 0:
                    n //= p
                    v += 1
                out[p] = v
    if n > 1:
        # seeded so repeated calls are reproducible
        _split(n, out, random.Random(n))
    return Factored(tuple(sorted(out.items())))


def spf_table(n_max: int) -> np.ndarray:
    """Smallest-prime-factor table for 0..n_max (entries 0, 1 are 0 and 1)."""
    spf = np.zeros(n_max + 1, dtype=np.int64)
    if n_max >= 1:
        spf[1] = 1
    for p in primes_up_to(isqrt(n_max)).primes.tolist():
        block = spf[p * p :: p]
        block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest[rest >= 2]] = rest[rest >= 2]
    return spf


def factor_range(n_max: int) -> list[Factored]:
    """Factorizations of 0..n_max (index 0 holds ONE as a placeholder)."""
    spf = spf_table(n_max).tolist()
    out: list[Factored] = [ONE, ONE]
    for n in range(2, n_max + 1):
        pairs = []
        m = n
        while m > 1:
            p = spf[m]
            v = 0
            while m % p == 0:
                m //= p
                v += 1
            pairs.append((p, v))
        out.append(Factored(tuple(pairs)))
    return out[: n_max + 1]


def mobius(n: int) -> int:
    mu = 1
    for _, v in factorize(n):
        if v > 1:
            return 0
        mu = -mu
    return mu


def divisors_of(n: Factored) -> list[Factored]:
    """All divisors of n, exponents in lexicographic order."""
    out = [ONE]
    for p, v in n.factors:
        out = [Factored(d.factors + ((p, e),)) if e else d for d in out for e in range(v + 1)]
    return out
