"""Exact combinatorics behind the polynomial Fourier-decay counting bound.

For a nonzero integer l and a count window N, at most C2 * N^0.922 of the
frequencies l*2^n, 0 <= n < N, can have |mu_hat(l*2^n)| above C1 * N^-0.078
(a Cassels-type estimate).  The machinery is number-theoretic: writing
l = 3^m l' with 3 coprime to l', the orbit (l*4^n mod 3^(r+m+1)) for
0 <= n < 3^r runs through every residue congruent to l mod 3^(m+1) exactly
once, so the base-3 digit window a_{m+1}..a_{m+r} of l*4^n realizes every
word in {0,1,2}^r exactly once.  Numerators whose window carries at least
r/8 ones force the cosine product below (1/2)^(r/8); a Hoeffding count of
the remaining words is exact and closed-form.

This module verifies all of that exactly (big-integer enumeration and
binomial sums) and counts actual certified exceedances via `fourier`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import fourier

LOG3 = math.log(3.0)
DECAY_EXPONENT = 0.078
COUNT_EXPONENT = 0.922

ENUMERATION_R_CAP = 13      # 3^13 = 1,594,323 states
DIRECT_COUNT_CAP = 10**5    # each term costs O(n) exact argument reductions


class EnumerationLimitError(RuntimeError):
    """Raised when an exact enumeration would exceed its resource cap."""


@dataclass(frozen=True)
class DecayConstants:
    """Constants of the counting bound, with their defining exponents."""

    c1: float
    c2: float
    decay_exponent: float
    count_exponent: float
    c1_exponent: float  # log2/(8 log3): true decay rate, >= decay_exponent
    c2_exponent: float  # 1 - 25/(288 log3): true count rate, <= count_exponent


def constants() -> DecayConstants:
    a = math.log(2.0) / (8.0 * LOG3)
    b = 1.0 - 25.0 / (288.0 * LOG3)
    return DecayConstants(
        c1=2.0**a,
        c2=2.0 * 1.5**b,
        decay_exponent=DECAY_EXPONENT,
        count_exponent=COUNT_EXPONENT,
        c1_exponent=a,
        c2_exponent=b,
    )


def r_from_N(N: int) -> int:
    """The unique r >= 0 with 3^(r-1) < N/2 <= 3^r."""
    if N < 2:
        raise ValueError("N must be >= 2")
    r = 0
    while 2 * 3**r < N:
        r += 1
    return r


def valuation_3(l: int) -> int:
    """Largest m with 3^m dividing l (l nonzero)."""
    if l == 0:
        raise ValueError("l must be nonzero")
    l = abs(l)
    m = 0
    while l % 3 == 0:
        l //= 3
        m += 1
    return m


@dataclass(frozen=True)
class ResidueOrbit:
    """The multiset {l*4^n mod 3^(r+m+1) : 0 <= n < 3^r} and its audit."""

    l: int
    r: int
    m: int
    modulus: int
    residues: tuple
    verified: bool  # exactly the residues congruent to l mod 3^(m+1), each once


def residue_orbit(l: int, r: int) -> ResidueOrbit:
    if l == 0:
        raise ValueError("l must be nonzero")
    if r < 0:
        raise ValueError("r must be >= 0")
    if r > ENUMERATION_R_CAP:
        raise EnumerationLimitError(
            f"r={r} needs 3^{r} states; the enumeration cap is r <= {ENUMERATION_R_CAP}"
        )
    l = abs(l)
    m = valuation_3(l)
    modulus = 3 ** (r + m + 1)
    count = 3**r
    residues = []
    c = l % modulus
    for _ in range(count):
        residues.append(c)
        c = (c << 2) % modulus
    expected = {x for x in range(l % 3 ** (m + 1), modulus, 3 ** (m + 1))}
    verified = len(set(residues)) == count and set(residues) == expected
    return ResidueOrbit(
        l=l, r=r, m=m, modulus=modulus, residues=tuple(residues), verified=verified
    )


@dataclass(frozen=True)
class DigitPartition:
    """Counts of n in [0, 3^r) by ones in the digit window of l*4^n.

    s1_count: windows with at least r/8 ones; s2_count: the rest.
    """

    l: int
    r: int
    m: int
    s1_count: int
    s2_count: int


def digit_partition(l: int, r: int) -> DigitPartition:
    if l == 0:
        raise ValueError("l must be nonzero")
    if r < 0:
        raise ValueError("r must be >= 0")
    if r > ENUMERATION_R_CAP:
        raise EnumerationLimitError(
            f"r={r} needs 3^{r} states; the enumeration cap is r <= {ENUMERATION_R_CAP}"
        )
    l = abs(l)
    m = valuation_3(l)
    modulus = 3 ** (r + m + 1)
    low = 3 ** (m + 1)
    count = 3**r
    threshold = r / 8.0
    s1 = 0
    c = l % modulus
    for _ in range(count):
        w = c // low  # base-3 digits a_{m+1}..a_{m+r}, as an integer < 3^r
        ones = 0
        while w:
            w, d = divmod(w, 3)
            if d == 1:
                ones += 1
        if ones >= threshold:
            s1 += 1
        c = (c << 2) % modulus
    return DigitPartition(l=l, r=r, m=m, s1_count=s1, s2_count=count - s1)


def s2_closed_form(r: int) -> int:
    """#{words in {0,1,2}^r with fewer than r/8 ones}: sum C(r,k) 2^(r-k), k < r/8."""
    if r < 0:
        raise ValueError("r must be >= 0")
    total = 0
    k = 0
    while k < r / 8.0:
        total += math.comb(r, k) * 2 ** (r - k)
        k += 1
    return total


@dataclass(frozen=True)
class HoeffdingCheck:
    r: int
    exact: int
    log_bound: float  # log of 2 * 3^r * exp(-25 r / 288)
    holds: bool

    @property
    def bound(self) -> float:
        return math.exp(self.log_bound)


def hoeffding_check(r: int) -> HoeffdingCheck:
    """Exact low-ones word count against the large-deviation bound."""
    if r < 1:
        raise ValueError("r must be >= 1")
    exact = s2_closed_form(r)
    log_bound = math.log(2.0) + r * LOG3 - 25.0 * r / 288.0
    holds = math.log(exact) <= log_bound if exact > 0 else True
    return HoeffdingCheck(r=r, exact=exact, log_bound=log_bound, holds=holds)


def parity_reduction(l: int, n: int) -> tuple[int, int]:
    """Rewrite the product numerator 2*(l*2^n) as base*4^h with base in {2l, 4l}.

    |mu_hat(l*2^n)| = cosine_product(2*l*2^n); even n gives (2l, n/2), odd n
    gives (4l, (n-1)/2), so each parity class walks a power-of-4 orbit.
    """
    if n % 2 == 0:
        return 2 * l, n // 2
    return 4 * l, (n - 1) // 2


@dataclass(frozen=True)
class ExceptionalCount:
    """Certified count of n < N with |mu_hat(l*2^n)| > C1 * N^-0.078."""

    l: int
    N: int
    threshold: float
    count: int
    even_count: int
    odd_count: int
    ambiguous: int  # counted as exceedances, conservatively


def exceptional_count_direct(l: int, N: int, tol: float = fourier.DEFAULT_TOL) -> ExceptionalCount:
    if l == 0:
        raise ValueError("l must be nonzero")
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > DIRECT_COUNT_CAP:
        raise EnumerationLimitError(
            f"N={N} exceeds the direct-count cap {DIRECT_COUNT_CAP}"
        )
    l = abs(l)
    cst = constants()
    threshold = cst.c1 * N ** (-DECAY_EXPONENT)
    if threshold <= 0:
        raise ValueError("threshold underflow")
    log_thr = math.log(threshold) if threshold < 1.0 else 0.0

    j0 = 2 * l  # |mu_hat(l*2^n)| = cosine_product(j0 * 2^n)
    mods = [2 * 3**k for k in range(1, fourier.TABLE_K + 1)]
    pow3 = [float(3**k) for k in range(1, fourier.TABLE_K + 1)]
    res = [j0 % m for m in mods]

    count = even = odd = ambiguous = 0
    for n in range(N):
        exceeds = False
        if threshold < 1.0:  # |mu_hat| <= 1, so threshold >= 1 excludes everything
            # partial products of certified factor uppers bound the whole
            decided_below = False
            log_hi = 0.0
            for idx in range(fourier.TABLE_K):
                x = res[idx] / pow3[idx]
                c = abs(math.cos(math.pi * x))
                delta = abs(math.sin(math.pi * x)) * 1.5e-15 + 2.5e-16
                log_hi += math.log(c + delta)
                if log_hi < log_thr:
                    decided_below = True
                    break
            if not decided_below:
                value = fourier.mu_hat_geometric(l, n, tol)
                if value.certainly_at_most(threshold):
                    pass
                elif value.certainly_greater(threshold):
                    exceeds = True
                else:
                    exceeds = True  # tie: counted as exceedance, conservatively
                    ambiguous += 1
        if exceeds:
            count += 1
            if n % 2 == 0:
                even += 1
            else:
                odd += 1
        # advance residues to n+1
        for idx in range(fourier.TABLE_K):
            res[idx] = (res[idx] << 1) % mods[idx]
    return ExceptionalCount(
        l=l, N=N, threshold=threshold, count=count,
        even_count=even, odd_count=odd, ambiguous=ambiguous,
    )


@dataclass(frozen=True)
class CombinatorialBound:
    """Closed-form exceedance bound 2*s2(r) against C2 * N^0.922."""

    l: int
    N: int
    r: int
    upper: int
    bound: float
    holds: bool
    s1_inequality_holds: bool  # (1/2)^(r/8) <= C1 * N^-0.078


def exceptional_bound_combinatorial(l: int, N: int) -> CombinatorialBound:
    if l == 0:
        raise ValueError("l must be nonzero")
    r = r_from_N(N)
    cst = constants()
    upper = 2 * s2_closed_form(r)
    log_bound = math.log(cst.c2) + COUNT_EXPONENT * math.log(N)
    holds = (math.log(upper) <= log_bound) if upper > 0 else True
    # S1 decay: (1/2)^(r/8) <= C1 * N^-0.078, in logs
    lhs = -(r / 8.0) * math.log(2.0)
    rhs = math.log(cst.c1) - DECAY_EXPONENT * math.log(N)
    return CombinatorialBound(
        l=abs(l), N=N, r=r, upper=upper, bound=math.exp(log_bound),
        holds=holds, s1_inequality_holds=lhs <= rhs + 1e-12,
    )
