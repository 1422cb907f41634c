"""Certified cosine products for the Cantor measure's Fourier transform.

The transform of the uniform Cantor measure (equal-weight self-similar
measure on the middle-third set; digitwise: iid fair {0,2} ternary digits) is

    mu_hat(t) = E[e^{2 pi i t X}] = (-1)^t * prod_{k>=1} cos(2 pi t / 3^k)

for integer t, which is real.  The self-similarity recursion mu_hat(t) =
e^{2 pi i t/3} cos(2 pi t/3) mu_hat(t/3) gives both the product and the
(-1)^t phase.  Everything here reduces to the core primitive

    cosine_product(j) = prod_{k>=1} |cos(pi * j / 3^k)|,   j integer,

with |mu_hat(t)| = cosine_product(2t).  The digit-window decay arguments in
`decay` consume cosine_product directly (over numerators l*4^n).

Arguments pi*j/3^k are reduced modulo 2*pi in exact integer arithmetic
(j mod 2*3^k) before any floating evaluation, since j can have thousands of
bits.  Products are accumulated in log space, with certified lower/upper
bounds carried per factor and a closed-form bound for the discarded tail
sum_{k>K} (pi j / 3^k)^2 / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12
_LOG2_3 = math.log2(3.0)

# Per-factor |cos| evaluation slack: exact argument reduction leaves a 61-bit
# scaled quotient, then pi-multiplication and libm cos; 2e-15 dominates all.
_COS_SLACK = 2e-15
_LOG_SLACK = 4e-16  # per-factor log() rounding


@dataclass(frozen=True)
class FourierValue:
    """Certified magnitude of a cosine product / Fourier transform value.

    The true magnitude lies in [magnitude - truncation_error,
    magnitude + truncation_error] intersected with [0, 1]; log_lower and
    log_upper are certified natural-log bounds (log_lower may be -inf).
    sign is the sign of the underlying signed value (for mu_hat: of the
    real number mu_hat(t)).
    """

    frequency: int
    magnitude: float
    truncation_error: float
    cutoff: int
    sign: int
    log_lower: float
    log_upper: float

    @property
    def signed_value(self) -> float:
        return self.sign * self.magnitude

    def interval(self) -> tuple[float, float]:
        lo = max(0.0, self.magnitude - self.truncation_error)
        hi = min(1.0, self.magnitude + self.truncation_error)
        return lo, hi

    def certainly_at_most(self, threshold: float) -> bool:
        if threshold <= 0.0:
            return False
        return self.log_upper <= math.log(threshold)

    def certainly_greater(self, threshold: float) -> bool:
        if threshold <= 0.0:
            return True
        return self.log_lower > math.log(threshold)


def _log2_int(j: int) -> float:
    return math.log2(j)


def product_cutoff(j: int, tol: float) -> int:
    """Smallest K with 3^K > 2j and tail bound (pi j)^2 9^-K / 16 <= tol."""
    if j <= 0:
        raise ValueError("numerator must be positive")
    k = max(1, math.ceil((j.bit_length() + 1) / _LOG2_3) - 2)
    while 3**k <= 2 * j:
        k += 1
    while k > 1 and 3 ** (k - 1) > 2 * j:
        k -= 1
    # extend for the quadratic tail bound
    log2_tail = 2.0 * (_log2_int(j) + math.log2(math.pi)) - 2.0 * k * _LOG2_3 - 4.0
    log2_tol = math.log2(tol)
    if log2_tail > log2_tol:
        k += math.ceil((log2_tail - log2_tol) / (2.0 * _LOG2_3))
    return k


def _tail_bound(j: int, k: int) -> float:
    """Upper bound for 1 - prod_{k'>k} |cos(pi j / 3^k')|."""
    log2_tail = 2.0 * (_log2_int(j) + math.log2(math.pi)) - 2.0 * k * _LOG2_3 - 4.0
    return min(0.5, 2.0**log2_tail)


def cosine_product(j: int, tol: float = DEFAULT_TOL, min_cutoff: int = 0) -> FourierValue:
    """Certified prod_{k>=1} |cos(pi j / 3^k)| for a nonzero integer j.

    sign is the sign of the signed product prod cos(pi j / 3^k).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    j = abs(int(j))
    if j == 0:
        return FourierValue(0, 1.0, 0.0, 0, 1, 0.0, 0.0)
    k_top = max(product_cutoff(j, tol), min_cutoff)

    pw = 3**k_top
    rho = j % (2 * pw)
    log_mid = 0.0
    log_lo_slack = 0.0
    neg_parity = 0
    lower_finite = True
    for k in range(k_top, 0, -1):
        q = (rho << 61) // pw
        x = q * 2.0**-61  # rho / 3^k within 2^-61
        c = math.cos(math.pi * x)
        ac = abs(c)
        if c < 0.0:
            neg_parity ^= 1
        # |computed - true| <= |sin| * (argument error) + libm ulp
        delta = abs(math.sin(math.pi * x)) * 1.5e-15 + 2.5e-16
        if ac <= 2.0 * delta:
            lower_finite = False
            log_mid += math.log(ac) if ac > 0.0 else -math.inf
        else:
            log_mid += math.log(ac)
            log_lo_slack += delta / (ac - delta) + _LOG_SLACK
        if k > 1:
            pw //= 3
            rho %= 2 * pw
    # per-factor upper slack: log(ac + delta) <= log(ac) + delta/ac
    log_hi = log_mid + log_lo_slack
    tail = _tail_bound(j, k_top)
    if lower_finite:
        log_lo = log_mid - log_lo_slack + math.log1p(-tail)
    else:
        log_lo = -math.inf
    magnitude = min(1.0, math.exp(log_mid)) if log_mid > -745.0 else 0.0
    hi = min(1.0, math.exp(min(log_hi, 0.0)))
    lo = math.exp(log_lo) if log_lo > -745.0 else 0.0
    err = max(hi - magnitude, magnitude - lo)
    return FourierValue(
        frequency=j,
        magnitude=magnitude,
        truncation_error=err,
        cutoff=k_top,
        sign=-1 if neg_parity else 1,
        log_lower=log_lo,
        log_upper=min(log_hi, 0.0),
    )


def mu_hat(t: int, tol: float = DEFAULT_TOL, min_cutoff: int = 0) -> FourierValue:
    """Certified |mu_hat(t)| for the Cantor measure, with its sign.

    mu_hat(t) = (-1)^t prod_k cos(2 pi t / 3^k) = (-1)^t * signed
    cosine_product(2t); t = 0 returns exactly 1.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    t = int(t)
    if t == 0:
        return FourierValue(0, 1.0, 0.0, 0, 1, 0.0, 0.0)
    base = cosine_product(2 * abs(t), tol, min_cutoff=min_cutoff)
    sign = base.sign * (-1 if t % 2 else 1)
    return FourierValue(
        frequency=t,
        magnitude=base.magnitude,
        truncation_error=base.truncation_error,
        cutoff=base.cutoff,
        sign=sign,
        log_lower=base.log_lower,
        log_upper=base.log_upper,
    )


def mu_hat_geometric(l: int, n: int, tol: float = DEFAULT_TOL) -> FourierValue:
    """mu_hat at frequency l * 2^n (exact big-integer frequency)."""
    if l == 0:
        raise ValueError("l must be nonzero")
    if n < 0:
        raise ValueError("n must be >= 0")
    return mu_hat(int(l) * (1 << int(n)), tol)


# ---------------------------------------------------------------------------
# Bulk scans: residues of j * 2^s mod 2*3^k for k <= TABLE_K, advanced by
# doubling in s.  2 * (2*3^39) < 2^64, so uint64 arithmetic is exact.
# ---------------------------------------------------------------------------

TABLE_K = 39
TABLE_MODS = np.array([2 * 3**k for k in range(1, TABLE_K + 1)], dtype=np.uint64)
TABLE_POW3 = np.array([float(3**k) for k in range(1, TABLE_K + 1)])
# float factor slack in the table path (uint64->float64 conversions included)
TABLE_COS_SLACK = 8e-15


class DoublingProductTable:
    """Tracks j_i * 2^s mod 2*3^k (k = 1..TABLE_K) for a vector of odd bases.

    cos_factors()[i, k-1] = cos(pi * (j_i 2^s mod 2*3^k) / 3^k), the k-th
    factor of the signed cosine product for numerator j_i * 2^s.
    """

    def __init__(self, numerators):
        arr = np.asarray(list(numerators), dtype=np.uint64)
        if arr.ndim != 1:
            raise ValueError("numerators must be a 1-d sequence")
        self.numerators = arr
        self.step = 0
        self.res = arr[:, None] % TABLE_MODS[None, :]

    def advance(self) -> None:
        self.res = (self.res << np.uint64(1)) % TABLE_MODS
        self.step += 1

    def cos_factors(self) -> np.ndarray:
        x = self.res.astype(np.float64) / TABLE_POW3
        return np.cos(np.pi * x)


def residue_for_step(j0: int, s: int, k: int) -> int:
    """(j0 * 2^s) mod 2*3^k without materializing j0 * 2^s."""
    m = 2 * 3**k
    return (j0 % m) * pow(2, s, m) % m


def product_upper_continue(
    j0: int, s: int, k_from: int, log_partial: float, stop_log: float, tol: float
) -> tuple[float, float, int, bool]:
    """Extend a partial certified log-product beyond the table depth.

    Starting from sum over k < k_from of certified-log factors for numerator
    j0 * 2^s, multiply factors upward until either the certified upper bound
    drops below stop_log (returns early) or the cutoff for tol is reached
    (full product: returns certified (log_lo, log_hi)).

    Returns (log_lo, log_hi, k_reached, resolved_below): when resolved_below
    is True only log_hi (< stop_log) is meaningful.
    """
    j_full_bits = j0.bit_length() + s
    # cutoff estimate without materializing the frequency
    k_geo = max(1, math.ceil((j_full_bits + 1) / _LOG2_3) - 2)
    while k_geo * _LOG2_3 <= j_full_bits + 1:
        k_geo += 1
    log2_j = math.log2(j0) + s
    log2_tail = 2.0 * (log2_j + math.log2(math.pi)) - 2.0 * k_geo * _LOG2_3 - 4.0
    log2_tol = math.log2(tol)
    k_cut = k_geo + max(0, math.ceil((log2_tail - log2_tol) / (2.0 * _LOG2_3)))

    log_hi = log_partial
    slack = 0.0
    k = k_from
    while k <= k_cut:
        rho = residue_for_step(j0, s, k)
        x = ((rho << 61) // 3**k) * 2.0**-61
        c = abs(math.cos(math.pi * x))
        delta = abs(math.sin(math.pi * x)) * 1.5e-15 + 2.5e-16
        if c <= 2.0 * delta:
            return -math.inf, log_hi + math.log(c + delta), k, True
        log_hi += math.log(c)
        slack += delta / (c - delta) + _LOG_SLACK
        if log_hi + slack < stop_log:
            return -math.inf, log_hi + slack, k, True
        k += 1
    tail = min(0.5, 2.0 ** (2.0 * (log2_j + math.log2(math.pi)) - 2.0 * k_cut * _LOG2_3 - 4.0))
    log_lo = log_hi - slack + math.log1p(-tail)
    return log_lo, log_hi + slack, k_cut, False
