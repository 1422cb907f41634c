"""Exact circle points from digit streams and certified doubling-map orbits.

A point of the circle R/Z is represented by a truncated digit expansion in
base 2 or base 3: a numerator p and a depth M encoding the rational p/base^M.
Cantor-set points use base 3 with digits restricted to {0, 2}; the uniform
(Lebesgue) sampler uses base 2.  A point is *exact* when it equals p/base^M
on the nose (explicit digit input, trailing zeros); sampled points stand for
an unknown continuation, so the true value lies in [p/base^M, p/base^M +
base^-M] and every derived quantity carries that certificate.

Orbits of the doubling map T(x) = 2x mod 1 are computed two ways:

* `OrbitCursor` keeps the exact residue 2^n * p mod base^M and advances by
  doubling; this is the reference implementation of the contract.
* `orbit_table` renders the point in binary once (a single large division)
  and reads every frac(2^n x) as a 64-bit bit window; it is numerically
  identical within the stated certificates and vastly faster for long runs.

The precision window: the orbit-value error after n steps is 2^n * base^-M,
so a cursor of depth M is usable while n <= M*log2(base) - guard_bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

LOG2_3 = math.log2(3.0)
DEFAULT_GUARD_BITS = 64

# Extra binary guard appended when rendering a point in base 2; keeps the
# rendering error (2^-(n_max+PAD)) far below the per-step window error 2^-64.
_TABLE_PAD = 128

_U64 = np.uint64
_FULL64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_TWO64 = 2.0**64


class PrecisionExhaustedError(RuntimeError):
    """Raised when an orbit is driven past its certified precision window."""

    def __init__(self, message: str, max_safe_step: int | None = None):
        super().__init__(message)
        self.max_safe_step = max_safe_step


def required_depth(n_steps: int, guard_bits: int = DEFAULT_GUARD_BITS, base: int = 3) -> int:
    """Smallest depth M with n_steps <= M*log2(base) - guard_bits.

    With this depth the orbit-value error at step n_steps is at most
    2^-guard_bits.
    """
    if base == 2:
        return int(n_steps) + int(guard_bits)
    depth = math.ceil((n_steps + guard_bits) / math.log2(base))
    while depth * math.log2(base) - guard_bits < n_steps:
        depth += 1
    return depth


def max_safe_step(depth: int, guard_bits: int = DEFAULT_GUARD_BITS, base: int = 3) -> int:
    """Largest step n with certified error 2^n * base^-depth <= 2^-guard_bits."""
    if base == 2:
        return int(depth) - int(guard_bits)
    n = math.floor(depth * math.log2(base) - guard_bits)
    while (n + 1) <= depth * math.log2(base) - guard_bits:
        n += 1
    while n > 0 and n > depth * math.log2(base) - guard_bits:
        n -= 1
    return n


def _digits_to_int(digits, base: int) -> int:
    """Digit sequence (most significant first) -> integer, divide and conquer."""
    digits = list(digits)
    powers: dict[int, int] = {}

    def power(k: int) -> int:
        if k not in powers:
            powers[k] = base**k
        return powers[k]

    def rec(lo: int, hi: int) -> int:
        if hi - lo <= 512:
            acc = 0
            for j in range(lo, hi):
                acc = acc * base + digits[j]
            return acc
        mid = (lo + hi) // 2
        return rec(lo, mid) * power(hi - mid) + rec(mid, hi)

    return rec(0, len(digits)) if digits else 0


def _int_to_digits(value: int, depth: int, base: int) -> list[int]:
    """Inverse of _digits_to_int (most significant first, fixed width)."""
    if depth == 0:
        return []
    if depth <= 512:
        out = []
        for _ in range(depth):
            value, d = divmod(value, base)
            out.append(d)
        return out[::-1]
    lo_width = depth // 2
    hi, lo = divmod(value, base**lo_width)
    return _int_to_digits(hi, depth - lo_width, base) + _int_to_digits(lo, lo_width, base)


@dataclass(frozen=True)
class CirclePoint:
    """A digit-stream point of R/Z: the rational numerator/base^depth.

    When exact is False the digits are a truncation and the true point lies
    in [numerator/base^depth, numerator/base^depth + base^-depth].
    """

    numerator: int
    depth: int
    base: int = 3
    exact: bool = False
    provenance: str = "explicit"

    def __post_init__(self):
        if self.base not in (2, 3):
            raise ValueError(f"unsupported base {self.base}")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not 0 <= self.numerator < self.base**self.depth:
            raise ValueError("numerator out of range for depth")

    @cached_property
    def modulus(self) -> int:
        return self.base**self.depth

    @property
    def value(self) -> float:
        """Float approximation of numerator/base^depth (error < 2^-52)."""
        return ((self.numerator << 63) // self.modulus) * 2.0**-63

    def max_safe_step(self, guard_bits: int = DEFAULT_GUARD_BITS) -> int:
        if self.exact:
            return 2**62  # no truncation error: the window never closes
        return max_safe_step(self.depth, guard_bits, self.base)

    def truncation_width(self) -> float:
        """Width of the certified interval containing the true point."""
        return 0.0 if self.exact else 2.0 ** (-self.depth * math.log2(self.base))

    def digit_string(self) -> str:
        """Digits in the point's own base, most significant first."""
        return "".join(str(d) for d in _int_to_digits(self.numerator, self.depth, self.base))


@dataclass(frozen=True)
class CantorPoint(CirclePoint):
    """Base-3 point with digits in {0, 2}: an element of the Cantor set."""

    base: int = 3


def from_ternary(digits) -> CantorPoint:
    """Exact Cantor point from a {0,2} digit sequence (string or iterable)."""
    if isinstance(digits, str):
        seq = [int(c) for c in digits]
    else:
        seq = [int(d) for d in digits]
    if not seq:
        raise ValueError("empty digit sequence")
    bad = sorted({d for d in seq if d not in (0, 2)})
    if bad:
        raise ValueError(f"ternary Cantor digits must be in {{0, 2}}, got {bad}")
    return CantorPoint(
        numerator=_digits_to_int(seq, 3), depth=len(seq), exact=True, provenance="explicit"
    )


def from_binary(digits) -> CirclePoint:
    """Exact base-2 circle point from a {0,1} digit sequence."""
    if isinstance(digits, str):
        seq = [int(c) for c in digits]
    else:
        seq = [int(d) for d in digits]
    if not seq:
        raise ValueError("empty digit sequence")
    bad = sorted({d for d in seq if d not in (0, 1)})
    if bad:
        raise ValueError(f"binary digits must be in {{0, 1}}, got {bad}")
    return CirclePoint(
        numerator=_digits_to_int(seq, 2), depth=len(seq), base=2, exact=True,
        provenance="explicit",
    )


def _sample_bits(master_seed: int, index: int, depth: int) -> np.ndarray:
    """Deterministic fair bits for sample (master_seed, index).

    One PCG64 stream per (seed, index); bits are prefix-stable in depth, so
    re-sampling at a larger depth extends the digit stream.
    """
    rng = np.random.default_rng((int(master_seed), int(index)))
    return (rng.random(depth) < 0.5).astype(np.uint8)


def sample_cantor(master_seed: int, index: int, depth: int) -> CantorPoint:
    """Cantor-measure sample: iid fair ternary digits from {0, 2}.

    Fully determined by (master_seed, index); identical across runs and
    worker counts.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    digits = _sample_bits(master_seed, index, depth) * 2
    return CantorPoint(
        numerator=_digits_to_int(digits.tolist(), 3),
        depth=depth,
        exact=False,
        provenance=f"sampled(seed={int(master_seed)},index={int(index)})",
    )


def sample_uniform(master_seed: int, index: int, depth: int) -> CirclePoint:
    """Lebesgue sample: iid fair binary digits, same determinism contract."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    digits = _sample_bits(master_seed, index, depth)
    return CirclePoint(
        numerator=_digits_to_int(digits.tolist(), 2),
        depth=depth,
        base=2,
        exact=False,
        provenance=f"sampled(seed={int(master_seed)},index={int(index)})",
    )


def sample_cantor_values(master_seed: int, count: int, depth: int = 40) -> np.ndarray:
    """Batch of `count` independent Cantor-sample values as floats.

    Single-stream helper for Monte Carlo quadrature oracles; uses one PCG64
    stream (seed tagged), not the per-index streams of `sample_cantor`.
    """
    rng = np.random.default_rng((int(master_seed), 0x6D63))  # tag: batch stream
    bits = rng.random((count, depth)) < 0.5
    weights = 2.0 * np.power(3.0, -np.arange(1, depth + 1))
    return bits @ weights


@dataclass(frozen=True)
class CircleValue:
    """A value in [0, 1) (or a distance in [0, 1/2]) with an error bound."""

    value: float
    error: float = 0.0

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error bound must be >= 0")


def circle_dist(a: float, b: float) -> float:
    """Distance on R/Z: min over integers k of |a - b - k|, in [0, 1/2]."""
    d = abs(a - b) % 1.0
    return d if d <= 0.5 else 1.0 - d


def circle_distance(u, v) -> CircleValue:
    """Certified circle distance; accepts floats or CircleValue operands."""
    ua, ue = (u.value, u.error) if isinstance(u, CircleValue) else (float(u), 0.0)
    va, ve = (v.value, v.error) if isinstance(v, CircleValue) else (float(v), 0.0)
    # 4 ulps covers the subtraction/abs/mod rounding of circle_dist.
    return CircleValue(circle_dist(ua, va), ue + ve + 4e-16)


@dataclass(frozen=True)
class OrbitCursor:
    """Exact residue state of frac(2^step * x) for a digit-stream point.

    residue = 2^step * numerator mod base^depth, so residue/base^depth equals
    frac(2^step * p/base^depth) exactly; the certified circle distance to
    frac(2^step * x_true) is 2^step * base^-depth (zero for exact points).
    """

    residue: int
    step: int
    depth: int
    base: int
    modulus: int
    guard_bits: int
    exact: bool

    def max_safe_step(self) -> int:
        if self.exact:
            return 2**62
        return max_safe_step(self.depth, self.guard_bits, self.base)

    def error_bound(self) -> float:
        if self.exact:
            return 0.0
        return 2.0 ** (self.step - self.depth * math.log2(self.base))

    def advance(self) -> "OrbitCursor":
        nxt = self.step + 1
        if nxt > self.max_safe_step():
            raise PrecisionExhaustedError(
                f"orbit step {nxt} exceeds the precision window for depth "
                f"{self.depth} (base {self.base}); maximal safe step is "
                f"{self.max_safe_step()}",
                max_safe_step=self.max_safe_step(),
            )
        r = self.residue << 1
        if r >= self.modulus:
            r -= self.modulus
        return replace(self, residue=r, step=nxt)

    def value(self) -> CircleValue:
        # scaled-division truncation 2^-63 plus float64 representation rounding
        v = ((self.residue << 63) // self.modulus) * 2.0**-63
        return CircleValue(v, self.error_bound() + 2.0**-52)


def start_cursor(point: CirclePoint, guard_bits: int = DEFAULT_GUARD_BITS) -> OrbitCursor:
    return OrbitCursor(
        residue=point.numerator,
        step=0,
        depth=point.depth,
        base=point.base,
        modulus=point.modulus,
        guard_bits=guard_bits,
        exact=point.exact,
    )


def orbit_advance(cursor: OrbitCursor) -> OrbitCursor:
    """Advance frac(2^n x) by one doubling (residue <- 2*residue mod base^M)."""
    return cursor.advance()


def _binary_rendering(point: CirclePoint, total_bits: int) -> int:
    """floor(numerator / base^depth * 2^total_bits): the point in binary."""
    if point.base == 2:
        shift = total_bits - point.depth
        if shift >= 0:
            return point.numerator << shift
        return point.numerator >> (-shift)
    return (point.numerator << total_bits) // point.modulus


@dataclass
class OrbitTable:
    """Vectorized orbit values v[n] ~ frac(2^n x) for n = 0..n_max.

    band[n] bounds the circle distance from v[n] to frac(2^n * x_true); it
    combines the 64-bit window truncation, the binary rendering error and the
    digit-stream truncation 2^n * base^-depth.
    """

    point: CirclePoint
    n_max: int
    values: np.ndarray
    band: np.ndarray
    bits: np.ndarray  # binary digits b_1..b_{n_max+PAD} of numerator/base^depth

    def value(self, n: int) -> float:
        return float(self.values[n])


def orbit_table(
    point: CirclePoint, n_max: int, guard_bits: int = DEFAULT_GUARD_BITS
) -> OrbitTable:
    """Render the whole orbit frac(2^n x), n = 0..n_max, in one pass."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    safe = point.max_safe_step(guard_bits)
    if n_max > safe:
        raise PrecisionExhaustedError(
            f"n_max={n_max} exceeds the precision window for depth {point.depth} "
            f"(base {point.base}); maximal safe step is {safe}",
            max_safe_step=safe,
        )
    total_bits = n_max + _TABLE_PAD
    y = _binary_rendering(point, total_bits)
    nbytes = (total_bits + 7) // 8
    raw = y.to_bytes(nbytes + 8, "big")  # zero-padded head keeps windows in range
    b = np.frombuffer(raw, dtype=np.uint8)
    # bit b_1 of the rendering sits at absolute bit index `anchor`
    anchor = len(raw) * 8 - total_bits
    win = sliding_window_view(b, 9)
    hi = win[:, :8].copy().view(">u8").ravel().astype(_U64)
    lo = win[:, 8].astype(_U64)

    n = np.arange(n_max + 1)
    bit_pos = anchor + n  # window for v[n]: bits b_{n+1}..b_{n+64}
    byte_idx = bit_pos // 8
    off = (bit_pos % 8).astype(_U64)
    h = hi[byte_idx]
    l8 = lo[byte_idx]
    shifted = np.where(off == 0, h, (h << off) | (l8 >> (_U64(8) - off)))
    values = shifted.astype(np.float64) * (1.0 / _TWO64)

    # 64-bit window truncation + uint64->float64 rounding (2^-53) + rendering
    # error + digit-stream truncation
    band = np.full(n_max + 1, 2.0**-64 + 2.0**-52)
    if not point.exact:
        band = band + np.exp2(n - point.depth * math.log2(point.base))

    all_bits = np.unpackbits(b)
    bits = all_bits[anchor:]
    return OrbitTable(point=point, n_max=n_max, values=values, band=band, bits=bits)


@dataclass
class BinaryDigits:
    """Dyadic digits of the true point with per-digit ambiguity flags."""

    digits: np.ndarray
    ambiguous: np.ndarray

    def __iter__(self):
        return iter(zip(self.digits.tolist(), self.ambiguous.tolist()))


def binary_digits(point: CirclePoint, count: int, guard_bits: int = DEFAULT_GUARD_BITS) -> BinaryDigits:
    """First `count` dyadic digits a_1..a_count of the true point.

    A digit is definite when the certified interval for the point cannot
    straddle a carry at that position; otherwise it is flagged ambiguous.
    For exact points every digit is definite.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    safe = point.max_safe_step(guard_bits)
    if count > safe:
        raise PrecisionExhaustedError(
            f"count={count} exceeds the precision window for depth {point.depth}; "
            f"maximal safe digit index is {safe}",
            max_safe_step=safe,
        )
    total_bits = count + _TABLE_PAD
    y = _binary_rendering(point, total_bits)
    raw = y.to_bytes((total_bits + 7) // 8, "big")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    bits = bits[len(bits) - total_bits:]  # b_1..b_total

    digits = bits[:count].copy()
    if point.exact and point.base == 2:
        # rendering is exact: no interval at all
        return BinaryDigits(digits=digits, ambiguous=np.zeros(count, dtype=bool))

    # True point lies in [y*2^-T, y*2^-T + E]: digit a_n can flip only if
    # bits b_{n+1}..b_{j*} are all ones down to the scale of E (carry), so a
    # zero bit at some j* with 2^-j* > E makes a_n definite.
    if point.exact:
        log2_e = float(1 - total_bits)
    else:
        log2_e = max(float(-total_bits), -point.depth * math.log2(point.base)) + 1.0
    reach = int(math.floor(-log2_e)) - 1  # E < 2^-reach strictly
    reach = max(0, min(reach, total_bits))
    tail = bits[:reach] == 1
    # all_ones_from[i] = True iff bits with 0-based indices i..reach-1 are all 1
    if reach > 0:
        all_ones_from = np.flip(np.logical_and.accumulate(np.flip(tail)))
    else:
        all_ones_from = np.zeros(0, dtype=bool)
    ambiguous = np.ones(count, dtype=bool)
    idx = np.arange(count)
    inside = idx + 1 < reach  # digit a_{i+1} needs a zero among indices i+1..reach-1
    ambiguous[inside] = all_ones_from[idx[inside] + 1]
    return BinaryDigits(digits=digits, ambiguous=ambiguous)
