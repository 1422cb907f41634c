"""Shrinking-target hit counting along doubling-map orbits.

A run asks, for n = 1..N, whether the orbit value frac(2^n x) lands within
psi(n) of the moving target x_n, with psi(n) = c * n^-theta.  The cumulative
hit count is compared to the predicted mass sum(min(2 psi(k), 1)) (a circle
ball of radius >= 1/2 is everything).  Hits are decided against certified
orbit values; a decision falling inside the certificate band is retried once
at doubled digit depth and then conservatively counted as a hit with a
warning tally.

Two independent decision routes are provided: `count_hits` works on the
vectorized orbit table in floating point, while `dyadic_hits` re-derives the
zero-target run through the incremental big-integer residue recurrence and
exact rational comparisons.  Their row-for-row agreement is a cross-check of
both engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import orbit as orbit_mod
from .parallel import ordered_map

_TARGET_STREAM_TAG = 0x7467  # distinguishes the target stream from samplers


@dataclass(frozen=True)
class ApproxFunction:
    """Power-law radius schedule psi(n) = c * n^-theta."""

    c: float
    theta: float

    def __post_init__(self):
        if self.c <= 0.0:
            raise ValueError("scale c must be positive")
        if self.theta < 0.0:
            raise ValueError("theta must be >= 0")

    def psi(self, n):
        return self.c * np.asarray(n, dtype=float) ** (-self.theta)

    def mass(self, n):
        """Effective target mass min(2 psi(n), 1) of the circle ball."""
        return np.minimum(2.0 * self.psi(n), 1.0)

    def psi_array(self, n_max: int) -> np.ndarray:
        return self.psi(np.arange(1, n_max + 1))

    def mass_array(self, n_max: int) -> np.ndarray:
        return self.mass(np.arange(1, n_max + 1))

    def describe(self) -> dict:
        return {"c": self.c, "theta": self.theta}

    @property
    def divergent(self) -> bool:
        """Whether sum psi(n) diverges (p-series: theta <= 1)."""
        return self.theta <= 1.0


@dataclass(frozen=True)
class TargetSequence:
    """Deterministic target accessor x_n for n 1: zero, constant, iid-uniform
    (seeded), or one decimal in [0,1) per line of a file (line n is x_n)."""

    kind: str
    value: float = 0.0
    seed: int = 0
    path: str = ""
    _file_values: tuple = field(default=(), repr=False)

    @classmethod
    def zero(cls) -> "TargetSequence":
        return cls(kind="zero")

    @classmethod
    def constant(cls, v: float) -> "TargetSequence":
        if not 0.0 <= v < 1.0:
            raise ValueError("constant target must lie in [0, 1)")
        return cls(kind="constant", value=float(v))

    @classmethod
    def iid_uniform(cls, seed: int) -> "TargetSequence":
        return cls(kind="uniform", seed=int(seed))

    @classmethod
    def from_file(cls, path) -> "TargetSequence":
        values = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            x = float(line)
            if not 0.0 <= x < 1.0:
                raise ValueError(f"target {x} outside [0, 1)")
            values.append(x)
        if not values:
            raise ValueError(f"no targets in {path}")
        return cls(kind="file", path=str(path), _file_values=tuple(values))

    def array(self, n_max: int) -> np.ndarray:
        """Targets x_1..x_n_max."""
        if self.kind == "zero":
            return np.zeros(n_max)
        if self.kind == "constant":
            return np.full(n_max, self.value)
        if self.kind == "uniform":
            rng = np.random.default_rng((int(self.seed), _TARGET_STREAM_TAG))
            return rng.random(n_max)
        if self.kind == "file":
            if len(self._file_values) < n_max:
                raise ValueError(
                    f"target file has {len(self._file_values)} lines, need {n_max}"
                )
            return np.asarray(self._file_values[:n_max])
        raise ValueError(f"unknown target kind {self.kind}")

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["value"] = self.value
        elif self.kind == "uniform":
            out["seed"] = self.seed
        elif self.kind == "file":
            out["path"] = self.path
        return out


@dataclass
class CountCurve:
    """Per-step hits with cumulative counts against the predicted mass sum."""

    n: np.ndarray
    hit: np.ndarray
    hits_cum: np.ndarray
    expected_cum: np.ndarray
    ratio: np.ndarray
    meta: dict

    @classmethod
    def build(cls, hits: np.ndarray, psi: ApproxFunction, meta: dict) -> "CountCurve":
        n_max = len(hits)
        n = np.arange(1, n_max + 1)
        hits_cum = np.cumsum(hits.astype(np.int64))
        expected = np.cumsum(psi.mass_array(n_max))
        return cls(
            n=n,
            hit=hits.astype(np.uint8),
            hits_cum=hits_cum,
            expected_cum=expected,
            ratio=hits_cum / expected,
            meta=meta,
        )

    @property
    def final_hits(self) -> int:
        return int(self.hits_cum[-1])

    @property
    def final_expected(self) -> float:
        return float(self.expected_cum[-1])

    @property
    def final_ratio(self) -> float:
        return float(self.ratio[-1])

    def rows(self):
        for i in range(len(self.n)):
            yield (
                int(self.n[i]),
                int(self.hit[i]),
                int(self.hits_cum[i]),
                float(self.expected_cum[i]),
                float(self.ratio[i]),
            )


def _deepen(point: orbit_mod.CirclePoint, factor: int = 2) -> orbit_mod.CirclePoint | None:
    """Re-derive the same point at multiplied depth, when its provenance allows."""
    prov = point.provenance
    if prov.startswith("sampled(") and not point.exact:
        inner = prov[len("sampled("):-1]
        parts = dict(kv.split("=") for kv in inner.split(","))
        seed, index = int(parts["seed"]), int(parts["index"])
        if point.base == 3:
            return orbit_mod.sample_cantor(seed, index, factor * point.depth)
        return orbit_mod.sample_uniform(seed, index, factor * point.depth)
    return None


def _resolve_tie(point, n, target, psi_n, warn_counter) -> bool:
    """Tie policy: recompute once at doubled depth; still tied counts as a hit."""
    deeper = _deepen(point)
    if deeper is not None:
        r = pow(2, n, deeper.modulus) * deeper.numerator % deeper.modulus
        v = ((r << 63) // deeper.modulus) * 2.0**-63
        band = 2.0**-62 + (
            0.0 if deeper.exact
            else 2.0 ** (n - deeper.depth * math.log2(deeper.base))
        )
        d = orbit_mod.circle_dist(v, target)
        if d <= psi_n - band:
            return True
        if d > psi_n + band:
            return False
    warn_counter.append(n)
    return True


def count_hits(
    point: orbit_mod.CirclePoint,
    n_max: int,
    psi: ApproxFunction,
    targets: TargetSequence,
    guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> CountCurve:
    """Hit curve: n is a hit iff certified d(frac(2^n x), x_n) <= psi(n)."""
    table = orbit_mod.orbit_table(point, n_max, guard_bits)
    v = table.values[1:]
    band = table.band[1:] + 4e-16
    xs = targets.array(n_max)
    psi_arr = psi.psi_array(n_max)

    delta = np.abs(v - xs) % 1.0
    dist = np.minimum(delta, 1.0 - delta)
    hits = dist <= psi_arr
    tied = np.abs(dist - psi_arr) <= band
    warned: list[int] = []
    if np.any(tied):
        for i in np.nonzero(tied)[0]:
            hits[i] = _resolve_tie(point, int(i + 1), float(xs[i]), float(psi_arr[i]), warned)
    meta = {
        "engine": "count_hits",
        "point": point.provenance,
        "base": point.base,
        "depth": point.depth,
        "guard_bits": guard_bits,
        "psi": psi.describe(),
        "targets": targets.describe(),
        "tie_warnings": len(warned),
    }
    return CountCurve.build(hits, psi, meta)


def dyadic_hits(
    point: orbit_mod.CirclePoint,
    n_max: int,
    psi: ApproxFunction,
    guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> CountCurve:
    """Dyadic-rational route: n is a hit iff |x - p/2^n| <= psi(n)/2^n for some
    integer p; equivalently the nearest-integer distance of 2^n x is <= psi(n).

    Decided by the incremental residue recurrence and exact rational
    comparisons (independent of the floating orbit-table route).
    """
    safe = point.max_safe_step(guard_bits)
    if n_max > safe:
        raise orbit_mod.PrecisionExhaustedError(
            f"n_max={n_max} exceeds the precision window; maximal safe step is {safe}",
            max_safe_step=safe,
        )
    modulus = point.modulus
    psi_arr = psi.psi_array(n_max)
    hits = np.zeros(n_max, dtype=bool)
    warned: list[int] = []
    r = point.numerator
    trunc_num = 0 if point.exact else 1  # truncation width = trunc_num * 2^n / modulus... see below
    for n in range(1, n_max + 1):
        r <<= 1
        if r >= modulus:
            r -= modulus
        # nearest integer p to 2^n x is round(2^n x): distance = min(r, mod - r)/mod
        dist_num = r if 2 * r <= modulus else modulus - r
        frac_psi = Fraction(float(psi_arr[n - 1]))
        # certified: true distance within (2^n * base^-depth) of dist_num/modulus
        width = (1 << n) * trunc_num
        lhs_hi = (dist_num + width) * frac_psi.denominator
        lhs_lo = (dist_num - width) * frac_psi.denominator
        rhs = frac_psi.numerator * modulus
        if lhs_hi <= rhs:
            hits[n - 1] = True
        elif lhs_lo > rhs:
            hits[n - 1] = False
        else:
            hits[n - 1] = _resolve_tie(point, n, 0.0, float(psi_arr[n - 1]), warned)
    meta = {
        "engine": "dyadic_hits",
        "point": point.provenance,
        "base": point.base,
        "depth": point.depth,
        "guard_bits": guard_bits,
        "psi": psi.describe(),
        "targets": {"kind": "zero"},
        "tie_warnings": len(warned),
    }
    return CountCurve.build(hits, psi, meta)


@dataclass
class ZeroRunReport:
    """Positions n <= N whose next floor(c_run log2 n) dyadic digits are 0."""

    n_max: int
    c_run: float
    positions: list
    count: int
    trivial_count: int  # n with an empty required block (floor(...) == 0)
    ambiguous_digits: int

    def describe(self) -> dict:
        return {
            "n_max": self.n_max,
            "c_run": self.c_run,
            "count": self.count,
            "trivial_count": self.trivial_count,
            "ambiguous_digits": self.ambiguous_digits,
        }


def zero_run_lookahead(n_max: int, c_run: float) -> int:
    """Digits required by zero_runs: n_max plus the longest block."""
    return n_max + max(0, int(math.floor(c_run * math.log2(max(n_max, 2))))) + 1


def zero_run_depth(n_max: int, c_run: float,
                   guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS, base: int = 3) -> int:
    """Sampling depth sufficient for zero_runs(point, n_max, c_run)."""
    return orbit_mod.required_depth(zero_run_lookahead(n_max, c_run), guard_bits, base)


def zero_runs(
    point: orbit_mod.CirclePoint,
    n_max: int,
    c_run: float,
    guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> ZeroRunReport:
    if c_run < 0.0:
        raise ValueError("c_run must be >= 0")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    digits = orbit_mod.binary_digits(point, zero_run_lookahead(n_max, c_run), guard_bits)
    bits = digits.digits.astype(np.uint8)
    amb = digits.ambiguous
    n_amb = int(amb.sum())
    if n_amb:
        deeper = _deepen(point)
        if deeper is not None:
            redo = orbit_mod.binary_digits(deeper, n_max + pad, guard_bits)
            bits, amb = redo.digits.astype(np.uint8), redo.ambiguous
            n_amb = int(amb.sum())
    # remaining ambiguous digits break runs (treated as nonzero, conservatively)
    zero = (bits == 0) & ~amb

    total = len(zero)
    run_from = np.zeros(total + 1, dtype=np.int64)  # zeros starting at index i
    for i in range(total - 1, -1, -1):
        run_from[i] = run_from[i + 1] + 1 if zero[i] else 0

    ns = np.arange(1, n_max + 1)
    lengths = np.floor(c_run * np.log2(ns)).astype(np.int64)
    trivial = lengths == 0
    # block a_{n+1}..a_{n+L} starts at digit index n (0-based)
    qualifying = (~trivial) & (run_from[ns] >= lengths)
    return ZeroRunReport(
        n_max=n_max,
        c_run=c_run,
        positions=ns[qualifying].tolist(),
        count=int(qualifying.sum()),
        trivial_count=int(trivial.sum()),
        ambiguous_digits=n_amb,
    )


@dataclass
class EnsembleResult:
    """Per-sample final counts and summary statistics of the final ratios."""

    sample_index: np.ndarray
    hits: np.ndarray
    expected: float
    ratios: np.ndarray
    tie_warnings: np.ndarray
    meta: dict

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def iqr(self) -> tuple[float, float]:
        return (
            float(np.percentile(self.ratios, 25)),
            float(np.percentile(self.ratios, 75)),
        )

    def payload(self) -> dict:
        q25, q75 = self.iqr
        return {
            "meta": self.meta,
            "expected": self.expected,
            "hits": self.hits.tolist(),
            "ratios": [float(r) for r in self.ratios],
            "tie_warnings": self.tie_warnings.tolist(),
            "median_ratio": self.median_ratio,
            "mean_ratio": self.mean_ratio,
            "iqr": [q25, q75],
        }


def _ensemble_worker(args) -> tuple:
    (seed, index, n_max, c, theta, target_desc, sampler, guard_bits) = args
    psi = ApproxFunction(c=c, theta=theta)
    targets = TargetSequence(**target_desc)
    if sampler == "mu":
        depth = orbit_mod.required_depth(n_max, guard_bits, base=3)
        point = orbit_mod.sample_cantor(seed, index, depth)
    elif sampler == "lebesgue":
        depth = orbit_mod.required_depth(n_max, guard_bits, base=2)
        point = orbit_mod.sample_uniform(seed, index, depth)
    else:
        raise ValueError(f"unknown sampler {sampler}")
    curve = count_hits(point, n_max, psi, targets, guard_bits)
    return (index, curve.final_hits, curve.meta["tie_warnings"])


def ensemble(
    m: int,
    n_max: int,
    psi: ApproxFunction,
    targets: TargetSequence,
    sampler: str,
    seed: int,
    workers: int = 1,
    guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> EnsembleResult:
    """m independent hit curves; deterministic in seed, independent of workers."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if sampler not in ("mu", "lebesgue"):
        raise ValueError("sampler must be 'mu' or 'lebesgue'")
    target_desc = dict(targets.describe())
    if targets.kind == "file":
        # materialize file targets once; workers receive explicit values
        targets.array(n_max)
        target_desc = {"kind": "file", "path": targets.path,
                       "_file_values": targets._file_values}
    jobs = [
        (seed, i, n_max, psi.c, psi.theta, target_desc, sampler, guard_bits)
        for i in range(m)
    ]
    results = ordered_map(_ensemble_worker, jobs, workers=workers)
    idx = np.array([r[0] for r in results])
    hits = np.array([r[1] for r in results], dtype=np.int64)
    warns = np.array([r[2] for r in results], dtype=np.int64)
    expected = float(np.sum(psi.mass_array(n_max)))
    meta = {
        "m": m,
        "n_max": n_max,
        "psi": psi.describe(),
        "targets": targets.describe(),
        "sampler": sampler,
        "seed": seed,
        "guard_bits": guard_bits,
    }
    return EnsembleResult(
        sample_index=idx,
        hits=hits,
        expected=expected,
        ratios=hits / expected,
        tie_warnings=warns,
        meta=meta,
    )


def _zero_run_worker(args) -> tuple:
    (seed, index, n_max, c_run, guard_bits) = args
    depth = zero_run_depth(n_max, c_run, guard_bits)
    point = orbit_mod.sample_cantor(seed, index, depth)
    rep = zero_runs(point, n_max, c_run, guard_bits)
    return (index, rep.count, rep.trivial_count, rep.positions[0] if rep.positions else -1)


def zero_run_survey(
    m: int, n_max: int, c_run: float, seed: int,
    workers: int = 1, guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> list:
    """Zero-run reports over m independent Cantor samples (per-sample rows:
    index, count, trivial_count, first_position or -1).  Deterministic in
    seed, independent of workers."""
    jobs = [(seed, i, n_max, c_run, guard_bits) for i in range(m)]
    return ordered_map(_zero_run_worker, jobs, workers=workers)


def _dyadic_pair_worker(args) -> tuple:
    (seed, index, n_max, c, theta, guard_bits) = args
    psi = ApproxFunction(c=c, theta=theta)
    depth = orbit_mod.required_depth(n_max, guard_bits, base=3)
    point = orbit_mod.sample_cantor(seed, index, depth)
    a = count_hits(point, n_max, psi, TargetSequence.zero(), guard_bits)
    b = dyadic_hits(point, n_max, psi, guard_bits)
    return (index, bool(np.array_equal(a.hit, b.hit)), a.final_hits, b.final_hits)


def dyadic_agreement_survey(
    m: int, n_max: int, psi: ApproxFunction, seed: int,
    workers: int = 1, guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> list:
    """Row-for-row comparison of the two hit engines over m samples
    (per-sample rows: index, rows_equal, hits_float_route, hits_exact_route)."""
    jobs = [(seed, i, n_max, psi.c, psi.theta, guard_bits) for i in range(m)]
    return ordered_map(_dyadic_pair_worker, jobs, workers=workers)


@dataclass(frozen=True)
class ConvergenceSums:
    """Partial sums of psi and of the clamped mass, with the p-series verdict."""

    n_max: int
    sum_psi: float
    sum_mass: float
    divergent: bool


def convergence_sum(psi: ApproxFunction, n_max: int) -> ConvergenceSums:
    n = np.arange(1, n_max + 1)
    return ConvergenceSums(
        n_max=n_max,
        sum_psi=float(np.sum(psi.psi(n))),
        sum_mass=float(np.sum(psi.mass(n))),
        divergent=psi.divergent,
    )
