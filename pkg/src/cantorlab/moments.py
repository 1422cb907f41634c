"""Expectation and variance of bump sums along doubling orbits, two ways.

The additive functional S_N(x) = sum_{n<=N} f_n(2^n x) (f_n the bump at
target x_n with radii (a, b) * n^-theta) is integrated against the Cantor
measure by two independent routes:

* Fourier quadrature: int f_n(2^n x) dmu = sum_l c_{l,n} mu_hat(l 2^n); the
  l = 0 terms give the leading sum of mean values, the |l| <= L window is
  evaluated with certified transform values, and the |l| > L tail is bounded
  in closed form from the coefficient decay |c_l| <= min(c_0, A2/l^2, A4/l^4).
* Monte Carlo: sample mean of S_N over independent Cantor points, with the
  sample standard error as the error bar.

Agreement of the two inside their combined error bars is the oracle pairing
used by the acceptance suite; variance scans and the growth of the leading
term are instrumented alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bump as bump_mod
from . import fourier
from . import orbit as orbit_mod
from .counting import ApproxFunction, TargetSequence
from .parallel import ordered_map

_TWO_PI_SQ = 2.0 * math.pi**2
_LOG2_3 = math.log2(3.0)


@dataclass(frozen=True)
class BumpFamily:
    """The bump sequence f_n: radii (a, b) * n^-theta around targets x_n."""

    a: float
    b: float
    theta: float
    targets: TargetSequence

    def __post_init__(self):
        if not 0.0 < self.a < self.b:
            raise ValueError("need 0 < a < b")
        if self.b >= 0.5:
            raise ValueError("need b < 1/2 so that f_1 is non-degenerate")
        if self.theta < 0.0:
            raise ValueError("theta must be >= 0")

    def bump(self, n: int) -> bump_mod.BumpFunction:
        center = float(self.targets.array(n)[n - 1])
        return bump_mod.make_bump(
            bump_mod.BumpSpec(n=n, center=center, a=self.a, b=self.b, theta=self.theta)
        )

    def scales(self, n_max: int) -> np.ndarray:
        return np.arange(1, n_max + 1, dtype=float) ** (-self.theta)

    def mean_values(self, n_max: int) -> np.ndarray:
        """c_{0,n} = (a + b) n^-theta for n = 1..n_max."""
        return (self.a + self.b) * self.scales(n_max)

    def describe(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "theta": self.theta,
            "targets": self.targets.describe(),
        }


@dataclass
class MomentEstimate:
    """One estimate of E[S_N] (or kin) with a defensible error bar."""

    N: int
    value: float
    error_bar: float
    method: str
    sample_count: int | None = None
    truncation: int | None = None
    components: dict = field(default_factory=dict)


def _sum_inverse_powers(theta: float, n_max: int) -> float:
    return float(np.sum(np.arange(1, n_max + 1, dtype=float) ** (-theta)))


def default_truncation(n_max: int) -> int:
    """The proof-mirroring default Fourier window, ceil(N^0.03)."""
    return max(1, math.ceil(n_max**0.03))


def expectation_fourier(
    n_max: int,
    truncation: int | None,
    family: BumpFamily,
    tol: float = fourier.DEFAULT_TOL,
    zero_eps: float = 1e-9,
) -> MomentEstimate:
    """Fourier-quadrature estimate of E[S_N] with a certified error bar.

    For each (n, l) with 1 <= l <= truncation the transform value
    mu_hat(l 2^n) is taken exactly (certified product) when its cutoff fits
    the doubling table, declared zero with an error credit when the certified
    upper bound sinks below zero_eps, and otherwise evaluated by the scalar
    certified continuation.  truncation=None uses the ceil(N^0.03) default
    (note the certified tail of so small a window is large; oracle
    comparisons use a window sized to their tolerance).
    """
    if truncation is None:
        truncation = default_truncation(n_max)
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    L = truncation
    centers = family.targets.array(n_max)
    scales = family.scales(n_max)
    c0 = (family.a + family.b) * scales
    leading = float(np.sum(c0))

    ls = np.arange(1, L + 1, dtype=float)
    log2_2l = np.log2(2.0 * ls)
    table = fourier.DoublingProductTable([2 * l for l in range(1, L + 1)])
    table.advance()  # step 1: numerators 2*l*2^1, i.e. frequency l*2^1

    correction = 0.0
    err_values = 0.0
    err_zero = 0.0
    n_exact = n_zero = n_continued = 0

    log_zero = math.log(zero_eps)
    slack_flat = fourier.TABLE_COS_SLACK

    for n in range(1, n_max + 1):
        f_n = bump_mod.make_bump(
            bump_mod.BumpSpec(
                n=n, center=float(centers[n - 1]), a=family.a, b=family.b,
                theta=family.theta,
            )
        )
        ghat = bump_mod.centered_transform(f_n, np.arange(1, L + 1))
        re_c = ghat * np.cos(2.0 * math.pi * ls * f_n.center)

        # cutoffs for numerators j = 2 l 2^n
        log2_j = log2_2l + n
        k_geo = np.ceil((log2_j + 1.0 + 1e-9) / _LOG2_3)
        log2_tail = 2.0 * (log2_j + math.log2(math.pi)) - 2.0 * k_geo * _LOG2_3 - 4.0
        extra = np.ceil(np.maximum(0.0, (log2_tail - math.log2(tol)) / (2.0 * _LOG2_3)))
        k_req = (k_geo + extra).astype(np.int64)

        factors = table.cos_factors()
        ac = np.abs(factors)
        with np.errstate(divide="ignore"):
            logs = np.log(ac)
        neg = factors < 0.0
        safe = np.maximum(ac - slack_flat, 1e-300)
        slack = slack_flat / safe + fourier._LOG_SLACK
        cum_log = np.cumsum(logs, axis=1)
        cum_slack = np.cumsum(slack, axis=1)
        cum_neg = np.cumsum(neg, axis=1)

        exact_mask = k_req <= fourier.TABLE_K
        if np.any(exact_mask):
            idx = np.nonzero(exact_mask)[0]
            kk = k_req[idx] - 1
            mid = cum_log[idx, kk]
            width = cum_slack[idx, kk]
            tail = np.exp2(
                2.0 * (log2_j[idx] + math.log2(math.pi))
                - 2.0 * k_req[idx] * _LOG2_3 - 4.0
            )
            sign = np.where(cum_neg[idx, kk] % 2 == 1, -1.0, 1.0)
            mag = np.exp(mid)
            vals = sign * mag
            correction += float(np.sum(2.0 * re_c[idx] * vals))
            err_values += float(
                np.sum(2.0 * np.abs(re_c[idx]) * (mag * (width + tail) + 1e-300))
            )
            n_exact += len(idx)

        rest = np.nonzero(~exact_mask)[0]
        if len(rest) > 0:
            hi39 = cum_log[rest, -1] + cum_slack[rest, -1]
            below = hi39 < log_zero
            idx_below = rest[below]
            err_zero += float(np.sum(2.0 * np.abs(re_c[idx_below]) * zero_eps))
            n_zero += len(idx_below)
            for i in rest[~below]:
                l = int(i) + 1
                lo, hi, _, resolved = fourier.product_upper_continue(
                    2 * l, n, fourier.TABLE_K + 1,
                    float(cum_log[i, -1]), log_zero, tol,
                )
                lo -= float(cum_slack[i, -1])
                hi += float(cum_slack[i, -1])
                if resolved or hi < log_zero:
                    err_zero += 2.0 * abs(re_c[i]) * max(zero_eps, math.exp(min(hi, 0.0)))
                    n_zero += 1
                else:
                    value = fourier.mu_hat_geometric(l, n, tol)
                    correction += 2.0 * re_c[i] * value.signed_value
                    err_values += 2.0 * abs(re_c[i]) * value.truncation_error
                    n_continued += 1
        table.advance()

    # coefficient tail beyond |l| = L, closed form from derivative bounds
    w = (family.b - family.a) * scales
    a2 = (bump_mod.SUP_D2_CONST / w**2) / (4.0 * math.pi**2)
    a4 = (600.0 / w**3) / (2.0 * math.pi) ** 4
    tail_l2 = 2.0 * a2 / L
    tail_l4 = 2.0 * a4 / (3.0 * L**3) * (1.0 + 2.0 / L)
    coef_tail = float(np.sum(np.minimum(tail_l2, tail_l4)))

    error_bar = coef_tail + err_values + err_zero + 1e-9
    return MomentEstimate(
        N=n_max,
        value=leading + correction,
        error_bar=error_bar,
        method="fourier",
        truncation=L,
        components={
            "leading": leading,
            "correction": correction,
            "coef_tail": coef_tail,
            "value_width": err_values,
            "zero_credit": err_zero,
            "pairs_exact": n_exact,
            "pairs_zero": n_zero,
            "pairs_continued": n_continued,
        },
    )


def _bump_sum_profile(point, n_max: int, a: float, b: float, theta: float,
                      centers: np.ndarray, guard_bits: int) -> np.ndarray:
    """Per-step bump values f_n(frac(2^n x)) for n = 1..n_max."""
    tab = orbit_mod.orbit_table(point, n_max, guard_bits)
    v = tab.values[1:]
    scales = np.arange(1, n_max + 1, dtype=float) ** (-theta)
    r_in = a * scales
    r_out = b * scales
    w = r_out - r_in
    delta = np.abs(v - centers) % 1.0
    dist = np.minimum(delta, 1.0 - delta)
    contrib = np.zeros(n_max)
    contrib[dist <= r_in] = 1.0
    trans = (dist > r_in) & (dist < r_out)
    contrib[trans] = bump_mod.smoothstep((r_out[trans] - dist[trans]) / w[trans])
    return contrib


def _mc_worker(args) -> tuple:
    (seed, index, n_max, a, b, theta, target_desc, guard_bits, checkpoints) = args
    targets = TargetSequence(**target_desc)
    centers = targets.array(n_max)
    depth = orbit_mod.required_depth(n_max, guard_bits, base=3)
    point = orbit_mod.sample_cantor(seed, index, depth)
    contrib = _bump_sum_profile(point, n_max, a, b, theta, centers, guard_bits)
    cums = np.cumsum(contrib)
    return (index, tuple(float(cums[k - 1]) for k in checkpoints))


def _run_mc(family: BumpFamily, checkpoints, m: int, seed: int,
            workers: int, guard_bits: int) -> np.ndarray:
    n_max = max(checkpoints)
    target_desc = dict(family.targets.describe())
    if family.targets.kind == "file":
        target_desc = {"kind": "file", "path": family.targets.path,
                       "_file_values": family.targets._file_values}
    jobs = [
        (seed, i, n_max, family.a, family.b, family.theta, target_desc,
         guard_bits, tuple(checkpoints))
        for i in range(m)
    ]
    rows = ordered_map(_mc_worker, jobs, workers=workers)
    return np.array([r[1] for r in rows])  # shape (m, len(checkpoints))


def expectation_mc(
    n_max: int,
    m: int,
    seed: int,
    family: BumpFamily,
    workers: int = 1,
    guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> MomentEstimate:
    """Monte Carlo estimate of E[S_N]: sample mean with standard error."""
    if m < 2:
        raise ValueError("m must be >= 2")
    samples = _run_mc(family, [n_max], m, seed, workers, guard_bits)[:, 0]
    value = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(m))
    return MomentEstimate(
        N=n_max, value=value, error_bar=se, method="monte-carlo", sample_count=m,
        components={"sample_sd": float(np.std(samples, ddof=1))},
    )


@dataclass
class VarianceScan:
    """Empirical Var[S_N] across an N grid with the fitted growth exponent."""

    n_grid: list
    means: np.ndarray
    variances: np.ndarray
    relative: np.ndarray  # Var / mean^2
    growth_exponent: float
    sample_count: int

    def payload(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "means": [float(x) for x in self.means],
            "variances": [float(x) for x in self.variances],
            "relative": [float(x) for x in self.relative],
            "growth_exponent": float(self.growth_exponent),
            "sample_count": self.sample_count,
        }


def variance_mc(
    n_grid,
    m: int,
    seed: int,
    family: BumpFamily,
    workers: int = 1,
    guard_bits: int = orbit_mod.DEFAULT_GUARD_BITS,
) -> VarianceScan:
    """Sample variance of S_N at each N of an increasing grid (one orbit pass)."""
    n_grid = [int(x) for x in n_grid]
    if len(n_grid) < 1 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if m < 2:
        raise ValueError("m must be >= 2 for an unbiased sample variance")
    table = _run_mc(family, n_grid, m, seed, workers, guard_bits)
    means = table.mean(axis=0)
    variances = table.var(axis=0, ddof=1)
    relative = variances / means**2
    if len(n_grid) >= 2:
        slope = float(np.polyfit(np.log(n_grid), np.log(variances), 1)[0])
    else:
        slope = float("nan")
    return VarianceScan(
        n_grid=n_grid,
        means=means,
        variances=variances,
        relative=relative,
        growth_exponent=slope,
        sample_count=m,
    )


@dataclass
class GrowthFit:
    """Fitted exponent of the leading-term sum (a+b) sum_{n<=N} n^-theta."""

    theta: float
    exponent: float
    n_grid: list
    sums: list


def growth_check(theta: float, n_grid=None, coefficient: float = 1.0) -> GrowthFit:
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    if n_grid is None:
        n_grid = [10**3, 10**4, 10**5, 10**6]
    n_grid = [int(x) for x in n_grid]
    top = max(n_grid)
    cums = np.cumsum(np.arange(1, top + 1, dtype=float) ** (-theta))
    sums = [coefficient * float(cums[k - 1]) for k in n_grid]
    exponent = float(np.polyfit(np.log(n_grid), np.log(sums), 1)[0])
    return GrowthFit(theta=theta, exponent=exponent, n_grid=n_grid, sums=sums)
