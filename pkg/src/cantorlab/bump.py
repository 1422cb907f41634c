"""C^2 periodic bump kernels with closed-form Fourier coefficients.

A bump at center x0 with inner half-width a*n^-theta and outer half-width
b*n^-theta equals 1 inside the inner interval, 0 outside the outer interval,
and crosses each transition of width w = (b-a)*n^-theta through the quintic
smoothstep S(t) = 6t^5 - 15t^4 + 10t^3, the minimal-degree polynomial with
C^2 gluing (S'(0)=S'(1)=S''(0)=S''(1)=0).  Consequences used downstream:

* sup|f'|  = (15/8)/w           (S' peaks at t = 1/2),
* sup|f''| = (10/sqrt(3))/w^2   (S'' peaks at t = (1 +- 1/sqrt(3))/2),
* mean value c_0 = a_radius + b_radius (each transition integrates to w/2),
* coefficient c_l carries the e(-l x0) phase of the center; the centered
  profile has real, even transform assembled from moments of S.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

SUP_D1_CONST = 15.0 / 8.0
SUP_D2_CONST = 10.0 / math.sqrt(3.0)


class DegenerateBumpError(ValueError):
    """Outer support would cover the whole circle (function constant 1)."""


def smoothstep(t):
    t = np.asarray(t, dtype=float)
    return ((6.0 * t - 15.0) * t + 10.0) * t**3


def smoothstep_d1(t):
    t = np.asarray(t, dtype=float)
    return 30.0 * t**2 * (t - 1.0) ** 2


def smoothstep_d2(t):
    t = np.asarray(t, dtype=float)
    return 60.0 * t * (2.0 * t - 1.0) * (t - 1.0)


@dataclass(frozen=True)
class BumpSpec:
    """Geometry of one bump: center and the (a, b, theta) radius schedule."""

    n: int
    center: float
    a: float
    b: float
    theta: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("index n must be >= 1")
        if not (0.0 < self.a < self.b):
            raise ValueError("need 0 < a < b")
        if self.theta < 0.0:
            raise ValueError("theta must be >= 0")

    @property
    def scale(self) -> float:
        return float(self.n) ** (-self.theta)

    @property
    def inner_halfwidth(self) -> float:
        return self.a * self.scale

    @property
    def outer_halfwidth(self) -> float:
        return self.b * self.scale

    @property
    def transition_width(self) -> float:
        return (self.b - self.a) * self.scale

    @property
    def degenerate(self) -> bool:
        return 2.0 * self.outer_halfwidth >= 1.0


class BumpFunction:
    """Evaluator for a single C^2 periodic bump, with analytic derivatives."""

    def __init__(self, spec: BumpSpec):
        if spec.degenerate:
            raise DegenerateBumpError(
                f"outer support 2*{spec.outer_halfwidth:.6g} >= 1: bump is constant 1"
            )
        self.spec = spec
        self.r_in = spec.inner_halfwidth
        self.r_out = spec.outer_halfwidth
        self.w = spec.transition_width
        self.center = spec.center % 1.0

    def _dist(self, x):
        # reduce x into [0,1) first so that f(x) == f(x+k) exactly whenever
        # x+k is exactly representable
        u = np.asarray(x, dtype=float) % 1.0
        d = np.abs(u - self.center)
        return np.minimum(d, 1.0 - d)

    def __call__(self, x):
        d = self._dist(x)
        out = np.zeros_like(d)
        out[d <= self.r_in] = 1.0
        trans = (d > self.r_in) & (d < self.r_out)
        # clip: rounding in (r_out-d)/w and the Horner form may leave [0, 1]
        t = np.clip((self.r_out - d[trans]) / self.w, 0.0, 1.0)
        out[trans] = np.clip(smoothstep(t), 0.0, 1.0)
        if out.ndim == 0:
            return float(out)
        return out

    def derivative(self, x):
        u = np.asarray(x, dtype=float) % 1.0 - self.center
        u = np.where(u < -0.5, u + 1.0, np.where(u > 0.5, u - 1.0, u))
        signed = u  # signed circle offset in [-1/2, 1/2]
        d = np.abs(signed)
        out = np.zeros_like(d)
        trans = (d > self.r_in) & (d < self.r_out)
        slope = -smoothstep_d1((self.r_out - d[trans]) / self.w) / self.w
        out[trans] = slope * np.sign(signed[trans])
        if out.ndim == 0:
            return float(out)
        return out

    def second_derivative(self, x):
        d = self._dist(x)
        out = np.zeros_like(d)
        trans = (d > self.r_in) & (d < self.r_out)
        out[trans] = smoothstep_d2((self.r_out - d[trans]) / self.w) / self.w**2
        if out.ndim == 0:
            return float(out)
        return out

    def transition_second_derivative(self, t: float) -> float:
        """f'' on a transition piece, parameterized by the smoothstep argument."""
        return float(smoothstep_d2(t)) / self.w**2

    def junctions(self) -> tuple[float, float, float, float]:
        """The four gluing points (mod 1), outermost to outermost."""
        c = self.center
        return (
            (c - self.r_out) % 1.0,
            (c - self.r_in) % 1.0,
            (c + self.r_in) % 1.0,
            (c + self.r_out) % 1.0,
        )

    def sup_first_derivative(self) -> float:
        return SUP_D1_CONST / self.w

    def sup_second_derivative(self) -> float:
        return SUP_D2_CONST / self.w**2

    def third_derivative_variation(self) -> float:
        """Total variation of f''' over one period (jump + swing, both edges)."""
        # Per transition: jumps of 60/w^3 at each end, interior swing 60->-30->60.
        return 2.0 * 300.0 / self.w**3

    def mean_value(self) -> float:
        return self.r_in + self.r_out


def make_bump(spec: BumpSpec) -> BumpFunction:
    """Construct the bump, rejecting degenerate supports."""
    return BumpFunction(spec)


# ---------------------------------------------------------------------------
# Fourier coefficients.
#
# For the centered profile g (even around 0):
#   ghat(l) = 2 [ sin(om r_in)/om + w (cos(om r_out) Ic(beta)
#                                      + sin(om r_out) Is(beta)) ]
# with om = 2 pi l, beta = om w, and Ic + i Is = int_0^1 S(t) e^(i beta t) dt.
# The moment integral is a power series for small |beta| (moments of S are
# rational) and an integration-by-parts recurrence otherwise.
# ---------------------------------------------------------------------------

_SERIES_CUT = 8.0


def _smoothstep_moment(m: int) -> float:
    return 6.0 / (m + 6) - 15.0 / (m + 5) + 10.0 / (m + 4)


def _moment_series(beta: np.ndarray) -> np.ndarray:
    out = np.zeros(beta.shape, dtype=complex)
    term = np.ones(beta.shape, dtype=complex)
    for m in range(0, 64):
        out += term * _smoothstep_moment(m)
        term = term * (1j * beta) / (m + 1)
        if m > 8 and np.all(np.abs(term) < 1e-20):
            break
    return out


def _moment_recurrence(beta: np.ndarray) -> np.ndarray:
    ib = 1j * beta
    e = np.exp(ib)
    ek = (e - 1.0) / ib
    moments = [ek]
    for k in range(1, 6):
        ek = (e - k * moments[k - 1]) / ib
        moments.append(ek)
    return 6.0 * moments[5] - 15.0 * moments[4] + 10.0 * moments[3]


def _transition_moment(beta: np.ndarray) -> np.ndarray:
    """int_0^1 S(t) e^(i beta t) dt, elementwise over beta."""
    beta = np.asarray(beta, dtype=float)
    out = np.empty(beta.shape, dtype=complex)
    small = np.abs(beta) <= _SERIES_CUT
    if np.any(small):
        out[small] = _moment_series(beta[small])
    if np.any(~small):
        out[~small] = _moment_recurrence(beta[~small])
    return out


@dataclass(frozen=True)
class FourierCoefficient:
    l: int
    value: complex
    n: int


def centered_transform(f: BumpFunction, l) -> np.ndarray:
    """Transform of the centered (even) profile: real, evaluated at integer l."""
    l = np.asarray(l, dtype=float)
    om = 2.0 * math.pi * l
    beta = om * f.w
    mom = _transition_moment(beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        plateau = np.where(l == 0, f.r_in, np.sin(om * f.r_in) / np.where(om == 0, 1.0, om))
    trans = f.w * (np.cos(om * f.r_out) * mom.real + np.sin(om * f.r_out) * mom.imag)
    return 2.0 * (plateau + trans)


def fourier_coeff(f: BumpFunction, l: int) -> FourierCoefficient:
    """c_l = int_0^1 f(x) e^(-2 pi i l x) dx, exact closed form."""
    l = int(l)
    if l == 0:
        return FourierCoefficient(l=0, value=complex(f.mean_value()), n=f.spec.n)
    g = float(centered_transform(f, l))
    phase = cmath.exp(-2j * math.pi * l * f.center)
    return FourierCoefficient(l=l, value=phase * g, n=f.spec.n)


def coefficient_table(f: BumpFunction, l_max: int) -> np.ndarray:
    """c_l for l = 0..l_max as a complex array (c_{-l} = conj(c_l))."""
    ls = np.arange(l_max + 1)
    g = centered_transform(f, ls)
    g[0] = f.mean_value()
    phase = np.exp(-2j * math.pi * ls * f.center)
    return phase * g


def partial_sum_error(f: BumpFunction, order: int, grid_size: int) -> float:
    """sup over a uniform grid of |f(x) - sum_{|l|<=order} c_l e(lx)|."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if grid_size <= 2 * order:
        raise ValueError("grid_size must exceed 2*order")
    coeffs = coefficient_table(f, order)
    spectrum = np.zeros(grid_size, dtype=complex)
    spectrum[0] = coeffs[0]
    spectrum[1 : order + 1] = coeffs[1:]
    spectrum[-order:] = np.conj(coeffs[1:][::-1])
    series = np.fft.ifft(spectrum * grid_size)
    xs = np.arange(grid_size) / grid_size
    return float(np.max(np.abs(f(xs) - series.real)))


@dataclass(frozen=True)
class SandwichReport:
    """Indicator sandwich audit for the upper/lower bump families."""

    n: int
    theta: float
    eps: float
    upper_dominates: bool      # 1[d(x, x0) <= n^-theta] <= f_upper pointwise
    lower_dominated: bool      # f_lower <= 1[d(x, x0) <= n^-theta] pointwise
    mean_bound_holds: bool     # c_0 of the upper family <= 2 (1+eps) n^-theta
    upper_mean: float

    @property
    def ok(self) -> bool:
        return self.upper_dominates and self.lower_dominated and self.mean_bound_holds


def sandwich_check(
    n: int, center: float, theta: float, eps: float, grid_size: int = 20001
) -> SandwichReport:
    """Audit the indicator sandwich at radius n^-theta with families
    (a, b) = (1, 1+eps) above and (1-eps, 1) below."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    radius = float(n) ** (-theta)
    upper = make_bump(BumpSpec(n=n, center=center, a=1.0, b=1.0 + eps, theta=theta))
    lower = make_bump(BumpSpec(n=n, center=center, a=1.0 - eps, b=1.0, theta=theta))
    xs = np.arange(grid_size) / grid_size
    d = np.abs(xs - (center % 1.0)) % 1.0
    d = np.minimum(d, 1.0 - d)
    indicator = (d <= radius).astype(float)
    fu = upper(xs)
    fl = lower(xs)
    upper_mean = upper.mean_value()
    return SandwichReport(
        n=n,
        theta=theta,
        eps=eps,
        upper_dominates=bool(np.all(indicator <= fu + 1e-12)),
        lower_dominated=bool(np.all(fl <= indicator + 1e-12)),
        mean_bound_holds=upper_mean <= 2.0 * (1.0 + eps) * radius + 1e-12,
        upper_mean=upper_mean,
    )
