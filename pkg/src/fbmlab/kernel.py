"""Closed-form covariance machinery for the H = 1/6 fractional Brownian motion.

The process B is centered Gaussian with

    R(s, t) = E[B(s)B(t)] = (t^{1/3} + s^{1/3} - |t - s|^{1/3}) / 2,

so increments satisfy E|B(t) - B(s)|^2 = |t - s|^{1/3}.  On the uniform
grid t_j = j/n the increment sequence is stationary with

    E[dB_i dB_j] = n^{-1/3} * rho(i - j),
    rho(r) = (|r + 1|^{1/3} + |r - 1|^{1/3} - 2|r|^{1/3}) / 2,

and the limiting scale of the signed cubic variation is

    kappa^2 = 6 * sum_{r in Z} rho(r)^3  (about 5.391).

Everything here is a pure function of its arguments; all quantities are
double precision and |a|^{1/3} is always the sign-free cube root of the
absolute value, never a complex branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DomainError

# H = 1/6 throughout.  The increment-variance exponent 2H = 1/3 is kept in
# one named constant so the hard-coded Hurst index stays auditable.
HURST = 1.0 / 6.0
INCREMENT_EXPONENT = 2.0 * HURST

# Recurrence-based evaluation is exact for the orders used in this package
# (h_3 for the variations, up to h_6 via quadrature checks).
HERMITE_MAX_ORDER = 12


def _cbrt_abs(x):
    """|x|^{1/3} elementwise."""
    return np.cbrt(np.abs(x))


def cov_r(s, t):
    """Covariance R(s, t) = (t^{1/3} + s^{1/3} - |t - s|^{1/3}) / 2.

    Accepts scalars or broadcastable arrays; rejects negative times.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("cov_r requires nonnegative times")
    out = 0.5 * (_cbrt_abs(t) + _cbrt_abs(s) - _cbrt_abs(t - s))
    return out if out.ndim else float(out)


def increment_var(s, t):
    """E|B(t) - B(s)|^2 = |t - s|^{1/3}."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("increment_var requires nonnegative times")
    out = _cbrt_abs(t - s)
    return out if out.ndim else float(out)


def rho(r):
    """Normalized lag-r increment correlation of the grid noise.

    rho(r) = (|r+1|^{1/3} + |r-1|^{1/3} - 2|r|^{1/3}) / 2.  Even in r,
    rho(0) = 1, rho(r) < 0 for r != 0, and |rho(r)| ~ (1/9) r^{-5/3}.
    """
    r = np.asarray(r, dtype=float)
    out = 0.5 * (_cbrt_abs(r + 1) + _cbrt_abs(r - 1) - 2.0 * _cbrt_abs(r))
    return out if out.ndim else float(out)


def rho_tail_bound(radius: int) -> float:
    """Upper bound on 6 * sum_{|r| > radius} |rho(r)|^3.

    For r >= 2 the second-difference form gives |rho(r)| <= (1/9)(r-1)^{-5/3},
    hence the tail of the cubed series past radius x is below (1/243)(x-1)^{-4}.
    A short explicitly summed window keeps the bound tight (and monotone in
    the radius) for small truncations as well.
    """
    if radius < 0:
        raise DomainError("truncation radius must be nonnegative")
    window = 256
    lo = max(radius + 1, 1)
    hi = max(radius + window, 2)
    head = 12.0 * float(np.sum(np.abs(rho(np.arange(lo, hi + 1))) ** 3))
    analytic = (1.0 / 243.0) * (hi - 1.0) ** -4
    return head + analytic


@dataclass(frozen=True)
class KernelConstants:
    """kappa^2 = 6 * sum_{|r| <= R} rho(r)^3 together with its tail bound."""

    kappa_sq: float
    kappa: float
    truncation_radius: int
    tail_bound: float


def kappa_constant(truncation_radius: int = 10_000) -> KernelConstants:
    """Truncated evaluation of the signed-cubic-variation scale constant.

    The summand decays like r^{-5}, so radius 10^4 determines kappa^2 far
    beyond double-precision needs; the reported tail bound certifies it.
    """
    if truncation_radius < 0:
        raise DomainError("truncation radius must be nonnegative")
    lags = np.arange(-truncation_radius, truncation_radius + 1)
    kappa_sq = 6.0 * float(np.sum(rho(lags) ** 3))
    return KernelConstants(
        kappa_sq=kappa_sq,
        kappa=float(np.sqrt(kappa_sq)),
        truncation_radius=truncation_radius,
        tail_bound=rho_tail_bound(truncation_radius),
    )


@dataclass(frozen=True)
class LagSequence:
    """Tabulated rho(r) for |r| <= radius."""

    radius: int
    values: dict[int, float]

    @classmethod
    def compute(cls, radius: int) -> "LagSequence":
        if radius < 0:
            raise DomainError("radius must be nonnegative")
        lags = np.arange(-radius, radius + 1)
        vals = rho(lags)
        return cls(radius=radius, values={int(r): float(v) for r, v in zip(lags, vals)})

    def abs_sum(self) -> float:
        return float(sum(abs(v) for v in self.values.values()))


def hermite(order: int, x):
    """Probabilists' Hermite polynomial h_order(x) by the three-term recurrence.

    h_0 = 1, h_1 = x, h_{k+1}(x) = x h_k(x) - k h_{k-1}(x); so h_2 = x^2 - 1
    and h_3 = x^3 - 3x.  Supports vector x.
    """
    if order < 0:
        raise DomainError("Hermite order must be nonnegative")
    if order > HERMITE_MAX_ORDER:
        raise CapabilityError(f"Hermite evaluation limited to order {HERMITE_MAX_ORDER}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if order == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for k in range(1, order):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


@dataclass(frozen=True)
class HermiteEval:
    """Monomial-basis coefficients (ascending) of one Hermite polynomial."""

    order: int
    coefficients: tuple[float, ...]

    @classmethod
    def of_order(cls, order: int) -> "HermiteEval":
        if order < 0:
            raise DomainError("Hermite order must be nonnegative")
        if order > HERMITE_MAX_ORDER:
            raise CapabilityError(f"Hermite evaluation limited to order {HERMITE_MAX_ORDER}")
        prev = np.array([1.0])
        if order == 0:
            return cls(order=0, coefficients=(1.0,))
        cur = np.array([0.0, 1.0])
        for k in range(1, order):
            shifted = np.concatenate([[0.0], cur])          # x * h_k
            lowered = np.concatenate([k * prev, [0.0, 0.0]])  # k * h_{k-1}
            prev, cur = cur, shifted - lowered[: len(shifted)]
        return cls(order=order, coefficients=tuple(float(c) for c in cur))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coefficients)


def increment_cov(n: int, i: int, j: int) -> float:
    """E[dB_i dB_j] = n^{-1/3} rho(i - j) on the grid with step 1/n."""
    if n < 1 or i < 1 or j < 1:
        raise DomainError("increment_cov requires n, i, j >= 1")
    return float(n ** (-INCREMENT_EXPONENT) * rho(i - j))


def endpoint_increment_cov(n: int, s, k):
    """E[B(s) dB_k] in closed form.

    E[B(s) dB_k] = (2 n^{1/3})^{-1} (k^{1/3} - (k-1)^{1/3}
                                     - |k - ns|^{1/3} + |k - ns - 1|^{1/3}),
    which equals cov_r(s, k/n) - cov_r(s, (k-1)/n).  Vectorized in k.
    """
    if n < 1:
        raise DomainError("endpoint_increment_cov requires n >= 1")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("endpoint_increment_cov requires s >= 0")
    k = np.asarray(k, dtype=float)
    if np.any(k < 1):
        raise DomainError("endpoint_increment_cov requires k >= 1")
    ns = n * s
    out = (
        _cbrt_abs(k) - _cbrt_abs(k - 1) - _cbrt_abs(k - ns) + _cbrt_abs(k - ns - 1)
    ) / (2.0 * np.cbrt(float(n)))
    return out if out.ndim else float(out)


def gram_matrix(times) -> np.ndarray:
    """Covariance matrix [R(t_i, t_j)] over a vector of times."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise DomainError("gram_matrix requires nonnegative times")
    return np.asarray(cov_r(t[:, None], t[None, :]))


def left_anchor_cube_sum(n: int, t: float) -> float:
    """sum_{k <= floor(nt)} | E[B(t_{k-1}) dB_k]^3 + 1/(8n) |.

    Each term telescopes against the cube-root increments, giving the
    analytic bound (3/8) floor(nt)^{1/3} / n, so the sum vanishes like
    n^{-2/3} at fixed t.
    """
    if n < 1 or t < 0:
        raise DomainError("left_anchor_cube_sum requires n >= 1 and t >= 0")
    j = int(np.floor(n * t + 1e-9))
    if j == 0:
        return 0.0
    k = np.arange(1, j + 1, dtype=float)
    e = (np.cbrt(k) - np.cbrt(k - 1) - 1.0) / (2.0 * np.cbrt(float(n)))
    return float(np.sum(np.abs(e**3 + 1.0 / (8.0 * n))))


def right_anchor_cube_sum(n: int, t: float) -> float:
    """sum_{k <= floor(nt)} | E[B(t_k) dB_k]^3 - 1/(8n) |, same decay."""
    if n < 1 or t < 0:
        raise DomainError("right_anchor_cube_sum requires n >= 1 and t >= 0")
    j = int(np.floor(n * t + 1e-9))
    if j == 0:
        return 0.0
    k = np.arange(1, j + 1, dtype=float)
    e = (np.cbrt(k) - np.cbrt(k - 1) + 1.0) / (2.0 * np.cbrt(float(n)))
    return float(np.sum(np.abs(e**3 - 1.0 / (8.0 * n))))
