"""Discrete functionals of a sampled path.

For a path X on the grid t_j = j/n these produce cadlag step processes
(prefix-sum arrays indexed by grid point):

* power variations  V_n^p(X, t) = sum_{j <= nt} |dX_j|^p  (optionally signed),
  the signed cubic case V_n = V_n^{3+-} being the central object;
* midpoints beta_j = (X(t_{j-1}) + X(t_j)) / 2;
* trapezoid Riemann sums I_n(g, X, t) = sum (g(X_{j-1}) + g(X_j))/2 dX_j;
* weighted third-Hermite variations
  n^{-1/2} sum g(X at an endpoint) h_3(n^{1/6} dX_j).

Integrands live in one of three closed-form families (polynomial,
a*sin(bx+c), a*exp(bx)) so that derivatives up to any order used here and
one antiderivative are exact, keeping the identity tests free of numerical
differentiation error.  Summation is a fixed ascending prefix sum, so the
results do not depend on any parallel schedule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernel import hermite
from .sampler import Grid, Path


@dataclass(frozen=True)
class StepProcess:
    """t -> partials[floor(n t)], with partials[0] = 0."""

    grid: Grid
    partials: np.ndarray
    label: str = ""

    def __post_init__(self):
        if len(self.partials) != self.grid.m + 1:
            raise DomainError("partials must have one entry per grid point")
        self.partials.setflags(write=False)

    def value_at(self, t: float) -> float:
        return float(self.partials[self.grid.index_of(t)])

    @property
    def final(self) -> float:
        return float(self.partials[-1])

    def write_csv(self, stream) -> None:
        stream.write("j,t,value\n")
        for j, (t, v) in enumerate(zip(self.grid.times(), self.partials)):
            stream.write(f"{j},{float(t)!r},{float(v)!r}\n")


class Family(enum.Enum):
    POLYNOMIAL = "polynomial"
    TRIG = "trig"
    EXP = "exp"


@dataclass(frozen=True)
class SmoothMap:
    """One closed-form integrand g with exact derivatives and antiderivative.

    POLYNOMIAL params are ascending monomial coefficients; TRIG params
    (a, b, c) mean a*sin(b x + c) with b != 0; EXP params (a, b) mean
    a*exp(b x) with b != 0.
    """

    family: Family
    params: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        if self.family is Family.POLYNOMIAL:
            if len(self.params) == 0:
                raise DomainError("polynomial needs at least one coefficient")
        elif self.family is Family.TRIG:
            if len(self.params) != 3:
                raise DomainError("trig family takes params (a, b, c)")
            if self.params[1] == 0:
                raise DomainError("trig frequency b must be nonzero")
        elif self.family is Family.EXP:
            if len(self.params) != 2:
                raise DomainError("exp family takes params (a, b)")
            if self.params[1] == 0:
                raise DomainError("exp rate b must be nonzero")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family is Family.POLYNOMIAL:
            out = np.polynomial.polynomial.polyval(x, self.params)
        elif self.family is Family.TRIG:
            a, b, c = self.params
            out = a * np.sin(b * x + c)
        else:
            a, b = self.params
            out = a * np.exp(b * x)
        return out if out.ndim else float(out)

    def _derivative_once(self) -> "SmoothMap":
        if self.family is Family.POLYNOMIAL:
            coeffs = self.params
            if len(coeffs) == 1:
                new = (0.0,)
            else:
                new = tuple(k * coeffs[k] for k in range(1, len(coeffs)))
            return SmoothMap(Family.POLYNOMIAL, new, f"({self.label})'")
        if self.family is Family.TRIG:
            a, b, c = self.params
            return SmoothMap(Family.TRIG, (a * b, b, c + math.pi / 2), f"({self.label})'")
        a, b = self.params
        return SmoothMap(Family.EXP, (a * b, b), f"({self.label})'")

    def derivative(self, order: int = 1) -> "SmoothMap":
        """order-fold exact derivative (iterated, so mixed routes agree bitwise)."""
        if order < 0:
            raise DomainError("derivative order must be nonnegative")
        out = self
        for _ in range(order):
            out = out._derivative_once()
        return out

    def antiderivative(self) -> "SmoothMap":
        """One antiderivative G with G' = g (constant of integration 0)."""
        if self.family is Family.POLYNOMIAL:
            new = (0.0,) + tuple(c / (k + 1) for k, c in enumerate(self.params))
            return SmoothMap(Family.POLYNOMIAL, new, f"int({self.label})")
        if self.family is Family.TRIG:
            a, b, c = self.params
            return SmoothMap(Family.TRIG, (a / b, b, c - math.pi / 2), f"int({self.label})")
        a, b = self.params
        return SmoothMap(Family.EXP, (a / b, b), f"int({self.label})")

    @property
    def is_bounded(self) -> bool:
        """Bounded with all derivatives bounded (true only for TRIG)."""
        if self.family is Family.TRIG:
            return True
        if self.family is Family.POLYNOMIAL:
            return all(c == 0.0 for c in self.params[1:])
        return False

    def growth_constants(self) -> tuple[float, float]:
        """(K, r) with |g(x)| <= K (1 + |x|^r)."""
        if self.family is Family.POLYNOMIAL:
            return (max(sum(abs(c) for c in self.params), 1.0), float(len(self.params) - 1))
        if self.family is Family.TRIG:
            return (abs(self.params[0]), 0.0)
        raise DomainError("exp family has no polynomial growth bound")


def constant_map(c: float) -> SmoothMap:
    return SmoothMap(Family.POLYNOMIAL, (float(c),), repr(float(c)))


def monomial_map(power: int) -> SmoothMap:
    if power < 0:
        raise DomainError("monomial power must be nonnegative")
    return SmoothMap(
        Family.POLYNOMIAL, (0.0,) * power + (1.0,), "x" if power == 1 else f"x^{power}"
    )


def sin_map() -> SmoothMap:
    return SmoothMap(Family.TRIG, (1.0, 1.0, 0.0), "sin")


def parse_integrand(text: str) -> SmoothMap:
    """Parse the plain-text integrand grammar.

    Accepted forms: a float literal; "x"; "x^k"; "poly:c0,c1,...";
    "sin"; "cos"; "sin:a,b,c"; "exp"; "exp:a,b".
    """
    text = text.strip()
    if text == "x":
        return monomial_map(1)
    if text.startswith("x^"):
        try:
            return monomial_map(int(text[2:]))
        except ValueError as exc:
            raise DomainError(f"bad monomial spec {text!r}") from exc
    if text == "sin":
        return sin_map()
    if text == "cos":
        return SmoothMap(Family.TRIG, (1.0, 1.0, math.pi / 2), "cos")
    if text == "exp":
        return SmoothMap(Family.EXP, (1.0, 1.0), "exp")
    if ":" in text:
        head, _, tail = text.partition(":")
        try:
            params = tuple(float(p) for p in tail.split(","))
        except ValueError as exc:
            raise DomainError(f"bad parameters in {text!r}") from exc
        if head == "poly":
            return SmoothMap(Family.POLYNOMIAL, params, text)
        if head == "sin":
            if len(params) != 3:
                raise DomainError("sin:a,b,c needs three parameters")
            return SmoothMap(Family.TRIG, params, text)
        if head == "exp":
            if len(params) != 2:
                raise DomainError("exp:a,b needs two parameters")
            return SmoothMap(Family.EXP, params, text)
        raise DomainError(f"unknown integrand family {head!r}")
    try:
        return SmoothMap(Family.POLYNOMIAL, (float(text),), text)
    except ValueError as exc:
        raise DomainError(f"cannot parse integrand {text!r}") from exc


class Endpoint(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    AVG = "avg"


def _prefix(grid: Grid, terms: np.ndarray, label: str) -> StepProcess:
    partials = np.concatenate([[0.0], np.cumsum(terms)])
    return StepProcess(grid=grid, partials=partials, label=label)


def power_variation(path: Path, p: float, signed: bool = False) -> StepProcess:
    """V_n^p(X, t), or the signed variant sum |dX|^p sgn(dX)."""
    if not p > 0:
        raise DomainError("power variation requires p > 0")
    d = path.increments()
    terms = np.abs(d) ** p
    if signed:
        terms = terms * np.sign(d)
    tag = f"V^{p}{'+-' if signed else ''}"
    return _prefix(path.grid, terms, tag)


def signed_cubic(path: Path) -> StepProcess:
    """V_n(X, t) = sum dX_j^3; identical to power_variation(path, 3, signed)."""
    out = power_variation(path, 3.0, signed=True)
    return StepProcess(grid=out.grid, partials=out.partials.copy(), label="V_n")


def midpoints(path: Path) -> np.ndarray:
    """beta_j = (X(t_{j-1}) + X(t_j)) / 2 for j = 1..m."""
    v = path.values
    return 0.5 * (v[:-1] + v[1:])


def riemann_strat(g: SmoothMap, path: Path) -> StepProcess:
    """Trapezoid Riemann sum I_n(g, X, t)."""
    v = path.values
    w = 0.5 * (np.asarray(g(v[:-1])) + np.asarray(g(v[1:])))
    return _prefix(path.grid, w * path.increments(), f"I_n({g.label})")


def weighted_hermite(g: SmoothMap, path: Path, endpoint: Endpoint = Endpoint.LEFT) -> StepProcess:
    """n^{-1/2} sum_{j <= nt} w_j h_3(n^{1/6} dX_j) with endpoint weights w_j.

    LEFT uses g(X(t_{j-1})), RIGHT uses g(X(t_j)); AVG is defined as the
    pointwise mean of the LEFT and RIGHT processes (exactly, not via the
    averaged weight, so AVG == (LEFT + RIGHT) / 2 holds bitwise).
    """
    if endpoint is Endpoint.AVG:
        left = weighted_hermite(g, path, Endpoint.LEFT)
        right = weighted_hermite(g, path, Endpoint.RIGHT)
        partials = 0.5 * (left.partials + right.partials)
        return StepProcess(grid=path.grid, partials=partials, label=f"G_n~({g.label})")
    n = path.grid.n
    d = path.increments()
    h3 = np.asarray(hermite(3, n ** (1.0 / 6.0) * d))
    v = path.values
    w = np.asarray(g(v[:-1])) if endpoint is Endpoint.LEFT else np.asarray(g(v[1:]))
    sign = "-" if endpoint is Endpoint.LEFT else "+"
    return _prefix(path.grid, (w * h3) / np.sqrt(n), f"G_n{sign}({g.label})")
