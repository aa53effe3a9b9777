"""Sampling the limit law of the trapezoid Riemann sums.

The weak limit of I_n(g, B, .) is defined through an antiderivative G of g
and an ordinary Ito correction driven by a Brownian motion W independent
of B:

    int_0^t g(B) dB = G(B(t)) - G(B(0)) + (1/12) int_0^t G'''(B) d<<B>>,
    <<B>>_t = kappa W(t).

The correction integral is an Ito integral of a continuous adapted
integrand, realized here as a left-endpoint sum on a refinement grid with
B held at its step approximation.  One LimitSample carries (B, W) drawn on
the finest grid; evaluations restrict both to any divisor grid, so
refinement comparisons reuse identical randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .sampler import Grid, Method, Path, PathKind, SeedPolicy, sample_bm, sample_fbm
from .variations import SmoothMap, StepProcess


def signed_cubic_limit(w_path: Path, kappa: float) -> StepProcess:
    """The limit process of the signed cubic variation: t -> kappa W(t)."""
    if w_path.kind is not PathKind.BM:
        raise DomainError("signed_cubic_limit needs a BM path")
    return StepProcess(
        grid=w_path.grid, partials=kappa * w_path.values, label="kappa*W"
    )


def ito_left_sum(integrand_values, w_path: Path) -> StepProcess:
    """Left-endpoint Ito sum sum_{k <= j} f(t_{k-1}) dW_k.

    integrand_values holds f at every grid point of w_path (m + 1 entries).
    """
    if w_path.kind is not PathKind.BM:
        raise DomainError("ito_left_sum integrates against a BM path")
    f = np.asarray(integrand_values, dtype=float)
    if f.shape != (w_path.grid.m + 1,):
        raise DomainError(
            f"integrand has {f.shape} values, expected {w_path.grid.m + 1}"
        )
    terms = f[:-1] * w_path.increments()
    partials = np.concatenate([[0.0], np.cumsum(terms)])
    return StepProcess(grid=w_path.grid, partials=partials, label="ito_left")


@dataclass
class LimitSample:
    """One draw of (B, W) on a fine grid plus cached limit evaluations."""

    b_path: Path
    w_path: Path
    kappa: float
    refinement: int
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.b_path.kind is not PathKind.FBM_H16 or self.w_path.kind is not PathKind.BM:
            raise DomainError("LimitSample needs (fBm, BM) paths")
        if self.b_path.grid.horizon != self.w_path.grid.horizon:
            raise DomainError("B and W must share the horizon")
        if self.w_path.grid.n != self.refinement or self.refinement < self.b_path.grid.n:
            raise DomainError("w grid must equal the refinement, >= the b grid")

    @classmethod
    def draw(
        cls,
        refinement: int,
        seeds: SeedPolicy,
        kappa: float,
        horizon: float = 1.0,
        method: Method = Method.CIRCULANT,
    ) -> "LimitSample":
        grid = Grid(refinement, horizon)
        return cls(
            b_path=sample_fbm(grid, seeds, method),
            w_path=sample_bm(grid, seeds),
            kappa=kappa,
            refinement=refinement,
        )

    def _strides(self, eval_n: int | None) -> tuple[int, int]:
        eval_n = self.refinement if eval_n is None else eval_n
        if eval_n < 1 or self.refinement % eval_n != 0:
            raise DomainError(f"evaluation grid {eval_n} must divide {self.refinement}")
        return eval_n, self.refinement // eval_n


def _correction_sum(f3: SmoothMap, sample: LimitSample, t: float, eval_n: int | None) -> float:
    """Left sum sum_{k <= floor(nt)} f3(B(t_{k-1})) kappa dW_k on the eval grid."""
    eval_n, stride = sample._strides(eval_n)
    grid = Grid(eval_n, sample.b_path.grid.horizon)
    j = grid.index_of(t)
    if j == 0:
        return 0.0
    b = sample.b_path.values[::stride]
    w = sample.w_path.values[::stride]
    terms = np.asarray(f3(b[:j])) * np.diff(w[: j + 1])
    return sample.kappa * float(np.sum(terms))


def weak_strat_integral(
    g: SmoothMap, sample: LimitSample, t: float, eval_n: int | None = None
) -> float:
    """int_0^t g(B) dB = G(B(t)) - G(B(0)) + (1/12) * left-sum of kappa g''(B) dW.

    B enters the endpoint evaluation and the correction integrand through
    its step approximation on the evaluation grid.
    """
    eval_res, stride = sample._strides(eval_n)
    grid = Grid(eval_res, sample.b_path.grid.horizon)
    anti = g.antiderivative()
    b = sample.b_path.values[::stride]
    b_t = float(b[grid.index_of(t)])
    correction = _correction_sum(g.derivative(2), sample, t, eval_n)
    value = float(anti(b_t)) - float(anti(b[0])) + correction / 12.0
    sample.values[(g.label, float(t), eval_res)] = value
    return value


def change_of_variable_residual(
    g: SmoothMap, sample: LimitSample, t: float, eval_n: int | None = None
) -> float:
    """Defect of g(B(t)) = g(B(0)) + int g'(B) dB - (1/12) int g'''(B) d<<B>>.

    The two Ito correction sums are evaluated on the same grid from the
    same increments, so they cancel exactly and only antiderivative
    round-off remains; the residual is zero to round-off by construction.
    """
    eval_res, stride = sample._strides(eval_n)
    grid = Grid(eval_res, sample.b_path.grid.horizon)
    b = sample.b_path.values[::stride]
    b_t = float(b[grid.index_of(t)])
    integral = weak_strat_integral(g.derivative(1), sample, t, eval_n)
    correction = _correction_sum(g.derivative(3), sample, t, eval_n)
    return float(g(b_t)) - float(g(b[0])) - integral + correction / 12.0
