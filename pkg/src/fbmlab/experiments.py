"""Batch Monte Carlo experiments behind the command-line harness.

Every experiment maps a replication index r to its own seed stream
(master_seed, r), so results are independent of chunking and of how many
worker processes execute the chunks; aggregation always happens in
replication order.  Oracle corpora use stream ids offset by the number of
estimator replications, keeping the two-sample comparisons independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .analysis import (
    Estimator,
    KsResult,
    SampleSet,
    ScalingFit,
    TAYLOR_GAMMA,
    covar_bound_audit,
    ks_two_sample,
    moment_scaling,
    orthogonality_audit,
    taylor_residual,
)
from .errors import DomainError
from .kernel import (
    cov_r,
    gram_matrix,
    kappa_constant,
    left_anchor_cube_sum,
    right_anchor_cube_sum,
)
from .oracle import LimitSample, weak_strat_integral
from .quadrature import hermite_mean_limit, hermite_variance_limit
from .sampler import Grid, Method, SeedPolicy, sample_bm, sample_fbm
from .variations import (
    Endpoint,
    Family,
    SmoothMap,
    parse_integrand,
    riemann_strat,
    signed_cubic,
    weighted_hermite,
)

DEFAULT_TRUNCATION = 10_000


def parse_integrand_list(text: str) -> list[SmoothMap]:
    """Semicolon-separated integrand specs, e.g. "1; x; x^2; sin"."""
    items = [part.strip() for part in text.split(";") if part.strip()]
    if not items:
        raise DomainError("empty integrand list")
    return [parse_integrand(item) for item in items]


def _pmap(worker, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with get_context("fork").Pool(min(workers, len(jobs))) as pool:
        return pool.map(worker, jobs)


def _chunks(replications: int, workers: int):
    pieces = max(1, min(replications, 4 * max(workers, 1)))
    bounds = np.linspace(0, replications, pieces + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


# --- converge: estimator vs oracle triples ---------------------------------


def _converge_est_chunk(job):
    n, horizon, master_seed, method_name, texts, lo, hi = job
    grid = Grid(n, horizon)
    method = Method[method_name]
    gs = [parse_integrand(t) for t in texts]
    b1 = np.empty(hi - lo)
    vn = np.empty(hi - lo)
    ints = np.empty((len(gs), hi - lo))
    for r in range(lo, hi):
        path = sample_fbm(grid, SeedPolicy(master_seed, r), method)
        b1[r - lo] = path.values[-1]
        vn[r - lo] = signed_cubic(path).final
        for gi, g in enumerate(gs):
            ints[gi, r - lo] = riemann_strat(g, path).final
    return b1, vn, ints


def _converge_orc_chunk(job):
    refinement, horizon, master_seed, offset, method_name, texts, kappa, lo, hi = job
    method = Method[method_name]
    gs = [parse_integrand(t) for t in texts]
    b1 = np.empty(hi - lo)
    cubic = np.empty(hi - lo)
    ints = np.empty((len(gs), hi - lo))
    for r in range(lo, hi):
        sample = LimitSample.draw(
            refinement, SeedPolicy(master_seed, offset + r), kappa, horizon, method
        )
        b1[r - lo] = sample.b_path.values[-1]
        cubic[r - lo] = kappa * sample.w_path.values[-1]
        for gi, g in enumerate(gs):
            ints[gi, r - lo] = weak_strat_integral(g, sample, horizon)
    return b1, cubic, ints


@dataclass
class ConvergeResult:
    n: int
    horizon: float
    replications: int
    refinement: int
    integrands: list[str]
    est_b1: np.ndarray
    est_cubic: np.ndarray
    est_int: dict[str, np.ndarray]
    orc_b1: np.ndarray
    orc_cubic: np.ndarray
    orc_int: dict[str, np.ndarray]
    ks: dict[str, KsResult] = field(default_factory=dict)
    est_corr: np.ndarray | None = None
    orc_corr: np.ndarray | None = None

    def worst_ks(self) -> float:
        return max(r.statistic / r.critical_001 for r in self.ks.values())


def converge_experiment(
    n: int,
    horizon: float,
    replications: int,
    master_seed: int,
    integrands,
    method: Method = Method.CIRCULANT,
    refinement_factor: int = 4,
    workers: int = 1,
) -> ConvergeResult:
    """Paired estimator/oracle samples of (B(T), cubic variation, integral).

    The estimator corpus holds (B(1), V_n(B,1), I_n(g,B,1)); the oracle
    corpus holds (B(1), kappa W(1), the limit integral) on a grid refined
    by refinement_factor.  One KS result per marginal and per integrand.
    """
    if refinement_factor not in (2, 4, 8):
        raise DomainError("refinement_factor must be one of 2, 4, 8")
    texts = [g.label if isinstance(g, SmoothMap) else str(g) for g in integrands]
    gs = [parse_integrand(t) for t in texts]
    kappa = kappa_constant(DEFAULT_TRUNCATION).kappa
    jobs = [
        (n, horizon, master_seed, method.name, texts, lo, hi)
        for lo, hi in _chunks(replications, workers)
    ]
    parts = _pmap(_converge_est_chunk, jobs, workers)
    est_b1 = np.concatenate([p[0] for p in parts])
    est_vn = np.concatenate([p[1] for p in parts])
    est_int = np.concatenate([p[2] for p in parts], axis=1)

    refinement = refinement_factor * n
    jobs = [
        (refinement, horizon, master_seed, replications, method.name, texts, kappa, lo, hi)
        for lo, hi in _chunks(replications, workers)
    ]
    parts = _pmap(_converge_orc_chunk, jobs, workers)
    orc_b1 = np.concatenate([p[0] for p in parts])
    orc_cubic = np.concatenate([p[1] for p in parts])
    orc_int = np.concatenate([p[2] for p in parts], axis=1)

    result = ConvergeResult(
        n=n,
        horizon=horizon,
        replications=replications,
        refinement=refinement,
        integrands=texts,
        est_b1=est_b1,
        est_cubic=est_vn,
        est_int={t: est_int[i] for i, t in enumerate(texts)},
        orc_b1=orc_b1,
        orc_cubic=orc_cubic,
        orc_int={t: orc_int[i] for i, t in enumerate(texts)},
    )
    result.ks["B"] = ks_two_sample(SampleSet(est_b1, "B(T) estimator"),
                                   SampleSet(orc_b1, "B(T) oracle"))
    result.ks["cubic"] = ks_two_sample(SampleSet(est_vn, "V_n(B,T)"),
                                       SampleSet(orc_cubic, "kappa W(T)"))
    for i, t in enumerate(texts):
        result.ks[f"int:{t}"] = ks_two_sample(
            SampleSet(est_int[i], f"I_n({t})"), SampleSet(orc_int[i], f"limit({t})")
        )
    result.est_corr = np.corrcoef(np.vstack([est_b1, est_vn, est_int]))
    result.orc_corr = np.corrcoef(np.vstack([orc_b1, orc_cubic, orc_int]))
    return result


# --- variations: exact identities plus the cubic-variation law -------------


def _identity_chunk(job):
    n, horizon, master_seed, method_name, lo, hi = job
    grid = Grid(n, horizon)
    method = Method[method_name]
    const = parse_integrand("1")
    lin = parse_integrand("x")
    quad = parse_integrand("x^2")
    worst = np.zeros(4)
    b1 = np.empty(hi - lo)
    vn = np.empty(hi - lo)
    for r in range(lo, hi):
        path = sample_fbm(grid, SeedPolicy(master_seed, r), method)
        v = path.values
        cubic = signed_cubic(path)
        scale = max(1.0, float(np.max(np.abs(v))) ** 3)
        res_c = np.max(np.abs(riemann_strat(const, path).partials - (v - v[0])))
        res_l = np.max(np.abs(riemann_strat(lin, path).partials - 0.5 * (v**2 - v[0] ** 2)))
        res_q = np.max(
            np.abs(
                riemann_strat(quad, path).partials
                - (v**3 - v[0] ** 3) / 3.0
                - cubic.partials / 6.0
            )
        )
        hermite_one = weighted_hermite(const, path, Endpoint.LEFT)
        res_y = np.max(
            np.abs(cubic.partials - hermite_one.partials - 3.0 * n ** (-1.0 / 3.0) * v)
        )
        worst = np.maximum(worst, np.array([res_c, res_l, res_q, res_y]) / scale)
        b1[r - lo] = v[-1]
        vn[r - lo] = cubic.final
    return worst, b1, vn


@dataclass
class IdentityResult:
    n: int
    replications: int
    max_rel_residuals: dict[str, float]
    b1: np.ndarray
    vn: np.ndarray

    @property
    def vn_variance(self) -> float:
        return float(np.var(self.vn, ddof=1))

    @property
    def vn_b1_corr(self) -> float:
        return float(np.corrcoef(self.vn, self.b1)[0, 1])


def identity_experiment(
    n: int,
    horizon: float,
    replications: int,
    master_seed: int,
    method: Method = Method.CIRCULANT,
    workers: int = 1,
) -> IdentityResult:
    """Pathwise telescoping identities and the signed-cubic-variation law."""
    jobs = [
        (n, horizon, master_seed, method.name, lo, hi)
        for lo, hi in _chunks(replications, workers)
    ]
    parts = _pmap(_identity_chunk, jobs, workers)
    worst = np.max(np.vstack([p[0] for p in parts]), axis=0)
    return IdentityResult(
        n=n,
        replications=replications,
        max_rel_residuals={
            "riemann_const": float(worst[0]),
            "riemann_linear": float(worst[1]),
            "riemann_quadratic": float(worst[2]),
            "hermite_rearrangement": float(worst[3]),
        },
        b1=np.concatenate([p[1] for p in parts]),
        vn=np.concatenate([p[2] for p in parts]),
    )


# --- sextic variation -------------------------------------------------------


def _sextic_chunk(job):
    n, horizon, master_seed, method_name, lo, hi = job
    grid = Grid(n, horizon)
    method = Method[method_name]
    t = grid.times()
    sup = np.empty(hi - lo)
    final = np.empty(hi - lo)
    for r in range(lo, hi):
        path = sample_fbm(grid, SeedPolicy(master_seed, r), method)
        v6 = np.concatenate([[0.0], np.cumsum(path.increments() ** 6)])
        sup[r - lo] = np.max(np.abs(v6 - 15.0 * t))
        final[r - lo] = v6[-1]
    return sup, final


@dataclass
class SexticResult:
    n_list: list[int]
    medians: list[float]
    mean_n: int
    mean_value: float
    mean_se: float
    mean_target: float

    @property
    def medians_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.medians, self.medians[1:]))


def sextic_experiment(
    n_list,
    horizon: float,
    replications: int,
    master_seed: int,
    method: Method = Method.CIRCULANT,
    mean_replications: int | None = None,
    workers: int = 1,
) -> SexticResult:
    """Median sup-deviation of V^6_n from 15t per grid level, plus the mean
    of V^6_n(B, T) at the finest level against 15 * floor(nT)/n."""
    n_list = sorted(int(n) for n in n_list)
    medians = []
    for n in n_list:
        jobs = [
            (n, horizon, master_seed, method.name, lo, hi)
            for lo, hi in _chunks(replications, workers)
        ]
        parts = _pmap(_sextic_chunk, jobs, workers)
        sup = np.concatenate([p[0] for p in parts])
        medians.append(float(np.median(sup)))
    n_top = n_list[-1]
    m_reps = mean_replications or replications
    jobs = [
        (n_top, horizon, master_seed, method.name, lo, hi)
        for lo, hi in _chunks(m_reps, workers)
    ]
    parts = _pmap(_sextic_chunk, jobs, workers)
    final = np.concatenate([p[1] for p in parts])
    grid = Grid(n_top, horizon)
    return SexticResult(
        n_list=n_list,
        medians=medians,
        mean_n=n_top,
        mean_value=float(np.mean(final)),
        mean_se=float(np.std(final, ddof=1) / math.sqrt(len(final))),
        mean_target=15.0 * grid.m / n_top,
    )


# --- weighted Hermite variations --------------------------------------------


def _hermite_chunk(job):
    n, horizon, master_seed, method_name, text, lo, hi = job
    grid = Grid(n, horizon)
    method = Method[method_name]
    g = parse_integrand(text)
    left = np.empty(hi - lo)
    right = np.empty(hi - lo)
    for r in range(lo, hi):
        path = sample_fbm(grid, SeedPolicy(master_seed, r), method)
        left[r - lo] = weighted_hermite(g, path, Endpoint.LEFT).final
        right[r - lo] = weighted_hermite(g, path, Endpoint.RIGHT).final
    return left, right


@dataclass
class HermiteResult:
    n: int
    replications: int
    integrand: str
    bounded: bool
    left: np.ndarray
    right: np.ndarray
    mean_limit: float
    variance_limit: float

    def summary(self) -> dict:
        se_l = float(np.std(self.left, ddof=1) / math.sqrt(len(self.left)))
        se_r = float(np.std(self.right, ddof=1) / math.sqrt(len(self.right)))
        return {
            "left_mean": float(np.mean(self.left)),
            "left_se": se_l,
            "right_mean": float(np.mean(self.right)),
            "right_se": se_r,
            "left_variance": float(np.var(self.left, ddof=1)),
            "mean_limit": self.mean_limit,
            "variance_limit": self.variance_limit,
        }


def hermite_experiment(
    n: int,
    horizon: float,
    replications: int,
    master_seed: int,
    integrand="sin",
    method: Method = Method.CIRCULANT,
    workers: int = 1,
) -> HermiteResult:
    """Left/right endpoint weighted third-Hermite variations at t = horizon,
    with the quadrature limits for the left-endpoint mean and variance."""
    g = integrand if isinstance(integrand, SmoothMap) else parse_integrand(integrand)
    jobs = [
        (n, horizon, master_seed, method.name, g.label, lo, hi)
        for lo, hi in _chunks(replications, workers)
    ]
    parts = _pmap(_hermite_chunk, jobs, workers)
    kappa_sq = kappa_constant(DEFAULT_TRUNCATION).kappa_sq
    return HermiteResult(
        n=n,
        replications=replications,
        integrand=g.label,
        bounded=g.is_bounded,
        left=np.concatenate([p[0] for p in parts]),
        right=np.concatenate([p[1] for p in parts]),
        mean_limit=hermite_mean_limit(g, horizon),
        variance_limit=hermite_variance_limit(g, horizon, kappa_sq),
    )


# --- moment-bound scaling ----------------------------------------------------

# Per-estimator default windows.  The cubic fourth moment needs gaps past
# the kurtosis crossover (about 120 steps) before the quadratic regime
# dominates; the weighted second moments are gap-tight only for windows
# anchored at the origin with gap << n.
DEFAULT_SCALING_SPECS: dict[Estimator, dict] = {
    Estimator.CUBIC_4TH: {
        "n": 8192,
        "horizon": 1.0,
        "gaps": (512, 1024, 2048, 4096, 8192),
    },
    Estimator.QUINTIC_2ND: {
        "n": 8192,
        "horizon": 0.25,
        "gaps": (64, 91, 128, 181, 256, 362, 512, 724, 1024),
    },
    Estimator.WEIGHTED_CUBIC_2ND: {
        "n": 8192,
        "horizon": 0.25,
        "gaps": (64, 91, 128, 181, 256, 362, 512, 724, 1024),
    },
}


@dataclass
class ScalingResult:
    replications: int
    fits: dict[Estimator, ScalingFit]
    specs: dict[Estimator, dict]


def scaling_experiment(
    master_seed: int,
    replications: int = 500,
    specs: dict[Estimator, dict] | None = None,
    integrand="sin",
    method: Method = Method.CIRCULANT,
) -> ScalingResult:
    g = integrand if isinstance(integrand, SmoothMap) else parse_integrand(integrand)
    specs = specs or DEFAULT_SCALING_SPECS
    fits = {}
    for estimator, spec in specs.items():
        fits[estimator] = moment_scaling(
            estimator,
            spec["n"],
            spec["gaps"],
            replications,
            SeedPolicy(master_seed, 0),
            g=g,
            horizon=spec.get("horizon"),
            method=method,
        )
    return ScalingResult(replications=replications, fits=fits, specs=specs)


# --- symmetric Taylor corpus -------------------------------------------------


@dataclass
class TaylorResult:
    pairs: int
    poly_count: int
    max_poly_r6: float
    gamma: float
    gamma_exact: bool
    sin_max_r6: float

    def as_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "poly_count": self.poly_count,
            "max_poly_r6": self.max_poly_r6,
            "gamma": self.gamma,
            "gamma_exact": self.gamma_exact,
            "sin_max_r6": self.sin_max_r6,
        }


def taylor_experiment(master_seed: int, pairs: int = 1000, poly_count: int = 25) -> TaylorResult:
    """R6 over a random corpus of degree <= 5 polynomials (must vanish) and
    the sin map (must stay below the sixth-derivative envelope)."""
    rng = np.random.default_rng(master_seed)
    ab = rng.uniform(-1.0, 1.0, size=(pairs, 2))
    max_poly = 0.0
    for _ in range(poly_count):
        degree = int(rng.integers(0, 6))
        coeffs = tuple(rng.uniform(-1.0, 1.0, size=degree + 1))
        g = SmoothMap(Family.POLYNOMIAL, coeffs, "poly")
        for a, b in ab:
            max_poly = max(max_poly, abs(taylor_residual(g, a, b).r6))
    from fractions import Fraction

    gamma_exact = Fraction(1, 1920) - Fraction(1, 384) == Fraction(-1, 480)
    sin_g = parse_integrand("sin")
    sin_max = max(abs(taylor_residual(sin_g, a, b).r6) for a, b in ab)
    return TaylorResult(
        pairs=pairs,
        poly_count=poly_count,
        max_poly_r6=max_poly,
        gamma=TAYLOR_GAMMA,
        gamma_exact=gamma_exact,
        sin_max_r6=sin_max,
    )


# --- covariance and orthogonality audits -------------------------------------


@dataclass
class AuditResult:
    covar: list[dict]
    anchor_sums: list[dict]
    orthogonality_max_dev: float

    def anchor_sums_decreasing(self) -> bool:
        left = [row["left"] for row in self.anchor_sums]
        right = [row["right"] for row in self.anchor_sums]
        return all(a > b for a, b in zip(left, left[1:])) and all(
            a > b for a, b in zip(right, right[1:])
        )


def audit_experiment(n_list, horizon: float = 1.0) -> AuditResult:
    """Covariance-envelope ratios, anchored cube sums over the grid ladder,
    and the Hermite orthogonality grid for orders up to 4."""
    n_list = sorted(int(n) for n in n_list)
    covar = [
        covar_bound_audit(n, horizon).as_dict()
        for n in n_list
        if n * horizon <= 4096
    ]
    anchor = [
        {
            "n": n,
            "left": left_anchor_cube_sum(n, horizon),
            "right": right_anchor_cube_sum(n, horizon),
        }
        for n in n_list
    ]
    max_dev = 0.0
    for p in range(5):
        for q in range(5):
            for c in (-0.75, -0.3, 0.0, 0.5, 0.9):
                max_dev = max(max_dev, abs(orthogonality_audit(p, q, c)))
    return AuditResult(covar=covar, anchor_sums=anchor, orthogonality_max_dev=max_dev)


# --- sampler validation -------------------------------------------------------


@dataclass
class SamplerResult:
    gram_n: int
    gram_replications: int
    gram_max_z: float
    method_ks: KsResult
    var_b1: float
    var_b1_z: float
    bw_corr: float

    def as_dict(self) -> dict:
        return {
            "gram_n": self.gram_n,
            "gram_replications": self.gram_replications,
            "gram_max_z": self.gram_max_z,
            "method_ks_stat": self.method_ks.statistic,
            "method_ks_critical": self.method_ks.critical_001,
            "var_b1": self.var_b1,
            "var_b1_z": self.var_b1_z,
            "bw_corr": self.bw_corr,
        }


def sampler_experiment(
    master_seed: int,
    gram_n: int = 512,
    gram_replications: int = 2000,
    ks_replications: int = 1000,
    probe_indices=(64, 128, 256, 512),
    workers: int = 1,
) -> SamplerResult:
    """Empirical Gram matrix against cov_r (entrywise z scores), a
    CHOLESKY/CIRCULANT two-sample KS on B(1), Var(B(1)), and the B-W
    correlation of paired draws."""
    grid = Grid(gram_n, 1.0)
    probes = np.array(probe_indices)
    vals = np.empty((gram_replications, len(probes)))
    b1 = np.empty(gram_replications)
    w1 = np.empty(gram_replications)
    for r in range(gram_replications):
        seeds = SeedPolicy(master_seed, r)
        path = sample_fbm(grid, seeds)
        vals[r] = path.values[probes]
        b1[r] = path.values[-1]
        w1[r] = sample_bm(grid, seeds).values[-1]
    target = gram_matrix(probes / gram_n)
    prods = vals[:, :, None] * vals[:, None, :]
    emp = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / math.sqrt(gram_replications)
    gram_max_z = float(np.max(np.abs(emp - target) / se))
    var_b1 = float(np.var(b1, ddof=1))
    var_se = var_b1 * math.sqrt(2.0 / (gram_replications - 1))
    chol = np.empty(ks_replications)
    circ = np.empty(ks_replications)
    for r in range(ks_replications):
        seeds = SeedPolicy(master_seed, r)
        chol[r] = sample_fbm(grid, seeds, Method.CHOLESKY).values[-1]
        circ[r] = sample_fbm(grid, seeds, Method.CIRCULANT).values[-1]
    return SamplerResult(
        gram_n=gram_n,
        gram_replications=gram_replications,
        gram_max_z=gram_max_z,
        method_ks=ks_two_sample(
            SampleSet(chol, "B(1) cholesky"), SampleSet(circ, "B(1) circulant")
        ),
        var_b1=var_b1,
        var_b1_z=float(abs(var_b1 - cov_r(1.0, 1.0)) / var_se),
        bw_corr=float(np.corrcoef(b1, w1)[0, 1]),
    )
