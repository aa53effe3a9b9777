"""Command-line orchestrator.

Commands: kappa, converge, variations, sextic, hermite, scaling, taylor,
audit.  Each command writes report.json, the sample CSVs it produces, and
manifest.json into <output_dir>/<command>/.  Reports are written to a
temporary file and atomically renamed, and the manifest hash covers the
content hashes of every emitted file, so identical configurations produce
identical reports and manifest hashes on one platform.

Exit codes: 0 success, 2 configuration error, 3 capability limit,
4 acceptance-check failure under --check.

Config files are plain text key=value lines under a [command] header:

    [converge]
    n_list = 1024,2048
    replications = 500
    integrand = x^2; sin
    master_seed = 20260810
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import Estimator
from .errors import CapabilityError, ConfigError, DomainError
from .experiments import (
    DEFAULT_TRUNCATION,
    audit_experiment,
    converge_experiment,
    hermite_experiment,
    identity_experiment,
    parse_integrand_list,
    scaling_experiment,
    sextic_experiment,
    taylor_experiment,
)
from .kernel import kappa_constant
from .sampler import Method

DEFAULT_MASTER_SEED = 2
DEFAULT_N_LIST = (256, 512, 1024, 2048, 4096)

# check tolerances, mirrored by the acceptance suite
KAPPA_SQ_REF, KAPPA_SQ_TOL = 5.391, 1e-3
KAPPA_REF, KAPPA_TOL = 2.322, 5e-3
IDENTITY_TOL = 1e-10
CUBIC_VAR_RTOL = 0.10
CUBIC_CORR_MAX = 0.08
HERMITE_VAR_RTOL = 0.10
SLOPE_FLOORS = {
    Estimator.CUBIC_4TH: 1.8,
    Estimator.QUINTIC_2ND: 1.2,
    Estimator.WEIGHTED_CUBIC_2ND: 0.9,
}
SLOPE_R2_MIN = 0.95
TAYLOR_R6_TOL = 1e-9
ANCHOR_SUM_MAX = 0.01
ORTHOGONALITY_TOL = 1e-8


@dataclass
class ExperimentConfig:
    command: str
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    horizon: float = 1.0
    replications: int = 500
    master_seed: int = DEFAULT_MASTER_SEED
    integrand: str = "sin"
    method: Method = Method.CIRCULANT
    refinement_factor: int = 4
    truncation: int = DEFAULT_TRUNCATION
    output_dir: str = "out"
    check: bool = False
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)

    def validate(self) -> None:
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigError("n_list must hold positive grid sizes")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        for n in self.n_list:
            if abs(n * self.horizon - round(n * self.horizon)) > 1e-9:
                raise ConfigError(f"n * horizon = {n * self.horizon} not integral")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        if self.refinement_factor not in (2, 4, 8):
            raise ConfigError("refinement_factor must be 2, 4, or 8")
        if self.truncation < 0:
            raise ConfigError("truncation must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    def echo(self) -> dict:
        return {
            "command": self.command,
            "n_list": list(self.n_list),
            "horizon": self.horizon,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "integrand": self.integrand,
            "method": self.method.value,
            "refinement_factor": self.refinement_factor,
            "truncation": self.truncation,
            "output_dir": self.output_dir,
            "check": self.check,
            "workers": self.workers,
        }


def _parse_config_file(path: str) -> dict:
    values: dict[str, str] = {}
    section = None
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    if section:
        values.setdefault("command", section)
    return values


def _config_from(args: argparse.Namespace) -> ExperimentConfig:
    file_values = _parse_config_file(args.config) if args.config else {}
    command = args.command or file_values.get("command")
    if not command:
        raise ConfigError("no command given (flag or [section] in config)")

    def pick(name, cast, default):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        if name in file_values:
            try:
                return cast(file_values[name])
            except ValueError as exc:
                raise ConfigError(f"bad config value for {name}") from exc
        return default

    def cast_n_list(text) -> tuple[int, ...]:
        try:
            return tuple(int(part) for part in str(text).split(",") if part.strip())
        except ValueError as exc:
            raise ConfigError(f"bad n_list {text!r}") from exc

    def cast_method(text) -> Method:
        try:
            return Method(str(text).lower())
        except ValueError as exc:
            raise ConfigError(f"unknown method {text!r}") from exc

    cfg = ExperimentConfig(
        command=command,
        n_list=cast_n_list(pick("n_list", str, "256,512,1024,2048,4096")),
        horizon=pick("horizon", float, 1.0),
        replications=pick("replications", int, 500),
        master_seed=pick("master_seed", int, DEFAULT_MASTER_SEED),
        integrand=pick("integrand", str, "sin"),
        method=cast_method(pick("method", str, "circulant")),
        refinement_factor=pick("refinement_factor", int, 4),
        truncation=pick("truncation", int, DEFAULT_TRUNCATION),
        output_dir=pick("output_dir", str, "out"),
        check=bool(pick("check", lambda s: s.lower() in ("1", "true", "yes"), False)),
        workers=pick("workers", int, os.cpu_count() or 1),
    )
    cfg.validate()
    return cfg


# --- output helpers -----------------------------------------------------------


def _write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _samples_csv(columns: dict[str, np.ndarray], t: float | None = None) -> bytes:
    names = list(columns)
    head = ["replication"] + (["t"] if t is not None else []) + names
    rows = [",".join(head)]
    n = len(next(iter(columns.values())))
    tcol = [repr(float(t))] if t is not None else []
    for r in range(n):
        rows.append(",".join([str(r), *tcol, *(repr(float(columns[c][r])) for c in names)]))
    return ("\n".join(rows) + "\n").encode("utf-8")


class Emitter:
    """Collects output files for one command run and writes the manifest."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dir = os.path.join(cfg.output_dir, cfg.command)
        os.makedirs(self.dir, exist_ok=True)
        self.hashes: dict[str, str] = {}
        self.started = time.time()

    def emit(self, name: str, data: bytes) -> None:
        _write_atomic(os.path.join(self.dir, name), data)
        self.hashes[name] = hashlib.sha256(data).hexdigest()

    def finish(self) -> None:
        digest = hashlib.sha256()
        for name in sorted(self.hashes):
            digest.update(f"{name}:{self.hashes[name]}\n".encode())
        manifest = {
            "config": self.cfg.echo(),
            "artifact_version": __version__,
            "platform": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "machine": platform.machine(),
                "system": platform.system(),
            },
            "wall_clock_s": round(time.time() - self.started, 3),
            "files": self.hashes,
            "manifest_hash": digest.hexdigest(),
        }
        _write_atomic(os.path.join(self.dir, "manifest.json"), _json_bytes(manifest))


# --- commands -------------------------------------------------------------------


def cmd_kappa(cfg: ExperimentConfig) -> int:
    kc = kappa_constant(cfg.truncation)
    payload = {
        "kappa": kc.kappa,
        "kappa_sq": kc.kappa_sq,
        "truncation_radius": kc.truncation_radius,
        "tail_bound": kc.tail_bound,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    emitter = Emitter(cfg)
    checks = {
        "kappa_sq_close": abs(kc.kappa_sq - KAPPA_SQ_REF) <= KAPPA_SQ_TOL,
        "kappa_close": abs(kc.kappa - KAPPA_REF) <= KAPPA_TOL,
    }
    emitter.emit("report.json", _json_bytes({**payload, "checks": checks}))
    emitter.finish()
    if cfg.check and not all(checks.values()):
        return 4
    return 0


def cmd_converge(cfg: ExperimentConfig) -> int:
    integrands = parse_integrand_list(cfg.integrand)
    emitter = Emitter(cfg)
    report = {"per_n": []}
    ok = True
    for n in cfg.n_list:
        result = converge_experiment(
            n,
            cfg.horizon,
            cfg.replications,
            cfg.master_seed,
            [g.label for g in integrands],
            cfg.method,
            cfg.refinement_factor,
            cfg.workers,
        )
        est_cols = {"B": result.est_b1, "cubic": result.est_cubic}
        orc_cols = {"B": result.orc_b1, "cubic": result.orc_cubic}
        for label in result.integrands:
            est_cols[f"int_{label}"] = result.est_int[label]
            orc_cols[f"int_{label}"] = result.orc_int[label]
        emitter.emit(f"estimator_n{n}.csv", _samples_csv(est_cols, t=cfg.horizon))
        emitter.emit(f"oracle_n{n}.csv", _samples_csv(orc_cols, t=cfg.horizon))
        ks = {
            name: {
                "statistic": res.statistic,
                "critical_001": res.critical_001,
                "rejects": res.rejects_at_1pct,
            }
            for name, res in result.ks.items()
        }
        ok = ok and not any(entry["rejects"] for entry in ks.values())
        report["per_n"].append(
            {
                "n": n,
                "refinement": result.refinement,
                "ks": ks,
                "estimator_correlations": result.est_corr.tolist(),
                "oracle_correlations": result.orc_corr.tolist(),
            }
        )
    report["all_ks_accepted"] = ok
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


def cmd_variations(cfg: ExperimentConfig) -> int:
    # identities are checked at every grid; the distributional checks
    # (variance near kappa^2, decorrelation from B) are asymptotic and
    # apply at the largest grid only
    emitter = Emitter(cfg)
    kc = kappa_constant(cfg.truncation)
    n_top = max(cfg.n_list)
    report = {"per_n": []}
    ok = True
    for n in cfg.n_list:
        result = identity_experiment(
            n, cfg.horizon, cfg.replications, cfg.master_seed, cfg.method, cfg.workers
        )
        identities_ok = all(v <= IDENTITY_TOL for v in result.max_rel_residuals.values())
        var_ok = abs(result.vn_variance - kc.kappa_sq) <= CUBIC_VAR_RTOL * kc.kappa_sq
        corr_ok = abs(result.vn_b1_corr) < CUBIC_CORR_MAX
        ok = ok and identities_ok and (n != n_top or (var_ok and corr_ok))
        emitter.emit(
            f"cubic_n{n}.csv", _samples_csv({"B": result.b1, "cubic": result.vn})
        )
        report["per_n"].append(
            {
                "n": n,
                "max_rel_residuals": result.max_rel_residuals,
                "cubic_variance": result.vn_variance,
                "kappa_sq": kc.kappa_sq,
                "cubic_b_corr": result.vn_b1_corr,
                "identities_ok": identities_ok,
                "variance_ok": var_ok,
                "corr_ok": corr_ok,
            }
        )
    report["all_ok"] = ok
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


def cmd_sextic(cfg: ExperimentConfig) -> int:
    emitter = Emitter(cfg)
    result = sextic_experiment(
        cfg.n_list,
        cfg.horizon,
        cfg.replications,
        cfg.master_seed,
        cfg.method,
        workers=cfg.workers,
    )
    mean_ok = abs(result.mean_value - result.mean_target) <= 3.0 * result.mean_se
    ok = result.medians_decreasing and mean_ok
    report = {
        "n_list": result.n_list,
        "median_sup_deviation": result.medians,
        "medians_decreasing": result.medians_decreasing,
        "mean_n": result.mean_n,
        "mean_value": result.mean_value,
        "mean_se": result.mean_se,
        "mean_target": result.mean_target,
        "mean_ok": mean_ok,
    }
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


def _file_tag(label: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in label)


def cmd_hermite(cfg: ExperimentConfig) -> int:
    # mean checks apply everywhere; the variance check is asymptotic and
    # applies at the largest grid only
    integrands = parse_integrand_list(cfg.integrand)
    emitter = Emitter(cfg)
    n_top = max(cfg.n_list)
    report = {"per_integrand": []}
    ok = True
    for g in integrands:
        if not g.is_bounded:
            print(
                f"warning: integrand {g.label!r} is unbounded; the fdd limits "
                "assume bounded maps, proceeding anyway",
                file=sys.stderr,
            )
        for n in cfg.n_list:
            result = hermite_experiment(
                n,
                cfg.horizon,
                cfg.replications,
                cfg.master_seed,
                g,
                cfg.method,
                cfg.workers,
            )
            stats = result.summary()
            mean_ok = abs(stats["left_mean"] - result.mean_limit) <= 3.0 * stats["left_se"]
            right_ok = abs(stats["right_mean"] + result.mean_limit) <= 3.0 * stats["right_se"]
            var_ok = (
                abs(stats["left_variance"] - result.variance_limit)
                <= HERMITE_VAR_RTOL * result.variance_limit
            )
            ok = ok and mean_ok and right_ok and (n != n_top or var_ok)
            emitter.emit(
                f"hermite_{_file_tag(g.label)}_n{n}.csv",
                _samples_csv({"left": result.left, "right": result.right}),
            )
            report["per_integrand"].append(
                {
                    "integrand": g.label,
                    "bounded": result.bounded,
                    "n": n,
                    **stats,
                    "left_mean_ok": mean_ok,
                    "right_mean_ok": right_ok,
                    "variance_ok": var_ok,
                }
            )
    report["all_ok"] = ok
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


def cmd_scaling(cfg: ExperimentConfig) -> int:
    emitter = Emitter(cfg)
    result = scaling_experiment(
        cfg.master_seed, cfg.replications, integrand=cfg.integrand, method=cfg.method
    )
    report = {"per_estimator": [], "replications": cfg.replications}
    ok = True
    for estimator, fit in result.fits.items():
        floor = SLOPE_FLOORS[estimator]
        est_ok = fit.slope >= floor and fit.r_squared >= SLOPE_R2_MIN
        ok = ok and est_ok
        report["per_estimator"].append(
            {
                "estimator": estimator.value,
                "slope": fit.slope,
                "slope_floor": floor,
                "r_squared": fit.r_squared,
                "points": [list(p) for p in fit.points],
                "spec": {
                    "n": result.specs[estimator]["n"],
                    "horizon": result.specs[estimator].get("horizon"),
                    "gaps": list(result.specs[estimator]["gaps"]),
                },
                "ok": est_ok,
            }
        )
    report["all_ok"] = ok
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


def cmd_taylor(cfg: ExperimentConfig) -> int:
    emitter = Emitter(cfg)
    result = taylor_experiment(cfg.master_seed, pairs=1000)
    ok = result.max_poly_r6 < TAYLOR_R6_TOL and result.gamma_exact
    report = {**result.as_dict(), "ok": ok}
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


def cmd_audit(cfg: ExperimentConfig) -> int:
    emitter = Emitter(cfg)
    result = audit_experiment(cfg.n_list, cfg.horizon)
    top = max(row["n"] for row in result.anchor_sums)
    top_row = next(row for row in result.anchor_sums if row["n"] == top)
    sums_ok = (
        result.anchor_sums_decreasing()
        and top_row["left"] < ANCHOR_SUM_MAX
        and top_row["right"] < ANCHOR_SUM_MAX
    )
    orth_ok = result.orthogonality_max_dev < ORTHOGONALITY_TOL
    ok = sums_ok and orth_ok
    report = {
        "covariance_audits": result.covar,
        "anchored_cube_sums": result.anchor_sums,
        "anchored_sums_decreasing": result.anchor_sums_decreasing(),
        "orthogonality_max_dev": result.orthogonality_max_dev,
        "ok": ok,
    }
    emitter.emit("report.json", _json_bytes(report))
    emitter.finish()
    return 0 if ok or not cfg.check else 4


_COMMANDS = {
    "kappa": cmd_kappa,
    "converge": cmd_converge,
    "variations": cmd_variations,
    "sextic": cmd_sextic,
    "hermite": cmd_hermite,
    "scaling": cmd_scaling,
    "taylor": cmd_taylor,
    "audit": cmd_audit,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmlab",
        description="Monte Carlo laboratory for the sixth-root fractional "
        "Brownian motion and its weak Stratonovich limit theory",
    )
    parser.add_argument("command", nargs="?", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="key=value config file with a [command] header")
    parser.add_argument("--n-list", dest="n_list", help="comma-separated grid sizes")
    parser.add_argument("--horizon", type=float)
    parser.add_argument("--replications", type=int)
    parser.add_argument("--master-seed", dest="master_seed", type=int)
    parser.add_argument(
        "--integrand", help="integrand spec, semicolon-separated for several"
    )
    parser.add_argument("--method", choices=[m.value for m in Method])
    parser.add_argument("--refinement-factor", dest="refinement_factor", type=int)
    parser.add_argument("--truncation", type=int)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--check", action="store_const", const=True, default=None,
                        help="exit 4 unless the command's acceptance checks pass")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on bad flags; keep it a return
        return 2 if exc.code else 0
    try:
        cfg = _config_from(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
