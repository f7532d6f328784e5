"""Command-line front end.

Exit codes: 0 success, 2 I/O, 3 configuration, 4 numeric/degeneracy.  Every
failure prints a JSON object ``{"error": {"code", "message", "exit_status"}}``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import brownian
from .asymptotics import asymptotic_report
from .calculus import DegenerateEigenspaceError, DomainError
from .fcca import OracleConfig, fit, fit_cov, rayleigh_oracle
from .io import DataError, SplitError, dumps, ingest, write_csv
from .operators import BlockStructure

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
ORACLE_TOL = 1e-6


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_status: int):
        super().__init__(message)
        self.code = code
        self.exit_status = exit_status


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    basis_size: int = 20
    confidence: float = 0.95
    seed: int = 0
    output_path: str | None = None

    def validate(self) -> None:
        if not self.alpha > 0:
            raise CliError("config.alpha_nonpositive", f"alpha must be positive, got {self.alpha}", EXIT_CONFIG)
        if not 4 <= self.basis_size <= 512:
            raise CliError("config.basis_size", f"basis size must lie in [4, 512], got {self.basis_size}", EXIT_CONFIG)
        if not 0 < self.confidence < 1:
            raise CliError("config.confidence", f"confidence must lie in (0, 1), got {self.confidence}", EXIT_CONFIG)


def _emit(doc: dict, out: str | None) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _numeric(exc: Exception) -> CliError:
    if isinstance(exc, DegenerateEigenspaceError):
        return CliError("numeric.degenerate", str(exc), EXIT_NUMERIC)
    if isinstance(exc, DomainError):
        return CliError("numeric.domain", str(exc), EXIT_NUMERIC)
    return CliError("numeric.linalg", str(exc), EXIT_NUMERIC)


def cmd_fit(args) -> int:
    cfg = RunConfig(args.alpha, args.basis_size, args.confidence, 0, args.out)
    cfg.validate()
    try:
        sample, structure = ingest(args.data, args.split, cfg.basis_size)
    except FileNotFoundError as exc:
        raise CliError("io.not_found", f"no such file: {exc.filename}", EXIT_IO) from exc
    except OSError as exc:
        raise CliError("io.unreadable", str(exc), EXIT_IO) from exc
    except DataError as exc:
        raise CliError("io.malformed_csv", str(exc), EXIT_IO) from exc
    except SplitError as exc:
        raise CliError("config.split_out_of_range", str(exc), EXIT_CONFIG) from exc
    if sample.n < 2:
        raise CliError("numeric.insufficient_data", f"need at least 2 curves, got {sample.n}", EXIT_NUMERIC)
    try:
        fitted = fit(sample, structure, cfg.alpha)
        rep = asymptotic_report(sample, fitted, cfg.confidence)
    except (np.linalg.LinAlgError, DomainError) as exc:
        raise _numeric(exc) from exc
    _emit(
        {
            "rho2": fitted.rho2,
            "f1": fitted.f1,
            "f2": fitted.f2,
            "sigma2": rep.sigma2,
            "ci": list(rep.ci_rho2),
            "confidence": cfg.confidence,
            "n": sample.n,
            "alpha": cfg.alpha,
            "M": structure.dim,
            "split_index": structure.split,
            "g1_cov_diag": rep.vector_cov_diag,
        },
        cfg.output_path,
    )
    return EXIT_OK


def _model(args) -> brownian.BrownianModel:
    if not args.alpha > 0:
        raise CliError("config.alpha_nonpositive", f"alpha must be positive, got {args.alpha}", EXIT_CONFIG)
    try:
        return brownian.BrownianModel.single_mode(args.a1sq, args.alpha, args.kl_terms)
    except ValueError as exc:
        raise CliError("config.invalid", str(exc), EXIT_CONFIG) from exc


def cmd_mc(args) -> int:
    model = _model(args)
    if args.n < 2 or args.reps < 1 or args.kl_terms < 1:
        raise CliError("config.invalid", "need n >= 2, reps >= 1 and kl-terms >= 1", EXIT_CONFIG)
    res = brownian.mc_study(model, args.n, args.reps, args.seed, bins=args.bins, threads=args.threads)
    doc = {"model": {"a1sq": args.a1sq, "alpha": args.alpha, "kl_terms": args.kl_terms}}
    doc.update(res.to_dict())
    _emit(doc, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    # alpha plays no role in drawing paths
    args.alpha = 1.0
    model = _model(args)
    if args.n < 2 or args.grid_points < 3:
        raise CliError("config.invalid", "need n >= 2 and grid-points >= 3", EXIT_CONFIG)
    if (args.grid_points - 1) % 2:
        raise CliError("config.invalid", "grid-points must be odd so that t = 1 is a grid point", EXIT_CONFIG)
    grid = brownian.default_grid(args.grid_points)
    write_csv(args.out, grid, brownian.sample_paths(model, args.n, grid, args.seed))
    return EXIT_OK


def oracle_suite(dim: int, seed: int, instances: int = 25) -> dict:
    """Compare the eigenvalue route with direct Rayleigh maximization on random covariances."""
    rng = np.random.default_rng(seed)
    structure = BlockStructure(dim, dim // 2)
    cases = []
    for i in range(instances):
        x = rng.standard_normal((dim, dim))
        cov = x @ x.T / dim
        alpha = float(rng.uniform(0.05, 1.0))
        f = fit_cov(cov, structure, alpha)
        brute = rayleigh_oracle(cov, structure, alpha, OracleConfig(seed=i))
        cases.append({"alpha": alpha, "rho2_eigen": f.rho2, "rho2_r2": f.rho2_r2, "rho2_oracle": brute,
                      "abs_diff": abs(f.rho2 - brute)})
    worst = max(c["abs_diff"] for c in cases)
    return {"dim": dim, "seed": seed, "instances": instances, "tolerance": ORACLE_TOL,
            "max_abs_diff": worst, "passed": worst <= ORACLE_TOL, "cases": cases}


def cmd_oracle(args) -> int:
    if not 2 <= args.dim <= 8:
        raise CliError("config.invalid", f"dim must lie in [2, 8], got {args.dim}", EXIT_CONFIG)
    doc = oracle_suite(args.dim, args.seed, args.instances)
    _emit(doc, args.out)
    return EXIT_OK if doc["passed"] else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opdelta", description="Regularized functional CCA with delta-method inference.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a CSV of gridded curves")
    f.add_argument("--data", required=True)
    f.add_argument("--split", type=float, required=True, help="boundary between the two halves of the domain")
    f.add_argument("--alpha", type=float, required=True)
    f.add_argument("--basis-size", type=int, default=20)
    f.add_argument("--confidence", type=float, default=0.95)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("mc", help="Monte Carlo study on dependent Brownian motions")
    m.add_argument("--a1sq", type=float, required=True)
    m.add_argument("--alpha", type=float, required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--reps", type=int, required=True)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--kl-terms", type=int, default=brownian.DEFAULT_KL_TERMS)
    m.add_argument("--bins", type=int, default=20)
    m.add_argument("--threads", type=int, default=None, help="defaults to $OPDELTA_THREADS or 1")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mc)

    s = sub.add_parser("simulate", help="write Brownian-model curves on a grid over [0, 2] as CSV")
    s.add_argument("--a1sq", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kl-terms", type=int, default=brownian.DEFAULT_KL_TERMS)
    s.add_argument("--grid-points", type=int, default=brownian.DEFAULT_GRID_POINTS)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle", help="cross-check eigenvalue route against Rayleigh maximization")
    o.add_argument("--dim", type=int, required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--instances", type=int, default=25)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stdout.write(dumps({"error": {"code": exc.code, "message": str(exc), "exit_status": exc.exit_status}}))
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
