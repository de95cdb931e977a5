"""Command-line front end.

Subcommands: ``density``, ``sample``, ``verify``, ``morris``, ``moments``.
Data goes to stdout (or ``--output``), diagnostics to stderr.  Every
artifact embeds the full run configuration and the library version.

Exit codes: 0 success, 1 bad flags, 2 unsupported/degenerate input,
3 statistical verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass

from unicirc import __version__
from unicirc.density_engine import EnsembleSpec, density_grid, trace_power_expectation
from unicirc.ensemble_sampler import RngStream, default_workers, sample_eigenphases
from unicirc.errors import UnicircError
from unicirc.gamma_toolkit import MorrisParams, morris_log
from unicirc.verification import moment_check, run_verification

EXIT_OK, EXIT_USAGE, EXIT_UNSUPPORTED, EXIT_STAT_FAIL = 0, 1, 2, 3

DEFAULT_COUNT = {"sample": 10, "verify": 200_000}


@dataclass(frozen=True)
class RunConfig:
    command: str
    beta: int | None = None
    N: int | None = None
    unimodular: bool = True
    count: int | None = None
    grid_points: int = 256
    bins: int = 64
    seed: int = 0
    stream_id: int = 0
    format: str = "csv"
    normalization: str = "total"
    output_path: str | None = None
    path: str = "matrix"
    k: int | None = None
    n_vars: int | None = None
    a: float | None = None
    b: float | None = None
    lam: float | None = None
    expect_uniform: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    """17 significant digits: round-trips every double exactly."""
    return format(float(x), ".17g")


def _json_float(x: float) -> float | str:
    return x if math.isfinite(x) else str(x)


def _header(cfg: RunConfig) -> dict:
    return {"version": __version__, "config": asdict(cfg)}


def _csv_text(cfg: RunConfig, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# unicirc {__version__}\n")
    buf.write(f"# config: {json.dumps(asdict(cfg), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _add_common(p: argparse.ArgumentParser, *, ensemble=True, sampling=False):
    if ensemble:
        p.add_argument("--beta", type=int, required=True, help="Dyson index")
        p.add_argument("--N", type=int, required=True, help="number of eigenphases")
        p.add_argument(
            "--unimodular",
            action=argparse.BooleanOptionalAction,
            default=True,
            help="impose det U = 1 (default: on)",
        )
    if sampling:
        p.add_argument("--count", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stream-id", type=int, default=0)
        p.add_argument(
            "--path",
            choices=("matrix", "rotation"),
            default="matrix",
            help="beta=2 unimodular route: SU(N) matrices or projected U(N) phases",
        )
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", dest="output_path", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unicirc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"unicirc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="exact eigenphase density on a uniform grid")
    _add_common(p)
    p.add_argument("--grid-points", type=int, default=256)
    p.add_argument("--normalization", choices=("total", "per_eigenvalue"), default="total")

    p = sub.add_parser("sample", help="draw sorted eigenphase vectors")
    _add_common(p, sampling=True)

    p = sub.add_parser("verify", help="Monte Carlo test of the exact density (JSON report)")
    _add_common(p, sampling=True)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument(
        "--expect-uniform",
        action="store_true",
        help="diagnostic: test samples against the flat density (should fail)",
    )

    p = sub.add_parser("morris", help="Morris trigonometric integral")
    p.add_argument("--n-vars", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", dest="output_path", default=None)

    p = sub.add_parser("moments", help="E[sum_j exp(i k theta_j)], optionally with Monte Carlo")
    _add_common(p, sampling=True)
    p.add_argument("--k", type=int, required=True)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {f for f in RunConfig.__dataclass_fields__}
    values = {key: val for key, val in vars(args).items() if key in fields}
    if args.command in DEFAULT_COUNT and values.get("count") is None:
        values["count"] = DEFAULT_COUNT[args.command]
    return RunConfig(**values)


def _check_positive(cfg: RunConfig) -> str | None:
    for name in ("N", "count", "grid_points", "bins"):
        val = getattr(cfg, name)
        if val is not None and val < 1:
            return f"--{name.replace('_', '-')} must be positive"
    if cfg.beta is not None and cfg.beta < 1:
        return "--beta must be a positive integer"
    if cfg.command == "density" and cfg.grid_points < 2:
        return "--grid-points must be at least 2"
    return None


def cmd_density(cfg: RunConfig) -> tuple[str, int]:
    spec = EnsembleSpec(cfg.beta, cfg.N, cfg.unimodular)
    grid = density_grid(spec, cfg.grid_points, cfg.normalization)
    if cfg.format == "csv":
        return _csv_text(cfg, ["theta", "rho"], [(fmt(t), fmt(r)) for t, r in grid]), EXIT_OK
    payload = _header(cfg)
    payload["points"] = [{"theta": float(t), "rho": float(r)} for t, r in grid]
    return _json_text(payload), EXIT_OK


def _sample(cfg: RunConfig):
    spec = EnsembleSpec(cfg.beta, cfg.N, cfg.unimodular)
    rng = RngStream(cfg.seed, cfg.stream_id)
    return sample_eigenphases(spec, cfg.count, rng, path=cfg.path, workers=default_workers())


def cmd_sample(cfg: RunConfig) -> tuple[str, int]:
    batch = _sample(cfg)
    if cfg.format == "csv":
        columns = ["sample"] + [f"phase_{j}" for j in range(batch.shape[1])]
        rows = ([str(i)] + [fmt(x) for x in row] for i, row in enumerate(batch))
        return _csv_text(cfg, columns, rows), EXIT_OK
    payload = _header(cfg)
    payload["samples"] = batch.tolist()
    return _json_text(payload), EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    spec = EnsembleSpec(cfg.beta, cfg.N, cfg.unimodular)
    report = run_verification(
        spec,
        cfg.count,
        RngStream(cfg.seed, cfg.stream_id),
        bins=cfg.bins,
        expect_uniform=cfg.expect_uniform,
        path=cfg.path,
        workers=default_workers(),
    )
    payload = _header(cfg) | report
    for test in report["tests"]:
        status = "PASS" if test["passed"] else "FAIL"
        print(f"[{status}] {test['name']}", file=sys.stderr)
    return _json_text(payload), EXIT_OK if report["passed"] else EXIT_STAT_FAIL


def cmd_morris(cfg: RunConfig) -> tuple[str, int]:
    res = morris_log(MorrisParams(cfg.n_vars, cfg.a, cfg.b, cfg.lam))
    value = float(res.value)
    if res.pole is None:
        pole_factor, pole_j, pole_arg = "", "", ""
    else:
        pole_factor, pole_j, pole_arg = res.pole
    if cfg.format == "csv":
        row = [fmt(value), str(res.pole is not None).lower(), pole_factor, pole_j,
               "" if res.pole is None else fmt(pole_arg)]
        return _csv_text(cfg, ["value", "exact_zero", "pole_factor", "pole_j", "pole_argument"], [row]), EXIT_OK
    payload = _header(cfg)
    payload["value"] = value
    payload["exact_zero"] = res.pole is not None
    payload["pole"] = None if res.pole is None else {
        "factor": f"Gamma({pole_factor})", "j": pole_j, "argument": pole_arg,
    }
    return _json_text(payload), EXIT_OK


def cmd_moments(cfg: RunConfig) -> tuple[str, int]:
    if cfg.unimodular:
        analytic = trace_power_expectation(cfg.beta, cfg.N, cfg.k)
    else:
        analytic = float(cfg.N) if cfg.k == 0 else 0.0
    columns = ["k", "analytic"]
    row = [str(cfg.k), fmt(analytic)]
    extra = {}
    if cfg.count is not None:
        mc = moment_check(_sample(cfg), cfg.k, analytic)
        columns += ["empirical_mean", "standard_error", "z_score"]
        row += [fmt(mc.mean), fmt(mc.standard_error), fmt(mc.z_score)]
        extra = {"empirical_mean": mc.mean, "standard_error": mc.standard_error,
                 "z_score": _json_float(mc.z_score)}
    if cfg.format == "csv":
        return _csv_text(cfg, columns, [row]), EXIT_OK
    payload = _header(cfg) | {"k": cfg.k, "analytic": analytic} | extra
    return _json_text(payload), EXIT_OK


COMMANDS = {
    "density": cmd_density,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "morris": cmd_morris,
    "moments": cmd_moments,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    problem = _check_positive(cfg)
    if problem:
        print(f"unicirc: error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    try:
        text, code = COMMANDS[cfg.command](cfg)
    except UnicircError as exc:
        print(f"unicirc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
