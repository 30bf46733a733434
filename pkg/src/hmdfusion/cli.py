"""Command-line entry point.

Subcommands:

* ``run``: execute a scenario and write CSV/JSON reports;
* ``bench``: time the closed-form fusers relative to naive fusion;
* ``fuse``: fuse two Gaussian estimates given on the command line;
* ``demo-mixture``: fuse the two-component mixture pair and write grid data.

Angles on the command line are in degrees. The default output directory is
taken from ``HMDFUSION_OUTPUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fusion
from .gaussian import GaussianEstimate, GaussianMixture, moment_match
from .metrics import ELLIPSE_CONFIDENCE, bench_fusers, ellipse_from_cov
from .report import OUTPUT_ENV, default_output_dir, write_report
from .sampling import DegenerateOverlapError, SampleFusionConfig, gmd_s_gaussian, hmd_s_gaussian, hmd_s_mixture
from .scenarios import ConfigError, ScenarioKind, default_config, load_config, run
from .scenarios.config import bundled_config_path, parse_fusers

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

SAMPLED_METHODS = ("hmd-s", "gmd-s")

DEMO_C1 = [[2.5, -1.0], [-1.0, 1.2]]
DEMO_C2 = [[0.8, -0.5], [-0.5, 4.0]]


def demo_mixtures() -> tuple[GaussianMixture, GaussianMixture]:
    m1 = GaussianMixture([0.3, 0.7], (GaussianEstimate([-0.5, 3.0], DEMO_C1), GaussianEstimate([2.0, 0.3], DEMO_C2)))
    m2 = GaussianMixture([0.4, 0.6], (GaussianEstimate([-1.5, 1.0], DEMO_C1), GaussianEstimate([3.0, -4.0], DEMO_C2)))
    return m1, m2


def parse_estimate(tokens: list[str]) -> GaussianEstimate:
    """Parse ``mean=a,b cov=c11,c12,c21,c22`` into an estimate."""
    fields = {}
    for tok in tokens:
        for part in tok.split():
            if "=" not in part:
                raise ConfigError(f"expected key=value, got {part!r}")
            k, v = part.split("=", 1)
            try:
                fields[k.strip()] = [float(x) for x in v.split(",") if x.strip()]
            except ValueError as exc:
                raise ConfigError(f"non-numeric value in {part!r}") from exc
    if set(fields) != {"mean", "cov"}:
        raise ConfigError("an estimate needs exactly 'mean=' and 'cov=' fields")
    n = len(fields["mean"])
    if len(fields["cov"]) != n * n:
        raise ConfigError(f"cov needs {n * n} entries for a {n}-dimensional mean")
    try:
        return GaussianEstimate(fields["mean"], np.reshape(fields["cov"], (n, n)))
    except np.linalg.LinAlgError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_set(values: list[str] | None) -> dict:
    out = {}
    for item in values or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _print_estimate(est: GaussianEstimate, label: str) -> None:
    ell = ellipse_from_cov(est, ELLIPSE_CONFIDENCE) if est.dim >= 2 else None
    print(f"{label} mean: {np.array2string(est.mean, precision=6)}")
    print(f"{label} cov:\n{np.array2string(est.cov, precision=6)}")
    if ell is not None:
        a, b = ell.semi_axes
        print(f"{label} {ELLIPSE_CONFIDENCE:.1%} ellipse: semi-axes ({a:.6g}, {b:.6g}), "
              f"orientation {np.rad2deg(ell.orientation):.4g} deg")


def cmd_run(args) -> int:
    if args.config:
        path = Path(args.config)
        if not path.exists() and args.config in {k.value for k in ScenarioKind}:
            path = bundled_config_path(args.config)
        cfg = load_config(path)
        if args.scenario and ScenarioKind(args.scenario) is not cfg.kind:
            raise ConfigError(f"--scenario {args.scenario} disagrees with config kind {cfg.kind.value}")
    elif args.scenario:
        cfg = default_config(args.scenario)
    else:
        raise ConfigError("give --scenario or --config")
    params = _parse_set(args.set)
    unknown = sorted(set(params) - set(cfg.params))
    if unknown:
        raise ConfigError(f"unknown {cfg.kind.value} parameters: {', '.join(unknown)}")
    cfg = cfg.with_overrides(mc_runs=args.mc_runs, seed=args.seed,
                             fusers=parse_fusers(args.fusers) if args.fusers else None, params=params)
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    report = run(cfg, threads=args.threads)
    out = Path(args.output_dir) if args.output_dir else default_output_dir()
    paths = write_report(report, out)
    print(f"{cfg.kind.value}: {cfg.mc_runs} runs, fusers {', '.join(cfg.fusers)}; wrote {len(paths)} files to {out}")
    return 0


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    pairs = []
    for _ in range(args.pairs):
        a = rng.standard_normal((args.dim, args.dim))
        b = rng.standard_normal((args.dim, args.dim))
        pairs.append((GaussianEstimate(rng.standard_normal(args.dim), a @ a.T + 0.5 * np.eye(args.dim)),
                      GaussianEstimate(rng.standard_normal(args.dim), b @ b.T + 0.5 * np.eye(args.dim))))
    fusers = parse_fusers(args.fusers) if args.fusers else ("naive", "ci", "ici", "hmd-ga")
    fusers = tuple(f for f in fusers if f != "centralized")
    res = bench_fusers(pairs, fusers, min_calls=args.calls)
    print(f"{'fuser':<8} {'relative':>9} {'us/call':>9}")
    for f in res.relative:
        print(f"{f:<8} {res.relative[f]:9.2f} {1e6 * res.seconds_per_call[f]:9.3f}")
    if args.output_dir or args.write:
        out = Path(args.output_dir) if args.output_dir else default_output_dir()
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(json.dumps(
            {"relative": res.relative, "seconds_per_call": res.seconds_per_call, "calls": res.calls,
             "dim": args.dim}, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_fuse(args) -> int:
    e1, e2 = parse_estimate(args.e1), parse_estimate(args.e2)
    method = args.method.replace("_", "-").lower()
    if method in SAMPLED_METHODS:
        omega = 0.5 if args.omega is None else args.omega
        cfg = SampleFusionConfig(sample_count=args.samples, inflation=args.alpha, rng_seed=args.seed)
        est = (hmd_s_gaussian if method == "hmd-s" else gmd_s_gaussian)(e1, e2, omega, cfg)
        print(f"method {method}, omega {omega:g}, {args.samples} samples, inflation {args.alpha:g}")
    else:
        res = fusion.fuse(method, e1, e2, omega=args.omega)
        est = res.estimate
        w = res.weight
        print(f"method {method}" + ("" if w is None else f", omega {w.omega:.6g} ({w.how_found})"))
    _print_estimate(est, "fused")
    return 0


def cmd_demo_mixture(args) -> int:
    from .grid import grid_eval, grid_hmd

    m1, m2 = demo_mixtures()
    cfg = SampleFusionConfig(sample_count=args.samples, inflation=args.alpha, rng_seed=args.seed)
    fused = hmd_s_mixture(m1, m2, args.omega, cfg)
    bounds = ((-8.0, 9.0), (-10.0, 8.0))
    g1 = grid_eval(m1, bounds, args.resolution)
    g2 = grid_eval(m2, bounds, args.resolution)
    gh, _ = grid_hmd(g1, g2, args.omega)
    gf = grid_eval(fused, bounds, args.resolution)
    out = Path(args.output_dir) if args.output_dir else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    X, Y = np.meshgrid(*g1.axes, indexing="ij")
    cols = np.column_stack([X.ravel(), Y.ravel(), g1.values.ravel(), g2.values.ravel(),
                            gh.values.ravel(), gf.values.ravel()])
    np.savetxt(out / "demo_mixture__grid.csv", cols, delimiter=",", fmt="%.10g",
               header="x,y,p1,p2,hmd_grid,hmd_s_mixture", comments="")
    mm = moment_match(fused)
    record = {
        "omega": args.omega,
        "samples": args.samples,
        "fused_mixture": [{"weight": float(w), "mean": c.mean.tolist(), "cov": c.cov.tolist()}
                          for w, c in zip(fused.weights, fused.components)],
        "fused_moments": {"mean": mm.mean.tolist(), "cov": mm.cov.tolist()},
        "grid_moments": {"mean": gh.mean().tolist(), "cov": gh.cov().tolist()},
    }
    (out / "demo_mixture__fused.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    _print_estimate(mm, "moment-matched fused mixture")
    print(f"wrote grid and fused mixture to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmdfusion", description="Harmonic-mean-density track fusion experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write reports")
    r.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    r.add_argument("--config", help="JSON scenario file, or the name of a bundled one")
    r.add_argument("--fusers", help="comma-separated list, e.g. naive,ci,ici,hmd-ga,centralized")
    r.add_argument("--mc-runs", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--output-dir", help=f"defaults to ${OUTPUT_ENV} or ./hmdfusion-output")
    r.add_argument("--threads", type=int, default=1, help="worker threads for Monte-Carlo runs")
    r.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario parameter (JSON value); angles in degrees")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="relative run time of the fusers")
    b.add_argument("--fusers")
    b.add_argument("--calls", type=int, default=10_000)
    b.add_argument("--pairs", type=int, default=200)
    b.add_argument("--dim", type=int, default=4)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--output-dir")
    b.add_argument("--write", action="store_true", help="write bench.json to the default output directory")
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("fuse", help="fuse two Gaussian estimates")
    f.add_argument("--e1", nargs="+", required=True, metavar="FIELD", help="mean=a,b cov=c11,c12,c21,c22")
    f.add_argument("--e2", nargs="+", required=True, metavar="FIELD")
    f.add_argument("--method", default="hmd-ga", choices=["naive", "ci", "ici", "hmd-ga", *SAMPLED_METHODS])
    f.add_argument("--omega", type=float, help="fixed weight; optimized when omitted (0.5 for sampled methods)")
    f.add_argument("--samples", type=int, default=5000)
    f.add_argument("--alpha", type=float, default=1.0, help="proposal covariance inflation for sampling")
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fuse)

    d = sub.add_parser("demo-mixture", help="fuse the two-component mixture pair")
    d.add_argument("--omega", type=float, default=0.5)
    d.add_argument("--samples", type=int, default=5000)
    d.add_argument("--alpha", type=float, default=1.0)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--resolution", type=int, default=201)
    d.add_argument("--output-dir")
    d.set_defaults(func=cmd_demo_mixture)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RuntimeError, np.linalg.LinAlgError, DegenerateOverlapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
