"""Command-line entry point.

Subcommands::

    simulate     sweep one scenario realization; write plan, correlations, true SCM
    reconstruct  correlations JSON -> SCM file
    music        SCM file -> pseudospectrum CSV and DOA CSV
    experiment   run nse_vs_q | nse_vs_k | music_mse | complexity -> CSV

Exit codes: 0 success, 2 configuration or usage error, 3 every trial degenerate.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio, harness
from .array_model import ArrayConfig, generate_snapshots, true_scm
from .beam_sweep import make_plan, measure_correlations
from .config import EXPERIMENTS, ConfigError, experiment_scenario, load_config
from .music import default_grid, music_doas
from .reconstruct import IllConditionedError, reconstruct_scm

log = logging.getLogger("hybridscm")

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", metavar="PATH", help="TOML config file")
    p.add_argument("--preset", metavar="NAME", help="bundled preset (default: desk)")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory")
    p.add_argument("--trials", type=int, help="override the trial count")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridscm", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one beam sweep")
    _common(p)
    p.add_argument("--snapshots", action="store_true", help="also save K full-array snapshots as .npy")

    p = sub.add_parser("reconstruct", help="reconstruct an SCM from correlations")
    _common(p)
    p.add_argument("--correlations", required=True, metavar="PATH")
    p.add_argument("--algorithm", choices=["basic", "low_complexity", "fast_diagonal"])
    p.add_argument("--sigma2", type=float)

    p = sub.add_parser("music", help="MUSIC DOA estimation on an SCM file")
    _common(p)
    p.add_argument("--scm", required=True, metavar="PATH")
    p.add_argument("--sources", type=int, required=True, help="number of sources L")
    p.add_argument("--grid-step", type=float, default=0.1, help="search grid step in degrees")
    p.add_argument("--d-over-lambda", type=float, default=0.5)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    _common(p)
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--workers", type=int, help="parallel trial workers")
    return parser


def _base_scenario(args, doc=None):
    doc = doc or load_config(args.config, args.preset)
    sc, _ = experiment_scenario(doc, "scenario", seed=args.seed, trials=args.trials)
    return sc


def cmd_simulate(args) -> int:
    sc = _base_scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg, scene = sc.cfg, sc.scene
    plan = make_plan(sc.plan_family, sc.Q)
    ss = harness.trial_seed(sc.seed, 0)
    corr = measure_correlations(cfg, plan, scene, sc.K, ss, dwell=sc.dwell)
    (out / "plan.txt").write_text(plan.to_text())
    (out / "correlations.json").write_text(fileio.correlations_to_json(cfg, corr))
    fileio.write_scm(out / "true_scm.txt", true_scm(cfg, scene), cfg.N)
    if args.snapshots:
        np.save(out / "snapshots.npy", generate_snapshots(cfg, scene, sc.K, ss).data)
    log.info("wrote sweep of %d beams to %s", plan.Q, out)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    path = Path(args.correlations)
    if not path.is_file():
        raise ConfigError(f"correlations file not found: {path}")
    cfg, corr = fileio.correlations_from_json(path.read_text())
    algorithm, sigma2 = args.algorithm, args.sigma2
    if args.config or args.preset:
        sc = _base_scenario(args)
        algorithm = algorithm or (sc.algorithm if sc.algorithm != "sample_average" else None)
        sigma2 = sigma2 if sigma2 is not None else sc.sigma2
    est = reconstruct_scm(cfg, corr, algorithm or "low_complexity", 1.0 if sigma2 is None else sigma2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_scm(out / "scm.txt", est, cfg.N)
    return EXIT_OK


def cmd_music(args) -> int:
    path = Path(args.scm)
    if not path.is_file():
        raise ConfigError(f"SCM file not found: {path}")
    est, N = fileio.read_scm(path)
    cfg = ArrayConfig(est.M, N, args.d_over_lambda)
    doa, spec = music_doas(cfg, est, args.sources, default_grid(args.grid_step))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "spectrum.csv").write_text(spec.to_csv())
    lines = ["doa_deg,degenerate"] + [f"{a!r},{int(doa.degenerate)}" for a in doa.angles_deg.tolist()]
    (out / "doas.csv").write_text("\n".join(lines) + "\n")
    return EXIT_DEGENERATE if doa.degenerate else EXIT_OK


def run_experiment(doc: dict, name: str, seed=None, trials=None, workers=None) -> harness.Table:
    base, params = experiment_scenario(doc, name, seed=seed, trials=trials, workers=workers)
    try:
        if name == "nse_vs_q":
            return harness.experiment_nse_vs_q(base, params.get("q_list", [base.Q]))
        if name == "nse_vs_k":
            return harness.experiment_nse_vs_k(base, params.get("k_list", [base.K]), params.get("n_list", [base.N]))
        if name == "music_mse":
            return harness.experiment_music_mse(base, params.get("snr_list_db", [base.snr_db]), params.get("n_list"))
        if name == "complexity":
            rule = params.get("q_rule", "knee")
            if rule == "knee":
                q_rule = harness.knee_rule
            elif isinstance(rule, int):
                q_rule = lambda M, N: rule  # noqa: E731
            else:
                raise ConfigError(f"q_rule must be 'knee' or an integer, got {rule!r}")
            cfgs = [ArrayConfig(int(M), int(N), base.d_over_lambda)
                    for M in params.get("m_list", [base.M]) for N in params.get("n_list", [base.N])]
            return harness.experiment_complexity(cfgs, q_rule)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad [{name}] table: {exc}") from exc
    raise ConfigError(f"unknown experiment {name!r}")


def cmd_experiment(args) -> int:
    doc = load_config(args.config, args.preset)
    table = run_experiment(doc, args.name, args.seed, args.trials, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.name}.csv"
    path.write_text(table.to_csv())
    print(path)
    if table.all_degenerate:
        log.error("every trial was degenerate")
        return EXIT_DEGENERATE
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "music": cmd_music,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, IllConditionedError, ValueError) as exc:
        print(f"hybridscm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
