"""``duet`` command line: run one experiment and write its artifacts."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import EXPERIMENTS, SEED_ENV, ConfigError, parse_config
from .sde import IntegrationDiverged
from .verify.experiments import REGISTRY, Outcome

log = logging.getLogger("duet")

EXIT_OK, EXIT_ERROR, EXIT_BOUND = 0, 1, 2


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors are runtime errors here; 2 is reserved for failed bounds
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run options")
    g.add_argument("--config", metavar="PATH", help="flat TOML file of config keys")
    g.add_argument("--seed", type=_seed, metavar="U64",
                   help=f"master seed (falls back to ${SEED_ENV}, then the built-in default)")
    g.add_argument("--paths", type=int, dest="n_paths", metavar="N", help="number of paths")
    g.add_argument("--dt", type=float, metavar="F", help="integrator step")
    g.add_argument("--T", type=float, metavar="F", help="diffusive time scale")
    g.add_argument("--R", type=float, metavar="F", help="initial |r1|")
    g.add_argument("--epsilon", type=float, metavar="F", help="level near zero")
    g.add_argument("--potential", choices=["cos", "zero", "mixed"])
    g.add_argument("--integrator", choices=["split", "euler"])
    g.add_argument("--workers", type=int, metavar="N", help="threads; results do not depend on it")
    g.add_argument("--out", dest="output_dir", metavar="DIR", help="existing output directory")
    g.add_argument("--paths-csv", action="store_const", const=True, dest="paths_csv",
                   help="also write per-path observables to paths.csv")
    g.add_argument("--dt-check", action="store_const", const=True, dest="dt_check",
                   help="rerun the limit ensemble at dt/2 and report the KS change")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress")

    lines = [f"  {name:<14}{REGISTRY[name][1]}" for name in EXPERIMENTS]
    parser = _Parser(
        prog="duet",
        description="Simulate the forced/damped particle pair on the circle and check "
                    "its quantitative statements.",
        epilog="experiments:\n" + "\n".join(lines) +
               "\n\nexit status: 0 all bounds hold, 2 a bound failed, 1 error",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=REGISTRY[name][1],
                       description=REGISTRY[name][1])
    return parser


def write_plotdata(path, outcome: Outcome) -> None:
    digest = outcome.summary.config_digest
    with open(path, "w") as fh:
        fh.write(f"# config_digest {digest}\n# experiment {outcome.summary.experiment}\n")
        for name, (x, y, err) in outcome.series.items():
            fh.write(f"\n# series: {name}\nx\ty\ty_err\n")
            for row in zip(np.asarray(x, float), np.asarray(y, float), np.asarray(err, float)):
                fh.write("\t".join(f"{v:.17g}" for v in row) + "\n")


def write_paths(path, outcome: Outcome) -> None:
    cols = outcome.per_path
    names = list(cols)
    data = np.column_stack([np.asarray(cols[k], dtype=float) for k in names])
    with open(path, "w") as fh:
        fh.write(f"# config_digest {outcome.summary.config_digest}\n")
        fh.write(",".join(["trajectory", *names]) + "\n")
        for i, row in enumerate(data):
            fh.write(",".join([str(i), *(f"{v:.17g}" for v in row)]) + "\n")


def write_outputs(outdir: str, outcome: Outcome, paths_csv: bool) -> list[str]:
    written = []

    def target(name):
        p = os.path.join(outdir, name)
        written.append(p)
        return p

    with open(target("summary.json"), "w") as fh:
        fh.write(outcome.summary.to_json())
    write_plotdata(target("plotdata.tsv"), outcome)
    if paths_csv and outcome.per_path:
        write_paths(target("paths.csv"), outcome)
    for name, writer in outcome.files.items():
        writer(target(name))
    return written


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("config", "verbose") and v is not None}
    try:
        cfg = parse_config(args.config, overrides)
        if not os.path.isdir(cfg.output_dir):
            raise FileNotFoundError(f"output directory does not exist: {cfg.output_dir}")
        log.info("running %s with %d paths, seed %d", cfg.experiment, cfg.n_paths, cfg.seed)
        outcome = REGISTRY[cfg.experiment][0](cfg)
        written = write_outputs(cfg.output_dir, outcome, cfg.paths_csv)
    except ConfigError as exc:
        print(f"duet: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, IntegrationDiverged, ValueError) as exc:
        detail = exc.strerror if isinstance(exc, OSError) and exc.filename else exc
        where = f" ({exc.filename})" if isinstance(exc, OSError) and exc.filename else ""
        print(f"duet: error: {detail}{where}", file=sys.stderr)
        return EXIT_ERROR
    s = outcome.summary
    for c in s.checks:
        rel = c.relation if c.relation.startswith("in") else f"{c.relation} {c.bound:.6g}"
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} {rel}"
              + (f"  ({c.note})" if c.note else ""))
    print(f"wrote {', '.join(written)}")
    return EXIT_OK if s.passed else EXIT_BOUND


if __name__ == "__main__":
    sys.exit(main())
