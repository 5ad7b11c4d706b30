"""Command-line entry point: run, sweep, conflicts, validate, reference-scenario."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ScenarioError, load_scenario, reference_scenario, save_scenario, with_param
from .engine import audit, run, sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _csv(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetson", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="values x seeds grid of independent runs")
    p.add_argument("--scenario", required=True)
    p.add_argument("--param", required=True, help="dotted key, e.g. features.pci")
    p.add_argument("--values", required=True, type=_csv)
    p.add_argument("--seeds", required=True, type=_csv)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("conflicts", help="topology and PCI audit after self-configuration")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("validate", help="parse and check a scenario file")
    p.add_argument("--scenario", required=True)

    p = sub.add_parser("reference-scenario", help="write the documented default scenario")
    p.add_argument("--out", required=True)
    return parser


def _load(args):
    cfg = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        cfg = with_param(cfg, "sim.seed", args.seed)
    return cfg


def _dispatch(args) -> int:
    if args.command == "reference-scenario":
        save_scenario(reference_scenario(), args.out)
        print(args.out)
        return EXIT_OK
    if args.command == "validate":
        cfg = _load(args)
        print(f"ok {cfg.digest()}")
        return EXIT_OK

    cfg = _load(args)
    if args.command == "run":
        report = run(cfg)
        print(report.write(args.out))
    elif args.command == "sweep":
        seeds = [int(s) for s in args.seeds]
        table = sweep(cfg, args.param, args.values, seeds, jobs=args.jobs)
        print(table.write(args.out))
    elif args.command == "conflicts":
        sim = audit(cfg)
        rep = sim.setup_conflicts
        print(f"cells {len(sim.network.cells)} collisions {len(rep.collisions)} "
              f"confusions {len(rep.confusions)} "
              f"fallbacks {sum(a.fallback_used for a in sim.pci_reports)}")
        for a, b in sorted(rep.collisions):
            print(f"collision {a} {b} pci {sim.network.cells[a].pci}")
        for x, a, b in sorted(rep.confusions):
            print(f"confusion {x} {a} {b} pci {sim.network.cells[a].pci}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
