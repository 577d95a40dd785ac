"""Command-line driver.

Exit codes: 0 all checks pass, 1 at least one mathematical finding,
2 structural error (bad input, unknown quadruple, budget exceeded).
"""

from __future__ import annotations

import argparse
import sys

from .fusion import DEFAULT_BUDGET
from .report import (
    CATALOG,
    StructuralError,
    SuiteConfig,
    render_json,
    run_suite,
    summary_lines,
)

SUBCOMMAND_GROUPS = {
    "verify-yb": ("regime", "crossing"),
    "fuse": ("fused-consistency", "split-agreement", "exchange",
             "fused-exchange", "kernel", "second-fusion"),
    "dress": ("dressing", "dual-dressing"),
    "trace": ("lemmas", "decoupling", "identification", "dual-screen"),
    "commute": ("commutation",),
    "suite": (),
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--quadruple", default="rs-rational",
                   help="catalog name (%s) or path to a bundle file"
                        % ", ".join(sorted(CATALOG)))
    p.add_argument("--regime", choices=["nondynamical", "semidynamical",
                                        "fullydynamical"],
                   help="fail structurally if the quadruple is not in this regime")
    p.add_argument("--n", type=int, default=2, help="leg dimension")
    p.add_argument("--m-size", type=int, default=2, dest="m_size")
    p.add_argument("--np-size", type=int, default=2, dest="np_size")
    p.add_argument("--samples", type=int, default=4,
                   help="number of exact sample points")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--gamma", default="1", help="exact rational shift step")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                   help="cap on the product of fused leg dimensions")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--formal", action="store_true",
                   help="use coincident spectral values within each leg group")
    p.add_argument("--force", action="store_true",
                   help="load a bundle file even if it fails validation")
    p.add_argument("--timing", action="store_true",
                   help="include per-group timings (breaks byte determinism)")
    p.add_argument("--config", help="JSON file mirroring the suite config; "
                                    "command-line flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadex",
        description="Exact-arithmetic verification of quadratic exchange "
                    "algebras: consistency systems, fusion, dressing, and "
                    "commuting traces.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify-yb": "check the consistency system and regime invariants",
        "fuse": "check fused matrices, fused solutions, and the coupled "
                "second fusion",
        "dress": "check the dressing-factor constraint tables",
        "trace": "check trace lemmas, decoupling, pipeline identification, "
                 "and dual-candidate screening",
        "commute": "check pairwise commutation of the trace operators",
        "suite": "run every check group",
    }
    for name, groups in SUBCOMMAND_GROUPS.items():
        p = sub.add_parser(name, help=helps[name])
        _add_common(p)
    return parser


def config_from_args(args) -> SuiteConfig:
    if args.config:
        cfg = SuiteConfig.from_file(args.config)
    else:
        cfg = SuiteConfig()
    defaults = SuiteConfig()
    for key in ("quadruple", "regime", "n", "m_size", "np_size", "samples",
                "seed", "gamma", "budget", "out", "formal", "force",
                "timing"):
        value = getattr(args, key)
        if value != getattr(defaults, key):
            setattr(cfg, key, value)
    cfg.checks = SUBCOMMAND_GROUPS[args.command]
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        report = run_suite(config)
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = render_json(report)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(payload)
        for line in summary_lines(report):
            print(line)
    else:
        sys.stdout.write(payload)
    return 0 if report["status"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
