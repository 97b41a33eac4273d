"""Run every experiment manifest shipped in docs/manifests and collect the result tables."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from robustols.cli import configure_logging, main as cli_main

LOGGER = logging.getLogger("reproduce_tables")

MANIFEST_DIR = ROOT_DIR / "docs" / "manifests"


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Reproduce the simulation tables from the shipped manifests")
    parser.add_argument(
        "--manifests",
        type=Path,
        default=MANIFEST_DIR,
        help="Directory holding the *.json experiment manifests",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=ROOT_DIR / "output",
        help="Root directory; each manifest writes to a sub-directory named after it",
    )
    parser.add_argument(
        "--only",
        nargs="*",
        default=None,
        help="Run only the manifests whose names start with one of these prefixes",
    )
    parser.add_argument("--threads", type=int, default=None, help="Worker processes per experiment")
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase log verbosity (-v for INFO, -vv for DEBUG)",
    )
    return parser.parse_args(argv)


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    configure_logging(args.verbose)

    manifests = sorted(args.manifests.glob("*.json"))
    if args.only:
        manifests = [path for path in manifests if path.stem.startswith(tuple(args.only))]
    if not manifests:
        LOGGER.error("No manifests found in %s", args.manifests)
        return 1

    failed = []
    for manifest in manifests:
        LOGGER.info("Running %s", manifest.stem)
        command = ["mc", str(manifest), "--out", str(args.out / manifest.stem)]
        if args.threads is not None:
            command += ["--threads", str(args.threads)]
        command += ["-v"] * args.verbose
        code = cli_main(command)
        if code != 0:
            LOGGER.error("%s failed with exit code %d", manifest.stem, code)
            failed.append(manifest.stem)

    if failed:
        LOGGER.error("%d of %d experiments failed: %s", len(failed), len(manifests), ", ".join(failed))
        return 1
    LOGGER.info("All %d experiments written under %s", len(manifests), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
