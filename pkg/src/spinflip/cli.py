"""spinflip command line.

    spinflip <fidelity|levels|stability|ensemble|cherry|sweep>
             [--config FILE] [--out FILE] [--format csv|json]
             [--seed U64] [--workers N] [key=value ...]

Exit status: 0 success, 1 usage error, 2 numerical failure.
The default worker count comes from $SPINFLIP_WORKERS, else the CPU count.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .commands import COMMANDS, run
from .config import SCHEMAS, WORKERS_ENV, ConfigError, resolve
from .integrator import IntegrationError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _epilog(command: str) -> str:
    lines = ["settings (key=value):"]
    for key, spec in SCHEMAS[command].items():
        extra = f"  {spec.help}" if spec.help else ""
        lines.append(f"  {key} [default {spec.default}]{extra}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="spinflip",
        description="Bit-flip dynamics of two coupled spins.",
        epilog=f"{WORKERS_ENV} sets the default worker count.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, epilog=_epilog(name), formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="FILE", help="INI config, or a previous result file to re-run")
        p.add_argument("--out", metavar="FILE", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("settings", nargs="*", metavar="key=value")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = None
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = resolve(args.command, text, args.settings, args.seed, args.format, args.workers, args.out)
    except (ConfigError, OSError) as exc:
        print(f"spinflip {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        table = run(cfg)
    except (IntegrationError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError, ValueError) as exc:
        print(f"spinflip {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    text = table.dumps(cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    censored = table.metadata.get("censored_rows")
    if censored:
        print(f"WARNING: {censored} ensemble row(s) have censored orbits", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
