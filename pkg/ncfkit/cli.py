# Copyright 2023 Canonical Ltd.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command-line entry point ``ncfkit``.

Subcommands:

    analyze FILE                 report on a truth table or structure file
    count --p P --n N ...        TSV table of counts per (n, method)
    enumerate --p P --n N        every canonical NCF, one block per record
    sample --p P --n N --seed S  uniformly random NCFs, seed-deterministic
    verify [--level L]           cross-check suite, exit 4 on any failure
    equiv FILE FILE              permutation equivalence of two tables

Exit codes: 0 success, 1 usage error, 2 parse error, 3 capacity error,
4 verification failure.
"""

import argparse
import csv
import io
import logging
import sys
from typing import (
    Iterable,
    Iterator,
    List,
    NoReturn,
    Optional,
    Tuple,
)

import ncfkit.counting as counting
import ncfkit.function_table as ft
import ncfkit.ncf as ncf
from ncfkit.compound_status import (
    CheckPool,
)
from ncfkit.config import (
    METHODS,
    CommandConfig,
    load_levels,
)
from ncfkit.config_contexts import (
    analysis_contexts,
)
from ncfkit.field_core import (
    Variant,
)
from ncfkit.guard import (
    EXIT_OK,
    EXIT_USAGE,
    DomainError,
    GuardExit,
    ParseError,
    VerificationError,
    guard,
)
from ncfkit.templating import (
    render,
)
from ncfkit.verify import (
    run_suite,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors map onto exit code 1."""

    def error(self, message: str) -> NoReturn:
        """Print usage and request the usage exit code."""
        self.print_usage(sys.stderr)
        raise GuardExit(EXIT_USAGE, message)


def build_parser() -> argparse.ArgumentParser:
    """Parser for every subcommand."""
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write output here, not stdout")
    common.add_argument(
        "--debug", action="store_true", help="log at DEBUG on stderr"
    )

    instance = _Parser(add_help=False)
    order = instance.add_mutually_exclusive_group()
    order.add_argument("--p", type=int, help="prime field order")
    order.add_argument("--q", type=int, help="prime power field order")
    instance.add_argument("--n", type=int, help="number of variables")
    instance.add_argument(
        "--variant",
        choices=[v.value for v in Variant],
        default=Variant.INTERVAL.value,
    )

    parser = _Parser(
        prog="ncfkit",
        description="Nested canalizing functions over finite fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser(
        "analyze", parents=[common], help="analyze a table or structure"
    )
    s.add_argument("inputs", nargs=1, metavar="FILE")

    s = sub.add_parser(
        "count", parents=[common, instance], help="count NCFs"
    )
    s.add_argument("--n-max", type=int, help="last n of the range")
    s.add_argument(
        "--method",
        action="append",
        choices=METHODS,
        dest="methods",
        help="counting method, repeatable (default closed)",
    )
    s.add_argument("--format", default="tsv", choices=["tsv"], dest="fmt")
    s.add_argument(
        "--workers", type=int, default=1, help="brute-force processes"
    )

    s = sub.add_parser(
        "enumerate", parents=[common, instance], help="list every NCF"
    )
    s.add_argument(
        "--tables", action="store_true", help="emit truth tables"
    )

    s = sub.add_parser(
        "sample", parents=[common, instance], help="draw random NCFs"
    )
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument(
        "--tables", action="store_true", help="emit truth tables"
    )

    s = sub.add_parser(
        "verify", parents=[common], help="run the cross-check suite"
    )
    s.add_argument("--level", default="default")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser(
        "equiv", parents=[common], help="compare two tables"
    )
    s.add_argument("inputs", nargs=2, metavar="FILE")
    return parser


def config_from_args(args: argparse.Namespace) -> CommandConfig:
    """Validated CommandConfig from parsed arguments."""
    values = {
        k: v for k, v in vars(args).items() if k != "debug" and v is not None
    }
    config = CommandConfig(**values)
    config.validate()
    return config


def read_text(path: str) -> str:
    """File contents; unreadable files are parse errors."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not UTF-8 text ({e.reason})") from e


def load_table(path: str) -> ft.TruthTable:
    """Truth table from a table file or a structure file."""
    text = read_text(path)
    try:
        if any(
            line.strip().startswith("layer") for line in text.splitlines()
        ):
            return ncf.build_layered(ncf.parse_structure(text))
        return ft.parse_table(text)
    except ParseError as e:
        raise ParseError(f"{path}: {e.msg}", e.line, e.column) from e


def cmd_analyze(config: CommandConfig) -> str:
    """Analysis report of one table."""
    table = load_table(config.inputs[0])
    return render("analyze.txt", analysis_contexts(table))


def _count_one(
    config: CommandConfig, n: int, method: str
) -> counting.CountReport:
    q = config.order
    variant = config.variant
    if method == "closed":
        if variant is Variant.INTERVAL:
            return counting.count_ncf_closed(q, n)
        return counting.count_ncf_general(q, n)
    if method == "recursive":
        if variant is not Variant.INTERVAL:
            raise DomainError("the recursion counts interval NCFs only")
        return counting.count_ncf_recursive(q, n)
    if method == "brute":
        return counting.brute_force_count(q, n, variant, config.workers)
    if method == "enum":
        return counting.count_structures(q, n, variant)
    if method == "class-formula":
        return counting.count_classes_formula(q, n)
    return counting.orbit_count(q, n, variant)


def cmd_count(config: CommandConfig) -> List[counting.CountReport]:
    """One report per (n, method), n ascending."""
    reports = []
    for n in config.arities:
        for method in config.methods:
            report = _count_one(config, n, method)
            logger.info("Counted %s", report.row())
            reports.append(report)
    return reports


def format_tsv(reports: Iterable[counting.CountReport]) -> str:
    """TSV table with a header row."""
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, counting.TSV_FIELDS, delimiter="\t", lineterminator="\n"
    )
    writer.writeheader()
    for report in reports:
        writer.writerow(report.row())
    return buf.getvalue()


def _record(structure: ncf.LayerStructure, tables: bool) -> str:
    if tables:
        return ft.format_table(ncf.build_layered(structure))
    return ncf.format_structure(structure)


def cmd_enumerate(config: CommandConfig) -> Iterator[str]:
    """Records of every canonical structure."""
    for structure in counting.enumerate_structures(
        config.order, config.n, config.variant
    ):
        yield _record(structure, config.tables)


def cmd_sample(config: CommandConfig) -> Iterator[str]:
    """Records of ``count`` samples drawn with seeds seed, seed + 1, ..."""
    for i in range(config.count):
        structure = counting.sample_uniform(
            config.order, config.n, config.variant, config.seed + i
        )
        yield _record(structure, config.tables)


def cmd_verify(config: CommandConfig) -> Tuple[str, CheckPool]:
    """Rendered verification report and the pool behind it."""
    levels = load_levels()
    if config.level not in levels:
        raise DomainError(
            f"unknown level {config.level!r}; choose from "
            f"{', '.join(sorted(levels))}"
        )
    pool = run_suite(levels[config.level], config.seed, config.workers)
    logger.debug("Verification results: %s", pool.to_json())
    return render(
        "verify.txt",
        {
            "level": config.level,
            "summary": pool.summarise(),
            "overall": pool.overall,
            "failed": len(pool.failed),
            "total": len(pool.checks()),
        },
    ), pool


def cmd_equiv(config: CommandConfig) -> str:
    """Whether the two tables differ only by a variable permutation."""
    t1, t2 = (load_table(path) for path in config.inputs)
    same = ncf.permutation_equivalent(t1, t2)
    return f"equivalent: {'yes' if same else 'no'}\n"


def write_records(records: Iterable[str], stream) -> int:
    """Write records separated by blank lines; returns how many."""
    count = 0
    for record in records:
        if count:
            stream.write("\n")
        stream.write(record)
        count += 1
    return count


def _run(config: CommandConfig, stream) -> None:
    if config.command == "analyze":
        stream.write(cmd_analyze(config))
    elif config.command == "count":
        stream.write(format_tsv(cmd_count(config)))
    elif config.command in ("enumerate", "sample"):
        records = (
            cmd_enumerate(config)
            if config.command == "enumerate"
            else cmd_sample(config)
        )
        written = write_records(records, stream)
        logger.info("Wrote %d records", written)
    elif config.command == "verify":
        report, pool = cmd_verify(config)
        stream.write(report)
        if pool.failed:
            raise VerificationError(
                f"{len(pool.failed)} checks failed: "
                f"{', '.join(c.label for c in pool.failed)}"
            )
    elif config.command == "equiv":
        stream.write(cmd_equiv(config))


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except GuardExit as e:
        print(f"ncfkit: error: {e.msg}", file=sys.stderr)
        return e.exit_code
    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )
    try:
        with guard(f"ncfkit {args.command}"):
            config = config_from_args(args)
            if config.out:
                with open(config.out, "w") as stream:
                    _run(config, stream)
            else:
                _run(config, sys.stdout)
    except GuardExit as e:
        print(f"ncfkit: error: {e.msg}", file=sys.stderr)
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
