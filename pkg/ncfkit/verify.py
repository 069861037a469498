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

"""Cross-check suite behind ``ncfkit verify``.

Every counting formula is compared with an independent oracle, every
structural invariant is exercised on exhaustive or seeded random inputs,
and each comparison becomes one Check in a CheckPool. The comparison of
the printed class-count formula with the true orbit count is recorded as
an informational check and never fails a run.
"""

import logging
import math
from typing import (
    Callable,
    Optional,
)

import numpy as np

import ncfkit.counting as counting
import ncfkit.function_table as ft
import ncfkit.ncf as ncf
from ncfkit.compound_status import (
    Check,
    CheckPool,
)
from ncfkit.config import (
    VerifyLevel,
)
from ncfkit.field_core import (
    FieldSpec,
    ValueSubset,
    Variant,
    enumerate_subsets,
    indicator,
)
from ncfkit.guard import (
    NcfkitError,
)

logger = logging.getLogger(__name__)

PUBLISHED_VALUES = {
    3: (192, 5568, 219648),
    5: (5120, 547840, 78561280),
}
LAYER_EXAMPLE = (1, 1, 1, 0, 0, 0, 2, 0, 0, 2, 2, 1)
SAMPLE_INSTANCE = (2, 2)
# (p, n) -> value as printed where it differs from the exact count
PRINTED_VALUES = {(3, 4): 219468}


def _attempt(check: Check, fn: Callable[[Check], None]) -> None:
    """Run one check body; library errors fail the check."""
    try:
        fn(check)
    except NcfkitError as e:
        logger.error("Check %s raised %s", check.label, e)
        check.failed(f"{type(e).__name__}: {e}")


def random_piecewise(
    rng: np.random.Generator, p: int, n: int, variant: Variant
) -> ncf.PiecewiseSpec:
    """Random valid piecewise spec over F_p in n variables."""
    subsets = enumerate_subsets(p, variant)
    order = [int(v) for v in rng.permutation(np.arange(1, n + 1))]
    sets = [subsets[int(rng.integers(len(subsets)))] for _ in range(n)]
    outputs = [int(b) for b in rng.integers(p, size=n + 1)]
    if outputs[-1] == outputs[-2]:
        outputs[-1] = (outputs[-2] + int(rng.integers(1, p))) % p
    return ncf.PiecewiseSpec(
        FieldSpec.prime(p), order, sets, outputs, variant
    )


def random_table(
    rng: np.random.Generator, p: int, n: int
) -> ft.TruthTable:
    """Uniformly random table F_p^n -> F_p."""
    return ft.TruthTable(FieldSpec.prime(p), n, rng.integers(p, size=p**n))


class VerificationSuite:
    """All check families of one verification level."""

    def __init__(
        self,
        level: VerifyLevel,
        seed: int = 0,
        workers: int = 1,
        pool: Optional[CheckPool] = None,
    ) -> None:
        """Run constructor."""
        self.level = level
        self.seed = seed
        self.workers = workers
        self.pool = pool or CheckPool()

    def run(self) -> CheckPool:
        """Run every family and return the filled pool."""
        logger.info("Running verification level %s", self.level.name)
        self.check_published_values()
        self.check_formula_identities()
        self.check_small_counts()
        self.check_layer_example()
        self.check_brute_force()
        self.check_structures()
        self.check_orbits()
        self.check_sampling()
        self.check_properties()
        logger.info(
            "Verification level %s: %s", self.level.name, self.pool.overall
        )
        return self.pool

    def check_published_values(self) -> None:
        """Closed formula and recursion reproduce the reference values.

        Where a printed value differs from the exact count, both are shown
        on an info check.
        """
        if not self.level.published_values:
            return
        for p, expected in PUBLISHED_VALUES.items():

            def body(check: Check, p: int = p, expected=expected) -> None:
                closed = tuple(
                    counting.count_ncf_closed(p, n).count for n in (2, 3, 4)
                )
                recursive = tuple(
                    counting.count_ncf_recursive(p, n).count
                    for n in (2, 3, 4)
                )
                check.expect(
                    closed == expected and recursive == expected,
                    f"closed {closed}, recursive {recursive}",
                )

            _attempt(self.pool.new(f"published values p={p}", 10), body)
        for (p, n), printed in PRINTED_VALUES.items():
            exact = counting.count_ncf_closed(p, n).count
            self.pool.new(f"printed value p={p} n={n}").info(
                f"printed {printed}, exact {exact}"
            )

    def check_formula_identities(self) -> None:
        """Closed formula against recursion and general variant at q=2."""
        n_values = range(2, self.level.formula_n_max + 1)
        for p in self.level.formula_primes:

            def body(check: Check, p: int = p) -> None:
                bad = [
                    n
                    for n in n_values
                    if counting.count_ncf_closed(p, n).count
                    != counting.count_ncf_recursive(p, n).count
                    or counting.a_closed(p, n)
                    != counting.a_sequence(p, n)[-1]
                ]
                check.expect(
                    not bad,
                    f"n=2..{n_values[-1]} agree"
                    if not bad
                    else f"disagree at n={bad}",
                )

            _attempt(self.pool.new(f"closed=recursive p={p}", 9), body)

        def general(check: Check) -> None:
            bad = [
                n
                for n in n_values
                if counting.count_ncf_general(2, n).count
                != counting.count_ncf_closed(2, n).count
            ]
            check.expect(not bad, f"disagree at n={bad}" if bad else "")

        _attempt(self.pool.new("general=closed q=2", 9), general)

    def check_small_counts(self) -> None:
        """Combinatorial helpers against their direct enumerations."""

        def compositions(check: Check) -> None:
            bad = [
                (n, r)
                for n in range(1, 9)
                for r in range(1, n + 1)
                for mins in ((1,) * r, (1,) * (r - 1) + (2,))
                if counting.composition_count(n, r, mins)
                != sum(1 for _ in counting.compositions(n, r, mins))
            ]
            check.expect(not bad, f"mismatch at {bad}" if bad else "")

        def last_layer(check: Check) -> None:
            got = {
                p: (
                    counting.count_last_layer_single(p),
                    counting.count_last_layer_single_brute(p),
                )
                for p in self.level.formula_primes
            }
            check.expect(
                all(a == b for a, b in got.values())
                and counting.count_last_layer_single(2) == 0,
                ", ".join(f"p={p}: {a}={b}" for p, (a, b) in got.items()),
            )

        def offsets(check: Check) -> None:
            got = {
                (p, k): (
                    counting.count_offset_products(p, k),
                    counting.count_offset_products_brute(p, k),
                )
                for p in (2, 3)
                for k in (2, 3)
            }
            check.expect(
                all(a == b for a, b in got.values()),
                ", ".join(
                    f"p={p},k={k}: {a}={b}"
                    for (p, k), (a, b) in got.items()
                ),
            )

        _attempt(self.pool.new("composition counts", 8), compositions)
        _attempt(self.pool.new("single last layer", 8), last_layer)
        _attempt(self.pool.new("offset products", 8), offsets)

    def check_layer_example(self) -> None:
        """Layer number read off a long output sequence."""

        def body(check: Check) -> None:
            result = ncf.layers_from_beta(LAYER_EXAMPLE)
            check.expect(
                bool(result) and result.r == 5,
                f"r={result.r if result else result}",
            )

        _attempt(self.pool.new("layer number example", 8), body)

    def check_brute_force(self) -> None:
        """Exhaustive recognition against the closed formulas."""
        for p, n in self.level.brute_force:
            variants = [Variant.INTERVAL]
            if p > 2:
                variants.append(Variant.GENERAL)
            for variant in variants:

                def body(check: Check, p=p, n=n, variant=variant) -> None:
                    brute = counting.brute_force_count(
                        p, n, variant, self.workers
                    )
                    if variant is Variant.INTERVAL:
                        formula = counting.count_ncf_closed(p, n)
                    else:
                        formula = counting.count_ncf_general(p, n)
                    ok = brute.count == formula.count
                    if ok and formula.breakdown is not None:
                        ok = dict(brute.breakdown) == dict(formula.breakdown)
                    check.expect(
                        ok,
                        f"{brute.count}={formula.count} "
                        f"({brute.seconds:.1f}s)",
                    )

                _attempt(
                    self.pool.new(f"brute p={p} n={n} {variant.value}", 7),
                    body,
                )

    def _structure_body(
        self, check: Check, p: int, n: int, variant: Variant
    ) -> None:
        """Enumeration count, uniqueness and round trips on one instance."""
        tables = set()
        total = 0
        for structure in counting.enumerate_structures(p, n, variant):
            total += 1
            table = ncf.build_layered(structure)
            tables.add(table.key())
            if ncf.recognize(table, variant) != structure:
                check.failed(f"recognize round trip broke on {structure}")
                return
            if ncf.parse_structure(ncf.format_structure(structure)) != (
                structure
            ):
                check.failed(f"text round trip broke on {structure}")
                return
            spec = ncf.expand(structure)
            if ncf.build_piecewise(spec) != table or (
                ncf.layered_from_piecewise(spec) != structure
            ):
                check.failed(f"piecewise form broke on {structure}")
                return
            if p == 2 and n >= 2 and structure.composition[-1] < 2:
                check.failed(f"Boolean last layer of one on {structure}")
                return
        if len(tables) != total:
            check.failed(f"{total} structures gave {len(tables)} tables")
            return
        if n >= 2:
            formula = (
                counting.count_ncf_closed(p, n)
                if variant is Variant.INTERVAL
                else counting.count_ncf_general(p, n)
            )
            check.expect(
                total == formula.count,
                f"{total} distinct, formula {formula.count}",
            )
        else:
            check.passed(f"{total} distinct")

    def check_structures(self) -> None:
        """Structure enumeration: uniqueness, round trips and counts."""
        for variant_name, instances in self.level.structures.items():
            variant = Variant(variant_name)
            for p, n in instances:
                _attempt(
                    self.pool.new(f"structures p={p} n={n} {variant_name}", 6),
                    lambda check, p=p, n=n, v=variant: self._structure_body(
                        check, p, n, v
                    ),
                )

    def check_orbits(self) -> None:
        """Two grouping methods agree; the class formula is only shown."""
        for q, n in self.level.orbits:

            def body(check: Check, q=q, n=n) -> None:
                by_key = counting.orbit_count(q, n, Variant.GENERAL)
                by_table = counting.orbit_count_by_permutation(
                    q, n, Variant.GENERAL
                )
                check.expect(
                    by_key.count == by_table.count,
                    f"class keys {by_key.count}, "
                    f"permuted tables {by_table.count}",
                )
                formula = counting.count_classes_formula(q, n)
                info = self.pool.new(f"class formula q={q} n={n}", 1)
                info.info(
                    f"formula {formula.count}, orbits {by_key.count}"
                )

            _attempt(self.pool.new(f"orbits q={q} n={n}", 5), body)

    def check_sampling(self) -> None:
        """Seeded uniform sampling hits every NCF at the expected rate."""
        samples = self.level.samples
        if not samples:
            return
        p, n = SAMPLE_INSTANCE

        def body(check: Check) -> None:
            expected = counting.count_ncf_closed(p, n).count
            freq = 1 / expected
            tolerance = 5 * math.sqrt(freq * (1 - freq) / samples)
            hits = {}
            for i in range(samples):
                structure = counting.sample_uniform(
                    p, n, Variant.INTERVAL, self.seed + i
                )
                table = ncf.build_layered(structure)
                if ncf.recognize(table, Variant.INTERVAL) != structure:
                    check.failed(f"sample {i} fails round trip")
                    return
                hits[table.key()] = hits.get(table.key(), 0) + 1
            worst = max(abs(c / samples - freq) for c in hits.values())
            check.expect(
                len(hits) == expected and worst <= tolerance,
                f"{len(hits)} of {expected} hit, max deviation "
                f"{worst:.4f} (tolerance {tolerance:.4f})",
            )

        _attempt(self.pool.new(f"sampling p={p} n={n}", 4), body)

    def check_properties(self) -> None:
        """Exhaustive and seeded random property checks."""
        rng = np.random.default_rng(self.seed)
        cases = self.level.random_cases

        def indicators(check: Check) -> None:
            for p in (2, 3, 5, 7):
                for s in enumerate_subsets(p, Variant.GENERAL):
                    for x in range(p):
                        both = indicator(s, x) + indicator(s.complement(), x)
                        if both != 1 or (indicator(s, x) == 0) != (x in s):
                            check.failed(f"indicator of {s} at {x}")
                            return
            check.passed("exhaustive for p <= 7")

        def flips(check: Check) -> None:
            for _ in range(cases):
                p = int(rng.choice([2, 3, 5]))
                n = int(rng.integers(1, 4))
                variant = Variant(rng.choice(["interval", "general"]))
                spec = random_piecewise(rng, p, n, variant)
                flipped = ncf.normalize_flip(spec)
                if ncf.build_piecewise(flipped) != ncf.build_piecewise(
                    spec
                ) or (ncf.normalize_flip(flipped) != spec):
                    check.failed(f"flip changes {spec}")
                    return
            check.passed(f"{cases} random specs")

        def peeling(check: Check) -> None:
            seen = 0
            for i in range(cases):
                p = int(rng.choice([2, 3]))
                n = int(rng.integers(2, 5))
                variant = Variant(rng.choice(["interval", "general"]))
                structure = counting.sample_uniform(
                    p, n, variant, self.seed + i
                )
                if structure.r < 2:
                    continue
                seen += 1
                collapsed = ft.collapse_region(
                    ncf.build_layered(structure),
                    {v: s.complement() for v, s in structure.layers[0]},
                )
                peeled = structure.without_first_layer()
                if collapsed is ft.NOT_COLLAPSIBLE or (
                    ncf.recognize(collapsed, variant) != peeled
                ):
                    check.failed(f"peeling breaks on {structure}")
                    return
            check.passed(f"{seen} random structures with r >= 2")

        def anf(check: Check) -> None:
            for _ in range(cases):
                p = int(rng.choice([2, 3, 5]))
                n = int(rng.integers(1, 4))
                table = random_table(rng, p, n)
                if ft.to_anf(table).to_table() != table:
                    check.failed(f"ANF round trip breaks on {table!r}")
                    return
            check.passed(f"{cases} random tables")

        def restriction(check: Check) -> None:
            for _ in range(cases):
                p = int(rng.choice([2, 3]))
                n = int(rng.integers(2, 5))
                table = random_table(rng, p, n)
                i, j = sorted(
                    int(v) for v in rng.choice(n, 2, replace=False) + 1
                )
                a, b = (int(v) for v in rng.integers(p, size=2))
                both = ft.restrict(table, {i: a, j: b})
                first_i = ft.restrict(ft.restrict(table, {i: a}), {j - 1: b})
                first_j = ft.restrict(ft.restrict(table, {j: b}), {i: a})
                if not both == first_i == first_j:
                    check.failed(f"restrict order matters on {table!r}")
                    return
            check.passed(f"{cases} random tables")

        _attempt(self.pool.new("indicator identity", 3), indicators)
        _attempt(self.pool.new("flip identity", 3), flips)
        _attempt(self.pool.new("peeling", 3), peeling)
        _attempt(self.pool.new("ANF round trip", 3), anf)
        _attempt(self.pool.new("restrict commutes", 3), restriction)


def run_suite(
    level: VerifyLevel, seed: int = 0, workers: int = 1
) -> CheckPool:
    """Run the suite for one level."""
    return VerificationSuite(level, seed, workers).run()
