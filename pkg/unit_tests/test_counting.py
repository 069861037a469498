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

"""Test ncfkit.counting."""

import collections
import itertools

import numpy as np

import ncfkit.counting as counting
import ncfkit.field_core as field_core
import ncfkit.ncf as ncf
import ncfkit.test_utils as test_utils
from ncfkit.counting import (
    Method,
)
from ncfkit.field_core import (
    Variant,
)
from ncfkit.guard import (
    CapacityError,
    DomainError,
)


def case_table_count(p: int, n: int) -> int:
    """Distinct tables of every nested if/else form over interval sets.

    Built directly from the case split, without layer structures: the first
    j with x_sigma(j) in S_j picks b_j, and b_{n+1} is taken otherwise.
    """
    masks = [
        s.mask for s in field_core.enumerate_subsets(p, Variant.INTERVAL)
    ]
    grid = np.indices((p,) * n).reshape(n, -1)
    outputs = np.array(
        [
            b
            for b in itertools.product(range(p), repeat=n + 1)
            if b[-2] != b[-1]
        ],
        dtype=np.uint8,
    )
    patterns = set()
    for order in itertools.permutations(range(n)):
        for sets in itertools.product(masks, repeat=n):
            case = np.full(grid.shape[1], n, dtype=np.uint8)
            for j in reversed(range(n)):
                hit = np.right_shift(sets[j], grid[order[j]]) & 1
                case = np.where(hit == 1, j, case).astype(np.uint8)
            patterns.add(case.tobytes())
    tables = set()
    for pattern in patterns:
        case = np.frombuffer(pattern, dtype=np.uint8)
        for row in outputs[:, case]:
            tables.add(row.tobytes())
    return len(tables)


class TestCompositions(test_utils.NcfTestCase):
    """Tests for compositions and multinomials."""

    def test_counts(self) -> None:
        """Binomial count agrees with direct enumeration."""
        self.assertEqual(counting.composition_count(4, 2), 3)
        self.assertEqual(counting.composition_count(3, 3, (1, 1, 2)), 0)
        self.assertEqual(
            list(counting.compositions(4, 2, (1, 2))), [(1, 3), (2, 2)]
        )
        for n in range(1, 8):
            for r in range(1, n + 1):
                mins = (1,) * (r - 1) + (2,)
                self.assertEqual(
                    counting.composition_count(n, r, mins),
                    len(list(counting.compositions(n, r, mins))),
                )

    def test_composition_type(self) -> None:
        """Parts are positive and respect the last minimum."""
        self.assertEqual(counting.Composition((1, 2)).total, 3)
        self.assertEqual(counting.Composition((1, 2)).r, 2)
        with self.assertRaises(DomainError):
            counting.Composition((0, 2))
        with self.assertRaises(DomainError):
            counting.Composition((2, 1), last_minimum=2)
        for parts in counting.compositions(5, 3, (1, 1, 2)):
            self.assertIsInstance(parts, counting.Composition)
            self.assertEqual(parts.total, 5)
            self.assertGreaterEqual(parts[-1], 2)

    def test_multinomial(self) -> None:
        """Parts may leave a remainder."""
        self.assertEqual(counting.multinomial(4, (2, 2)), 6)
        self.assertEqual(counting.multinomial(3, (1, 1)), 6)
        self.assertEqual(counting.multinomial(3, (1,)), 3)


class TestHelperCounts(test_utils.NcfTestCase):
    """Tests for the building-block counts."""

    def test_last_layer_single(self) -> None:
        """Formula against table-level deduplication."""
        self.assertEqual(counting.count_last_layer_single(2), 0)
        self.assertEqual(counting.count_last_layer_single(3), 4)
        for p in (2, 3, 5, 7):
            self.assertEqual(
                counting.count_last_layer_single(p),
                counting.count_last_layer_single_brute(p),
            )

    def test_offset_products(self) -> None:
        """Formula against table-level deduplication."""
        self.assertEqual(counting.count_offset_products(3, 2), 64)
        self.assertEqual(counting.count_offset_products(2, 2), 4)
        self.assertEqual(counting.count_offset_products_brute(2, 2), 4)
        for p, k in ((2, 2), (2, 3), (3, 2), (3, 3)):
            self.assertEqual(
                counting.count_offset_products(p, k),
                counting.count_offset_products_brute(p, k),
            )
        with self.assertRaises(DomainError):
            counting.count_offset_products(3, 1)


class TestFormulas(test_utils.NcfTestCase):
    """Tests for the closed formulas and the recursion."""

    def test_published_values(self) -> None:
        """p = 3 and p = 5 for n = 2, 3, 4."""
        expected = {
            3: [192, 5568, 219648],
            5: [5120, 547840, 78561280],
        }
        for p, values in expected.items():
            for n, value in zip((2, 3, 4), values):
                self.assertEqual(counting.count_ncf_closed(p, n).count, value)
                self.assertEqual(
                    counting.count_ncf_recursive(p, n).count, value
                )

    def test_case_enumeration(self) -> None:
        """Closed formula equals a direct count of if/else case tables."""
        for p, n in ((2, 2), (2, 3), (3, 2), (3, 3), (3, 4)):
            self.assertEqual(
                case_table_count(p, n), counting.count_ncf_closed(p, n).count
            )
        self.assertEqual(case_table_count(3, 4), 219648)

    def test_closed_equals_recursive(self) -> None:
        """Both routes agree for p in {2,3,5,7}, n in 2..8."""
        for p in (2, 3, 5, 7):
            for n in range(2, 9):
                self.assertEqual(
                    counting.count_ncf_closed(p, n).count,
                    counting.count_ncf_recursive(p, n).count,
                )
                self.assertEqual(
                    counting.a_closed(p, n), counting.a_sequence(p, n)[-1]
                )

    def test_recursion_start(self) -> None:
        """a_2 = 4 (p-1)^4."""
        self.assertEqual(counting.a_sequence(3, 3), [64, 1856])
        self.assertEqual(counting.a_sequence(5, 2), [1024])

    def test_boolean(self) -> None:
        """Over F_2 the general and interval formulas coincide."""
        self.assertEqual(counting.count_ncf_closed(2, 2).count, 8)
        self.assertEqual(counting.count_ncf_closed(2, 3).count, 64)
        self.assertEqual(counting.count_ncf_closed(2, 4).count, 736)
        for n in range(2, 9):
            self.assertEqual(
                counting.count_ncf_general(2, n).count,
                counting.count_ncf_closed(2, n).count,
            )

    def test_breakdown(self) -> None:
        """Per-layer counts sum to the total."""
        report = counting.count_ncf_closed(3, 3)
        self.assertEqual(sum(report.breakdown.values()), 5568)
        self.assertEqual(report.method, Method.CLOSED)
        self.assertEqual(counting.count_ncf_closed(2, 2).breakdown, {1: 8})

    def test_general(self) -> None:
        """Arbitrary canalizing sets, prime power orders allowed."""
        self.assertEqual(counting.count_ncf_general(3, 2).count, 432)
        self.assertGreater(counting.count_ncf_general(4, 2).count, 0)
        with self.assertRaises(DomainError):
            counting.count_ncf_general(6, 2)
        with self.assertRaises(DomainError):
            counting.count_ncf_closed(4, 2)
        with self.assertRaises(DomainError):
            counting.count_ncf_closed(3, 1)

    def test_class_formula(self) -> None:
        """The printed class-count expression."""
        self.assertEqual(counting.count_classes_formula(2, 2).count, 8)
        self.assertEqual(counting.count_classes_formula(3, 2).count, 324)

    def test_stratum_sizes(self) -> None:
        """Strata add up to the closed formulas."""
        for p in (2, 3, 5):
            for n in (2, 3, 4):
                self.assertEqual(
                    sum(
                        counting.stratum_sizes(
                            p, n, Variant.INTERVAL
                        ).values()
                    ),
                    counting.count_ncf_closed(p, n).count,
                )
        self.assertNotIn((1, 1), counting.stratum_sizes(2, 2, "interval"))
        self.assertEqual(
            counting.stratum_sizes(3, 1, Variant.INTERVAL), {(1,): 12}
        )


class TestOracles(test_utils.NcfTestCase):
    """Tests for enumeration and brute force."""

    def test_brute_force(self) -> None:
        """Exhaustive recognition matches the formulas."""
        for p, n in ((2, 2), (2, 3), (3, 2)):
            brute = counting.brute_force_count(p, n, Variant.INTERVAL)
            closed = counting.count_ncf_closed(p, n)
            self.assertEqual(brute.count, closed.count)
            self.assertEqual(brute.breakdown, closed.breakdown)
        self.assertEqual(
            counting.brute_force_count(3, 2, Variant.GENERAL).count, 432
        )

    def test_brute_force_boolean_n4(self) -> None:
        """All 2^16 Boolean tables in four variables."""
        brute = counting.brute_force_count(2, 4, Variant.INTERVAL)
        self.assertEqual(brute.count, 736)
        self.assertEqual(dict(brute.breakdown), {1: 32, 2: 320, 3: 384})
        self.assertEqual(
            brute.breakdown, counting.count_ncf_closed(2, 4).breakdown
        )

    def test_brute_force_workers(self) -> None:
        """Splitting the work does not change the total."""
        self.assertEqual(
            counting.brute_force_count(2, 3, Variant.INTERVAL, 2).count, 64
        )

    def test_capacity(self) -> None:
        """Guards refuse oversized spaces and honour the environment."""
        with self.assertRaises(CapacityError):
            counting.brute_force_count(3, 3, Variant.INTERVAL)
        self.patch_env(NCFKIT_MAX_TABLES="10")
        with self.assertRaises(CapacityError):
            counting.brute_force_count(2, 2, Variant.INTERVAL)
        self.patch_env(NCFKIT_MAX_STRUCTURES="100")
        with self.assertRaises(CapacityError):
            list(counting.enumerate_structures(3, 2, Variant.INTERVAL))

    def test_structures(self) -> None:
        """Structure streams have the formula lengths."""
        self.assertEqual(
            counting.count_structures(2, 2, Variant.INTERVAL).count, 8
        )
        self.assertEqual(
            counting.count_structures(3, 2, Variant.GENERAL).count, 432
        )
        report = counting.count_structures(3, 3, Variant.INTERVAL)
        self.assertEqual(report.count, 5568)
        self.assertEqual(
            report.breakdown, counting.count_ncf_closed(3, 3).breakdown
        )

    def test_general_structures_unique(self) -> None:
        """Distinct general structures at p=2, n=4 build distinct tables."""
        seen = {}
        for structure in counting.enumerate_structures(
            2, 4, Variant.GENERAL
        ):
            table = ncf.build_layered(structure)
            self.assertNotIn(table.key(), seen)
            seen[table.key()] = structure
            self.assertEqual(ncf.recognize(table, Variant.GENERAL), structure)
        self.assertEqual(len(seen), 736)

    def test_boolean_last_layer(self) -> None:
        """Over F_2 no canonical structure ends in a single variable."""
        for n in (2, 3, 4):
            for structure in counting.enumerate_structures(
                2, n, Variant.INTERVAL
            ):
                self.assertGreaterEqual(structure.composition[-1], 2)

    def test_orbits(self) -> None:
        """Both grouping methods agree."""
        for q, n in ((2, 2), (2, 3), (3, 2)):
            self.assertEqual(
                counting.orbit_count(q, n, Variant.GENERAL).count,
                counting.orbit_count_by_permutation(
                    q, n, Variant.GENERAL
                ).count,
            )
        self.assertEqual(
            counting.orbit_count(2, 2, Variant.GENERAL).count, 6
        )


class TestSampling(test_utils.NcfTestCase):
    """Tests for uniform sampling."""

    def test_deterministic(self) -> None:
        """Equal seeds give equal structures."""
        self.assertEqual(
            counting.sample_uniform(3, 4, Variant.GENERAL, 42),
            counting.sample_uniform(3, 4, Variant.GENERAL, 42),
        )

    def test_distribution(self) -> None:
        """Every Boolean NCF in two variables is drawn about equally."""
        samples = 4000
        hits = collections.Counter(
            ncf.build_layered(
                counting.sample_uniform(2, 2, Variant.INTERVAL, seed)
            ).key()
            for seed in range(samples)
        )
        self.assertEqual(len(hits), 8)
        tolerance = 5 * (0.125 * 0.875 / samples) ** 0.5
        for count in hits.values():
            self.assertLess(abs(count / samples - 0.125), tolerance)

    def test_samples_are_canonical(self) -> None:
        """Samples survive recognition unchanged."""
        for seed in range(200):
            structure = counting.sample_uniform(3, 3, Variant.INTERVAL, seed)
            self.assertEqual(
                ncf.recognize(ncf.build_layered(structure), Variant.INTERVAL),
                structure,
            )


class TestCountReport(test_utils.NcfTestCase):
    """Tests for report rows."""

    def test_row(self) -> None:
        """Rows are keyed by the TSV header."""
        row = counting.count_ncf_closed(3, 2).row()
        self.assertEqual(list(row), counting.TSV_FIELDS)
        self.assertEqual(row["count"], "192")
        self.assertEqual(row["variant"], "interval")

    def test_breakdown_must_sum(self) -> None:
        """A breakdown that disagrees with the count is rejected."""
        with self.assertRaises(DomainError):
            counting.CountReport(
                3, 2, Variant.INTERVAL, Method.CLOSED, 10, {1: 3}
            )
