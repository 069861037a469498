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

"""Test ncfkit.ncf."""

import itertools

import ncfkit.counting as counting
import ncfkit.function_table as ft
import ncfkit.ncf as ncf
import ncfkit.test_utils as test_utils
from ncfkit.field_core import (
    FieldSpec,
    Variant,
)
from ncfkit.guard import (
    CapacityError,
    DomainError,
    InvalidSpecError,
    ParseError,
)
from ncfkit.test_utils import (
    subset,
    table,
)

F2 = FieldSpec.prime(2)
F3 = FieldSpec.prime(3)

AND = table(2, 2, [0, 0, 0, 1])
OR = table(2, 2, [0, 1, 1, 1])
X1_NOT_X2 = table(2, 2, [0, 0, 1, 0])
NOT_X1_X2 = table(2, 2, [0, 1, 0, 0])
SUM_F3 = table(3, 2, [0, 1, 2, 1, 2, 0, 2, 0, 1])
# 1 when x1 <= 1, else 0 when x2 = 2, else 2
CASES_F3 = table(3, 2, [1, 1, 1, 1, 1, 1, 2, 2, 0])


def and_structure() -> ncf.LayerStructure:
    """r = 1, both variables canalizing on {0}."""
    return ncf.LayerStructure(
        F2, 2, (((1, subset(2, 0)), (2, subset(2, 0))),), (0, 1)
    )


class TestPiecewise(test_utils.NcfTestCase):
    """Tests for the case-table form."""

    def test_identity(self) -> None:
        """One variable canalizing on {0} to 0, else 1."""
        spec = ncf.PiecewiseSpec(F2, (1,), (subset(2, 0),), (0, 1))
        self.assertEqual(ncf.build_piecewise(spec), table(2, 1, [0, 1]))

    def test_and(self) -> None:
        """Two variables canalizing on {0} to 0, else 1."""
        spec = ncf.PiecewiseSpec(
            F2, (1, 2), (subset(2, 0), subset(2, 0)), (0, 0, 1)
        )
        self.assertEqual(ncf.build_piecewise(spec), AND)

    def test_cases(self) -> None:
        """Earlier cases win over later ones."""
        spec = ncf.PiecewiseSpec(
            F3, (1, 2), (subset(3, 0, 1), subset(3, 2)), (1, 0, 2)
        )
        self.assertEqual(ncf.build_piecewise(spec), CASES_F3)

    def test_order(self) -> None:
        """sigma picks which variable is tested first."""
        spec = ncf.PiecewiseSpec(
            F2, (2, 1), (subset(2, 0), subset(2, 1)), (0, 0, 1)
        )
        self.assertEqual(ncf.build_piecewise(spec), NOT_X1_X2)

    def test_invalid(self) -> None:
        """b_n = b_{n+1} and broken permutations are rejected."""
        with self.assertRaises(InvalidSpecError):
            ncf.PiecewiseSpec(F2, (1,), (subset(2, 0),), (1, 1))
        with self.assertRaises(InvalidSpecError):
            ncf.PiecewiseSpec(
                F2, (1, 1), (subset(2, 0), subset(2, 0)), (0, 0, 1)
            )
        with self.assertRaises(InvalidSpecError):
            ncf.PiecewiseSpec(
                F3,
                (1,),
                (subset(3, 1),),
                (0, 1),
                Variant.INTERVAL,
            )

    def test_flip(self) -> None:
        """The flip keeps the table and is an involution."""
        spec = ncf.PiecewiseSpec(F2, (1,), (subset(2, 0),), (0, 1))
        flipped = ncf.normalize_flip(spec)
        self.assertEqual(flipped.sets, (subset(2, 1),))
        self.assertEqual(flipped.outputs, (1, 0))
        self.assertEqual(ncf.build_piecewise(flipped), table(2, 1, [0, 1]))
        self.assertEqual(ncf.normalize_flip(flipped), spec)
        spec = ncf.PiecewiseSpec(
            F3, (1, 2), (subset(3, 0), subset(3, 2)), (1, 0, 2)
        )
        flipped = ncf.normalize_flip(spec)
        self.assertEqual(flipped.sets, (subset(3, 0), subset(3, 0, 1)))
        self.assertEqual(flipped.outputs, (1, 2, 0))
        self.assertEqual(
            ncf.build_piecewise(flipped), ncf.build_piecewise(spec)
        )


class TestLayered(test_utils.NcfTestCase):
    """Tests for the nested polynomial form."""

    def test_build_and(self) -> None:
        """AND as a single layer."""
        self.assertEqual(ncf.build_layered(and_structure()), AND)

    def test_build_two_layers(self) -> None:
        """Two layers agree with the case table."""
        structure = ncf.LayerStructure(
            F3,
            2,
            (((1, subset(3, 0, 1)),), ((2, subset(3, 2)),)),
            (1, 2, 2),
        )
        self.assertEqual(structure.outputs, (1, 0, 2))
        self.assertEqual(ncf.build_layered(structure), CASES_F3)
        self.assertFalse(structure.is_canonical())
        canonical = ncf.canonicalize(structure)
        self.assertTrue(canonical.is_canonical())
        self.assertEqual(canonical.constants, (1, 1, 1))
        self.assertEqual(ncf.build_layered(canonical), CASES_F3)

    def test_invalid(self) -> None:
        """Zero inner constants and bad partitions are rejected."""
        with self.assertRaises(InvalidSpecError):
            ncf.LayerStructure(
                F2, 2, (((1, subset(2, 0)), (2, subset(2, 0))),), (1, 0)
            )
        with self.assertRaises(InvalidSpecError):
            ncf.LayerStructure(F2, 2, (((1, subset(2, 0)),),), (0, 1))
        with self.assertRaises(InvalidSpecError):
            # B_r + B_{r+1} = 0 on a single-variable last layer
            ncf.LayerStructure(
                F3,
                2,
                (((1, subset(3, 0)),), ((2, subset(3, 0)),)),
                (0, 1, 2),
            )

    def test_expand(self) -> None:
        """Expansion repeats each layer output k_i times."""
        structure = ncf.LayerStructure(
            F3,
            3,
            (
                ((2, subset(3, 0)), (3, subset(3, 1, 2))),
                ((1, subset(3, 0, 1)),),
            ),
            (2, 1, 1),
        )
        spec = ncf.expand(structure)
        self.assertEqual(spec.order, (2, 3, 1))
        self.assertEqual(spec.outputs, (2, 2, 0, 1))
        self.assertEqual(
            ncf.build_piecewise(spec), ncf.build_layered(structure)
        )
        self.assertEqual(ncf.layered_from_piecewise(spec), structure)

    def test_merge_single_last_layer(self) -> None:
        """A trailing variable with B_r + B_{r+1} = 0 joins the layer before.

        x1 in {0} -> 1, x2 in {0} -> 0, else 1 is the single layer
        x1 in {0} or x2 in {1,2} -> 1, else 0.
        """
        spec = ncf.PiecewiseSpec(
            F3, (1, 2), (subset(3, 0), subset(3, 0)), (1, 0, 1)
        )
        structure = ncf.layered_from_piecewise(spec)
        self.assertEqual(structure.composition, (2,))
        self.assertEqual(
            structure.layers, (((1, subset(3, 0)), (2, subset(3, 1, 2))),)
        )
        self.assertEqual(structure.constants, (1, 2))
        self.assertEqual(
            ncf.build_layered(structure), ncf.build_piecewise(spec)
        )

    def test_without_first_layer(self) -> None:
        """Peeling renumbers and folds B_2 into the first constant."""
        structure = ncf.LayerStructure(
            F3,
            3,
            (
                ((2, subset(3, 0)),),
                ((1, subset(3, 1)), (3, subset(3, 0, 2))),
            ),
            (1, 1, 2),
        )
        peeled = structure.without_first_layer()
        self.assertEqual(peeled.n, 2)
        self.assertEqual(
            peeled.layers, (((1, subset(3, 1)), (2, subset(3, 0, 2))),)
        )
        self.assertEqual(peeled.constants, (2, 2))
        collapsed = ft.collapse_region(
            ncf.build_layered(structure), {2: subset(3, 1, 2)}
        )
        self.assertEqual(collapsed, ncf.build_layered(peeled))
        self.assertEqual(ncf.recognize(collapsed), peeled)
        with self.assertRaises(DomainError):
            and_structure().without_first_layer()


class TestRecognize(test_utils.NcfTestCase):
    """Tests for the peeling recognizer."""

    def test_and(self) -> None:
        """AND is the single layer {(1,{0}),(2,{0})} with B = 0,1."""
        self.assertEqual(
            ncf.recognize(AND, Variant.INTERVAL),
            ncf.LayerStructure(
                F2,
                2,
                (((1, subset(2, 0)), (2, subset(2, 0))),),
                (0, 1),
                Variant.INTERVAL,
            ),
        )

    def test_rejections(self) -> None:
        """Sums, constants and inessential variables are not NCFs."""
        self.assertIs(ncf.recognize(SUM_F3), ncf.NOT_NCF)
        self.assertIs(
            ncf.recognize(ft.TruthTable.constant(F3, 2, 1)), ncf.NOT_NCF
        )
        self.assertIs(ncf.recognize(table(2, 2, [0, 0, 1, 1])), ncf.NOT_NCF)
        self.assertFalse(ncf.recognize(SUM_F3))

    def test_interval_variant(self) -> None:
        """Non-interval sets are NCFs only in the general variant."""
        # x1 in {1} -> 0, else 1
        t = table(3, 1, [1, 0, 1])
        self.assertIs(ncf.recognize(t, Variant.INTERVAL), ncf.NOT_NCF)
        structure = ncf.recognize(t, Variant.GENERAL)
        self.assertEqual(structure.layers, (((1, subset(3, 0, 2)),),))
        self.assertEqual(structure.constants, (1, 2))

    def test_unary_needs_two_values(self) -> None:
        """A unary function taking three values is not nested canalizing."""
        self.assertIs(ncf.recognize(table(3, 1, [0, 1, 2])), ncf.NOT_NCF)

    def test_canonical_last_layer(self) -> None:
        """Recognition returns the trailing set that holds 0."""
        structure = ncf.recognize(CASES_F3, Variant.INTERVAL)
        self.assertEqual(
            structure.layers,
            (((1, subset(3, 0, 1)),), ((2, subset(3, 0, 1)),)),
        )
        self.assertEqual(structure.constants, (1, 1, 1))
        self.assertEqual(ncf.build_layered(structure), CASES_F3)

    def test_round_trip_p3_n2(self) -> None:
        """Every interval structure at p=3, n=2 is recovered exactly."""
        structures = list(
            counting.enumerate_structures(3, 2, Variant.INTERVAL)
        )
        self.assertEqual(len(structures), 192)
        tables = set()
        for structure in structures:
            t = ncf.build_layered(structure)
            tables.add(t.key())
            self.assertEqual(ncf.recognize(t, Variant.INTERVAL), structure)
        self.assertEqual(len(tables), 192)


class TestLayersFromBeta(test_utils.NcfTestCase):
    """Tests for layer counts read off output sequences."""

    def test_long_sequence(self) -> None:
        """Five runs give five layers."""
        result = ncf.layers_from_beta((1, 1, 1, 0, 0, 0, 2, 0, 0, 2, 2, 1))
        self.assertEqual(result.r, 5)
        self.assertEqual(result.composition, (3, 3, 1, 2, 2))

    def test_short(self) -> None:
        """Single variable, and the forbidden repeat."""
        self.assertEqual(ncf.layers_from_beta((0, 1)), (1, (1,)))
        self.assertIs(ncf.layers_from_beta((1, 1)), ncf.INVALID)

    def test_merge(self) -> None:
        """A last run of one returning to the previous output merges."""
        self.assertEqual(ncf.layers_from_beta((1, 0, 1)), (1, (2,)))
        self.assertEqual(ncf.layers_from_beta((1, 0, 2)), (2, (1, 1)))

    def test_agrees_with_structures(self) -> None:
        """r and composition match the canonical structure."""
        for structure in counting.enumerate_structures(
            3, 3, Variant.INTERVAL
        ):
            result = ncf.layers_from_beta(ncf.expand(structure).outputs)
            self.assertEqual(
                tuple(result), (structure.r, structure.composition)
            )


class TestClasses(test_utils.NcfTestCase):
    """Tests for class keys and permutation equivalence."""

    def test_class_keys(self) -> None:
        """Keys ignore variable names but not constants."""
        key = ncf.class_key(ncf.recognize(X1_NOT_X2))
        self.assertEqual(key, ncf.class_key(ncf.recognize(NOT_X1_X2)))
        self.assertNotEqual(
            ncf.class_key(ncf.recognize(AND)),
            ncf.class_key(ncf.recognize(OR)),
        )
        self.assertEqual(
            ncf.class_key(ncf.recognize(AND)),
            ncf.class_key(ncf.recognize(ft.permute(AND, (2, 1)))),
        )

    def test_class_key_permutation_invariant(self) -> None:
        """Every variable permutation keeps the class key, for n <= 4."""
        for p, n in ((2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)):
            for seed in range(3):
                structure = counting.sample_uniform(
                    p, n, Variant.GENERAL, seed
                )
                t = ncf.build_layered(structure)
                key = ncf.class_key(structure)
                for sigma in itertools.permutations(range(1, n + 1)):
                    permuted = ncf.recognize(ft.permute(t, sigma))
                    self.assertEqual(ncf.class_key(permuted), key)

    def test_permutation_equivalent(self) -> None:
        """Fast path and exhaustive search."""
        self.assertTrue(ncf.permutation_equivalent(AND, AND))
        self.assertTrue(ncf.permutation_equivalent(X1_NOT_X2, NOT_X1_X2))
        self.assertFalse(ncf.permutation_equivalent(AND, OR))
        diff = ft.TruthTable.from_function(F3, 2, lambda a, b: a - b)
        self.assertTrue(
            ncf.permutation_equivalent(diff, ft.permute(diff, (2, 1)))
        )
        self.assertFalse(ncf.permutation_equivalent(SUM_F3, diff))
        with self.assertRaises(DomainError):
            ncf.permutation_equivalent(AND, SUM_F3)

    def test_permutation_search_guard(self) -> None:
        """Non-NCF pairs beyond the search bound are refused."""
        n = ncf.MAX_PERMUTATION_ARITY + 1
        t = ft.TruthTable.from_function(F2, n, lambda *x: sum(x))
        u = ft.TruthTable.from_function(F2, n, lambda *x: sum(x) + x[0] * x[1])
        with self.assertRaises(CapacityError):
            ncf.permutation_equivalent(t, u)


class TestStructureFormat(test_utils.NcfTestCase):
    """Tests for the structure text format."""

    def test_format(self) -> None:
        """Layers, constants and variant are written line by line."""
        self.assertEqual(
            ncf.format_structure(and_structure()),
            "p: 2\nlayer 1: (1, {0}) (2, {0})\nB: 0,1\nvariant: general\n",
        )

    def test_round_trip(self) -> None:
        """Parsing inverts formatting."""
        for structure in counting.enumerate_structures(
            3, 2, Variant.GENERAL
        ):
            self.assertEqual(
                ncf.parse_structure(ncf.format_structure(structure)),
                structure,
            )

    def test_errors(self) -> None:
        """Malformed lines carry their number."""
        with self.assertRaises(ParseError) as cm:
            ncf.parse_structure("p: 2\nlayer 1: (1, {0}\nB: 0,1\n")
        self.assertEqual(cm.exception.line, 2)
        with self.assertRaises(ParseError) as cm:
            ncf.parse_structure("layer 1: (1, {0})\nB: 0,1\nvariant: x\n")
        self.assertEqual(cm.exception.line, 1)
        with self.assertRaises(ParseError) as cm:
            ncf.parse_structure("p: 17\nlayer 1: (1, {0})\nB: 0,1\n")
        self.assertEqual(cm.exception.line, 1)
        with self.assertRaises(ParseError):
            ncf.parse_structure(
                "p: 2\nlayer 1: (1, {0}) (2, {0})\nB: 1,0\nvariant: general\n"
            )
        self.assertEqual(
            ncf.parse_structure(
                "layer 1: (1, {0}) (2, {0})\nB: 0,1\nvariant: general\n",
                p=2,
            ),
            and_structure(),
        )
