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

"""Nested canalizing functions: construction, recognition and equivalence.

An NCF is described two ways. A PiecewiseSpec is the case table: a
variable order, one canalizing set per variable and n+1 canalized outputs.
A LayerStructure is the unique nested polynomial form

    M_1(M_2(...(M_{r-1}(B_{r+1} M_r + B_r) + B_{r-1})...) + B_2) + B_1

where M_i is the product of the indicator functions Q_S(x) of the
variables in layer i. ``recognize`` recovers the LayerStructure of an
arbitrary truth table by peeling off the canalizing variables layer by
layer.

Canonical form: pairs within a layer are sorted by variable index, and a
trailing single-variable layer uses the canalizing set that contains 0
(the other representative describes the same function after a
complement flip).
"""

import itertools
import logging
import re
from dataclasses import (
    dataclass,
)
from typing import (
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

import ncfkit.function_table as ft
from ncfkit.field_core import (
    FieldSpec,
    ValueSubset,
    Variant,
    format_subset,
    parse_subset,
)
from ncfkit.guard import (
    CapacityError,
    DomainError,
    InvalidSpecError,
    ParseError,
)

logger = logging.getLogger(__name__)

NOT_NCF = ft._Sentinel("NotNCF")
INVALID = ft._Sentinel("Invalid")

# Exhaustive permutation search is only attempted up to this arity.
MAX_PERMUTATION_ARITY = 8

Pair = Tuple[int, ValueSubset]
Layer = Tuple[Pair, ...]


def _check_sets(
    field: FieldSpec, sets: Sequence[ValueSubset], variant: Variant
) -> None:
    for s in sets:
        if s.p != field.p:
            raise InvalidSpecError(
                f"set {s} is over F_{s.p}, expected F_{field.p}"
            )
        if variant is Variant.INTERVAL and not s.is_interval():
            raise InvalidSpecError(f"set {s} is not an interval")


@dataclass(frozen=True)
class PiecewiseSpec:
    """Case-table description of an NCF.

    ``order`` lists sigma(1), ..., sigma(n) as 1-based variable indices,
    ``sets`` the canalizing input sets S_1..S_n and ``outputs`` the
    canalized outputs b_1..b_{n+1}.
    """

    field: FieldSpec
    order: Tuple[int, ...]
    sets: Tuple[ValueSubset, ...]
    outputs: Tuple[int, ...]
    variant: Variant = Variant.GENERAL

    def __post_init__(self) -> None:
        """Validate the spec invariants."""
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "variant", Variant(self.variant))
        self.field.require_arithmetic()
        n = len(self.order)
        if n < 1:
            raise InvalidSpecError("a piecewise spec needs a variable")
        if sorted(self.order) != list(range(1, n + 1)):
            raise InvalidSpecError(
                f"order {self.order} is not a permutation of 1..{n}"
            )
        if len(self.sets) != n or len(self.outputs) != n + 1:
            raise InvalidSpecError(
                f"expected {n} sets and {n + 1} outputs, got "
                f"{len(self.sets)} and {len(self.outputs)}"
            )
        for b in self.outputs:
            if not 0 <= b < self.field.p:
                raise InvalidSpecError(f"output {b} is not a field element")
        if self.outputs[-1] == self.outputs[-2]:
            raise InvalidSpecError("b_n must differ from b_{n+1}")
        _check_sets(self.field, self.sets, self.variant)

    @property
    def n(self) -> int:
        """Number of variables."""
        return len(self.order)


def _membership(
    field: FieldSpec, n: int, var: int, s: ValueSubset
) -> np.ndarray:
    member = np.array([x in s for x in range(field.p)], dtype=bool)
    shape = [1] * n
    shape[var - 1] = field.p
    return member.reshape(shape)


def build_piecewise(spec: PiecewiseSpec) -> ft.TruthTable:
    """Tabulate the case table: b_j for the first j with x_sigma(j) in S_j."""
    field, n = spec.field, spec.n
    cube = np.full((field.p,) * n, spec.outputs[-1], dtype=np.int64)
    # Later cases first so that earlier cases win.
    for j in reversed(range(n)):
        hit = np.broadcast_to(
            _membership(field, n, spec.order[j], spec.sets[j]), cube.shape
        )
        cube = np.where(hit, spec.outputs[j], cube)
    return ft.TruthTable(field, n, np.ravel(cube))


def normalize_flip(spec: PiecewiseSpec) -> PiecewiseSpec:
    """Complement the last set and swap b_n with b_{n+1}.

    The flipped spec describes the same function.
    """
    b = spec.outputs
    return PiecewiseSpec(
        spec.field,
        spec.order,
        spec.sets[:-1] + (spec.sets[-1].complement(),),
        b[:-2] + (b[-1], b[-2]),
        spec.variant,
    )


@dataclass(frozen=True)
class LayerStructure:
    """The nested polynomial form of an NCF.

    ``layers`` holds r tuples of (variable, canalizing set) pairs and
    ``constants`` holds B_1, ..., B_{r+1}.
    """

    field: FieldSpec
    n: int
    layers: Tuple[Layer, ...]
    constants: Tuple[int, ...]
    variant: Variant = Variant.GENERAL

    def __post_init__(self) -> None:
        """Sort each layer and validate the invariants."""
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(
            self,
            "layers",
            tuple(
                tuple(sorted(layer, key=lambda pair: pair[0]))
                for layer in self.layers
            ),
        )
        object.__setattr__(self, "constants", tuple(self.constants))
        self.validate()

    def validate(self) -> None:
        """Raise InvalidSpecError unless the structure is well formed."""
        self.field.require_arithmetic()
        p = self.field.p
        r = len(self.layers)
        if r < 1 or any(not layer for layer in self.layers):
            raise InvalidSpecError("every layer must hold a variable")
        if len(self.constants) != r + 1:
            raise InvalidSpecError(
                f"{r} layers need {r + 1} constants, got "
                f"{len(self.constants)}"
            )
        if any(not 0 <= b < p for b in self.constants):
            raise InvalidSpecError("constants must be field elements")
        if any(b == 0 for b in self.constants[1:]):
            raise InvalidSpecError("B_2, ..., B_{r+1} must be nonzero")
        variables = [v for layer in self.layers for v, _ in layer]
        if sorted(variables) != list(range(1, self.n + 1)):
            raise InvalidSpecError(
                f"layer variables {variables} do not partition 1..{self.n}"
            )
        if (
            r >= 2
            and len(self.layers[-1]) == 1
            and (self.constants[-1] + self.constants[-2]) % p == 0
        ):
            raise InvalidSpecError(
                "a single-variable last layer needs B_r + B_{r+1} != 0"
            )
        _check_sets(
            self.field,
            [s for layer in self.layers for _, s in layer],
            self.variant,
        )

    @property
    def r(self) -> int:
        """Layer number."""
        return len(self.layers)

    @property
    def composition(self) -> Tuple[int, ...]:
        """Layer sizes k_1, ..., k_r."""
        return tuple(len(layer) for layer in self.layers)

    @property
    def outputs(self) -> Tuple[int, ...]:
        """Layer outputs b_i = B_1 + ... + B_i for i = 1..r+1."""
        p = self.field.p
        return tuple(
            int(c) % p for c in itertools.accumulate(self.constants)
        )

    def is_canonical(self) -> bool:
        """Whether a trailing single-variable layer uses the set holding 0."""
        last = self.layers[-1]
        return len(last) != 1 or 0 in last[0][1]

    def without_first_layer(self) -> "LayerStructure":
        """Structure of the subfunction left once layer 1 misses its sets.

        Variables are renumbered to their rank among the remaining ones and
        the new first constant is B_1 + B_2.
        """
        if self.r < 2:
            raise DomainError("a single-layer structure has no sub-layers")
        rest = self.layers[1:]
        ranks = {
            v: rank
            for rank, v in enumerate(
                sorted(v for layer in rest for v, _ in layer), start=1
            )
        }
        b = self.constants
        return LayerStructure(
            self.field,
            len(ranks),
            tuple(tuple((ranks[v], s) for v, s in layer) for layer in rest),
            ((b[0] + b[1]) % self.field.p,) + b[2:],
            self.variant,
        )

    def __str__(self) -> str:
        """Textual form."""
        return format_structure(self)


def _membership_products(layer_structure: LayerStructure) -> List[np.ndarray]:
    field, n = layer_structure.field, layer_structure.n
    products = []
    for layer in layer_structure.layers:
        m = np.ones((1,) * n, dtype=np.int64)
        for var, s in layer:
            m = m * ~_membership(field, n, var, s)
        products.append(np.broadcast_to(m, (field.p,) * n))
    return products


def build_layered(layer_structure: LayerStructure) -> ft.TruthTable:
    """Tabulate the nested polynomial form."""
    layer_structure.validate()
    p = layer_structure.field.p
    b = layer_structure.constants
    m = _membership_products(layer_structure)
    r = layer_structure.r
    value = b[r] * m[r - 1] + b[r - 1]
    for i in reversed(range(r - 1)):
        value = (m[i] * value + b[i]) % p
    return ft.TruthTable(
        layer_structure.field, layer_structure.n, np.ravel(value % p)
    )


def expand(layer_structure: LayerStructure) -> PiecewiseSpec:
    """Case-table form: layers in order, b_i repeated k_i times."""
    order, sets, outputs = [], [], []
    levels = layer_structure.outputs
    for layer, b in zip(layer_structure.layers, levels):
        for var, s in layer:
            order.append(var)
            sets.append(s)
            outputs.append(b)
    outputs.append(levels[-1])
    return PiecewiseSpec(
        layer_structure.field,
        tuple(order),
        tuple(sets),
        tuple(outputs),
        layer_structure.variant,
    )


def _normalize_tail(
    p: int, layers: List[List[Pair]], levels: List[int]
) -> None:
    """Apply the single-variable last layer rules in place.

    ``levels`` are the layer outputs C_1..C_{r+1}. If the last layer is a
    single variable whose outer output equals the output of the layer
    before it (B_r + B_{r+1} = 0), that variable canalizes into the
    previous layer with the complemented set. Otherwise a trailing single
    variable is flipped so that its set contains 0.
    """
    if (
        len(layers) >= 2
        and len(layers[-1]) == 1
        and levels[-1] == levels[-3]
    ):
        (var, s), = layers.pop()
        layers[-1].append((var, s.complement()))
        del levels[-1]
        logger.debug(
            "Merged trailing variable x%d into layer %d", var, len(layers)
        )
    if len(layers[-1]) == 1:
        (var, s), = layers[-1]
        if 0 not in s:
            layers[-1] = [(var, s.complement())]
            levels[-2], levels[-1] = levels[-1], levels[-2]


def _from_levels(
    field: FieldSpec,
    n: int,
    layers: List[List[Pair]],
    levels: List[int],
    variant: Variant,
) -> LayerStructure:
    p = field.p
    _normalize_tail(p, layers, levels)
    constants = [levels[0]] + [
        (levels[i] - levels[i - 1]) % p for i in range(1, len(levels))
    ]
    return LayerStructure(
        field,
        n,
        tuple(tuple(layer) for layer in layers),
        tuple(constants),
        variant,
    )


def canonicalize(layer_structure: LayerStructure) -> LayerStructure:
    """Equivalent structure in canonical form."""
    return _from_levels(
        layer_structure.field,
        layer_structure.n,
        [list(layer) for layer in layer_structure.layers],
        list(layer_structure.outputs),
        layer_structure.variant,
    )


def layered_from_piecewise(spec: PiecewiseSpec) -> LayerStructure:
    """Canonical layer structure of a piecewise spec.

    Runs of equal outputs among b_1..b_n become layers; B_1 = C_1 and
    B_{i+1} = C_{i+1} - C_i for the run outputs C_i.
    """
    layers: List[List[Pair]] = []
    levels: List[int] = []
    for var, s, b in zip(spec.order, spec.sets, spec.outputs):
        if levels and levels[-1] == b:
            layers[-1].append((var, s))
        else:
            layers.append([(var, s)])
            levels.append(b)
    levels.append(spec.outputs[-1])
    return _from_levels(spec.field, spec.n, layers, levels, spec.variant)


class LayerCount(NamedTuple):
    """Layer number and layer sizes read off an output sequence."""

    r: int
    composition: Tuple[int, ...]


def layers_from_beta(beta: Sequence[int]) -> Union[LayerCount, ft._Sentinel]:
    """Layer number and composition from the canalized outputs alone.

    Returns INVALID if b_n = b_{n+1}.
    """
    if len(beta) < 2:
        raise DomainError("an output sequence has at least two entries")
    if beta[-1] == beta[-2]:
        return INVALID
    runs = [[b, len(list(group))] for b, group in itertools.groupby(beta[:-1])]
    if len(runs) >= 2 and runs[-1][1] == 1 and runs[-2][0] == beta[-1]:
        # the last variable canalizes into the layer before it
        runs.pop()
        runs[-1][1] += 1
    return LayerCount(len(runs), tuple(k for _, k in runs))


def recognize(
    table: ft.TruthTable, variant: Variant = Variant.GENERAL
) -> Union[LayerStructure, ft._Sentinel]:
    """Recover the canonical layer structure of an NCF, else NOT_NCF.

    Each round takes every canalizing variable of the current subfunction
    (with its maximal canalizing set) as the next layer, then collapses the
    region where all of them miss their sets.
    """
    variant = Variant(variant)
    field, n = table.field, table.n
    if n < 1 or table.is_constant():
        return NOT_NCF
    remaining = list(range(1, n + 1))
    current = table
    layers: List[List[Pair]] = []
    levels: List[int] = []
    while current.n > 0:
        if len(ft.essential_variables(current)) != current.n:
            logger.debug("Inessential variable among %s", remaining)
            return NOT_NCF
        if current.n == 1:
            values = current.values
            first = int(values[0])
            s = ValueSubset.of(
                field.p, [a for a in range(field.p) if values[a] == first]
            )
            rest = set(int(v) for v in values) - {first}
            if len(rest) != 1 or first in levels[-1:]:
                return NOT_NCF
            if variant is Variant.INTERVAL and not s.is_interval():
                return NOT_NCF
            layers.append([(remaining[0], s)])
            levels.extend([first, rest.pop()])
            break
        profile = ft.canalizing_profile(current)
        if not profile.consistent or not profile.entries:
            return NOT_NCF
        b = profile.output
        if b in levels[-1:]:
            return NOT_NCF
        if variant is Variant.INTERVAL and not all(
            s.is_interval() for s, _ in profile.entries.values()
        ):
            return NOT_NCF
        collapsed = ft.collapse_region(
            current,
            {i: s.complement() for i, (s, _) in profile.entries.items()},
        )
        if collapsed is ft.NOT_COLLAPSIBLE:
            return NOT_NCF
        layers.append(
            [(remaining[i - 1], s) for i, (s, _) in profile.entries.items()]
        )
        levels.append(b)
        remaining = [
            v
            for rank, v in enumerate(remaining, start=1)
            if rank not in profile.entries
        ]
        current = collapsed
        logger.debug("Peeled layer %d: %s", len(layers), layers[-1])
        if current.n == 0:
            c = int(current.values[0])
            if c == b:
                return NOT_NCF
            levels.append(c)
    return _from_levels(field, n, layers, levels, variant)


class ClassKey(NamedTuple):
    """Permutation-invariant description of an NCF."""

    variant: str
    p: int
    n: int
    r: int
    layer_sets: Tuple[Tuple[int, ...], ...]
    constants: Tuple[int, ...]


def class_key(layer_structure: LayerStructure) -> ClassKey:
    """Key shared exactly by the structures of permutation-equivalent NCFs.

    Each layer contributes the sorted multiset of its set masks.
    """
    return ClassKey(
        layer_structure.variant.value,
        layer_structure.field.p,
        layer_structure.n,
        layer_structure.r,
        tuple(
            tuple(sorted(s.mask for _, s in layer))
            for layer in layer_structure.layers
        ),
        layer_structure.constants,
    )


def permutation_equivalent(t1: ft.TruthTable, t2: ft.TruthTable) -> bool:
    """Whether t1(x) = t2(x_sigma(1), ..., x_sigma(n)) for some sigma."""
    if t1.field != t2.field or t1.n != t2.n:
        raise DomainError("tables differ in field or arity")
    if t1 == t2:
        return True
    l1 = recognize(t1, Variant.GENERAL)
    l2 = recognize(t2, Variant.GENERAL)
    if l1 and l2:
        return class_key(l1) == class_key(l2)
    if l1 or l2:
        # permuting variables preserves being nested canalizing
        return False
    if t1.n > MAX_PERMUTATION_ARITY:
        raise CapacityError(
            f"permutation search beyond {MAX_PERMUTATION_ARITY} variables"
        )
    for sigma in itertools.permutations(range(1, t1.n + 1)):
        if ft.permute(t2, sigma) == t1:
            return True
    return False


def format_structure(layer_structure: LayerStructure) -> str:
    """Emit the textual form of a layer structure."""
    lines = [f"p: {layer_structure.field.p}"]
    for i, layer in enumerate(layer_structure.layers, start=1):
        pairs = " ".join(f"({v}, {format_subset(s)})" for v, s in layer)
        lines.append(f"layer {i}: {pairs}")
    lines.append("B: " + ",".join(str(b) for b in layer_structure.constants))
    lines.append(f"variant: {layer_structure.variant.value}")
    return "\n".join(lines) + "\n"


_PAIR_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\{[^}]*\})\s*\)", re.ASCII)


def parse_structure(
    text: str, p: Optional[int] = None
) -> LayerStructure:
    """Parse the textual form written by format_structure.

    :param p: modulus, required only when the text has no "p:" line
    :raises: ParseError with a line diagnostic
    """
    layers: List[List[Pair]] = []
    constants = None
    variant = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, sep, body = line.partition(":")
        if not sep:
            raise ParseError(f"unrecognised line {line!r}", number)
        head, body = head.strip(), body.strip()
        try:
            if head == "p":
                p = int(body)
                FieldSpec.prime(p).require_evaluable()
            elif head.startswith("layer"):
                if p is None:
                    raise ParseError("modulus unknown before first layer")
                if head.split()[1:] != [str(len(layers) + 1)]:
                    raise ParseError(f"expected layer {len(layers) + 1}")
                pairs = _PAIR_RE.findall(body)
                if not pairs or _PAIR_RE.sub("", body).strip():
                    raise ParseError(f"malformed layer {body!r}")
                layers.append(
                    [(int(v), parse_subset(s, p)) for v, s in pairs]
                )
            elif head == "B":
                constants = tuple(int(b) for b in body.split(","))
            elif head == "variant":
                variant = Variant(body)
            else:
                raise ParseError(f"unrecognised key {head!r}")
        except ParseError as e:
            raise ParseError(e.msg, number) from e
        except ValueError as e:
            raise ParseError(str(e), number) from e
    if not layers or constants is None or variant is None:
        raise ParseError("structure needs layers, a B line and a variant")
    n = sum(len(layer) for layer in layers)
    try:
        return LayerStructure(
            FieldSpec.prime(p),
            n,
            tuple(tuple(layer) for layer in layers),
            constants,
            variant,
        )
    except (InvalidSpecError, DomainError) as e:
        raise ParseError(str(e)) from e
