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

"""Dense truth tables of functions F_p^n -> F_p.

A TruthTable stores the p^n values of a function with x_1 as the most
significant digit of the index, so the table reshaped to (p,) * n has axis
i-1 running over x_i. Everything above this module (NCF construction,
recognition, counting oracles) works on these tables.
"""

import itertools
import logging
from dataclasses import (
    dataclass,
)
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterator,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from ncfkit.field_core import (
    FieldSpec,
    ValueSubset,
)
from ncfkit.guard import (
    CapacityError,
    DomainError,
    ParseError,
)

logger = logging.getLogger(__name__)

# Largest table materialised anywhere in the package.
MAX_TABLE_ENTRIES = 2**22


class _Sentinel:
    """Named marker value returned instead of raising."""

    def __init__(self, name: str) -> None:
        """Run constructor."""
        self.name = name

    def __repr__(self) -> str:
        """Marker name."""
        return self.name

    def __bool__(self) -> bool:
        """Markers are falsy so callers can test results directly."""
        return False


NOT_COLLAPSIBLE = _Sentinel("NotCollapsible")
CONSTANT_FUNCTION = _Sentinel("ConstantFunction")


class TruthTable:
    """Immutable value table of a function F_p^n -> F_p."""

    __slots__ = ("field", "n", "values")

    def __init__(
        self,
        field: FieldSpec,
        n: int,
        values: Union[Sequence[int], np.ndarray],
    ) -> None:
        """Run constructor."""
        field.require_evaluable()
        if n < 0:
            raise DomainError(f"arity {n} is negative")
        size = field.p**n
        if size > MAX_TABLE_ENTRIES:
            raise DomainError(
                f"table of {size} entries exceeds {MAX_TABLE_ENTRIES}"
            )
        arr = np.array(values, dtype=np.int64).reshape(-1)
        if arr.size != size:
            raise DomainError(
                f"expected {size} table entries, got {arr.size}"
            )
        if arr.size and (arr.min() < 0 or arr.max() >= field.p):
            raise DomainError(f"table entries must lie in 0..{field.p - 1}")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        self.field = field
        self.n = n
        self.values = arr

    @classmethod
    def from_function(
        cls, field: FieldSpec, n: int, f: Callable[..., int]
    ) -> "TruthTable":
        """Tabulate f(x_1, ..., x_n) over every point."""
        return cls(field, n, [f(*x) % field.p for x in points(field, n)])

    @classmethod
    def constant(cls, field: FieldSpec, n: int, b: int) -> "TruthTable":
        """The constant function b in n variables."""
        field.check_element(b)
        return cls(field, n, np.full(field.p**n, b))

    @property
    def p(self) -> int:
        """Field modulus."""
        return self.field.p

    @property
    def cube(self) -> np.ndarray:
        """Values reshaped so that axis i-1 runs over x_i."""
        return self.values.reshape((self.field.p,) * self.n)

    def is_constant(self) -> bool:
        """Whether every entry is the same."""
        return bool(self.values.min() == self.values.max())

    def __eq__(self, other: object) -> bool:
        """Tables are equal when field, arity and entries agree."""
        if not isinstance(other, TruthTable):
            return NotImplemented
        return (
            self.field == other.field
            and self.n == other.n
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        """Hash on field, arity and raw entries."""
        return hash((self.field.q, self.n, self.values.tobytes()))

    def __repr__(self) -> str:
        """Short debugging form."""
        return (
            f"TruthTable(p={self.field.p}, n={self.n}, "
            f"values={self.values.tolist()})"
        )

    def key(self) -> bytes:
        """Raw entries, usable for deduplication within one (p, n)."""
        return self.values.tobytes()


def points(field: FieldSpec, n: int) -> Iterator[Tuple[int, ...]]:
    """All points of F_p^n in table index order."""
    return itertools.product(range(field.p), repeat=n)


def _check_table_point(t: TruthTable, point: Sequence[int]) -> Tuple[int, ...]:
    if len(point) != t.n:
        raise DomainError(f"expected {t.n} coordinates, got {len(point)}")
    for x in point:
        t.field.check_element(x)
    return tuple(point)


def evaluate(t: TruthTable, point: Sequence[int]) -> int:
    """Value of the table at a point of F_p^n."""
    point = _check_table_point(t, point)
    index = 0
    for x in point:
        index = index * t.p + x
    return int(t.values[index])


@dataclass(frozen=True)
class AnfPolynomial:
    """Algebraic normal form: exponent vector -> nonzero coefficient."""

    field: FieldSpec
    n: int
    terms: Mapping[Tuple[int, ...], int]

    def degree(self) -> int:
        """Largest total degree among the stored terms, 0 if none."""
        return max((sum(k) for k in self.terms), default=0)

    def variables(self) -> FrozenSet[int]:
        """1-based indices appearing with positive exponent."""
        return frozenset(
            i + 1 for k in self.terms for i, e in enumerate(k) if e > 0
        )

    def evaluate(self, point: Sequence[int]) -> int:
        """Evaluate the polynomial at a point."""
        p = self.field.p
        total = 0
        for exps, coef in self.terms.items():
            term = coef
            for x, e in zip(point, exps):
                term = term * pow(x, e, p) % p
            total += term
        return total % p

    def to_table(self) -> TruthTable:
        """Tabulate the polynomial."""
        values = [self.evaluate(x) for x in points(self.field, self.n)]
        return TruthTable(self.field, self.n, values)

    def __str__(self) -> str:
        """Human readable form, highest degree first."""
        if not self.terms:
            return "0"
        parts = []
        for exps in sorted(
            self.terms, key=lambda k: (-sum(k), [-e for e in k])
        ):
            coef = self.terms[exps]
            mono = "*".join(
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}"
                for i, e in enumerate(exps)
                if e
            )
            if not mono:
                parts.append(str(coef))
            elif coef == 1:
                parts.append(mono)
            else:
                parts.append(f"{coef}*{mono}")
        return " + ".join(parts)


def _interpolation_matrix(p: int) -> np.ndarray:
    # (x - a)^(p-1) = sum_k a^(p-1-k) x^k over F_p, hence the k-th
    # coefficient of sum_a f(a) (1 - (x - a)^(p-1)).
    w = np.zeros((p, p), dtype=np.int64)
    for k in range(p):
        for a in range(p):
            w[k, a] = ((1 if k == 0 else 0) - pow(a, p - 1 - k, p)) % p
    return w


def to_anf(t: TruthTable) -> AnfPolynomial:
    """Interpolate the table into its algebraic normal form."""
    p = t.p
    w = _interpolation_matrix(p)
    coeffs = t.cube.astype(np.int64)
    for axis in range(t.n):
        coeffs = np.moveaxis(
            np.tensordot(w, coeffs, axes=([1], [axis])) % p, 0, axis
        )
    terms: Dict[Tuple[int, ...], int] = {}
    if t.n == 0:
        if int(coeffs):
            terms[()] = int(coeffs)
    else:
        for exps in zip(*np.nonzero(coeffs)):
            exps = tuple(int(e) for e in exps)
            terms[exps] = int(coeffs[exps])
    return AnfPolynomial(t.field, t.n, terms)


def algebraic_degree(t: TruthTable) -> int:
    """Largest total degree in the ANF of the table."""
    return to_anf(t).degree()


def essential_variables(t: TruthTable) -> FrozenSet[int]:
    """1-based indices of the variables the function depends on."""
    cube = t.cube
    return frozenset(
        i + 1
        for i in range(t.n)
        if np.any(cube != np.take(cube, [0], axis=i))
    )


@dataclass(frozen=True)
class CanalizingProfile:
    """Maximal canalizing sets of each variable.

    ``entries`` maps a 1-based variable index to (S_i, b) where S_i is the
    set of all values a for which fixing x_i = a forces the output b.
    Variables whose constant restrictions disagree on the output are listed
    in ``conflicts``; their entry holds the output forced by the least
    canalizing value.
    """

    n: int
    entries: Mapping[int, Tuple[ValueSubset, int]]
    output: Optional[int]
    conflicts: Tuple[int, ...] = ()

    @property
    def variables(self) -> Tuple[int, ...]:
        """Canalizing variables, ascending."""
        return tuple(sorted(self.entries))

    @property
    def consistent(self) -> bool:
        """Whether all canalizing variables share one canalized output."""
        if self.conflicts:
            return False
        return len({b for _, b in self.entries.values()}) <= 1


def canalizing_profile(
    t: TruthTable,
) -> Union[CanalizingProfile, _Sentinel]:
    """Compute the canalizing profile, or CONSTANT_FUNCTION for constants."""
    if t.is_constant():
        return CONSTANT_FUNCTION
    cube = t.cube
    p = t.p
    full = (1 << p) - 1
    entries: Dict[int, Tuple[ValueSubset, int]] = {}
    conflicts = []
    for i in range(t.n):
        by_output: Dict[int, int] = {}
        for a in range(p):
            piece = np.take(cube, a, axis=i)
            lo = piece.min()
            if lo == piece.max():
                by_output[int(lo)] = by_output.get(int(lo), 0) | 1 << a
        if not by_output:
            continue
        if len(by_output) > 1:
            conflicts.append(i + 1)
        # the output forced by the least canalizing value
        b, mask = min(by_output.items(), key=lambda item: item[1] & -item[1])
        if mask != full:
            entries[i + 1] = (ValueSubset(p, mask), b)
    outputs = {b for _, b in entries.values()}
    output = outputs.pop() if len(outputs) == 1 else None
    return CanalizingProfile(t.n, entries, output, tuple(conflicts))


def _check_indices(t: TruthTable, indices: Sequence[int]) -> None:
    if len(set(indices)) != len(indices):
        raise DomainError("repeated variable index")
    for i in indices:
        if not 1 <= i <= t.n:
            raise DomainError(f"variable index {i} outside 1..{t.n}")


def restrict(t: TruthTable, assignment: Mapping[int, int]) -> TruthTable:
    """Fix some variables; the rest keep their ascending original order."""
    _check_indices(t, list(assignment))
    index = []
    for i in range(1, t.n + 1):
        if i in assignment:
            index.append(t.field.check_element(assignment[i]))
        else:
            index.append(slice(None))
    sub = t.cube[tuple(index)]
    return TruthTable(t.field, t.n - len(assignment), np.ravel(sub))


def collapse_region(
    t: TruthTable, constraints: Mapping[int, ValueSubset]
) -> Union[TruthTable, _Sentinel]:
    """Restrict constrained variables to their sets, if that is one function.

    Returns the common function of the unconstrained variables when every
    choice of constrained values within their sets yields the same
    restriction, else NOT_COLLAPSIBLE.
    """
    _check_indices(t, list(constraints))
    region = t.cube
    for i, s in constraints.items():
        region = np.take(region, s.elements(), axis=i - 1)
    reference = region
    for i in constraints:
        reference = np.take(reference, [0], axis=i - 1)
    if np.any(region != reference):
        return NOT_COLLAPSIBLE
    return restrict(
        t, {i: s.elements()[0] for i, s in constraints.items()}
    )


def permute(t: TruthTable, sigma: Sequence[int]) -> TruthTable:
    """Table of x -> t(x_sigma(1), ..., x_sigma(n)); sigma is 1-based."""
    if sorted(sigma) != list(range(1, t.n + 1)):
        raise DomainError(f"{list(sigma)} is not a permutation of 1..{t.n}")
    inverse = [0] * t.n
    for k, m in enumerate(sigma):
        inverse[m - 1] = k
    return TruthTable(
        t.field, t.n, np.ravel(np.transpose(t.cube, inverse))
    )


def format_table(t: TruthTable) -> str:
    """Emit the truth-table file format."""
    return "{} {}\n{}\n".format(
        t.p, t.n, " ".join(str(int(v)) for v in t.values)
    )


def _parse_int(token: str, line: int, column: int) -> int:
    if not (token.isascii() and token.isdecimal()):
        raise ParseError(f"expected an integer, got {token!r}", line, column)
    return int(token)


def parse_table(text: str) -> TruthTable:
    """Parse the truth-table file format.

    Line one holds "p n", the next line exactly p^n entries. Lines starting
    with '#' and blank lines are ignored.

    :raises: ParseError with a line/column diagnostic
    """
    lines = [
        (number, raw)
        for number, raw in enumerate(text.splitlines(), start=1)
        if raw.strip() and not raw.lstrip().startswith("#")
    ]
    if len(lines) != 2:
        raise ParseError(
            f"expected a header line and a values line, got {len(lines)} "
            "non-comment lines"
        )
    (hdr_line, header), (val_line, body) = lines
    tokens = header.split()
    if len(tokens) != 2:
        raise ParseError("header must be 'p n'", hdr_line)
    p = _parse_int(tokens[0], hdr_line, 1)
    n = _parse_int(tokens[1], hdr_line, 2)
    try:
        field = FieldSpec.prime(p)
        field.require_evaluable()
    except DomainError as e:
        raise ParseError(str(e), hdr_line, 1) from e
    if n < 1:
        raise ParseError("arity must be at least 1", hdr_line, 2)
    expected = p**n
    if expected > MAX_TABLE_ENTRIES:
        raise CapacityError(
            f"table of {expected} entries exceeds {MAX_TABLE_ENTRIES}"
        )
    entries = body.split()
    if len(entries) != expected:
        raise ParseError(
            f"expected {expected} entries, got {len(entries)}",
            val_line,
            min(len(entries), expected) + 1,
        )
    values = []
    for column, token in enumerate(entries, start=1):
        v = _parse_int(token, val_line, column)
        if v >= p:
            raise ParseError(
                f"entry {v} outside 0..{p - 1}", val_line, column
            )
        values.append(v)
    return TruthTable(field, n, values)
