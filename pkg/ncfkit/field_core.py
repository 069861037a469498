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

"""Alphabet arithmetic, value subsets, intervals and the indicator function.

Every other ncfkit module speaks in terms of the types defined here. A
FieldSpec describes the ambient alphabet: either a prime field F_p with full
element arithmetic, or a field of prime power order q of which only the
cardinality is used (by the counting formulas). A ValueSubset is a nonempty
proper subset of {0, ..., p-1} stored as a bit mask.
"""

import enum
import logging
from dataclasses import (
    dataclass,
)
from typing import (
    Iterable,
    List,
    Tuple,
)

from ncfkit.guard import (
    DomainError,
    ParseError,
    UnsupportedModeError,
)

logger = logging.getLogger(__name__)

# Subsets are bit masks, one bit per alphabet symbol.
MAX_ALPHABET = 64
# Largest modulus accepted on paths that materialise truth tables.
MAX_EVAL_P = 13


class Variant(str, enum.Enum):
    """Which canalizing input sets an NCF may use."""

    INTERVAL = "interval"
    GENERAL = "general"


class Mode(str, enum.Enum):
    """Whether a FieldSpec supports element arithmetic."""

    PRIME = "prime"
    COUNTING = "counting"


def is_prime(n: int) -> bool:
    """Whether n is a prime number."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power_base(q: int) -> Tuple[int, int]:
    """Return (p, k) with q = p**k, p prime.

    :raises: DomainError if q is not a prime power
    """
    if q < 2:
        raise DomainError(f"{q} is not a prime power")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k = 0
    rest = q
    while rest % p == 0:
        rest //= p
        k += 1
    if rest != 1:
        raise DomainError(f"{q} is not a prime power")
    return p, k


@dataclass(frozen=True)
class FieldSpec:
    """The ambient alphabet of the functions under study."""

    q: int
    mode: Mode

    def __post_init__(self) -> None:
        """Validate the order against the mode."""
        if self.mode is Mode.PRIME:
            if not is_prime(self.q):
                raise DomainError(f"modulus {self.q} is not prime")
            if self.q > MAX_ALPHABET:
                raise DomainError(
                    f"modulus {self.q} exceeds {MAX_ALPHABET} symbols"
                )
        else:
            prime_power_base(self.q)

    @classmethod
    def prime(cls, p: int) -> "FieldSpec":
        """Prime field F_p with element arithmetic."""
        return cls(p, Mode.PRIME)

    @classmethod
    def of_order(cls, q: int) -> "FieldSpec":
        """Field of order q; prime orders get arithmetic, others do not."""
        if is_prime(q) and q <= MAX_ALPHABET:
            return cls(q, Mode.PRIME)
        return cls(q, Mode.COUNTING)

    @property
    def p(self) -> int:
        """Prime modulus.

        :raises: UnsupportedModeError for counting-only alphabets
        """
        self.require_arithmetic()
        return self.q

    @property
    def has_arithmetic(self) -> bool:
        """Whether element arithmetic is available."""
        return self.mode is Mode.PRIME

    def require_arithmetic(self) -> None:
        """Raise unless element arithmetic is available."""
        if not self.has_arithmetic:
            raise UnsupportedModeError(
                f"no element arithmetic over a field of order {self.q}"
            )

    def require_evaluable(self) -> None:
        """Raise unless truth tables over this field may be materialised."""
        self.require_arithmetic()
        if self.q > MAX_EVAL_P:
            raise DomainError(
                f"modulus {self.q} exceeds the evaluation cap {MAX_EVAL_P}"
            )

    def check_element(self, x: int) -> int:
        """Return x if it is a field element, else raise DomainError."""
        if not isinstance(x, int) or not 0 <= x < self.q:
            raise DomainError(f"{x!r} is not an element of F_{self.q}")
        return x

    def elements(self) -> range:
        """All field elements in natural order."""
        self.require_arithmetic()
        return range(self.q)

    def nonzero(self) -> range:
        """All nonzero field elements in natural order."""
        self.require_arithmetic()
        return range(1, self.q)


def field_arithmetic(field: FieldSpec, a: int, b: int, kind: str) -> int:
    """Reduce a (+|-|*) b modulo p.

    :param kind: one of "add", "sub", "mul"
    :raises: UnsupportedModeError if the field has no arithmetic
    """
    p = field.p
    field.check_element(a)
    field.check_element(b)
    if kind == "add":
        return (a + b) % p
    if kind == "sub":
        return (a - b) % p
    if kind == "mul":
        return (a * b) % p
    raise DomainError(f"unknown arithmetic kind {kind!r}")


@dataclass(frozen=True, order=True)
class ValueSubset:
    """A nonempty proper subset of {0, ..., p-1}, stored as a bit mask."""

    p: int
    mask: int

    def __post_init__(self) -> None:
        """Enforce 1 <= |S| <= p-1."""
        if not 2 <= self.p <= MAX_ALPHABET:
            raise DomainError(f"alphabet size {self.p} out of range")
        full = (1 << self.p) - 1
        if self.mask <= 0 or self.mask >= full or self.mask & ~full:
            raise DomainError(
                f"mask {self.mask:#x} is not a nonempty proper subset "
                f"of F_{self.p}"
            )

    @classmethod
    def of(cls, p: int, elements: Iterable[int]) -> "ValueSubset":
        """Build a subset from its elements."""
        mask = 0
        for x in elements:
            if not 0 <= x < p:
                raise DomainError(f"{x} is not an element of F_{p}")
            mask |= 1 << x
        return cls(p, mask)

    def __contains__(self, x: int) -> bool:
        """Membership test."""
        return bool(self.mask >> x & 1) if 0 <= x < self.p else False

    def __len__(self) -> int:
        """Number of elements."""
        return bin(self.mask).count("1")

    def __str__(self) -> str:
        """Textual form, e.g. {0,1}."""
        return format_subset(self)

    def elements(self) -> List[int]:
        """Elements in ascending order."""
        return [x for x in range(self.p) if self.mask >> x & 1]

    def complement(self) -> "ValueSubset":
        """The complement S^c within {0, ..., p-1}."""
        return ValueSubset(self.p, ((1 << self.p) - 1) ^ self.mask)

    def is_interval(self) -> bool:
        """Whether S or S^c is a prefix {0, ..., j}."""
        return is_interval(self)


def indicator(s: ValueSubset, x: int) -> int:
    """Q_S(x): 0 if x is in S, 1 if x is in the complement."""
    if not isinstance(x, int) or not 0 <= x < s.p:
        raise DomainError(f"{x!r} is not an element of F_{s.p}")
    return 0 if x in s else 1


def _is_prefix(mask: int) -> bool:
    return mask & (mask + 1) == 0


def is_interval(s: ValueSubset) -> bool:
    """Whether S = {0..j} or S^c = {0..j} for some 0 <= j < p-1."""
    return _is_prefix(s.mask) or _is_prefix(s.complement().mask)


def enumerate_subsets(p: int, variant: Variant) -> List[ValueSubset]:
    """All admissible canalizing sets over F_p, ascending by mask.

    The interval variant yields 2(p-1) subsets, the general one 2^p - 2.
    """
    if p < 2 or p > MAX_ALPHABET:
        raise DomainError(f"alphabet size {p} out of range")
    variant = Variant(variant)
    if variant is Variant.GENERAL:
        return [ValueSubset(p, m) for m in range(1, (1 << p) - 1)]
    full = (1 << p) - 1
    masks = set()
    for j in range(p - 1):
        prefix = (1 << (j + 1)) - 1
        masks.add(prefix)
        masks.add(full ^ prefix)
    return [ValueSubset(p, m) for m in sorted(masks)]


def subset_count(q: int, variant: Variant) -> int:
    """Number of admissible canalizing sets over an alphabet of size q."""
    if Variant(variant) is Variant.GENERAL:
        return 2**q - 2
    return 2 * (q - 1)


def format_subset(s: ValueSubset) -> str:
    """Emit the textual form "{a,b,...}"."""
    return "{" + ",".join(str(x) for x in s.elements()) + "}"


def parse_subset(text: str, p: int) -> ValueSubset:
    """Parse the textual form "{a,b,...}" over F_p.

    :raises: ParseError on malformed text or an improper subset
    """
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ParseError(f"subset {text!r} must be enclosed in braces")
    inner = body[1:-1].strip()
    if not inner:
        raise ParseError("empty subset")
    elements = []
    for token in inner.split(","):
        token = token.strip()
        if not (token.isascii() and token.isdecimal()):
            raise ParseError(f"bad subset element {token!r}")
        elements.append(int(token))
    if len(set(elements)) != len(elements):
        raise ParseError(f"duplicate element in subset {text!r}")
    try:
        return ValueSubset.of(p, elements)
    except DomainError as e:
        raise ParseError(str(e)) from e
