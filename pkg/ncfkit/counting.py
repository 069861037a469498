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

"""Exact counting of nested canalizing functions and its oracles.

The closed formulas, the recursion and the class-count formula are
evaluated with Python integers end to end. Exhaustive structure
enumeration, brute force over every truth table and orbit construction
provide independent numbers to check them against.
"""

import collections
import enum
import itertools
import logging
import math
import os
import time
from concurrent.futures import (
    ProcessPoolExecutor,
)
from dataclasses import (
    dataclass,
)
from typing import (
    Counter,
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

import ncfkit.function_table as ft
import ncfkit.ncf as ncf
from ncfkit.field_core import (
    FieldSpec,
    ValueSubset,
    Variant,
    enumerate_subsets,
    indicator,
    is_prime,
    prime_power_base,
    subset_count,
)
from ncfkit.guard import (
    CapacityError,
    DomainError,
)

logger = logging.getLogger(__name__)

MAX_TABLES = 2**26
MAX_STRUCTURES = 10**7
MAX_TABLES_ENV = "NCFKIT_MAX_TABLES"
MAX_STRUCTURES_ENV = "NCFKIT_MAX_STRUCTURES"

TSV_FIELDS = ["p_or_q", "n", "variant", "method", "count", "seconds"]


class Method(str, enum.Enum):
    """How a count was obtained."""

    CLOSED = "closed"
    RECURSIVE = "recursive"
    STRUCTURE_ENUM = "structure-enum"
    BRUTE_FORCE = "brute-force"
    CLASS_FORMULA = "class-formula"
    ORBIT_ENUM = "orbit-enum"
    ORBIT_PERMUTATION = "orbit-permutation"


@dataclass(frozen=True)
class CountReport:
    """Exact result of one counting method."""

    q: int
    n: int
    variant: Variant
    method: Method
    count: int
    breakdown: Optional[Mapping[int, int]] = None
    seconds: float = 0.0

    def __post_init__(self) -> None:
        """Check the result against its breakdown."""
        if self.count < 0:
            raise DomainError(f"negative count {self.count}")
        if self.breakdown is not None and sum(
            self.breakdown.values()
        ) != self.count:
            raise DomainError("per-layer breakdown does not sum to count")

    def row(self) -> Dict[str, str]:
        """TSV row keyed by TSV_FIELDS."""
        return {
            "p_or_q": str(self.q),
            "n": str(self.n),
            "variant": Variant(self.variant).value,
            "method": Method(self.method).value,
            "count": str(self.count),
            "seconds": f"{self.seconds:.6f}",
        }


class Composition(tuple):
    """Layer sizes k_1..k_r, each >= 1, the last one >= last_minimum.

    A tuple subclass, so it compares and hashes like the plain parts.
    """

    def __new__(
        cls, parts: Iterable[int], last_minimum: int = 1
    ) -> "Composition":
        """Validate the parts."""
        self = super().__new__(cls, parts)
        if not self or any(k < 1 for k in self):
            raise DomainError(f"parts {tuple(self)} must be positive")
        if self[-1] < last_minimum:
            raise DomainError(f"last part {self[-1]} below {last_minimum}")
        return self

    @property
    def r(self) -> int:
        """Number of parts."""
        return len(self)

    @property
    def total(self) -> int:
        """Sum of the parts."""
        return sum(self)


def _limit(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{name}={raw!r} is not an integer")
    logger.warning(
        "Guard %s overridden: %d (default %d)", name, value, default
    )
    return value


def max_tables() -> int:
    """Brute-force table-space guard, honouring NCFKIT_MAX_TABLES."""
    return _limit(MAX_TABLES_ENV, MAX_TABLES)


def max_structures() -> int:
    """Structure-stream guard, honouring NCFKIT_MAX_STRUCTURES."""
    return _limit(MAX_STRUCTURES_ENV, MAX_STRUCTURES)


def _minimums(r: int, minimums: Optional[Sequence[int]]) -> Tuple[int, ...]:
    if r < 1:
        raise DomainError(f"need at least one part, got r={r}")
    if minimums is None:
        return (1,) * r
    if len(minimums) != r:
        raise DomainError(f"expected {r} minimums, got {len(minimums)}")
    return tuple(minimums)


def _parts(n: int, mins: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
    if len(mins) == 1:
        if n >= mins[0]:
            yield (n,)
        return
    for k in range(mins[0], n - sum(mins[1:]) + 1):
        for rest in _parts(n - k, mins[1:]):
            yield (k,) + rest


def compositions(
    n: int, r: int, minimums: Optional[Sequence[int]] = None
) -> Iterator[Composition]:
    """Compositions k_1..k_r of n with k_i >= s_i, lexicographically."""
    mins = _minimums(r, minimums)
    for parts in _parts(n, mins):
        yield Composition(parts, mins[-1])


def composition_count(
    n: int, r: int, minimums: Optional[Sequence[int]] = None
) -> int:
    """Number of compositions of n into r parts k_i >= s_i.

    Equals C(r + n - s - 1, r - 1) with s the sum of the minimums, and 0
    when s > n.
    """
    s = sum(_minimums(r, minimums))
    if s > n:
        return 0
    return math.comb(r + n - s - 1, r - 1)


def multinomial(n: int, parts: Sequence[int]) -> int:
    """n! / (k_1! ... k_r!) where the parts may sum to less than n."""
    result = math.factorial(n)
    for k in parts:
        result //= math.factorial(k)
    return result // math.factorial(n - sum(parts))


def count_last_layer_single(p: int) -> int:
    """Unary functions bQ_S(x) + a that are not of the form cQ_S'(x)."""
    _require_prime(p)
    return (p - 1) ** 2 * (p - 2)


def _unary_table(field: FieldSpec, b: int, s: ValueSubset, a: int) -> bytes:
    return ft.TruthTable(
        field, 1, [(b * indicator(s, x) + a) % field.p for x in range(field.p)]
    ).key()


def count_last_layer_single_brute(p: int) -> int:
    """Table-level oracle for count_last_layer_single."""
    field = FieldSpec.prime(p)
    intervals = enumerate_subsets(p, Variant.INTERVAL)
    candidates = {
        _unary_table(field, b, s, a)
        for b in field.nonzero()
        for s in intervals
        for a in field.nonzero()
    }
    pure = {
        _unary_table(field, c, s, 0)
        for c in field.nonzero()
        for s in intervals
    }
    return len(candidates - pure)


def count_offset_products(p: int, k: int) -> int:
    """Distinct functions b * prod_j Q_{S_j}(x_j) + a with a, b nonzero."""
    if k < 2:
        raise DomainError(f"need at least two factors, got k={k}")
    return 2**k * (p - 1) ** (k + 2)


def count_offset_products_brute(p: int, k: int) -> int:
    """Table-level oracle for count_offset_products."""
    if k < 2:
        raise DomainError(f"need at least two factors, got k={k}")
    field = FieldSpec.prime(p)
    intervals = enumerate_subsets(p, Variant.INTERVAL)
    seen = set()
    for sets in itertools.product(intervals, repeat=k):
        product = ncf.build_layered(
            ncf.LayerStructure(
                field,
                k,
                (tuple(zip(range(1, k + 1), sets)),),
                (0, 1),
                Variant.INTERVAL,
            )
        ).values.astype(np.int64)
        for b in field.nonzero():
            for a in field.nonzero():
                seen.add(((b * product + a) % p).astype(np.uint8).tobytes())
    return len(seen)


def _require_prime(p: int) -> None:
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")


def _require_arity(n: int) -> None:
    if n < 2:
        raise DomainError(f"counting formulas need n >= 2, got {n}")


def _layered_sums(
    q: int, n: int, per_set: int
) -> Dict[int, int]:
    """Both double sums of the closed formula, keyed by layer number.

    ``per_set`` is the number of admissible canalizing sets divided by 2
    (p - 1 for intervals, 2^(q-1) - 1 for proper subsets).
    """
    breakdown: Dict[int, int] = collections.defaultdict(int)
    # last layer holds a single variable
    head = 2 ** (n - 1) * q * (q - 2) * per_set**n
    for r in range(2, n + 1):
        inner = sum(
            multinomial(n, ks) for ks in compositions(n - 1, r - 1)
        )
        breakdown[r] += head * (q - 1) ** (r - 1) * inner
    # last layer holds at least two variables
    head = 2**n * q * per_set**n
    for r in range(1, n):
        inner = sum(
            multinomial(n, ks)
            for ks in compositions(n, r, (1,) * (r - 1) + (2,))
        )
        breakdown[r] += head * (q - 1) ** r * inner
    return {r: c for r, c in sorted(breakdown.items()) if c}


def count_ncf_closed(p: int, n: int) -> CountReport:
    """Closed formula for the number of interval NCFs over F_p."""
    _require_prime(p)
    _require_arity(n)
    start = time.perf_counter()
    # (p-1)^(n+r-1) = (p-1)^n (p-1)^(r-1), so per_set = p - 1
    breakdown = _layered_sums(p, n, p - 1)
    return CountReport(
        p,
        n,
        Variant.INTERVAL,
        Method.CLOSED,
        sum(breakdown.values()),
        breakdown,
        time.perf_counter() - start,
    )


def a_sequence(p: int, n: int) -> List[int]:
    """Values a_2, ..., a_n of the nonlinear recursion."""
    _require_arity(n)
    a = {2: 4 * (p - 1) ** 4}
    for m in range(3, n + 1):
        a[m] = sum(
            math.comb(m, r - 1) * 2 ** (r - 1) * (p - 1) ** r * a[m - r + 1]
            for r in range(2, m)
        ) + 2 ** (m - 1) * (p - 1) ** (m + 1) * (2 + m * (p - 2))
    return [a[m] for m in range(2, n + 1)]


def a_closed(p: int, n: int) -> int:
    """Explicit solution of the recursion, i.e. |NCF(n)| / p."""
    return sum(_layered_sums(p, n, p - 1).values()) // p


def count_ncf_recursive(p: int, n: int) -> CountReport:
    """Number of interval NCFs as p * a_n from the recursion."""
    _require_prime(p)
    start = time.perf_counter()
    a_n = a_sequence(p, n)[-1]
    return CountReport(
        p,
        n,
        Variant.INTERVAL,
        Method.RECURSIVE,
        p * a_n,
        None,
        time.perf_counter() - start,
    )


def count_ncf_general(q: int, n: int) -> CountReport:
    """Closed formula for NCFs over F_q with arbitrary proper subsets."""
    prime_power_base(q)
    _require_arity(n)
    start = time.perf_counter()
    breakdown = _layered_sums(q, n, 2 ** (q - 1) - 1)
    return CountReport(
        q,
        n,
        Variant.GENERAL,
        Method.CLOSED,
        sum(breakdown.values()),
        breakdown,
        time.perf_counter() - start,
    )


def count_classes_formula(q: int, n: int) -> CountReport:
    """The printed class-count closed form 2^(n-1) (q-1) q^n (2^(q-1)-1)^n."""
    prime_power_base(q)
    _require_arity(n)
    start = time.perf_counter()
    count = 2 ** (n - 1) * (q - 1) * q**n * (2 ** (q - 1) - 1) ** n
    return CountReport(
        q,
        n,
        Variant.GENERAL,
        Method.CLASS_FORMULA,
        count,
        None,
        time.perf_counter() - start,
    )


def stratum_size(
    q: int, n: int, parts: Sequence[int], variant: Variant
) -> int:
    """Exact number of canonical structures with layer sizes ``parts``."""
    m = subset_count(q, variant)
    r = len(parts)
    ways = multinomial(n, parts)
    if parts[-1] >= 2:
        return ways * m**n * q * (q - 1) ** r
    if r == 1:
        return ways * (m // 2) * q * (q - 1)
    return ways * m ** (n - 1) * (m // 2) * q * (q - 1) ** (r - 1) * (q - 2)


def stratum_sizes(
    q: int, n: int, variant: Variant
) -> Dict[Tuple[int, ...], int]:
    """Structure count per composition, r ascending then lexicographic."""
    if n < 1:
        raise DomainError(f"arity must be positive, got {n}")
    variant = Variant(variant)
    return {
        parts: stratum_size(q, n, parts, variant)
        for r in range(1, n + 1)
        for parts in compositions(n, r)
        if stratum_size(q, n, parts, variant)
    }


def _check_structure_guard(p: int, n: int, variant: Variant) -> None:
    total = sum(stratum_sizes(p, n, variant).values())
    limit = max_structures()
    if total > limit:
        raise CapacityError(
            f"{total} structures at p={p}, n={n} exceed the guard {limit}"
        )


def _layer_partitions(
    variables: Tuple[int, ...], parts: Sequence[int]
) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    if not parts:
        yield ()
        return
    for head in itertools.combinations(variables, parts[0]):
        rest = tuple(v for v in variables if v not in head)
        for tail in _layer_partitions(rest, parts[1:]):
            yield (head,) + tail


def _constant_choices(
    p: int, parts: Sequence[int]
) -> Iterator[Tuple[int, ...]]:
    r = len(parts)
    for constants in itertools.product(
        range(p), *([range(1, p)] * r)
    ):
        if (
            r >= 2
            and parts[-1] == 1
            and (constants[-1] + constants[-2]) % p == 0
        ):
            continue
        yield constants


def enumerate_structures(
    p: int, n: int, variant: Variant
) -> Iterator[ncf.LayerStructure]:
    """Every canonical layer structure over F_p in n variables, once each."""
    variant = Variant(variant)
    field = FieldSpec.prime(p)
    _check_structure_guard(p, n, variant)
    subsets = enumerate_subsets(p, variant)
    holding_zero = [s for s in subsets if 0 in s]
    for parts in stratum_sizes(p, n, variant):
        logger.debug("Enumerating stratum %s", parts)
        choices = [subsets] * (n - 1) + [
            holding_zero if parts[-1] == 1 else subsets
        ]
        constants = list(_constant_choices(p, parts))
        for partition in _layer_partitions(tuple(range(1, n + 1)), parts):
            flat = [v for layer in partition for v in layer]
            for sets in itertools.product(*choices):
                assigned = dict(zip(flat, sets))
                layers = tuple(
                    tuple((v, assigned[v]) for v in layer)
                    for layer in partition
                )
                for b in constants:
                    yield ncf.LayerStructure(field, n, layers, b, variant)


def count_structures(p: int, n: int, variant: Variant) -> CountReport:
    """Length of the structure stream, with per-layer breakdown."""
    variant = Variant(variant)
    start = time.perf_counter()
    breakdown: Counter[int] = collections.Counter()
    for structure in enumerate_structures(p, n, variant):
        breakdown[structure.r] += 1
    return CountReport(
        p,
        n,
        variant,
        Method.STRUCTURE_ENUM,
        sum(breakdown.values()),
        dict(sorted(breakdown.items())),
        time.perf_counter() - start,
    )


def _count_chunk(
    p: int, n: int, variant: str, start: int, stop: int
) -> Dict[int, int]:
    """Recognize the tables with indices in [start, stop)."""
    field = FieldSpec.prime(p)
    size = p**n
    powers = p ** np.arange(size - 1, -1, -1, dtype=np.int64)
    index = np.arange(start, stop, dtype=np.int64)
    digits = (index[:, None] // powers) % p
    found: Counter[int] = collections.Counter()
    for row in digits:
        result = ncf.recognize(ft.TruthTable(field, n, row), variant)
        if result:
            found[result.r] += 1
    return dict(found)


def brute_force_count(
    p: int, n: int, variant: Variant, workers: int = 1
) -> CountReport:
    """Count NCFs by recognizing every table F_p^n -> F_p.

    With workers > 1 the table index space is split into equal chunks
    counted in separate processes; the aggregate does not depend on the
    split.
    """
    variant = Variant(variant)
    FieldSpec.prime(p).require_evaluable()
    total = p ** (p**n)
    limit = max_tables()
    if total > limit:
        raise CapacityError(
            f"{total} tables at p={p}, n={n} exceed the guard {limit}"
        )
    start = time.perf_counter()
    chunk = 4096
    bounds = [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
    found: Counter[int] = collections.Counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_count_chunk, p, n, variant.value, lo, hi)
                for lo, hi in bounds
            ]
            for future in futures:
                found.update(future.result())
    else:
        for lo, hi in bounds:
            found.update(_count_chunk(p, n, variant.value, lo, hi))
    logger.info("Brute force p=%d n=%d %s: %s", p, n, variant.value, found)
    return CountReport(
        p,
        n,
        variant,
        Method.BRUTE_FORCE,
        sum(found.values()),
        dict(sorted(found.items())),
        time.perf_counter() - start,
    )


def orbit_count(p: int, n: int, variant: Variant) -> CountReport:
    """Number of permutation-equivalence classes, by distinct class keys."""
    variant = Variant(variant)
    start = time.perf_counter()
    keys = {
        ncf.class_key(structure)
        for structure in enumerate_structures(p, n, variant)
    }
    breakdown = collections.Counter(key.r for key in keys)
    return CountReport(
        p,
        n,
        variant,
        Method.ORBIT_ENUM,
        len(keys),
        dict(sorted(breakdown.items())),
        time.perf_counter() - start,
    )


def orbit_count_by_permutation(
    p: int, n: int, variant: Variant
) -> CountReport:
    """Number of classes by grouping tables under every variable permutation.

    Independent of class keys: each table is mapped to the smallest of its
    permuted tables, and representatives are counted.
    """
    variant = Variant(variant)
    if n > ncf.MAX_PERMUTATION_ARITY:
        raise CapacityError(
            f"permutation grouping beyond {ncf.MAX_PERMUTATION_ARITY} "
            "variables"
        )
    start = time.perf_counter()
    sigmas = list(itertools.permutations(range(1, n + 1)))
    representatives = {}
    for structure in enumerate_structures(p, n, variant):
        table = ncf.build_layered(structure)
        rep = min(ft.permute(table, sigma).key() for sigma in sigmas)
        representatives.setdefault(rep, structure.r)
    breakdown = collections.Counter(representatives.values())
    return CountReport(
        p,
        n,
        variant,
        Method.ORBIT_PERMUTATION,
        len(representatives),
        dict(sorted(breakdown.items())),
        time.perf_counter() - start,
    )


def _uniform_below(rng: np.random.Generator, total: int) -> int:
    """Exactly uniform integer in [0, total) for arbitrarily large totals."""
    bits = max(total.bit_length(), 1)
    nbytes = (bits + 7) // 8
    while True:
        value = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - bits)
        if value < total:
            return value


def sample_uniform(
    p: int, n: int, variant: Variant, seed: int
) -> ncf.LayerStructure:
    """Draw one NCF structure uniformly at random.

    The stratum (layer sizes) is drawn with probability proportional to its
    exact structure count, then the variable partition, sets and constants
    uniformly within it. numpy's PCG64 generator is seeded with ``seed``.
    """
    variant = Variant(variant)
    field = FieldSpec.prime(p)
    rng = np.random.default_rng(seed)
    sizes = stratum_sizes(p, n, variant)
    pick = _uniform_below(rng, sum(sizes.values()))
    for parts, size in sizes.items():
        if pick < size:
            break
        pick -= size
    r = len(parts)
    order = [int(v) for v in rng.permutation(np.arange(1, n + 1))]
    subsets = enumerate_subsets(p, variant)
    holding_zero = [s for s in subsets if 0 in s]
    layers = []
    for k in parts:
        layer, order = order[:k], order[k:]
        layers.append(
            tuple((v, subsets[int(rng.integers(len(subsets)))]) for v in layer)
        )
    if parts[-1] == 1:
        (v, _), = layers[-1]
        layers[-1] = ((v, holding_zero[int(rng.integers(len(holding_zero)))]),)
    constants = [int(rng.integers(p))]
    constants += [int(rng.integers(1, p)) for _ in range(r)]
    if r >= 2 and parts[-1] == 1:
        last = constants[-1]
        allowed = [b for b in range(1, p) if (b + last) % p != 0]
        constants[-2] = allowed[int(rng.integers(len(allowed)))]
    return ncf.LayerStructure(
        field, n, tuple(layers), tuple(constants), variant
    )
