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

"""Command configuration and verification levels.

CommandConfig collects the parsed command line and validates it before any
computation starts. Verification levels are read from verify-levels.yaml
and checked against LEVELS_SCHEMA.
"""

import logging
import os
from dataclasses import (
    dataclass,
    field,
)
from typing import (
    Dict,
    List,
    Optional,
    Tuple,
)

import jsonschema
import yaml

from ncfkit.field_core import (
    Variant,
    is_prime,
    prime_power_base,
)
from ncfkit.guard import (
    DomainError,
    ParseError,
)

logger = logging.getLogger(__name__)

LEVELS_FILE = os.path.join(os.path.dirname(__file__), "verify-levels.yaml")

# CLI method name -> counting method it selects.
METHODS = ("closed", "recursive", "brute", "enum", "class-formula", "orbit")
# Methods that materialise tables or structures and so need a prime field.
EVALUATING_METHODS = ("brute", "enum", "orbit")

_INSTANCE = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1},
    "minItems": 2,
    "maxItems": 2,
}
_INSTANCES = {"type": "array", "items": _INSTANCE}

LEVELS_SCHEMA = {
    "type": "object",
    "required": ["levels"],
    "properties": {
        "levels": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "object",
                "required": [
                    "formula_primes",
                    "formula_n_max",
                    "brute_force",
                    "structures",
                    "orbits",
                    "samples",
                    "random_cases",
                ],
                "properties": {
                    "description": {"type": "string"},
                    "formula_primes": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 2},
                    },
                    "formula_n_max": {"type": "integer", "minimum": 2},
                    "published_values": {"type": "boolean"},
                    "brute_force": _INSTANCES,
                    "structures": {
                        "type": "object",
                        "properties": {
                            "interval": _INSTANCES,
                            "general": _INSTANCES,
                        },
                        "additionalProperties": False,
                    },
                    "orbits": _INSTANCES,
                    "samples": {"type": "integer", "minimum": 0},
                    "random_cases": {"type": "integer", "minimum": 0},
                },
                "additionalProperties": False,
            },
        }
    },
}


@dataclass(frozen=True)
class VerifyLevel:
    """Instances exercised by one verification level."""

    name: str
    description: str
    formula_primes: Tuple[int, ...]
    formula_n_max: int
    published_values: bool
    brute_force: Tuple[Tuple[int, int], ...]
    structures: Dict[str, Tuple[Tuple[int, int], ...]]
    orbits: Tuple[Tuple[int, int], ...]
    samples: int
    random_cases: int


def _pairs(items: List[List[int]]) -> Tuple[Tuple[int, int], ...]:
    return tuple((int(p), int(n)) for p, n in items)


def load_levels(path: Optional[str] = None) -> Dict[str, VerifyLevel]:
    """Load and validate the verification levels file.

    :raises: ParseError if the file is not valid YAML or fails the schema
    """
    path = path or LEVELS_FILE
    with open(path, "r") as f:
        try:
            raw = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ParseError(f"{path}: {e}") from e
    try:
        jsonschema.validate(raw, LEVELS_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ParseError(f"{path}: {e.message}") from e
    levels = {}
    for name, spec in raw["levels"].items():
        levels[name] = VerifyLevel(
            name=name,
            description=spec.get("description", ""),
            formula_primes=tuple(spec["formula_primes"]),
            formula_n_max=spec["formula_n_max"],
            published_values=spec.get("published_values", True),
            brute_force=_pairs(spec["brute_force"]),
            structures={
                Variant(k).value: _pairs(v)
                for k, v in spec["structures"].items()
            },
            orbits=_pairs(spec["orbits"]),
            samples=spec["samples"],
            random_cases=spec["random_cases"],
        )
    logger.debug("Loaded verification levels %s", sorted(levels))
    return levels


@dataclass
class CommandConfig:
    """Validated parameters of one CLI invocation."""

    command: str
    p: Optional[int] = None
    q: Optional[int] = None
    n: Optional[int] = None
    n_max: Optional[int] = None
    variant: Variant = Variant.INTERVAL
    methods: List[str] = field(default_factory=lambda: ["closed"])
    seed: int = 0
    count: int = 1
    inputs: List[str] = field(default_factory=list)
    out: Optional[str] = None
    fmt: str = "tsv"
    level: str = "default"
    tables: bool = False
    workers: int = 1

    @property
    def order(self) -> Optional[int]:
        """Field order from --p or --q."""
        return self.p if self.p is not None else self.q

    @property
    def arities(self) -> List[int]:
        """n, ..., n_max."""
        return list(range(self.n, (self.n_max or self.n) + 1))

    def validate(self) -> None:
        """Reject inconsistent flags before any computation.

        :raises: DomainError with a usage message
        """
        self.variant = Variant(self.variant)
        if self.p is not None and self.q is not None:
            raise DomainError("--p and --q are mutually exclusive")
        if self.command in ("count", "enumerate", "sample"):
            if self.order is None:
                raise DomainError(f"{self.command} needs --p or --q")
            if self.n is None:
                raise DomainError(f"{self.command} needs --n")
            if self.n < 1:
                raise DomainError("--n must be positive")
            prime_power_base(self.order)
        if self.p is not None and not is_prime(self.p):
            raise DomainError(f"--p {self.p} is not prime; use --q")
        if self.n_max is not None:
            if self.command != "count":
                raise DomainError("--n-max only applies to count")
            if self.n_max < self.n:
                raise DomainError("--n-max must be at least --n")
        for method in self.methods:
            if method not in METHODS:
                raise DomainError(f"unknown method {method!r}")
        if self.command == "count":
            if self.n < 2 and any(
                m not in EVALUATING_METHODS for m in self.methods
            ):
                raise DomainError("counting formulas need --n >= 2")
            if not is_prime(self.order) and any(
                m in EVALUATING_METHODS for m in self.methods
            ):
                raise DomainError(
                    f"methods {', '.join(EVALUATING_METHODS)} need a prime "
                    "field"
                )
            if "recursive" in self.methods and not is_prime(self.order):
                raise DomainError(
                    "the recursion counts interval NCFs over F_p"
                )
        if self.command in ("enumerate", "sample") and not is_prime(
            self.order
        ):
            raise DomainError(f"{self.command} needs a prime field")
        if self.command == "analyze" and len(self.inputs) != 1:
            raise DomainError("analyze takes one input file")
        if self.command == "equiv" and len(self.inputs) != 2:
            raise DomainError("equiv takes two input files")
        if self.fmt != "tsv":
            raise DomainError(f"unsupported format {self.fmt!r}")
        if self.count < 1 or self.workers < 1:
            raise DomainError("--count and --workers must be positive")
