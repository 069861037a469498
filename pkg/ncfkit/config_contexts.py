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

"""Contexts used when rendering analysis reports.

ReportContext objects translate a truth table and what ncfkit derives from
it into plain dictionaries for the report templates. Each context owns one
namespace of the template; they are not specific to a subcommand.
"""

from __future__ import (
    annotations,
)

import logging
from typing import (
    Dict,
    List,
    Union,
)

import ncfkit.function_table as ft
import ncfkit.ncf as ncf
from ncfkit.field_core import (
    Variant,
    format_subset,
)

logger = logging.getLogger(__name__)


class ReportContext:
    """Base class used for creating a report context."""

    def __init__(self, table: ft.TruthTable, namespace: str) -> None:
        """Run constructor."""
        self.table = table
        self.namespace = namespace
        for k, v in self.context().items():
            k = k.replace("-", "_")
            setattr(self, k, v)

    def context(self) -> dict:
        """Context used when rendering templates."""
        raise NotImplementedError


class TableContext(ReportContext):
    """Arity, essential variables and algebraic normal form."""

    def context(self) -> dict:
        """Basic table facts."""
        anf = ft.to_anf(self.table)
        return {
            "p": self.table.p,
            "n": self.table.n,
            "constant": self.table.is_constant(),
            "essential": [
                f"x{i}" for i in sorted(ft.essential_variables(self.table))
            ],
            "anf": str(anf),
            "degree": anf.degree(),
        }


class ProfileContext(ReportContext):
    """Canalizing variables with their maximal sets."""

    def context(self) -> dict:
        """Canalizing profile, empty for constants."""
        profile = ft.canalizing_profile(self.table)
        if profile is ft.CONSTANT_FUNCTION:
            return {"canalizing": [], "output": None, "conflicts": []}
        return {
            "canalizing": [
                {"var": f"x{i}", "set": format_subset(s), "output": b}
                for i, (s, b) in sorted(profile.entries.items())
            ],
            "output": profile.output,
            "conflicts": [f"x{i}" for i in profile.conflicts],
        }


def _verdict(
    structure: Union[ncf.LayerStructure, object], variant: Variant
) -> Dict:
    if not isinstance(structure, ncf.LayerStructure):
        return {"variant": variant.value, "ncf": False}
    layers: List[str] = [
        ",".join(f"(x{v},{format_subset(s)})" for v, s in layer)
        for layer in structure.layers
    ]
    return {
        "variant": variant.value,
        "ncf": True,
        "r": structure.r,
        "composition": ",".join(str(k) for k in structure.composition),
        "layers": " | ".join(layers),
        "constants": ",".join(str(b) for b in structure.constants),
        "class_key": str(tuple(ncf.class_key(structure))),
        "text": ncf.format_structure(structure),
    }


class VerdictContext(ReportContext):
    """NCF verdict and layer structure for each variant."""

    def context(self) -> dict:
        """One verdict per variant, interval first."""
        return {
            "verdicts": [
                _verdict(ncf.recognize(self.table, variant), variant)
                for variant in (Variant.INTERVAL, Variant.GENERAL)
            ]
        }


def analysis_contexts(table: ft.TruthTable) -> Dict[str, ReportContext]:
    """All contexts of an analysis report keyed by namespace."""
    contexts = [
        TableContext(table, "table"),
        ProfileContext(table, "profile"),
        VerdictContext(table, "verdict"),
    ]
    return {ctxt.namespace: ctxt for ctxt in contexts}
