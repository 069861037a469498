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

"""A mini library for tracking the status of verification checks.

We want this because a verification run executes many independent checks
and a single pass/fail flag hides which one went wrong.

The user still sees a single overall verdict (the most severe status in
the pool), but every check keeps its own status and message, and the
summary lists all of them ordered by severity.
"""
import json
import logging
from typing import (
    Callable,
    Dict,
    List,
    Optional,
    Tuple,
)

logger = logging.getLogger(__name__)

STATUS_PRIORITIES = {
    "fail": 1,
    "unknown": 2,
    "skip": 3,
    "info": 4,
    "pass": 5,
}


class Check:
    """An atomic check status.

    A label, a priority, and the latest status name and message, with
    methods for use with a pool of checks.
    """

    def __init__(self, label: str, priority: int = 0) -> None:
        """Create a new Check object.

        label: string label
        priority: integer, higher number is higher priority, default is 0
        """
        self.label: str = label
        self._priority: int = priority
        self.never_set = True
        self.status: str = "unknown"
        self._message: str = ""

        # if on_update is set,
        # it will be called as a function with no arguments
        # whenever the status is set.
        self.on_update: Optional[Callable[[], None]] = None

    def set(self, status: str, message: str = "") -> None:
        """Set the status.

        Will also run the on_update hook if available
        (should be set by the pool so the pool knows when it should update).
        """
        if status not in STATUS_PRIORITIES:
            raise ValueError(f"unknown check status {status!r}")
        self.status = status
        self._message = message
        self.never_set = False
        if self.on_update is not None:
            self.on_update()

    def passed(self, message: str = "") -> None:
        """Mark the check as passed."""
        self.set("pass", message)

    def failed(self, message: str = "") -> None:
        """Mark the check as failed."""
        self.set("fail", message)

    def info(self, message: str = "") -> None:
        """Record an informational result that never fails a run."""
        self.set("info", message)

    def skipped(self, message: str = "") -> None:
        """Mark the check as not run."""
        self.set("skip", message)

    def expect(self, ok: bool, message: str = "") -> bool:
        """Pass or fail depending on ``ok``; returns ``ok``."""
        self.set("pass" if ok else "fail", message)
        return ok

    def message(self) -> str:
        """Get the status message."""
        return self._message

    def priority(self) -> Tuple[int, int]:
        """Return a value to use for sorting checks by severity.

        Used by the pool to retrieve the most severe check
        to display to the user.
        """
        return STATUS_PRIORITIES[self.status], -self._priority

    def _serialize(self) -> dict:
        """Serialize Check for reports."""
        return {
            "status": self.status,
            "message": self.message(),
        }


class CheckPool:
    """A pool of Check objects."""

    def __init__(self) -> None:
        """Init the check pool."""
        self._pool: Dict[str, Check] = {}
        self.overall: str = "unknown"

    def add(self, check: Check) -> Check:
        """Idempotently add a check object to the pool."""
        self._pool[check.label] = check
        check.on_update = self.on_update
        self.on_update()
        return check

    def new(self, label: str, priority: int = 0) -> Check:
        """Create, add and return a check."""
        return self.add(Check(label, priority))

    def checks(self) -> List[Check]:
        """Checks ordered by severity, most severe first."""
        return sorted(self._pool.values(), key=lambda x: x.priority())

    @property
    def failed(self) -> List[Check]:
        """Checks whose status is fail."""
        return [c for c in self.checks() if c.status == "fail"]

    def summarise(self) -> str:
        """Return a human readable summary of all the checks in the pool.

        Will be a multi-line string.
        """
        lines = []
        for check in self.checks():
            lines.append(
                "{label:>30}: {status:>10} | {message}".format(
                    label=check.label,
                    message=check.message(),
                    status=check.status,
                )
            )

        return "\n".join(lines)

    def to_json(self) -> str:
        """Serialise the pool keyed by label."""
        return json.dumps(
            {check.label: check._serialize() for check in self.checks()}
        )

    def on_update(self) -> None:
        """Update the overall verdict with the most severe check status.

        Use as a hook to run whenever a check is updated in the pool.
        """
        check = self.checks()[0] if self._pool else None
        if check is None:
            self.overall = "unknown"
        elif check.status in ("info", "skip", "pass"):
            # informational and skipped checks do not spoil a pass
            self.overall = "pass"
        else:
            self.overall = check.status
        logger.debug("Check pool verdict: %s", self.overall)
