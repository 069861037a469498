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

"""Module to handle errors and bailing out of a command section."""

import logging
import traceback
from contextlib import (
    contextmanager,
)
from typing import (
    Generator,
    Optional,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_CAPACITY = 3
EXIT_VERIFY = 4


class NcfkitError(Exception):
    """Base class for all ncfkit errors."""

    exit_code = EXIT_USAGE


class DomainError(NcfkitError, ValueError):
    """Argument outside the domain of an operation."""

    pass


class UnsupportedModeError(NcfkitError):
    """Element arithmetic requested on a counting-only alphabet."""

    pass


class InvalidSpecError(NcfkitError, ValueError):
    """Piecewise spec or layer structure violates its invariants."""

    pass


class ParseError(NcfkitError):
    """Text input could not be parsed."""

    exit_code = EXIT_PARSE

    def __init__(
        self,
        msg: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ) -> None:
        """Run constructor."""
        self.msg = msg
        self.line = line
        self.column = column
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        """Message prefixed with the line/column position, if known."""
        if self.line is None:
            return self.msg
        if self.column is None:
            return f"line {self.line}: {self.msg}"
        return f"line {self.line}, column {self.column}: {self.msg}"


class CapacityError(NcfkitError):
    """Feasibility guard exceeded."""

    exit_code = EXIT_CAPACITY


class VerificationError(NcfkitError):
    """One or more verification checks failed."""

    exit_code = EXIT_VERIFY


class GuardExit(Exception):
    """Raised by a guarded section to request a process exit code."""

    def __init__(self, exit_code: int, msg: str = "") -> None:
        """Run constructor."""
        self.exit_code = exit_code
        self.msg = msg
        super().__init__(msg)


@contextmanager
def guard(
    section: str,
    handle_exception: bool = True,
    log_traceback: bool = True,
) -> Generator[None, None, None]:
    """Context manager to handle errors and bailing out of a section.

    Any NcfkitError raised inside the section is logged and converted into
    a GuardExit carrying the error's exit code, so the CLI can map it onto
    the stable exit code contract.

    :param section: the name of the section (for debugging/info purposes)
    :param handle_exception: whether to convert ncfkit errors to GuardExit
    :param log_traceback: whether to log the traceback of unexpected errors
    :raises: GuardExit, or the original exception if not handled
    """
    logger.info("Entering guarded section: '%s'", section)
    try:
        yield
        logger.info("Completed guarded section fully: '%s'", section)
    except NcfkitError as e:
        if not handle_exception:
            raise
        logger.error(
            "Section '%s' failed with %s: %s",
            section,
            type(e).__name__,
            str(e),
        )
        raise GuardExit(e.exit_code, str(e)) from e
    except GuardExit:
        raise
    except Exception as e:
        # something else went wrong
        logger.error("Exception raised in section '%s': %s", section, str(e))
        if log_traceback:
            logger.error(traceback.format_exc())
        raise
