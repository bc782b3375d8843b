"""Exception hierarchy shared across the package.

Every error that can cross the service/CLI boundary maps to a stable kind:

* ``validation``  -- malformed trees, couplings or requests (exit code 2)
* ``cap``         -- enumeration cap or wall-clock timeout exceeded (exit code 3)
* ``internal``    -- a runtime self-check failed (exit code 4)
"""

from __future__ import annotations


class TreeCouplingError(Exception):
    """Base class for all package errors."""

    kind = "internal"


class ValidationError(TreeCouplingError, ValueError):
    """Input data violates a structural invariant.

    ``details`` holds one human-readable message per violation, each with
    the offending vertex ids.
    """

    kind = "validation"

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = list(details) if details else [message]


class CouplingViolationError(ValidationError):
    """A pair set fails one or more of the coupling conditions.

    ``violations`` is a list of ``(condition, message)`` tuples, with
    ``condition`` in ``{"C1", "C2", "C3", "C4", "ids"}``.  Every violated
    condition is reported, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msgs = ["%s: %s" % (c, m) for c, m in self.violations]
        super().__init__("invalid coupling: " + "; ".join(msgs), details=msgs)


class CapExceededError(TreeCouplingError):
    """An enumeration cap or timeout was hit; use the bounds pipeline instead."""

    kind = "cap"


class InternalCheckError(TreeCouplingError, AssertionError):
    """A runtime assertion about our own output failed."""

    kind = "internal"
