"""Exception types shared across the package.

Everything raised on purpose derives from :class:`RolloutLabError`, so
callers (the CLI in particular) can separate domain failures from plain
bugs with a single except clause.
"""

from __future__ import annotations


class RolloutLabError(Exception):
    """Base class for all errors raised by this package."""


class NetworkFormatError(RolloutLabError):
    """A network, pattern, or spec file could not be parsed.

    Carries a 1-based ``line`` and ``column`` when the offending
    location is known, else both are ``None``.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class InvalidNetworkError(RolloutLabError):
    """A network failed validation; ``report`` holds the violations."""

    def __init__(self, report):
        lines = "; ".join(issue.message for issue in report.issues)
        super().__init__(f"invalid network: {lines}")
        self.report = report


class DomainMismatchError(RolloutLabError):
    """A pattern's edge domain does not match the network's edge set."""


class WindowTooSmallError(RolloutLabError):
    """Rollout windows need at least one frame beyond frame 0."""


class InvalidPatternError(RolloutLabError):
    """The pattern leaves a cycle fully folded, so no valid window exists."""


class NonConvergenceError(InvalidPatternError):
    """Update simulation hit a fixed point short of the full state.

    Only invalid patterns can cause this; ``stuck`` names the window
    nodes that never switched on.
    """

    def __init__(self, stuck):
        self.stuck = frozenset(stuck)
        preview = ", ".join(f"({i},{v})" for i, v in sorted(self.stuck)[:6])
        more = "" if len(self.stuck) <= 6 else f" and {len(self.stuck) - 6} more"
        super().__init__(f"update simulation stalled with {len(self.stuck)} node(s) unset: {preview}{more}")


class EnumerationCapError(RolloutLabError):
    """An enumeration would exceed its configured cap."""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class NoInputOutputPathError(RolloutLabError):
    """No designated output is reachable from any input node."""


class MissingCostError(RolloutLabError):
    """A node scheduled for execution has no cost assigned."""


class ShapeMismatchError(RolloutLabError):
    """Numeric parameters disagree with the declared node dimensions."""


class MissingInputError(RolloutLabError):
    """An input node has no value for a frame that needs one."""
