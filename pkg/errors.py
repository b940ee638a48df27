"""
Exception types shared by the trajectory MT harness
"""


class MTError(Exception):
    """Base class for every error raised by the harness"""


class InvalidInputError(MTError, ValueError):
    """An argument violates an operation's precondition"""


class UnknownObjectError(InvalidInputError, KeyError):
    """An object id does not resolve in the scene or execution result"""

    def __str__(self):
        # KeyError quotes its message; keep it readable
        return str(self.args[0]) if self.args else ''


class GenerationError(MTError):
    """A follow-up or source case could not be generated"""


class ExecutionError(MTError):
    """The scripted controller cannot run the given test case"""


class ConfigError(MTError):
    """A configuration, suite or rows file is malformed"""
