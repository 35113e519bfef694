"""Exception types shared across the harness.

File-system failures are reported as the builtin ``OSError`` family and are
not wrapped.
"""


class HarnessError(Exception):
    pass


class MalformedTable(HarnessError, ValueError):
    pass


class SchemaError(HarnessError, ValueError):
    pass


class SampleTooLarge(HarnessError, ValueError):
    pass


class NotEnoughDemos(HarnessError, ValueError):
    pass


class ConfigError(HarnessError):
    pass


class EndpointError(HarnessError):
    pass


class FixtureMiss(HarnessError, KeyError):
    def __str__(self) -> str:
        # KeyError quotes its argument; keep the message readable
        return str(self.args[0]) if self.args else ""


class EmptyAggregate(HarnessError, ValueError):
    pass


class BadBins(HarnessError, ValueError):
    pass
