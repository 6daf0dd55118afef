"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class ActreachError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ActreachError):
    """Malformed or unbalanced smali directives."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DuplicateClass(ActreachError):
    def __init__(self, descriptor: str):
        self.descriptor = descriptor
        super().__init__(f"duplicate class {descriptor}")


class MissingManifest(ActreachError):
    pass


class ManifestParseError(ActreachError):
    pass


class EmptySmaliTree(ActreachError):
    pass


class EmptyInput(ActreachError):
    pass


class EmptyTruth(ActreachError):
    pass


class ClientError(ActreachError):
    """Model-client failure; carries the session transcript when available."""

    def __init__(self, message: str, transcript: list | None = None):
        self.transcript = transcript or []
        super().__init__(message)


class MalformedResponse(ClientError):
    """Model response missing a mandated section after one re-ask."""


class PlanParseError(ActreachError):
    def __init__(self, message: str, line: str | None = None):
        self.line = line
        if line is not None:
            message = f"{message}: {line!r}"
        super().__init__(message)


class NotFound(ActreachError):
    pass


class UnsupportedLiteralType(ActreachError):
    pass


class DeviceUnavailable(ActreachError):
    pass


class EmptyMains(ActreachError):
    pass


class ConfigError(ActreachError):
    pass


class ScenarioParseError(ActreachError):
    pass
