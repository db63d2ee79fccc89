"""Exception hierarchy shared by every layer."""


class PolicyRPCError(Exception):
    pass


# rule model

class UnknownMechanism(PolicyRPCError, LookupError):
    def __init__(self, name):
        super().__init__(f"unknown transmission mechanism: {name!r}")
        self.name = name


class InvalidSelector(PolicyRPCError, ValueError):
    pass


# codec

class EncodingError(PolicyRPCError):
    pass


class ExportError(EncodingError):
    pass


class NotDispatchable(ExportError):
    pass


class MalformedWireTree(PolicyRPCError):
    pass


class UnknownType(MalformedWireTree):
    pass


# transport and calls

class TransportError(PolicyRPCError):
    pass


class Unreachable(TransportError):
    pass


class ProtocolError(TransportError):
    pass


class FrameTooLarge(TransportError):
    pass


class RemoteError(PolicyRPCError):
    """A call failed on the far side.  ``code`` names the failure kind."""

    code = "RemoteError"

    def __init__(self, message: str = "", code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.message = message

    def __str__(self):
        return f"{self.code}: {self.message}"


class StaleReference(RemoteError):
    code = "StaleReference"


class NoSuchMethod(RemoteError):
    code = "NoSuchMethod"


REMOTE_ERRORS = {cls.code: cls for cls in (RemoteError, StaleReference, NoSuchMethod)}


def remote_error(code: str, message: str) -> RemoteError:
    cls = REMOTE_ERRORS.get(code)
    if cls is None:
        return RemoteError(message, code=code)
    return cls(message)
