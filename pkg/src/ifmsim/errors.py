"""Exception hierarchy shared by every ifmsim module."""


class IFMError(Exception):
    """Base class for all errors raised by ifmsim."""


class DuplicateChannel(IFMError):
    pass


class InvalidChannelKind(IFMError):
    pass


class InvalidParameter(IFMError, ValueError):
    pass


class ChannelNotInRegistry(IFMError, KeyError):
    def __str__(self):
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class NotUnitary(IFMError):
    pass


class InvalidObjectPlacement(IFMError):
    pass


class InvalidCircuit(IFMError):
    pass


class NotAState(IFMError):
    pass


class CannotCalibrate(IFMError):
    pass


class ImplausibleInput(IFMError, ValueError):
    pass


class PhaseUndefined(IFMError):
    """Raised when W = 1: a perfect absorber transmits nothing, so no phase exists."""


class CircuitFileError(IFMError):
    """Parse failure; carries every diagnostic collected from the file."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class CircuitSyntaxError(CircuitFileError):
    pass


class CircuitSemanticError(CircuitFileError):
    pass
