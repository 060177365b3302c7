"""Exception hierarchy shared by every esc_lab module."""


class EscLabError(Exception):
    """Base class for all esc_lab errors."""


class ValidationFailure(EscLabError):
    """A structural assumption on dithers or plants is violated.

    ``assumption`` is a short machine-readable name such as
    ``"distinct-frequencies"`` or ``"commutator"``.
    """

    def __init__(self, assumption, detail="", **context):
        self.assumption = assumption
        self.detail = detail
        self.context = context
        msg = assumption if not detail else f"{assumption}: {detail}"
        super().__init__(msg)


class DimensionMismatch(EscLabError, ValueError):
    pass


class NonFiniteValue(EscLabError, ArithmeticError):
    pass


class QuadratureNotConverged(EscLabError):
    def __init__(self, value, refined, rel_change):
        self.value = value
        self.refined = refined
        self.rel_change = rel_change
        super().__init__(
            f"quadrature changed by {rel_change:.3e} (relative) under n_tau doubling"
        )


class BlowUp(EscLabError):
    """Integration left the admissible region (finite escape or overflow)."""

    def __init__(self, t, state=None):
        self.t = t
        self.state = state
        super().__init__(f"state blew up at t={t:.6g}")


class GridMismatch(EscLabError, ValueError):
    pass


class UnknownOptimum(EscLabError):
    pass


class UnsupportedPlant(EscLabError):
    pass


class ReportFailure(EscLabError):
    """A sampled inequality of a verification report does not hold."""

    def __init__(self, inequality, witness, detail=""):
        self.inequality = inequality
        self.witness = witness
        super().__init__(f"{inequality} violated at {witness}" + (f" ({detail})" if detail else ""))


class ConfigError(EscLabError, ValueError):
    """Malformed scenario configuration; ``key`` is the dotted key path."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(message if key is None else f"{key}: {message}")
