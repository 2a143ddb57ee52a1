"""Exception hierarchy shared by the solvers and the CLI."""


class BiorthoError(Exception):
    """Base class for every failure raised by this package."""


class DimensionError(BiorthoError, ValueError):
    pass


class NonFiniteError(BiorthoError, ValueError):
    pass


class ZeroVectorError(BiorthoError, ValueError):
    pass


class DegeneratePairingError(BiorthoError):
    """|<x_psi, x_phi>| fell below the pairing floor (biorthogonality lost)."""

    def __init__(self, pairing, floor):
        self.pairing = pairing
        self.floor = floor
        super().__init__(f"degenerate pairing |<psi, phi>| = {abs(pairing):.3e} < floor {floor:.1e}")


class SingularMatrixError(BiorthoError):
    """LU factorization hit a pivot below the configured floor."""

    def __init__(self, pivot_index, pivot, floor, hint=""):
        self.pivot_index = pivot_index
        self.pivot = pivot
        self.floor = floor
        msg = f"matrix is singular to tolerance: |pivot[{pivot_index}]| = {abs(pivot):.3e} <= {floor:.3e}"
        super().__init__(f"{msg}; {hint}" if hint else msg)


class NotHermitianError(BiorthoError, ValueError):
    pass


class DeflationError(BiorthoError):
    """The trial vector lies (numerically) inside the span of the deflated pairs."""


class IntegrationError(BiorthoError):
    pass


class ValidationError(BiorthoError, ValueError):
    pass


class FormatError(BiorthoError, ValueError):
    """A matrix, vector or result file does not follow the JSON schema."""
