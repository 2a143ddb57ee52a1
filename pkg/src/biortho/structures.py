"""Result and configuration records shared by the flow and power solvers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import PAIRING_FLOOR, adjoint, inner, norm2, residual
from .ode import IntegratorConfig


class Mode(str, enum.Enum):
    LARGEST = "largest"
    SMALLEST = "smallest"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_TIME = "max_time"
    MAX_ITER = "max_iter"
    PAIRING_COLLAPSE = "pairing_collapse"
    STEP_UNDERFLOW = "step_underflow"
    DOMINANCE_TIE = "dominance_tie"
    BREAKDOWN = "breakdown"


@dataclass(frozen=True)
class SolverConfig:
    """Knobs common to both solvers.

    ``delta_tol`` bounds both residuals at termination. ``max_iter`` caps power
    iterations; the flow uses ``integrator.max_time`` instead. With
    ``independent_pairs`` the flow draws x_psi(0) separately from x_phi(0).
    With ``check_left`` off the power solvers stop on the right residual
    alone, for matrices whose eigenvalue condition numbers put the scaled left
    residual out of reach.
    """

    delta_tol: float = 1e-8
    max_iter: int = 100_000
    seed: int = 0
    pairing_floor: float = PAIRING_FLOOR
    reorthogonalize_every: int = 1
    mode: Mode = Mode.LARGEST
    independent_pairs: bool = False
    drift_budget: float = 1e-6
    check_left: bool = True
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if not self.delta_tol > 0:
            raise ValidationError("delta_tol must be positive")
        if not self.max_iter > 0:
            raise ValidationError("max_iter must be positive")
        if not self.pairing_floor > 0:
            raise ValidationError("pairing_floor must be positive")
        if not self.reorthogonalize_every >= 1:
            raise ValidationError("reorthogonalize_every must be at least 1")
        if not self.drift_budget > 0:
            raise ValidationError("drift_budget must be positive")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass
class BiorthoPair:
    """Eigenvalue with right vector phi (unit norm) and left vector psi, <psi, phi> = 1."""

    lam: complex
    phi: np.ndarray
    psi: np.ndarray

    def residuals(self, A) -> tuple[float, float]:
        return (
            residual(A, self.lam, self.phi),
            residual(adjoint(A), np.conj(self.lam), self.psi),
        )

    def pairing(self) -> complex:
        return inner(self.psi, self.phi)

    def check(self, A, delta_tol: float) -> bool:
        r_phi, r_psi = self.residuals(A)
        return (
            abs(norm2(self.phi) - 1.0) < 1e-12
            and abs(self.pairing() - 1.0) < 1e-10
            and r_phi < delta_tol
            and r_psi < delta_tol
        )


@dataclass
class ConvergenceTrace:
    """Per-step eigenvalue estimates and residuals; ``x`` is time or iteration index."""

    x: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    residual_phi: list = field(default_factory=list)
    residual_psi: list = field(default_factory=list)
    rayleigh: list = field(default_factory=list)

    def append(self, x, lam, r_phi, r_psi, rayleigh=None):
        self.x.append(float(x))
        self.lam.append(complex(lam))
        self.residual_phi.append(float(r_phi))
        self.residual_psi.append(float(r_psi))
        self.rayleigh.append(None if rayleigh is None else complex(rayleigh))

    def __len__(self):
        return len(self.x)

    def records(self):
        """JSON-lines style dictionaries, one per sample."""
        out = []
        for i in range(len(self.x)):
            rec = {
                "step": i,
                "t": self.x[i],
                "lambda_re": self.lam[i].real,
                "lambda_im": self.lam[i].imag,
                "residual": self.residual_phi[i],
                "residual_psi": self.residual_psi[i],
            }
            if self.rayleigh[i] is not None:
                rec["rayleigh_re"] = self.rayleigh[i].real
                rec["rayleigh_im"] = self.rayleigh[i].imag
            out.append(rec)
        return out


@dataclass
class FlowResult:
    pair: BiorthoPair | None
    trace: ConvergenceTrace
    status: Status
    chi: complex = 0j
    max_pairing_drift: float = 0.0
    final_time: float = 0.0
    steps: int = 0
    diagnostic: str = ""

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


@dataclass
class PowerResult:
    pair: BiorthoPair | None
    trace: ConvergenceTrace
    iterations: int
    status: Status
    diagnostic: str = ""

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED
