from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TypeAlias

import numpy as np

from .errors import InvalidParameterError, InvalidStateError, PovmValidationError
from .types import SweepAxis, Verdict

NORM_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-12
HERMITIAN_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SingleRailQubit:
    """E|ψ⟩⟨ψ| + (1 − E)|0⟩⟨0| with |ψ⟩ = α|0⟩ + β|1⟩.

    Build values through ``qubit_model.canonicalize``; the constructor rejects
    anything not already in canonical form.
    """

    alpha: complex
    beta: complex
    efficiency: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "efficiency", float(self.efficiency))
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0) > NORM_TOLERANCE:
            raise InvalidStateError("amplitudes are not normalized")

        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidStateError(f"efficiency {self.efficiency} outside [0, 1]")

        if self.beta == 0 or self.efficiency == 0.0:
            if (self.alpha, self.beta, self.efficiency) != (1, 0, 0.0):
                raise InvalidStateError("the vacuum is stored as alpha=1, beta=0, efficiency=0")

            return

        leading = self.alpha if self.alpha != 0 else self.beta
        if leading.imag != 0.0 or leading.real < 0.0:
            raise InvalidStateError("global phase not fixed: leading amplitude must be real and nonnegative")

    @property
    def is_vacuum(self) -> bool:
        return self.beta == 0 and self.efficiency == 0.0


VACUUM = SingleRailQubit(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class DensityMatrix2:
    """2×2 density matrix on span{|0⟩, |1⟩}, with rho01 = E α* β for imperfect qubits."""

    rho00: float
    rho01: complex
    rho10: complex
    rho11: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho00", float(self.rho00))
        object.__setattr__(self, "rho01", complex(self.rho01))
        object.__setattr__(self, "rho10", complex(self.rho10))
        object.__setattr__(self, "rho11", float(self.rho11))
        if abs(self.rho10 - self.rho01.conjugate()) > HERMITIAN_TOLERANCE:
            raise InvalidStateError("matrix is not Hermitian")

        if abs(self.rho00 + self.rho11 - 1.0) > TRACE_TOLERANCE:
            raise InvalidStateError(f"trace {self.rho00 + self.rho11} differs from 1")

        if min(self.rho00, self.rho11) < -PSD_TOLERANCE or self.psd_gap < -PSD_TOLERANCE:
            raise InvalidStateError("matrix is not positive semidefinite")

    @property
    def psd_gap(self) -> float:
        return self.rho00 * self.rho11 - abs(self.rho01) ** 2

    def to_array(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [self.rho10, self.rho11]], dtype=complex)

    @classmethod
    def from_array(cls, array: np.ndarray) -> DensityMatrix2:
        if max(abs(array[0, 0].imag), abs(array[1, 1].imag)) > HERMITIAN_TOLERANCE:
            raise InvalidStateError("diagonal entries must be real")

        return cls(array[0, 0].real, array[0, 1], array[1, 0], array[1, 1].real)


@dataclass(frozen=True)
class BeamSplitter:
    t: float
    r: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", float(self.t))
        if not 0.0 <= self.t <= 1.0:
            raise InvalidParameterError(f"transmissivity {self.t} outside [0, 1]")

        object.__setattr__(self, "r", math.sqrt((1.0 - self.t) * (1.0 + self.t)))


@dataclass(frozen=True)
class HomodyneSetting:
    quadrature: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "quadrature", float(self.quadrature))
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class ProjectionCoefficients:
    theta0: complex
    theta1: complex


@dataclass(frozen=True)
class ConversionOutcome:
    output: SingleRailQubit
    success_weight: float
    unnormalized_trace: float


@dataclass(frozen=True)
class FeasibilityVerdict:
    verdict: Verdict
    reason: str
    efficiency_in: float
    efficiency_out: float

    @property
    def feasible(self) -> bool:
        return self.verdict != Verdict.infeasible


@dataclass(frozen=True)
class Attenuation:
    tau: float

    def __post_init__(self) -> None:
        if not 0.0 < self.tau <= 1.0:
            raise InvalidParameterError(f"attenuation {self.tau} outside (0, 1]")


@dataclass(frozen=True)
class Conditional:
    beam_splitter: BeamSplitter
    # None traces the measured port out instead of conditioning on it.
    setting: HomodyneSetting | None


@dataclass(frozen=True)
class PhaseShift:
    chi: float


Stage: TypeAlias = Attenuation | Conditional | PhaseShift


@dataclass(frozen=True)
class ConversionPlan:
    stages: tuple[Stage, ...]
    predicted_output: SingleRailQubit
    predicted_success_density: float
    source: SingleRailQubit | None = None


@dataclass(frozen=True)
class SweepPoint:
    parameter: float
    output: SingleRailQubit
    generalized_efficiency: float
    success_density: float


@dataclass(frozen=True)
class SweepResult:
    axis: SweepAxis
    points: tuple[SweepPoint, ...]


@dataclass(frozen=True)
class GridSearchResult:
    best_residual: float
    beam_splitter_t: float
    setting: HomodyneSetting
    weight: float
    points: int


@dataclass(frozen=True, eq=False)
class FockBranch:
    weight: float
    amplitudes: np.ndarray


@dataclass(frozen=True, eq=False)
class FockState:
    """Weighted ensemble of pure branches; each branch is an (N+1)^modes tensor."""

    truncation: int
    branches: tuple[FockBranch, ...]

    @property
    def modes(self) -> int:
        return self.branches[0].amplitudes.ndim

    def norm(self) -> float:
        return float(sum(b.weight * np.vdot(b.amplitudes, b.amplitudes).real for b in self.branches))

    def amplitude(self, occupation: tuple[int, ...], branch: int = 0) -> complex:
        return complex(self.branches[branch].amplitudes[occupation])


@dataclass(frozen=True, eq=False)
class PovmElement:
    matrix: np.ndarray
    label: str = "k"

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise PovmValidationError("POVM element must be a square matrix")

        if not np.allclose(matrix, matrix.conj().T, atol=PSD_TOLERANCE):
            raise PovmValidationError("POVM element is not Hermitian")

        eigenvalues = np.linalg.eigvalsh(matrix)
        if eigenvalues.min() < -PSD_TOLERANCE or eigenvalues.max() > 1.0 + PSD_TOLERANCE:
            raise PovmValidationError("POVM element must satisfy 0 <= M <= 1")

        object.__setattr__(self, "matrix", matrix)


@dataclass(frozen=True)
class PovmOutcome:
    output: DensityMatrix2
    weight: float
    branch_efficiencies: tuple[float, ...]


@dataclass(frozen=True)
class MonteCarloResult:
    samples: int
    acceptances: int
    rate: float
    stderr: float
    expected_rate: float
    seed: int
    # None when no sample landed in the window.
    conditioned: DensityMatrix2 | None
    conditioned_stderr: float


@dataclass(frozen=True)
class NetworkReductionResult:
    residual: float
    output: SingleRailQubit
    weight: float
    equivalent_t: float
    equivalent_setting: HomodyneSetting


@dataclass(frozen=True)
class VerificationCheck:
    name: str
    analytic: float
    oracle: float
    residual: float
    passed: bool


@dataclass(frozen=True)
class MonteCarloCheck:
    result: MonteCarloResult
    window: float
    conditioned_residual: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[VerificationCheck, ...]
    monte_carlo: MonteCarloCheck | None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks) and (self.monte_carlo is None or self.monte_carlo.passed)
