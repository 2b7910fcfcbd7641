import cmath
import logging
import math
import sys
from collections.abc import Sequence

from .errors import DomainError, InvalidParameterError, ZeroProbabilityError
from .models import (
    VACUUM,
    Attenuation,
    BeamSplitter,
    ConversionOutcome,
    DensityMatrix2,
    FeasibilityVerdict,
    HomodyneSetting,
    PhaseShift,
    ProjectionCoefficients,
    SingleRailQubit,
    Stage,
)
from .qubit_model import canonicalize, from_density_matrix, generalized_efficiency, is_pure
from .types import Verdict

logger = logging.getLogger(__name__)

HOMODYNE_NORM = (2.0 / math.pi) ** 0.25
EFFICIENCY_EQUALITY = 1e-12
DEFAULT_ATTENUATION_MID = 0.5
CASE1_TRANSMISSIVITY = 1.0 / math.sqrt(2.0)
# Beyond this |Q| the heralding weight θ₀² nears the float underflow range.
RESOLVABLE_QUADRATURE = math.sqrt(-math.log(sys.float_info.min) / 4.0)


def homodyne_coefficients(setting: HomodyneSetting) -> ProjectionCoefficients:
    q = setting.quadrature
    theta0 = HOMODYNE_NORM * math.exp(-q * q)
    if theta0 == 0.0:
        raise ZeroProbabilityError(f"homodyne outcome density underflows at Q = {q:.6g}")

    return ProjectionCoefficients(
        theta0=complex(theta0),
        theta1=2.0 * q * theta0 * cmath.exp(1j * setting.phi),
    )


def project_output(q: SingleRailQubit, bs: BeamSplitter, coeffs: ProjectionCoefficients) -> ConversionOutcome:
    scale = max(abs(coeffs.theta0), abs(coeffs.theta1))
    if scale == 0:
        raise InvalidParameterError("projection coefficients are both zero")

    # The output only depends on θ₁/θ₀; the scale comes back in the trace.
    theta0, theta1 = coeffs.theta0 / scale, coeffs.theta1 / scale
    vacuum_amplitude = q.alpha * theta0 + q.beta * bs.r * theta1
    photon_amplitude = q.beta * bs.t * theta0
    coherent_weight = abs(vacuum_amplitude) ** 2 + abs(photon_amplitude) ** 2
    scaled_trace = q.efficiency * coherent_weight + (1.0 - q.efficiency) * abs(theta0) ** 2
    trace = scaled_trace * scale**2
    if trace <= 0.0:
        raise ZeroProbabilityError("the requested outcome has zero probability")

    if coherent_weight <= 0.0:
        output = VACUUM
    else:
        output = canonicalize(vacuum_amplitude, photon_amplitude, q.efficiency * coherent_weight / scaled_trace)

    return ConversionOutcome(output=output, success_weight=trace, unnormalized_trace=trace)


def amplitude_relation_residual(
    q: SingleRailQubit, q_out: SingleRailQubit, bs: BeamSplitter, coeffs: ProjectionCoefficients
) -> float:
    left = q_out.beta * (q.alpha * coeffs.theta0 + q.beta * bs.r * coeffs.theta1)
    right = q_out.alpha * q.beta * bs.t * coeffs.theta0
    return abs(left - right)


def transfer_relation_check(q: SingleRailQubit, q_out: SingleRailQubit, t: float) -> float:
    left = t * abs(q.beta) * math.sqrt(q.efficiency * (1.0 - q_out.efficiency))
    right = abs(q_out.beta) * math.sqrt(q_out.efficiency * (1.0 - q.efficiency))
    return abs(left - right)


def success_density(q: SingleRailQubit, q_out: SingleRailQubit, theta0: complex) -> float:
    if q_out.efficiency >= 1.0:
        raise DomainError("pure outputs need the full trace formula, not the simplified ratio")

    return abs(theta0) ** 2 * (1.0 - q.efficiency) / (1.0 - q_out.efficiency)


def apply_attenuation(q: SingleRailQubit, tau: float) -> SingleRailQubit:
    if not 0.0 < tau <= 1.0:
        raise InvalidParameterError(f"attenuation {tau} outside (0, 1]")

    if tau == 1.0 or q.is_vacuum:
        return q

    e = q.efficiency
    rho11 = tau * tau * e * abs(q.beta) ** 2
    d = DensityMatrix2(
        rho00=1.0 - rho11,
        rho01=tau * e * q.alpha.conjugate() * q.beta,
        rho10=tau * e * q.alpha * q.beta.conjugate(),
        rho11=rho11,
    )
    return from_density_matrix(d)


def apply_phase_shift(q: SingleRailQubit, chi: float) -> SingleRailQubit:
    if q.is_vacuum:
        return q

    return canonicalize(q.alpha, q.beta * cmath.exp(1j * chi), q.efficiency)


def classify_feasibility(q: SingleRailQubit, target: SingleRailQubit) -> FeasibilityVerdict:
    e_in = generalized_efficiency(q)
    e_out = generalized_efficiency(target)

    def verdict(kind: Verdict, reason: str) -> FeasibilityVerdict:
        return FeasibilityVerdict(verdict=kind, reason=reason, efficiency_in=e_in, efficiency_out=e_out)

    if e_out > e_in + EFFICIENCY_EQUALITY:
        return verdict(Verdict.infeasible, "generalized efficiency would increase")

    if abs(e_out - e_in) <= EFFICIENCY_EQUALITY:
        same_efficiency = abs(q.efficiency - target.efficiency) <= EFFICIENCY_EQUALITY
        if same_efficiency and abs(abs(q.beta) - abs(target.beta)) <= EFFICIENCY_EQUALITY:
            return verdict(Verdict.feasible_equal_phase, "equal generalized efficiency: phase shift only")

        if is_pure(q) and is_pure(target):
            return verdict(Verdict.feasible_equal_pure, "equal generalized efficiency: pure to pure")

        return verdict(
            Verdict.infeasible, "equal generalized efficiency outside the pure-state and phase-shift cases"
        )

    if e_in >= 1.0 - EFFICIENCY_EQUALITY and target.efficiency < 1.0:
        if target.is_vacuum:
            return verdict(Verdict.feasible_via_attenuation, "pure input with vacuum target: block the input")

        return verdict(Verdict.feasible_via_attenuation, "pure input with mixed target: attenuate first")

    if target.is_vacuum:
        return verdict(Verdict.feasible_strict, "vacuum target: block the input")

    return verdict(Verdict.feasible_strict, "generalized efficiency decreases")


def execute_plan(q: SingleRailQubit, stages: Sequence[Stage]) -> tuple[SingleRailQubit, float]:
    """Run the stages in order; returns the output and the product of success weights."""
    state, density = q, 1.0
    for stage in stages:
        if isinstance(stage, Attenuation):
            state = apply_attenuation(state, stage.tau)
        elif isinstance(stage, PhaseShift):
            state = apply_phase_shift(state, stage.chi)
        elif stage.setting is None:
            state = apply_attenuation(state, stage.beam_splitter.t) if stage.beam_splitter.t > 0 else VACUUM
        else:
            outcome = project_output(state, stage.beam_splitter, homodyne_coefficients(stage.setting))
            state = outcome.output
            density *= outcome.success_weight

    return state, density

