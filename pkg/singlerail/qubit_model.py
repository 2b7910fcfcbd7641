import cmath
import logging
import math

from .errors import DomainError, InvalidParameterError, InvalidStateError
from .models import PSD_TOLERANCE, VACUUM, DensityMatrix2, SingleRailQubit

logger = logging.getLogger(__name__)

# |β|²E below this collapses to the canonical vacuum.
VACUUM_THRESHOLD = 1e-14
EFFICIENCY_SLACK = 1e-12


def canonicalize(alpha_raw: complex, beta_raw: complex, efficiency_raw: float) -> SingleRailQubit:
    norm = math.hypot(abs(alpha_raw), abs(beta_raw))
    if norm == 0.0 or not math.isfinite(norm):
        raise InvalidStateError("amplitude vector must be nonzero and finite")

    if not -EFFICIENCY_SLACK <= efficiency_raw <= 1.0 + EFFICIENCY_SLACK:
        raise InvalidStateError(f"efficiency {efficiency_raw} outside [0, 1]")

    efficiency = min(1.0, max(0.0, float(efficiency_raw)))
    alpha = complex(alpha_raw) / norm
    beta = complex(beta_raw) / norm
    if abs(beta) ** 2 * efficiency < VACUUM_THRESHOLD:
        return VACUUM

    if alpha != 0:
        phase = alpha / abs(alpha)
        alpha, beta = complex(abs(alpha)), beta * phase.conjugate()
    else:
        beta = complex(abs(beta))

    # Renormalize once more so the stored pair passes the 1e-12 norm check exactly.
    norm = math.hypot(abs(alpha), abs(beta))
    return SingleRailQubit(alpha / norm, beta / norm, efficiency)


def to_density_matrix(q: SingleRailQubit) -> DensityMatrix2:
    e = q.efficiency
    rho11 = e * abs(q.beta) ** 2
    return DensityMatrix2(
        rho00=1.0 - rho11,
        rho01=e * q.alpha.conjugate() * q.beta,
        rho10=e * q.alpha * q.beta.conjugate(),
        rho11=rho11,
    )


def from_density_matrix(d: DensityMatrix2) -> SingleRailQubit:
    """Invert the qubit density matrix.

    E = ρ₁₁ + |ρ₀₁|²/ρ₁₁, |β|² = ρ₁₁/E and arg β = arg ρ₀₁, with α ≥ 0.
    """
    if d.psd_gap < -PSD_TOLERANCE:
        raise InvalidStateError("matrix is not representable as an imperfect qubit")

    if d.rho11 < VACUUM_THRESHOLD:
        return VACUUM

    coherence = abs(d.rho01)
    efficiency = min(1.0, d.rho11 + coherence**2 / d.rho11)
    beta_abs = math.sqrt(d.rho11 / efficiency)
    if coherence == 0.0:
        return canonicalize(0.0, 1.0, efficiency)

    alpha = coherence / (efficiency * beta_abs)
    beta = beta_abs * d.rho01 / coherence
    return canonicalize(alpha, beta, efficiency)


def generalized_efficiency(state: DensityMatrix2 | SingleRailQubit) -> float:
    """ℰ = ρ₁₁ / (1 − |ρ₀₁|²/ρ₁₁); 0 for the vacuum, 1 for pure states.

    Written as ρ₁₁² / (ρ₁₁² + ρ₀₀ρ₁₁ − |ρ₀₁|²) for matrices and as
    |β|²E / ((1 − E) + E|β|²) for qubits, both of which stay within [0, 1]
    under rounding.
    """
    if isinstance(state, SingleRailQubit):
        weight = state.efficiency * abs(state.beta) ** 2
        if weight < VACUUM_THRESHOLD:
            return 0.0

        return weight / ((1.0 - state.efficiency) + weight)

    if state.rho11 < VACUUM_THRESHOLD:
        return 0.0

    square = state.rho11**2
    return square / (square + max(0.0, state.psd_gap))


def mix(d1: DensityMatrix2, d2: DensityMatrix2, p: float) -> DensityMatrix2:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"mixing weight {p} outside [0, 1]")

    q = 1.0 - p
    return DensityMatrix2(
        rho00=p * d1.rho00 + q * d2.rho00,
        rho01=p * d1.rho01 + q * d2.rho01,
        rho10=p * d1.rho10 + q * d2.rho10,
        rho11=p * d1.rho11 + q * d2.rho11,
    )


def efficiency_second_derivative(d1: DensityMatrix2, d2: DensityMatrix2, p: float) -> float:
    """Closed-form f''(p) for f(p) = ℰ(p·d1 + (1 − p)·d2); both states must be non-vacuum."""
    if d1.rho11 < VACUUM_THRESHOLD or d2.rho11 < VACUUM_THRESHOLD:
        raise DomainError("second derivative needs two non-vacuum states; mixtures with vacuum are linear in p")

    mixed = mix(d1, d2, p)
    delta11 = d1.rho11 - d2.rho11
    delta10 = d1.rho10 - d2.rho10
    rho11 = mixed.rho11
    coherence = abs(mixed.rho10) ** 2
    denominator = rho11 - coherence
    cross = delta11 * coherence - rho11 * 2.0 * (mixed.rho01 * delta10).real
    return 2.0 * rho11**2 * abs(delta10) ** 2 / denominator**2 + 2.0 * cross**2 / denominator**3


def state_distance(a: DensityMatrix2 | SingleRailQubit, b: DensityMatrix2 | SingleRailQubit) -> float:
    if isinstance(a, SingleRailQubit):
        a = to_density_matrix(a)

    if isinstance(b, SingleRailQubit):
        b = to_density_matrix(b)

    return float(abs(a.to_array() - b.to_array()).max())


def is_pure(q: SingleRailQubit, tolerance: float = EFFICIENCY_SLACK) -> bool:
    return not q.is_vacuum and q.efficiency >= 1.0 - tolerance


def relative_phase(q: SingleRailQubit, target: SingleRailQubit) -> float:
    if q.beta == 0 or target.beta == 0:
        return 0.0

    return cmath.phase(target.beta / q.beta)
