import logging
import math

from . import analytic_conversion as analytic
from . import env, fock_oracle
from .models import (
    Attenuation,
    Conditional,
    ConversionPlan,
    DensityMatrix2,
    MonteCarloCheck,
    PhaseShift,
    SingleRailQubit,
    VerificationCheck,
    VerificationReport,
)
from .qubit_model import from_density_matrix, generalized_efficiency, state_distance, to_density_matrix

logger = logging.getLogger(__name__)

MONOTONICITY_SLACK = 1e-12
STANDARD_ERRORS = 3.0
# Conditioning on a finite window biases the state by O(window²).
WINDOW_BIAS_FACTOR = 10.0


def state_check(name: str, expected: SingleRailQubit, observed: DensityMatrix2, tolerance: float) -> VerificationCheck:
    residual = state_distance(expected, observed)
    return VerificationCheck(
        name=name,
        analytic=generalized_efficiency(expected),
        oracle=generalized_efficiency(observed),
        residual=residual,
        passed=residual <= tolerance,
    )


def value_check(name: str, expected: float, observed: float, tolerance: float) -> VerificationCheck:
    residual = abs(expected - observed) / max(1.0, abs(expected))
    return VerificationCheck(
        name=name, analytic=expected, oracle=observed, residual=residual, passed=residual <= tolerance
    )


def verify_plan(
    plan: ConversionPlan,
    source: SingleRailQubit,
    truncation: int = env.TRUNCATION,
    samples: int = 100_000,
    window: float = 0.01,
    seed: int = 0,
    partitions: int = 1,
    tolerance: float | None = None,
) -> VerificationReport:
    """Replay ``plan`` stage by stage in the closed forms and in the Fock-space oracle.

    The oracle chain is fed its own outputs, so the final comparison against
    ``plan.predicted_output`` catches plans whose parameters do not reach the
    prediction. ``samples == 0`` skips the Monte Carlo section.
    """
    tolerance = env.TOLERANCE if tolerance is None else tolerance
    checks = []
    expected, observed_state = source, source
    observed = to_density_matrix(source)
    density = 1.0
    last_conditional = None
    for index, stage in enumerate(plan.stages):
        if isinstance(stage, Attenuation):
            name = f"stage{index}:attenuation"
            expected = analytic.apply_attenuation(expected, stage.tau)
            observed = fock_oracle.traced_output(observed_state, stage.tau, truncation)
        elif isinstance(stage, PhaseShift):
            name = f"stage{index}:phase_shift"
            expected = analytic.apply_phase_shift(expected, stage.chi)
            observed = fock_oracle.phase_shifted_output(observed_state, stage.chi, truncation)
        elif stage.setting is None:
            name = f"stage{index}:traced"
            expected, _ = analytic.execute_plan(expected, [stage])
            observed = fock_oracle.traced_output(observed_state, stage.beam_splitter.t, truncation)
        else:
            name = f"stage{index}:conditional"
            setting = stage.setting
            outcome = analytic.project_output(expected, stage.beam_splitter, analytic.homodyne_coefficients(setting))
            observed, weight = fock_oracle.conditional_output(
                observed_state, stage.beam_splitter.t, setting.quadrature, setting.phi, truncation
            )
            checks.append(value_check(f"{name}:success_density", outcome.success_weight, weight, tolerance))
            expected = outcome.output
            density *= weight
            last_conditional = (observed_state, stage)

        checks.append(state_check(name, expected, observed, tolerance))
        observed_state = from_density_matrix(observed)

    checks.append(state_check("predicted_output", plan.predicted_output, observed, tolerance))
    checks.append(value_check("predicted_success_density", plan.predicted_success_density, density, tolerance))
    e_in, e_out = generalized_efficiency(source), generalized_efficiency(observed_state)
    checks.append(
        VerificationCheck(
            name="efficiency_monotonicity",
            analytic=e_in,
            oracle=e_out,
            residual=max(0.0, e_out - e_in),
            passed=e_out <= e_in + MONOTONICITY_SLACK,
        )
    )

    monte_carlo = None
    if samples > 0 and last_conditional is not None:
        monte_carlo = monte_carlo_check(*last_conditional, samples, window, seed, partitions, truncation)

    report = VerificationReport(checks=tuple(checks), monte_carlo=monte_carlo)
    logger.info("verification %s", "passed" if report.passed else "failed")
    return report


def monte_carlo_check(
    q: SingleRailQubit,
    stage: Conditional,
    samples: int,
    window: float,
    seed: int,
    partitions: int,
    truncation: int,
) -> MonteCarloCheck:
    setting = stage.setting
    assert setting is not None
    result = fock_oracle.monte_carlo_conversion(
        q,
        stage.beam_splitter.t,
        setting.quadrature,
        setting.phi,
        window,
        samples,
        seed,
        truncation=truncation,
        partitions=partitions,
    )
    sigma = math.sqrt(result.expected_rate * (1.0 - result.expected_rate) / samples)
    rate_ok = abs(result.rate - result.expected_rate) <= STANDARD_ERRORS * sigma

    if result.conditioned is None:
        return MonteCarloCheck(result=result, window=window, conditioned_residual=math.inf, passed=False)

    expected = analytic.project_output(q, stage.beam_splitter, analytic.homodyne_coefficients(setting)).output
    residual = state_distance(expected, result.conditioned)
    allowed = WINDOW_BIAS_FACTOR * window**2 + STANDARD_ERRORS * result.conditioned_stderr
    return MonteCarloCheck(
        result=result, window=window, conditioned_residual=residual, passed=rate_ok and residual <= allowed
    )
