from pydantic import Field

from .models import ConversionOutcome, FeasibilityVerdict, MonteCarloCheck, VerificationCheck, VerificationReport
from .models_schemes import BaseScheme, DensityMatrixScheme, PlanScheme, QubitScheme, rounded
from .types import Verdict


class VerdictScheme(BaseScheme):
    verdict: Verdict
    reason: str
    efficiency_in: float
    efficiency_out: float

    @classmethod
    def from_model(cls, verdict: FeasibilityVerdict) -> "VerdictScheme":
        return cls(
            verdict=verdict.verdict,
            reason=verdict.reason,
            efficiency_in=rounded(verdict.efficiency_in),
            efficiency_out=rounded(verdict.efficiency_out),
        )


class PlanReportScheme(BaseScheme):
    verdict: VerdictScheme
    plan: PlanScheme | None = None


class EfficiencyReportScheme(BaseScheme):
    E: float
    gen_efficiency: float
    density_matrix: DensityMatrixScheme


class ConversionReportScheme(BaseScheme):
    output: QubitScheme
    gen_efficiency: float
    success_density: float
    unnormalized_trace: float
    amplitude_residual: float
    transfer_residual: float

    @classmethod
    def from_model(
        cls, outcome: ConversionOutcome, gen_efficiency: float, amplitude_residual: float, transfer_residual: float
    ) -> "ConversionReportScheme":
        return cls(
            output=QubitScheme.from_model(outcome.output),
            gen_efficiency=rounded(gen_efficiency),
            success_density=rounded(outcome.success_weight),
            unnormalized_trace=rounded(outcome.unnormalized_trace),
            amplitude_residual=rounded(amplitude_residual),
            transfer_residual=rounded(transfer_residual),
        )


class CheckScheme(BaseScheme):
    name: str
    analytic: float
    oracle: float
    residual: float
    passed: bool = Field(alias="pass")

    class Config:
        allow_population_by_field_name = True

    @classmethod
    def from_model(cls, check: VerificationCheck) -> "CheckScheme":
        return cls(
            name=check.name,
            analytic=rounded(check.analytic),
            oracle=rounded(check.oracle),
            residual=rounded(check.residual),
            passed=check.passed,
        )


class MonteCarloScheme(BaseScheme):
    samples: int
    acceptances: int
    rate: float
    stderr: float
    expected_rate: float
    seed: int
    window: float
    conditioned_residual: float
    passed: bool = Field(alias="pass")

    class Config:
        allow_population_by_field_name = True

    @classmethod
    def from_model(cls, check: MonteCarloCheck) -> "MonteCarloScheme":
        result = check.result
        return cls(
            samples=result.samples,
            acceptances=result.acceptances,
            rate=rounded(result.rate),
            stderr=rounded(result.stderr),
            expected_rate=rounded(result.expected_rate),
            seed=result.seed,
            window=check.window,
            conditioned_residual=rounded(check.conditioned_residual),
            passed=check.passed,
        )


class VerificationReportScheme(BaseScheme):
    checks: list[CheckScheme]
    monte_carlo: MonteCarloScheme | None = None
    passed: bool = Field(alias="pass")

    class Config:
        allow_population_by_field_name = True

    @classmethod
    def from_model(cls, report: VerificationReport) -> "VerificationReportScheme":
        return cls(
            checks=[CheckScheme.from_model(check) for check in report.checks],
            monte_carlo=None if report.monte_carlo is None else MonteCarloScheme.from_model(report.monte_carlo),
            passed=report.passed,
        )
