import csv
import functools
import json
import logging
import sys
from collections.abc import Callable
from io import StringIO
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError

from . import analytic_conversion as analytic
from . import env, solver
from .errors import (
    BaseError,
    DomainError,
    InfeasibleError,
    InvalidParameterError,
    InvalidStateError,
    NoSolutionError,
    PovmValidationError,
    TruncationOverflowError,
    ZeroProbabilityError,
)
from .models import BeamSplitter, HomodyneSetting, SingleRailQubit, SweepResult
from .models_schemes import DensityMatrixScheme, PlanScheme, QubitScheme, parse_state, rounded
from .qubit_model import from_density_matrix, generalized_efficiency, to_density_matrix
from .schemes import (
    ConversionReportScheme,
    EfficiencyReportScheme,
    PlanReportScheme,
    VerdictScheme,
    VerificationReportScheme,
)
from .types import SweepAxis
from .verification import verify_plan

logger = logging.getLogger(__name__)

EXIT_VERIFICATION_FAILED = 1

EXIT_CODES: dict[type[Exception], int] = {
    json.JSONDecodeError: 2,
    ValidationError: 2,
    InvalidParameterError: 2,
    DomainError: 2,
    NoSolutionError: 2,
    PovmValidationError: 3,
    InvalidStateError: 3,
    InfeasibleError: 4,
    ZeroProbabilityError: 5,
    TruncationOverflowError: 6,
}

SWEEP_HEADERS = ("param", "alpha_re", "alpha_im", "beta_re", "beta_im", "E", "gen_eff", "success_density")

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def exit_code_for(exc: Exception) -> int:
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]

    raise exc


def handle_errors(command: Callable[..., None]) -> Callable[..., None]:
    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            command(*args, **kwargs)
        except (BaseError, ValidationError, json.JSONDecodeError) as exc:
            code = exit_code_for(exc)
            logger.debug("%s failed with exit code %d", command.__name__, code)
            click.echo(json.dumps({"message": exc.__class__.__name__, "detail": str(exc)}), err=True)
            click.get_current_context().exit(code)

    return wrapper


def load_json(source: str) -> Any:
    """Read ``source`` as a JSON file when it names one, as inline JSON otherwise."""
    path = Path(source)
    try:
        is_file = path.is_file()
    except OSError:
        is_file = False

    return json.loads(path.read_text() if is_file else source)


def load_qubit(source: str) -> SingleRailQubit:
    scheme = parse_state(load_json(source))
    if isinstance(scheme, DensityMatrixScheme):
        return from_density_matrix(scheme.to_model())

    return scheme.to_model()


def dump_csv(result: SweepResult, out: str) -> None:
    buffer_file = StringIO()
    writer = csv.writer(buffer_file, dialect=csv.excel)
    writer.writerow(SWEEP_HEADERS)
    for point in result.points:
        state = point.output
        row = (
            point.parameter,
            state.alpha.real,
            state.alpha.imag,
            state.beta.real,
            state.beta.imag,
            state.efficiency,
            point.generalized_efficiency,
            point.success_density,
        )
        writer.writerow([rounded(value) for value in row])

    if out == "-":
        click.echo(buffer_file.getvalue(), nl=False)
    else:
        Path(out).write_text(buffer_file.getvalue(), newline="")


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default=env.LOG_LEVEL,
    show_default=True,
)
def main(log_level: str) -> None:
    """Imperfect single-rail qubits: efficiency, conversion plans and their verification."""
    logging.basicConfig(level=log_level.upper(), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("state")
@handle_errors
def efficiency(state: str) -> None:
    """Generalized efficiency of a qubit or density-matrix STATE (file or inline JSON)."""
    scheme = parse_state(load_json(state))
    if isinstance(scheme, DensityMatrixScheme):
        matrix = scheme.to_model()
        e = from_density_matrix(matrix).efficiency
    else:
        q = scheme.to_model()
        matrix, e = to_density_matrix(q), q.efficiency

    report = EfficiencyReportScheme(
        E=rounded(e),
        gen_efficiency=rounded(generalized_efficiency(matrix)),
        density_matrix=DensityMatrixScheme.from_model(matrix),
    )
    click.echo(report.json())


@main.command()
@click.argument("state")
@click.option("--bs-t", "t", type=float, required=True, help="Amplitude transmissivity of the beam splitter.")
@click.option("--Q", "quadrature", type=float, required=True, help="Accepted homodyne outcome.")
@click.option("--phi", type=float, default=0.0, show_default=True, help="Local-oscillator phase.")
@handle_errors
def convert(state: str, t: float, quadrature: float, phi: float) -> None:
    """Condition STATE on the homodyne outcome Q after a beam splitter."""
    q = load_qubit(state)
    bs = BeamSplitter(t)
    coeffs = analytic.homodyne_coefficients(HomodyneSetting(quadrature, phi))
    outcome = analytic.project_output(q, bs, coeffs)
    report = ConversionReportScheme.from_model(
        outcome,
        gen_efficiency=generalized_efficiency(outcome.output),
        amplitude_residual=analytic.amplitude_relation_residual(q, outcome.output, bs, coeffs),
        transfer_residual=analytic.transfer_relation_check(q, outcome.output, t),
    )
    click.echo(report.json())


@main.command()
@click.argument("source")
@click.argument("target")
@click.option("--attenuation-mid", type=float, default=analytic.DEFAULT_ATTENUATION_MID, show_default=True)
@click.option("--case1-t", type=float, default=analytic.CASE1_TRANSMISSIVITY, show_default=True)
@handle_errors
def plan(source: str, target: str, attenuation_mid: float, case1_t: float) -> None:
    """Conversion plan from SOURCE to TARGET; exits 4 with the verdict when infeasible."""
    q, q_out = load_qubit(source), load_qubit(target)
    verdict = analytic.classify_feasibility(q, q_out)
    if not verdict.feasible:
        click.echo(PlanReportScheme(verdict=VerdictScheme.from_model(verdict)).json())
        click.get_current_context().exit(EXIT_CODES[InfeasibleError])

    try:
        conversion = solver.synthesize_plan(q, q_out, attenuation_mid, case1_t)
    except BaseError:
        click.echo(PlanReportScheme(verdict=VerdictScheme.from_model(verdict)).json())
        raise

    report = PlanReportScheme(verdict=VerdictScheme.from_model(verdict), plan=PlanScheme.from_model(conversion))
    click.echo(report.json())


@main.command()
@click.argument("plan_source", metavar="PLAN")
@click.option("--state", default=None, help="Input state; defaults to the plan's own input.")
@click.option("--truncation", type=click.IntRange(min=1), default=env.TRUNCATION, show_default=True)
@click.option("--samples", type=click.IntRange(min=0), default=100_000, show_default=True)
@click.option("--window", type=float, default=0.01, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--partitions", type=click.IntRange(min=1), default=1, show_default=True)
@handle_errors
def verify(
    plan_source: str, state: str | None, truncation: int, samples: int, window: float, seed: int, partitions: int
) -> None:
    """Replay PLAN in the Fock-space oracle; exits 1 when any check fails."""
    data = load_json(plan_source)
    if isinstance(data, dict) and "verdict" in data:
        # Output of the plan command.
        data = data["plan"]

    conversion = PlanScheme.parse_obj(data).to_model()
    source = load_qubit(state) if state is not None else conversion.source
    if source is None:
        raise InvalidParameterError("the plan carries no input state; pass --state")

    report = verify_plan(
        conversion, source, truncation=truncation, samples=samples, window=window, seed=seed, partitions=partitions
    )
    click.echo(VerificationReportScheme.from_model(report).json(by_alias=True))
    if not report.passed:
        click.get_current_context().exit(EXIT_VERIFICATION_FAILED)


@main.command()
@click.argument("state")
@click.option("--axis", type=click.Choice([axis.value for axis in SweepAxis]), required=True)
@click.option("--min", "start", type=float, required=True)
@click.option("--max", "stop", type=float, required=True)
@click.option("--steps", type=int, required=True)
@click.option("--out", default="-", show_default=True, help="CSV destination; '-' writes to stdout.")
@click.option("--bs-t", "t", type=float, default=analytic.CASE1_TRANSMISSIVITY, show_default=True)
@click.option("--Q", "quadrature", type=float, default=0.5, show_default=True)
@click.option("--phi", type=float, default=0.0, show_default=True)
@click.option("--target", default='{"alpha": 1, "beta": 1, "efficiency": 1}', help="Pure part of the E_out target.")
@handle_errors
def sweep(
    state: str,
    axis: str,
    start: float,
    stop: float,
    steps: int,
    out: str,
    t: float,
    quadrature: float,
    phi: float,
    target: str,
) -> None:
    """Sweep one parameter of the conversion of STATE and write CSV rows."""
    q = load_qubit(state)
    pure = QubitScheme.parse_obj(load_json(target)).to_model()
    result = solver.sweep(
        q,
        SweepAxis(axis),
        start,
        stop,
        steps,
        t=t,
        quadrature=quadrature,
        phi=phi,
        target_alpha=pure.alpha,
        target_beta=pure.beta,
    )
    dump_csv(result, out)
