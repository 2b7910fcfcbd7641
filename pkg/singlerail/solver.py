import logging
import math
from collections.abc import Callable

import numpy as np
from scipy.optimize import brentq

from . import analytic_conversion as analytic
from .errors import (
    BaseError,
    InfeasibleError,
    InvalidParameterError,
    NoSolutionError,
    ZeroProbabilityError,
)
from .models import (
    Attenuation,
    BeamSplitter,
    Conditional,
    ConversionPlan,
    FeasibilityVerdict,
    GridSearchResult,
    HomodyneSetting,
    PhaseShift,
    SingleRailQubit,
    Stage,
    SweepPoint,
    SweepResult,
)
from .qubit_model import canonicalize, generalized_efficiency, is_pure, relative_phase, to_density_matrix
from .types import SweepAxis, Verdict

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2
RATIO_TOLERANCE = 1e-12
PRESCAN_POINTS = 64
HALVINGS = 64


def solve_transmissivity(
    q: SingleRailQubit, target: SingleRailQubit, case1_t: float = analytic.CASE1_TRANSMISSIVITY
) -> float:
    """Solve t|β|√(E(1 − E′)) = |β′|√(E′(1 − E)) for t."""
    if target.is_vacuum:
        return 0.0

    if q.is_vacuum:
        raise NoSolutionError("the vacuum cannot be converted to a state containing a photon")

    if is_pure(q) and is_pure(target):
        return pure_case_transmissivity(q, target, case1_t)

    if target.efficiency >= 1.0:
        raise NoSolutionError("a pure target needs a pure input")

    same_efficiency = abs(q.efficiency - target.efficiency) <= analytic.EFFICIENCY_EQUALITY
    if same_efficiency and abs(abs(q.beta) - abs(target.beta)) <= analytic.EFFICIENCY_EQUALITY:
        return 1.0

    ratio = target.efficiency * (1.0 - q.efficiency) / (q.efficiency * (1.0 - target.efficiency))
    t = abs(target.beta) / abs(q.beta) * math.sqrt(ratio)
    if t > 1.0 + RATIO_TOLERANCE:
        raise NoSolutionError(f"transfer relation needs transmissivity {t:.6g} > 1")

    return min(t, 1.0)


def solve_homodyne_setting(q: SingleRailQubit, target: SingleRailQubit, t: float) -> HomodyneSetting:
    """Solve β′(αθ₀ + βrθ₁) = α′βtθ₀ for θ₁/θ₀ = 2Q e^{iφ}, returning Q ≥ 0."""
    if target.is_vacuum:
        return HomodyneSetting(0.0)

    if q.is_vacuum:
        raise NoSolutionError("the vacuum cannot be converted to a state containing a photon")

    r = BeamSplitter(t).r
    numerator = target.alpha * q.beta * t - q.alpha * target.beta
    if r == 0.0:
        if abs(numerator) > RATIO_TOLERANCE:
            raise NoSolutionError("with r = 0 the amplitude relation forces θ₀ = 0")

        return HomodyneSetting(0.0)

    ratio = numerator / (q.beta * target.beta * r)
    phi = math.atan2(ratio.imag, ratio.real) if ratio != 0 else 0.0
    return HomodyneSetting(abs(ratio) / 2.0, phi)


def pure_case_transmissivity(
    q: SingleRailQubit, target: SingleRailQubit, case1_t: float = analytic.CASE1_TRANSMISSIVITY
) -> float:
    """Pure-to-pure t: ``case1_t`` while its setting stays resolvable, else the t minimizing |Q|,
    else the first halving of ``case1_t`` that is."""
    if not 0.0 < case1_t <= 1.0:
        raise InvalidParameterError(f"case-1 transmissivity {case1_t} outside (0, 1]")

    candidates = [case1_t]
    a = target.alpha * q.beta
    b = q.alpha * target.beta
    c = (a * b.conjugate()).real
    if c > 0.0:
        # Root of c·t² − (|a|² + |b|²)·t + c = 0 inside [0, 1].
        s = abs(a) ** 2 + abs(b) ** 2
        candidates.append(min(1.0, 2.0 * c / (s + math.sqrt(max(s * s - 4.0 * c * c, 0.0)))))

    candidates.extend(case1_t * 0.5**k for k in range(1, HALVINGS))
    for t in candidates:
        try:
            setting = solve_homodyne_setting(q, target, t)
        except NoSolutionError:
            continue

        if t > 0.0 and setting.quadrature <= analytic.RESOLVABLE_QUADRATURE:
            if t != case1_t:
                logger.info("case-1 transmissivity %.6g replaced by %.6g (Q=%.6g)", case1_t, t, setting.quadrature)

            return t

    raise ZeroProbabilityError("no transmissivity keeps the heralding weight above float underflow")


def conditional_stage(
    q: SingleRailQubit, target: SingleRailQubit, case1_t: float = analytic.CASE1_TRANSMISSIVITY
) -> Conditional:
    t = solve_transmissivity(q, target, case1_t)
    setting = solve_homodyne_setting(q, target, t)
    logger.debug("conditional stage t=%.12g Q=%.12g phi=%.12g", t, setting.quadrature, setting.phi)
    return Conditional(BeamSplitter(t), setting)


def solve_attenuation(q: SingleRailQubit, target_efficiency: float) -> float:
    e_in = generalized_efficiency(q)
    if not 0.0 < target_efficiency <= e_in:
        raise InvalidParameterError(f"attenuation cannot reach ℰ = {target_efficiency} from {e_in}")

    if target_efficiency == e_in:
        return 1.0

    if is_pure(q):
        # ℰ of an attenuated pure state is τ².
        return math.sqrt(target_efficiency)

    def gap(tau: float) -> float:
        return generalized_efficiency(analytic.apply_attenuation(q, tau)) - target_efficiency

    return brentq(gap, 1e-12, 1.0, xtol=1e-15, rtol=1e-15)


def synthesize_plan(
    q: SingleRailQubit,
    target: SingleRailQubit,
    attenuation_mid: float = analytic.DEFAULT_ATTENUATION_MID,
    case1_t: float = analytic.CASE1_TRANSMISSIVITY,
) -> ConversionPlan:
    """Build a plan turning ``q`` into ``target``.

    ``attenuation_mid`` places the intermediate ℰ of the attenuation route at
    ℰ(target) + attenuation_mid·(1 − ℰ(target)); 0.5 is the midpoint.
    """
    feasibility = analytic.classify_feasibility(q, target)
    if not feasibility.feasible:
        raise InfeasibleError(feasibility)

    if not 0.0 < attenuation_mid < 1.0:
        raise InvalidParameterError(f"attenuation midpoint fraction {attenuation_mid} outside (0, 1)")

    stages: list[Stage]
    if target.is_vacuum:
        stages = [Conditional(BeamSplitter(0.0), None)]
    elif feasibility.verdict == Verdict.feasible_equal_phase:
        stages = [Conditional(BeamSplitter(1.0), HomodyneSetting(0.0))]
        chi = relative_phase(q, target)
        if abs(chi) > analytic.EFFICIENCY_EQUALITY:
            stages.append(PhaseShift(chi))
    elif feasibility.verdict == Verdict.feasible_via_attenuation:
        e_mid = feasibility.efficiency_out + attenuation_mid * (1.0 - feasibility.efficiency_out)
        tau = solve_attenuation(q, e_mid)
        intermediate = analytic.apply_attenuation(q, tau)
        stages = [Attenuation(tau), conditional_stage(intermediate, target, case1_t)]
    else:
        stages = [conditional_stage(q, target, case1_t)]

    output, density = analytic.execute_plan(q, stages)
    logger.debug("plan %s -> %s: %s (density %.6g)", q, target, stages, density)
    return ConversionPlan(
        stages=tuple(stages), predicted_output=output, predicted_success_density=density, source=q
    )


def golden_section_search(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> tuple[float, float]:
    """Bracket [c, d] around the minimum of a unimodal ``f`` on [a, b] with d − c <= tol."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, b

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(n - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc < yd:
        return a, d

    return c, b


def max_output_efficiency(q: SingleRailQubit, alpha: complex, beta: complex) -> float:
    """Largest E′ with ℰ(α′, β′, E′) <= ℰ(q), inverting |β′|²E′/(1 − |α′|²E′) = ℰ."""
    e = generalized_efficiency(q)
    pure = canonicalize(alpha, beta, 1.0)
    return e / (abs(pure.beta) ** 2 + e * abs(pure.alpha) ** 2) if e > 0 else 0.0


def optimize_over_output_efficiency(
    q: SingleRailQubit,
    alpha: complex,
    beta: complex,
    attenuation_mid: float = analytic.DEFAULT_ATTENUATION_MID,
    tol: float = 1e-10,
) -> tuple[float, ConversionPlan]:
    pure = canonicalize(alpha, beta, 1.0)
    if pure.is_vacuum:
        raise InvalidParameterError("target pure part must contain a photon component")

    upper = max_output_efficiency(q, pure.alpha, pure.beta)
    if upper <= 0.0:
        verdict = FeasibilityVerdict(Verdict.infeasible, "no feasible output efficiency", 0.0, 0.0)
        raise InfeasibleError(verdict)

    def plan_for(efficiency: float) -> ConversionPlan:
        return synthesize_plan(q, canonicalize(pure.alpha, pure.beta, efficiency), attenuation_mid)

    def objective(efficiency: float) -> float:
        try:
            return plan_for(efficiency).predicted_success_density
        except BaseError:
            return -math.inf

    lower = upper * 1e-9
    grid = np.linspace(lower, upper, PRESCAN_POINTS)
    values = [objective(float(e)) for e in grid]
    best = int(np.argmax(values))
    if not math.isfinite(values[best]):
        verdict = FeasibilityVerdict(Verdict.infeasible, "no realizable output efficiency", 0.0, 0.0)
        raise InfeasibleError(verdict)

    a = float(grid[max(best - 1, 0)])
    b = float(grid[min(best + 1, PRESCAN_POINTS - 1)])
    c, d = golden_section_search(lambda e: -objective(e), a, b, tol)
    efficiency = (c + d) / 2.0
    if objective(efficiency) < values[best]:
        efficiency = float(grid[best])

    logger.debug("best output efficiency %.12g in (0, %.12g]", efficiency, upper)
    return efficiency, plan_for(efficiency)


def sweep(
    q: SingleRailQubit,
    axis: SweepAxis,
    start: float,
    stop: float,
    steps: int,
    t: float = analytic.CASE1_TRANSMISSIVITY,
    quadrature: float = 0.5,
    phi: float = 0.0,
    target_alpha: complex = 1.0,
    target_beta: complex = 1.0,
) -> SweepResult:
    """Evaluate the conversion along one parameter, the others held fixed.

    For the ``output_efficiency`` axis each point is the synthesized plan for the
    target (target_alpha, target_beta, E′); infeasible points are skipped.
    """
    if steps < 1:
        raise InvalidParameterError("a sweep needs at least one step")

    points = []
    for value in np.linspace(start, stop, steps):
        value = float(value)
        try:
            if axis == SweepAxis.output_efficiency:
                plan = synthesize_plan(q, canonicalize(target_alpha, target_beta, value))
                output, density = plan.predicted_output, plan.predicted_success_density
            else:
                if axis == SweepAxis.quadrature:
                    bs_t, setting = t, HomodyneSetting(value, phi)
                else:
                    bs_t, setting = value, HomodyneSetting(quadrature, phi)

                outcome = analytic.project_output(q, BeamSplitter(bs_t), analytic.homodyne_coefficients(setting))
                output, density = outcome.output, outcome.success_weight
        except (InfeasibleError, NoSolutionError, ZeroProbabilityError) as exc:
            logger.info("sweep point %s=%.6g skipped: %s", axis.value, value, exc)
            continue

        points.append(SweepPoint(value, output, generalized_efficiency(output), density))

    return SweepResult(axis=axis, points=tuple(points))


def grid_search_realization(
    q: SingleRailQubit,
    target: SingleRailQubit,
    t_values: np.ndarray,
    q_values: np.ndarray,
    phi_values: np.ndarray,
) -> GridSearchResult:
    # Only points with positive success weight compete; residual is the max entrywise distance.
    t = np.asarray(t_values, dtype=float)[:, None, None]
    quad = np.asarray(q_values, dtype=float)[None, :, None]
    phi = np.asarray(phi_values, dtype=float)[None, None, :]
    r = np.sqrt((1.0 - t) * (1.0 + t))
    theta0 = analytic.HOMODYNE_NORM * np.exp(-quad * quad)
    theta1 = 2.0 * quad * theta0 * np.exp(1j * phi)
    c0 = q.alpha * theta0 + q.beta * r * theta1
    c1 = q.beta * t * theta0
    e = q.efficiency
    trace = e * (np.abs(c0) ** 2 + np.abs(c1) ** 2) + (1.0 - e) * np.abs(theta0) ** 2
    positive = trace > 0.0
    safe = np.where(positive, trace, 1.0)
    rho11 = e * np.abs(c1) ** 2 / safe
    rho01 = e * np.conj(c0) * c1 / safe

    expected = to_density_matrix(target)
    residual = np.maximum(np.abs(rho11 - expected.rho11), np.abs(rho01 - expected.rho01))
    residual = np.where(positive, residual, np.inf)
    index = np.unravel_index(int(np.argmin(residual)), residual.shape)
    best_t, best_q, best_phi = (float(t.ravel()[index[0]]), float(quad.ravel()[index[1]]), float(phi.ravel()[index[2]]))
    return GridSearchResult(
        best_residual=float(residual[index]),
        beam_splitter_t=best_t,
        setting=HomodyneSetting(best_q, best_phi),
        weight=float(trace[index]),
        points=int(residual.size),
    )

