import functools
import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import integrate
from scipy.special import eval_hermite

from .analytic_conversion import homodyne_coefficients, project_output
from .errors import InvalidParameterError, InvalidStateError, TruncationOverflowError, ZeroProbabilityError
from .models import (
    BeamSplitter,
    DensityMatrix2,
    FockBranch,
    FockState,
    HomodyneSetting,
    MonteCarloResult,
    NetworkReductionResult,
    PovmElement,
    PovmOutcome,
    SingleRailQubit,
)
from .qubit_model import from_density_matrix, generalized_efficiency, state_distance
from .solver import solve_homodyne_setting, solve_transmissivity

logger = logging.getLogger(__name__)

DEFAULT_TRUNCATION = 4
LEAKAGE_TOLERANCE = 1e-12
SUPPORT_TOLERANCE = 1e-12
SINGULAR_VALUE_CUTOFF = 1e-12
GRID_LIMIT = 8.0
GRID_POINTS = 2**14


def fock_wavefunction(n: int, quadrature: float | np.ndarray, phi: float = 0.0) -> complex | np.ndarray:
    """⟨Q_φ|n⟩ in the [Q̂, P̂] = i/2 convention."""
    if n < 0:
        raise InvalidParameterError("photon number must be nonnegative")

    x = np.asarray(quadrature, dtype=float)
    norm = (2.0 / math.pi) ** 0.25 / math.sqrt(2.0**n * math.factorial(n))
    value = norm * eval_hermite(n, math.sqrt(2.0) * x) * np.exp(-x * x) * np.exp(1j * n * phi)
    return complex(value) if value.ndim == 0 else value


def homodyne_functional(truncation: int, quadrature: float | np.ndarray, phi: float = 0.0) -> np.ndarray:
    x = np.asarray(quadrature, dtype=float)
    columns = [np.asarray(fock_wavefunction(n, x, phi)) for n in range(truncation + 1)]
    return np.stack(columns, axis=-1)


def pure_state(amplitudes: Mapping[tuple[int, ...], complex], truncation: int) -> FockState:
    modes = len(next(iter(amplitudes)))
    tensor = np.zeros((truncation + 1,) * modes, dtype=complex)
    for occupation, value in amplitudes.items():
        if len(occupation) != modes or max(occupation) > truncation:
            raise TruncationOverflowError(f"occupation {occupation} outside the truncated space")

        tensor[occupation] = value

    return FockState(truncation=truncation, branches=(FockBranch(1.0, tensor),))


def qubit_state(q: SingleRailQubit, modes: int = 2, truncation: int = DEFAULT_TRUNCATION) -> FockState:
    """The qubit in mode 0 with vacuum in every other mode, as a two-branch ensemble."""
    if truncation < 1:
        raise InvalidParameterError("truncation must keep the one-photon level")

    shape = (truncation + 1,) * modes
    vacuum_index = (0,) * modes
    photon_index = (1,) + (0,) * (modes - 1)
    coherent = np.zeros(shape, dtype=complex)
    coherent[vacuum_index] = q.alpha
    coherent[photon_index] = q.beta
    vacuum = np.zeros(shape, dtype=complex)
    vacuum[vacuum_index] = 1.0
    branches = [FockBranch(q.efficiency, coherent), FockBranch(1.0 - q.efficiency, vacuum)]
    return FockState(truncation=truncation, branches=tuple(b for b in branches if b.weight > 0.0))


@functools.lru_cache(maxsize=512)
def beam_splitter_matrix(t: float, truncation: int) -> np.ndarray:
    """u[p, q, m, n] = ⟨p, q|U|m, n⟩ for a† → r a† + t b†, b† → t a† − r b†.

    Outputs above the truncation are dropped, so columns with m + n > N may lose norm.
    """
    r = math.sqrt((1.0 - t) * (1.0 + t))
    dim = truncation + 1
    u = np.zeros((dim, dim, dim, dim))
    for m in range(dim):
        for n in range(dim):
            scale = math.sqrt(math.factorial(m) * math.factorial(n))
            for k in range(m + 1):
                for j in range(n + 1):
                    p = k + j
                    q = m + n - p
                    if p > truncation or q > truncation:
                        continue

                    coefficient = math.comb(m, k) * r**k * t ** (m - k) * math.comb(n, j) * t**j * (-r) ** (n - j)
                    u[p, q, m, n] += coefficient * math.sqrt(math.factorial(p) * math.factorial(q)) / scale

    return u


def apply_beam_splitter(state: FockState, mode_a: int, mode_b: int, t: float) -> FockState:
    if mode_a == mode_b or not (0 <= mode_a < state.modes and 0 <= mode_b < state.modes):
        raise InvalidParameterError(f"invalid mode pair ({mode_a}, {mode_b})")

    if not 0.0 <= t <= 1.0:
        raise InvalidParameterError(f"transmissivity {t} outside [0, 1]")

    u = beam_splitter_matrix(float(t), state.truncation)
    branches = []
    for branch in state.branches:
        moved = np.tensordot(u, branch.amplitudes, axes=([2, 3], [mode_a, mode_b]))
        amplitudes = np.moveaxis(moved, [0, 1], [mode_a, mode_b])
        before = np.vdot(branch.amplitudes, branch.amplitudes).real
        leakage = before - np.vdot(amplitudes, amplitudes).real
        if leakage > LEAKAGE_TOLERANCE:
            raise TruncationOverflowError(f"beam splitter pushed {leakage:.3g} of the norm past N = {state.truncation}")

        branches.append(FockBranch(branch.weight, amplitudes))

    return FockState(truncation=state.truncation, branches=tuple(branches))


def apply_phase_shift(state: FockState, mode: int, chi: float) -> FockState:
    phases = np.exp(1j * chi * np.arange(state.truncation + 1))
    shape = [1] * state.modes
    shape[mode] = state.truncation + 1
    return FockState(
        truncation=state.truncation,
        branches=tuple(FockBranch(b.weight, b.amplitudes * phases.reshape(shape)) for b in state.branches),
    )


def project_mode(state: FockState, mode: int, functional: np.ndarray) -> FockState:
    """Contract ``mode`` with the row vector ⟨f|n⟩; the result is unnormalized and has one mode fewer."""
    return FockState(
        truncation=state.truncation,
        branches=tuple(
            FockBranch(b.weight, np.tensordot(functional, b.amplitudes, axes=([0], [mode]))) for b in state.branches
        ),
    )


def reduced_matrix(state: FockState) -> np.ndarray:
    if state.modes != 1:
        raise InvalidParameterError("reduced_matrix needs a single remaining mode")

    dim = state.truncation + 1
    rho = np.zeros((dim, dim), dtype=complex)
    for branch in state.branches:
        rho += branch.weight * np.outer(branch.amplitudes, branch.amplitudes.conj())

    return rho


def to_density_matrix2(rho: np.ndarray) -> tuple[DensityMatrix2, float]:
    # Returns the normalized state and the trace.
    weight = float(np.trace(rho).real)
    if weight <= 0.0:
        raise ZeroProbabilityError("conditioning event has zero weight")

    outside = float(np.abs(rho[2:, :]).max(initial=0.0) + np.abs(rho[:, 2:]).max(initial=0.0))
    if outside > SUPPORT_TOLERANCE * max(weight, 1.0):
        raise InvalidStateError(f"output has multiphoton support ({outside:.3g})")

    block = rho[:2, :2] / weight
    # DensityMatrix2 stores rho01 = ⟨1|ρ|0⟩, matching rho01 = E α* β.
    d = DensityMatrix2(rho00=block[0, 0].real, rho01=block[1, 0], rho10=block[0, 1], rho11=block[1, 1].real)
    return d, weight


def beam_splitter_state(q: SingleRailQubit, t: float, truncation: int) -> FockState:
    """ρ ⊗ |0⟩⟨0| after the beam splitter; mode 0 is measured, mode 1 carries the output."""
    return apply_beam_splitter(qubit_state(q, 2, truncation), 0, 1, t)


def conditional_output(
    q: SingleRailQubit, t: float, quadrature: float, phi: float, truncation: int = DEFAULT_TRUNCATION
) -> tuple[DensityMatrix2, float]:
    state = beam_splitter_state(q, t, truncation)
    projected = project_mode(state, 0, homodyne_functional(truncation, quadrature, phi))
    return to_density_matrix2(reduced_matrix(projected))


def homodyne_density(
    state: FockState, mode: int, quadrature: float | np.ndarray, phi: float = 0.0
) -> float | np.ndarray:
    x = np.asarray(quadrature, dtype=float)
    functional = homodyne_functional(state.truncation, x, phi)
    density = np.zeros(x.shape)
    for branch in state.branches:
        rest = np.tensordot(functional, branch.amplitudes, axes=([-1], [mode]))
        axes = tuple(range(x.ndim, rest.ndim))
        density = density + branch.weight * (np.abs(rest) ** 2).sum(axis=axes)

    return float(density) if density.ndim == 0 else density


def _conditioned_states(state: FockState, quadratures: np.ndarray, phi: float) -> np.ndarray:
    functional = homodyne_functional(state.truncation, quadratures, phi)
    rho = np.zeros((len(quadratures), 2, 2), dtype=complex)
    for branch in state.branches:
        vectors = functional @ branch.amplitudes[:, :2]
        rho += branch.weight * vectors[:, :, None] * vectors.conj()[:, None, :]

    traces = np.trace(rho, axis1=1, axis2=2).real
    return rho / traces[:, None, None]


def _sample_partition(
    seed_sequence: np.random.SeedSequence, count: int, grid: np.ndarray, cdf: np.ndarray, low: float, high: float
) -> np.ndarray:
    rng = np.random.default_rng(seed_sequence)
    samples = np.interp(rng.random(count), cdf, grid)
    return samples[(samples >= low) & (samples <= high)]


def monte_carlo_conversion(
    q: SingleRailQubit,
    t: float,
    quadrature_center: float,
    phi: float,
    window: float,
    samples: int,
    seed: int,
    truncation: int = DEFAULT_TRUNCATION,
    partitions: int = 1,
    grid_points: int = GRID_POINTS,
) -> MonteCarloResult:
    """Sample homodyne outcomes by inverse CDF and condition on |Q − Q_center| <= window.

    Partition i draws from the i-th child of SeedSequence(seed); results depend
    only on (seed, partitions).
    """
    if window <= 0.0 or samples < 1 or partitions < 1:
        raise InvalidParameterError("window must be positive and samples, partitions at least one")

    state = beam_splitter_state(q, t, truncation)
    grid = np.linspace(-GRID_LIMIT, GRID_LIMIT, grid_points)
    cdf = integrate.cumulative_trapezoid(homodyne_density(state, 0, grid, phi), grid, initial=0.0)
    cdf /= cdf[-1]
    low, high = quadrature_center - window, quadrature_center + window

    counts = [samples // partitions + (1 if i < samples % partitions else 0) for i in range(partitions)]
    children = np.random.SeedSequence(seed).spawn(partitions)
    with ThreadPoolExecutor(max_workers=partitions) as pool:
        accepted = list(pool.map(lambda args: _sample_partition(*args, grid, cdf, low, high), zip(children, counts)))

    accepted_samples = np.concatenate(accepted)
    acceptances = int(accepted_samples.size)
    rate = acceptances / samples
    stderr = math.sqrt(rate * (1.0 - rate) / samples)
    expected_rate, _ = integrate.quad(
        lambda x: homodyne_density(state, 0, x, phi), max(low, -GRID_LIMIT), min(high, GRID_LIMIT), limit=200
    )
    logger.debug("monte carlo seed=%d accepted %d/%d (expected rate %.6g)", seed, acceptances, samples, expected_rate)

    conditioned, conditioned_stderr = None, 0.0
    if acceptances:
        per_sample = _conditioned_states(state, accepted_samples, phi)
        mean = per_sample.mean(axis=0)
        conditioned = DensityMatrix2(rho00=mean[0, 0].real, rho01=mean[1, 0], rho10=mean[0, 1], rho11=mean[1, 1].real)
        if acceptances > 1:
            conditioned_stderr = float(np.abs(per_sample.std(axis=0, ddof=1)).max() / math.sqrt(acceptances))

    return MonteCarloResult(
        samples=samples,
        acceptances=acceptances,
        rate=rate,
        stderr=stderr,
        expected_rate=expected_rate,
        seed=seed,
        conditioned=conditioned,
        conditioned_stderr=conditioned_stderr,
    )


def povm_mixture_output(
    q: SingleRailQubit, t: float, element: PovmElement, truncation: int | None = None
) -> PovmOutcome:
    """Condition on a generalized measurement element via M = Σ p_i |σ_i⟩⟨Q_i|.

    Each singular pair contributes the projective branch onto ⟨Q_i| with weight
    p_i; the output is their statistical mixture.
    """
    dim = element.matrix.shape[0]
    truncation = dim - 1 if truncation is None else truncation
    if dim != truncation + 1:
        raise InvalidParameterError(f"element of size {dim} does not match truncation {truncation}")

    state = beam_splitter_state(q, t, truncation)
    _, singular_values, right = np.linalg.svd(element.matrix)
    mixture = np.zeros((dim, dim), dtype=complex)
    efficiencies = []
    for p, row in zip(singular_values, right):
        if p < SINGULAR_VALUE_CUTOFF:
            continue

        branch = reduced_matrix(project_mode(state, 0, row))
        if np.trace(branch).real <= 0.0:
            continue

        mixture += p * branch
        efficiencies.append(generalized_efficiency(to_density_matrix2(branch)[0]))

    output, weight = to_density_matrix2(mixture)
    return PovmOutcome(output=output, weight=weight, branch_efficiencies=tuple(efficiencies))


def network_reduction_check(
    q: SingleRailQubit,
    bs_line: Sequence[tuple[tuple[int, int], float]],
    measured_settings: Sequence[HomodyneSetting],
    truncation: int = DEFAULT_TRUNCATION,
    output_mode: int | None = None,
) -> NetworkReductionResult:
    """Run a line of beam splitters with vacuum ancillae and homodyne conditioning
    on every mode but ``output_mode``, then compare with the single-splitter
    scheme solved for the observed output."""
    modes = max(2, 1 + max(max(pair) for pair, _ in bs_line))
    output_mode = modes - 1 if output_mode is None else output_mode
    measured = [mode for mode in range(modes) if mode != output_mode]
    if len(measured_settings) != len(measured):
        raise InvalidParameterError(f"expected {len(measured)} homodyne settings, got {len(measured_settings)}")

    state = qubit_state(q, modes, truncation)
    for (mode_a, mode_b), t in bs_line:
        state = apply_beam_splitter(state, mode_a, mode_b, t)

    # Project from the highest mode down so remaining indices stay valid.
    for mode, setting in sorted(zip(measured, measured_settings), key=lambda item: -item[0]):
        state = project_mode(state, mode, homodyne_functional(truncation, setting.quadrature, setting.phi))

    observed, weight = to_density_matrix2(reduced_matrix(state))
    output = from_density_matrix(observed)
    t_equivalent = solve_transmissivity(q, output)
    setting = solve_homodyne_setting(q, output, t_equivalent)
    equivalent = project_output(q, BeamSplitter(t_equivalent), homodyne_coefficients(setting)).output
    residual = state_distance(observed, equivalent)
    logger.debug("network reduction residual %.3g with t=%.12g", residual, t_equivalent)
    return NetworkReductionResult(
        residual=residual, output=output, weight=weight, equivalent_t=t_equivalent, equivalent_setting=setting
    )


def traced_output(q: SingleRailQubit, t: float, truncation: int = DEFAULT_TRUNCATION) -> DensityMatrix2:
    identity = PovmElement(np.eye(truncation + 1), label="any")
    return povm_mixture_output(q, t, identity, truncation).output


def phase_shifted_output(q: SingleRailQubit, chi: float, truncation: int = DEFAULT_TRUNCATION) -> DensityMatrix2:
    state = apply_phase_shift(qubit_state(q, 1, truncation), 0, chi)
    return to_density_matrix2(reduced_matrix(state))[0]
