"""Randomized end-to-end properties of the conversion scheme, checked at desk scale."""

import cmath
import math

import numpy as np
import pytest

from conftest import SQRT_HALF, random_qubit
from singlerail import analytic_conversion as analytic
from singlerail import fock_oracle, solver
from singlerail.models import Attenuation, BeamSplitter, HomodyneSetting, PovmElement
from singlerail.qubit_model import (
    canonicalize,
    efficiency_second_derivative,
    generalized_efficiency,
    mix,
    state_distance,
    to_density_matrix,
)
from singlerail.types import Verdict
from singlerail.verification import verify_plan

INSTANCES = 10_000


def random_instances(rng: np.random.Generator, count: int):
    for _ in range(count):
        q = random_qubit(rng)
        t = rng.uniform(0.01, 1.0)
        setting = HomodyneSetting(rng.uniform(-3.0, 3.0), rng.uniform(0.0, 2.0 * math.pi))
        yield q, BeamSplitter(t), setting


def target_with_efficiency(rng: np.random.Generator, gen_efficiency: float, beta_square: float):
    """Qubit with the given |β|² whose generalized efficiency is ``gen_efficiency``."""
    efficiency = gen_efficiency / (beta_square + gen_efficiency * (1.0 - beta_square))
    phase = rng.uniform(0.0, 2.0 * math.pi)
    return canonicalize(math.sqrt(1.0 - beta_square), math.sqrt(beta_square) * cmath.exp(1j * phase), efficiency)


def test_conversion_never_increases_generalized_efficiency(rng) -> None:
    violations = 0
    for q, bs, setting in random_instances(rng, INSTANCES):
        outcome = analytic.project_output(q, bs, analytic.homodyne_coefficients(setting))
        violations += generalized_efficiency(outcome.output) > generalized_efficiency(q) + 1e-12

    assert violations == 0


def test_closed_forms_match_fock_oracle(rng) -> None:
    worst_state, worst_weight = 0.0, 0.0
    for q, bs, setting in random_instances(rng, INSTANCES):
        outcome = analytic.project_output(q, bs, analytic.homodyne_coefficients(setting))
        observed, weight = fock_oracle.conditional_output(q, bs.t, setting.quadrature, setting.phi)
        worst_state = max(worst_state, state_distance(outcome.output, observed))
        worst_weight = max(worst_weight, abs(weight - outcome.success_weight) / outcome.success_weight)

    assert worst_state < 1e-10
    assert worst_weight < 1e-10


def test_transfer_relations_hold(rng) -> None:
    for q, bs, setting in random_instances(rng, INSTANCES):
        coeffs = analytic.homodyne_coefficients(setting)
        outcome = analytic.project_output(q, bs, coeffs)
        assert analytic.amplitude_relation_residual(q, outcome.output, bs, coeffs) < 1e-12
        assert analytic.transfer_relation_check(q, outcome.output, bs.t) < 1e-10
        if outcome.output.efficiency < 1.0:
            density = analytic.success_density(q, outcome.output, coeffs.theta0)
            # E′ is stored in double precision, so 1 − E′ carries an absolute error near 1e-16.
            rel = 1e-10 + 1e-15 / (1.0 - outcome.output.efficiency)
            assert density == pytest.approx(outcome.unnormalized_trace, rel=rel)


def test_generalized_efficiency_is_convex(rng) -> None:
    for _ in range(INSTANCES):
        d1, d2 = to_density_matrix(random_qubit(rng)), to_density_matrix(random_qubit(rng))
        p = rng.uniform(0.0, 1.0)
        bound = p * generalized_efficiency(d1) + (1.0 - p) * generalized_efficiency(d2)
        assert generalized_efficiency(mix(d1, d2, p)) <= bound + 1e-12
        assert efficiency_second_derivative(d1, d2, p) >= -1e-12


def test_second_derivative_matches_finite_differences(rng) -> None:
    h = 1e-4
    for _ in range(1_000):
        d1 = to_density_matrix(random_qubit(rng, efficiency=(0.2, 0.8), beta_square=(0.2, 1.0)))
        d2 = to_density_matrix(random_qubit(rng, efficiency=(0.2, 0.8), beta_square=(0.2, 1.0)))
        p = rng.uniform(0.1, 0.9)
        f = [generalized_efficiency(mix(d1, d2, p + k * h)) for k in (-1, 0, 1)]
        finite_difference = (f[0] - 2.0 * f[1] + f[2]) / h**2
        value = efficiency_second_derivative(d1, d2, p)
        assert value == pytest.approx(finite_difference, abs=max(1e-6, 1e-4 * abs(value)))


def test_vacuum_mixture_is_tight_only_without_vacuum_amplitude(rng) -> None:
    vacuum = to_density_matrix(canonicalize(1.0, 0.0, 0.0))
    for _ in range(100):
        p = rng.uniform(0.1, 0.9)
        photon = to_density_matrix(canonicalize(0.0, 1.0, rng.uniform(0.1, 1.0)))
        mixed = generalized_efficiency(mix(photon, vacuum, p))
        assert mixed == pytest.approx(p * generalized_efficiency(photon), abs=1e-14)

        coherent = to_density_matrix(random_qubit(rng, efficiency=(0.1, 1.0), beta_square=(0.1, 0.9)))
        mixed = generalized_efficiency(mix(coherent, vacuum, p))
        assert p * generalized_efficiency(coherent) - mixed > 1e-12


def test_feasible_pairs_are_synthesized(rng) -> None:
    for _ in range(1_000):
        q = random_qubit(rng, efficiency=(0.1, 0.99), beta_square=(0.25, 1.0))
        ratio = rng.uniform(0.05, 0.9)
        target = target_with_efficiency(rng, ratio * generalized_efficiency(q), rng.uniform(0.25, 1.0))

        plan = solver.synthesize_plan(q, target)
        assert state_distance(plan.predicted_output, target) < 1e-9
        assert plan.predicted_success_density > 0.0


def test_pure_to_mixed_routes_through_attenuation(rng) -> None:
    for _ in range(20):
        q = random_qubit(rng, efficiency=(1.0, 1.0), beta_square=(0.25, 1.0))
        target = target_with_efficiency(rng, rng.uniform(0.3, 0.9), rng.uniform(0.25, 1.0))
        assert analytic.classify_feasibility(q, target).verdict == Verdict.feasible_via_attenuation

        plan = solver.synthesize_plan(q, target)
        assert isinstance(plan.stages[0], Attenuation)
        assert state_distance(plan.predicted_output, target) < 1e-9
        report = verify_plan(plan, q, samples=0)
        assert report.passed, [check for check in report.checks if not check.passed]


def test_equal_efficiency_pairs_have_no_single_stage_realization(rng) -> None:
    t_values = np.linspace(0.0, 1.0, 46)
    q_values = np.linspace(-5.0, 5.0, 61)
    phi_values = np.linspace(0.0, 2.0 * math.pi, 36, endpoint=False)
    false_positives = 0
    for _ in range(100):
        while True:
            b, b_out = rng.uniform(0.2, 1.0, 2)
            q = canonicalize(math.sqrt(1.0 - b), math.sqrt(b), rng.uniform(0.2, 0.9))
            target = target_with_efficiency(rng, generalized_efficiency(q), b_out)
            if abs(b - b_out) >= 0.1 and abs(target.efficiency - q.efficiency) > 1e-3:
                break

        assert analytic.classify_feasibility(q, target).verdict == Verdict.infeasible
        result = solver.grid_search_realization(q, target, t_values, q_values, phi_values)
        assert result.points >= 100_000
        false_positives += result.best_residual <= 1e-9

    assert false_positives == 0


def test_monte_carlo_matches_homodyne_marginal(photon) -> None:
    window = 0.01
    result = fock_oracle.monte_carlo_conversion(photon, SQRT_HALF, 0.5, 0.0, window, 1_000_000, seed=2024, partitions=4)
    sigma = math.sqrt(result.expected_rate * (1.0 - result.expected_rate) / result.samples)
    assert abs(result.rate - result.expected_rate) <= 3.0 * sigma
    assert result.expected_rate == pytest.approx(2.0 * window * math.sqrt(2.0 / math.pi) * math.exp(-0.5), rel=1e-3)

    expected = canonicalize(SQRT_HALF, SQRT_HALF, 0.8)
    assert state_distance(expected, result.conditioned) <= 10.0 * window**2 + 3.0 * result.conditioned_stderr
    assert generalized_efficiency(result.conditioned) <= generalized_efficiency(photon) + 1e-3


def test_generalized_measurements_never_increase_efficiency(rng) -> None:
    for _ in range(1_000):
        q = random_qubit(rng)
        rank = int(rng.integers(1, 4))
        a = rng.normal(size=(3, rank)) + 1j * rng.normal(size=(3, rank))
        m = a @ a.conj().T
        element = PovmElement(m / np.linalg.eigvalsh(m).max())
        outcome = fock_oracle.povm_mixture_output(q, rng.uniform(0.05, 1.0), element, truncation=2)
        bound = generalized_efficiency(q) + 1e-10
        assert generalized_efficiency(outcome.output) <= bound
        assert max(outcome.branch_efficiencies) <= bound


def test_single_photon_source_cannot_be_pumped() -> None:
    photon = canonicalize(0.0, 1.0, 0.7)
    _, there = solver.optimize_over_output_efficiency(photon, 1.0, 1.0)
    qubit = there.predicted_output
    assert generalized_efficiency(qubit) <= 0.7 + 1e-12

    _, back = solver.optimize_over_output_efficiency(qubit, 0.0, 1.0)
    assert generalized_efficiency(back.predicted_output) <= 0.7 + 1e-12
    assert back.predicted_output.efficiency <= 0.7 + 1e-12


def test_attenuation_route_loses_efficiency_strictly(pure_plus) -> None:
    target = canonicalize(0.0, 1.0, 0.9)
    plan = solver.synthesize_plan(pure_plus, target)
    attenuation, conditional = plan.stages
    intermediate, _ = analytic.execute_plan(pure_plus, [attenuation])
    output, _ = analytic.execute_plan(intermediate, [conditional])

    assert generalized_efficiency(intermediate) < generalized_efficiency(pure_plus)
    assert generalized_efficiency(output) < generalized_efficiency(intermediate)
    assert analytic.classify_feasibility(output, pure_plus).verdict == Verdict.infeasible


def test_beam_splitter_line_reduces_to_single_splitter(rng) -> None:
    for _ in range(100):
        q = random_qubit(rng, efficiency=(0.2, 0.95), beta_square=(0.1, 1.0))
        t1, t2 = rng.uniform(0.2, 0.95, 2)
        settings = [HomodyneSetting(rng.uniform(-1.5, 1.5), rng.uniform(0.0, 2.0 * math.pi)) for _ in range(2)]
        result = fock_oracle.network_reduction_check(q, [((0, 1), t1), ((1, 2), t2)], settings)
        assert result.residual < 1e-9
        assert generalized_efficiency(result.output) <= generalized_efficiency(q) + 1e-12


def test_beam_splitter_line_with_pure_input_and_faint_output(rng) -> None:
    for _ in range(200):
        q = random_qubit(rng, efficiency=(1.0, 1.0), beta_square=(0.1, 1.0))
        t1, t2 = rng.uniform(0.2, 0.95), rng.uniform(0.01, 0.1)
        settings = [HomodyneSetting(rng.uniform(-1.5, 1.5), rng.uniform(0.0, 2.0 * math.pi)) for _ in range(2)]
        result = fock_oracle.network_reduction_check(q, [((0, 1), t1), ((1, 2), t2)], settings)
        assert result.residual < 1e-9
        assert result.equivalent_setting.quadrature <= analytic.RESOLVABLE_QUADRATURE
