import csv
import json
import math

import pytest

from singlerail.cli import exit_code_for, main
from singlerail.errors import (
    InfeasibleError,
    NoSolutionError,
    PovmValidationError,
    TruncationOverflowError,
    ZeroProbabilityError,
)
from singlerail.models import FeasibilityVerdict
from singlerail.types import Verdict

HALF = 1.0 / math.sqrt(2.0)
PHOTON = json.dumps({"alpha": [0, 0], "beta": [1, 0], "efficiency": 0.8})
STANDARD_TARGET = json.dumps({"alpha": [HALF, 0], "beta": [HALF, 0], "efficiency": 0.85})
TOO_GOOD_TARGET = json.dumps({"alpha": [HALF, 0], "beta": [HALF, 0], "efficiency": 0.9})


def run(runner, *args: str):
    return runner.invoke(main, list(args), catch_exceptions=False)


def test_efficiency_of_vacuum(runner) -> None:
    result = run(runner, "efficiency", '{"alpha": [1, 0], "beta": [0, 0], "efficiency": 0}')
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["gen_efficiency"] == 0.0
    assert report["density_matrix"]["rho"][0][0] == [1.0, 0.0]


def test_efficiency_of_qubit_file(runner, tmp_path) -> None:
    path = tmp_path / "state.json"
    path.write_text(json.dumps({"alpha": [HALF, 0], "beta": [HALF, 0], "efficiency": 0.8}))
    result = run(runner, "efficiency", str(path))
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["E"] == 0.8
    assert report["gen_efficiency"] == pytest.approx(2.0 / 3.0, abs=1e-11)


def test_efficiency_of_density_matrix(runner) -> None:
    result = run(runner, "efficiency", '{"rho": [[0.7, 0.3], [0.3, 0.3]]}')
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["gen_efficiency"] == pytest.approx(0.3 / (1.0 - 0.09 / 0.3), abs=1e-11)
    assert report["E"] == pytest.approx(0.6, abs=1e-11)


@pytest.mark.parametrize(
    "state, code",
    [
        ("{not json", 2),
        ('{"alpha": [1, 0], "beta": [1, 0], "efficiency": 0.5, "extra": 1}', 2),
        ('{"alpha": [1, 0], "beta": [1, 0], "efficiency": 1.5}', 2),
        ('{"rho": [[0.7, 0.3]]}', 2),
        ('{"rho": [[1.2, 0], [0, -0.2]]}', 3),
        ('{"rho": [[0.5, 0.6], [0.6, 0.5]]}', 3),
        ('{"alpha": [0, 0], "beta": [0, 0], "efficiency": 0.5}', 3),
    ],
)
def test_efficiency_rejects(runner, state: str, code: int) -> None:
    result = run(runner, "efficiency", state)
    assert result.exit_code == code
    assert "message" in json.loads(result.stderr)


def test_convert_standard_example(runner) -> None:
    result = run(runner, "convert", PHOTON, "--bs-t", str(HALF), "--Q", "0.5")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["success_density"] == pytest.approx(math.sqrt(2.0 / math.pi) * math.exp(-0.5), rel=1e-10)
    assert report["output"]["efficiency"] == pytest.approx(0.8)
    assert report["gen_efficiency"] == pytest.approx(2.0 / 3.0)
    assert report["amplitude_residual"] < 1e-12
    assert report["transfer_residual"] < 1e-10


def test_convert_rejects_transmissivity(runner) -> None:
    result = run(runner, "convert", PHOTON, "--bs-t", "1.5", "--Q", "0.5")
    assert result.exit_code == 2
    assert json.loads(result.stderr)["message"] == "InvalidParameterError"


def test_plan_standard_pair(runner) -> None:
    result = run(runner, "plan", PHOTON, STANDARD_TARGET)
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["verdict"]["verdict"] == "FEASIBLE_STRICT"
    (stage,) = report["plan"]["stages"]
    assert stage["beam_splitter_t"] == pytest.approx(0.84163, abs=1e-5)
    assert stage["homodyne"]["Q"] == pytest.approx(0.77920, abs=1e-5)
    assert report["plan"]["input"]["efficiency"] == 0.8


def test_plan_infeasible_prints_verdict(runner) -> None:
    result = run(runner, "plan", PHOTON, TOO_GOOD_TARGET)
    assert result.exit_code == 4
    report = json.loads(result.stdout)
    assert report["verdict"]["verdict"] == "INFEASIBLE"
    assert report["verdict"]["reason"] == "generalized efficiency would increase"
    assert report["plan"] is None


def test_plan_identical_states(runner) -> None:
    state = json.dumps({"alpha": [HALF, 0], "beta": [HALF, 0], "efficiency": 0.5})
    result = run(runner, "plan", state, state)
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["verdict"]["verdict"] == "FEASIBLE_EQUAL_PHASE"
    assert report["plan"]["stages"] == [{"beam_splitter_t": 1.0, "homodyne": {"Q": 0.0, "phi": 0.0}}]


def test_convert_far_tail_is_zero_probability(runner) -> None:
    result = run(runner, "convert", PHOTON, "--bs-t", str(HALF), "--Q", "30")
    assert result.exit_code == 5
    assert json.loads(result.stderr)["message"] == "ZeroProbabilityError"


def test_plan_pure_pair_toward_near_vacuum(runner) -> None:
    source = json.dumps({"alpha": [HALF, 0], "beta": [HALF, 0], "efficiency": 1})
    target = json.dumps({"alpha": [math.sqrt(1.0 - 1e-4), 0], "beta": [0.01, 0], "efficiency": 1})
    result = run(runner, "plan", source, target)
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["verdict"]["verdict"] == "FEASIBLE_EQUAL_PURE"
    (stage,) = report["plan"]["stages"]
    assert stage["beam_splitter_t"] < HALF
    assert stage["homodyne"]["Q"] < 1.0


def test_plan_prints_verdict_before_failing(runner) -> None:
    source = json.dumps({"alpha": [1, 0], "beta": [1e-6, 0], "efficiency": 1})
    target = json.dumps({"alpha": [0, 0], "beta": [1, 0], "efficiency": 1})
    result = run(runner, "plan", source, target)
    assert result.exit_code == 5
    report = json.loads(result.stdout)
    assert report["verdict"]["verdict"] == "FEASIBLE_EQUAL_PURE"
    assert report["plan"] is None
    assert json.loads(result.stderr)["message"] == "ZeroProbabilityError"


def test_plan_pure_to_vacuum(runner) -> None:
    source = json.dumps({"alpha": [HALF, 0], "beta": [HALF, 0], "efficiency": 1})
    result = run(runner, "plan", source, '{"alpha": [1, 0], "beta": [0, 0], "efficiency": 0}')
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["verdict"]["verdict"] == "FEASIBLE_VIA_ATTENUATION"
    assert len(report["plan"]["stages"]) == 1


@pytest.fixture
def plan_file(runner, tmp_path):
    result = run(runner, "plan", PHOTON, STANDARD_TARGET)
    path = tmp_path / "plan.json"
    path.write_text(result.stdout)
    return path


def test_verify_plan_without_sampling(runner, plan_file) -> None:
    result = run(runner, "verify", str(plan_file), "--samples", "0")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["pass"] is True
    assert report["monte_carlo"] is None
    assert all(check["pass"] for check in report["checks"])


def test_verify_corrupted_plan(runner, plan_file, tmp_path) -> None:
    plan = json.loads(plan_file.read_text())["plan"]
    plan["stages"][0]["beam_splitter_t"] -= 0.1
    path = tmp_path / "corrupted.json"
    path.write_text(json.dumps(plan))
    result = run(runner, "verify", str(path), "--samples", "0")
    assert result.exit_code == 1
    assert json.loads(result.stdout)["pass"] is False


def test_verify_is_reproducible(runner, plan_file) -> None:
    args = ("verify", str(plan_file), "--samples", "20000", "--seed", "5", "--partitions", "3")
    first, second = run(runner, *args), run(runner, *args)
    assert first.stdout == second.stdout
    assert json.loads(first.stdout)["monte_carlo"]["seed"] == 5


def test_verify_needs_an_input_state(runner, plan_file, tmp_path) -> None:
    plan = json.loads(plan_file.read_text())["plan"]
    del plan["input"]
    path = tmp_path / "bare.json"
    path.write_text(json.dumps(plan))
    assert run(runner, "verify", str(path), "--samples", "0").exit_code == 2

    result = run(runner, "verify", str(path), "--samples", "0", "--state", PHOTON)
    assert result.exit_code == 0


def test_sweep_to_file(runner, tmp_path) -> None:
    out = tmp_path / "sweep.csv"
    result = run(runner, "sweep", PHOTON, "--axis", "Q", "--min", "-1", "--max", "1", "--steps", "5", "--out", str(out))
    assert result.exit_code == 0
    with out.open(newline="") as stream:
        rows = list(csv.reader(stream))

    assert rows[0] == ["param", "alpha_re", "alpha_im", "beta_re", "beta_im", "E", "gen_eff", "success_density"]
    assert len(rows) == 6
    assert float(rows[4][0]) == 0.5
    assert float(rows[4][6]) == pytest.approx(2.0 / 3.0, abs=1e-11)


def test_sweep_output_efficiency_to_stdout(runner) -> None:
    result = run(runner, "sweep", PHOTON, "--axis", "E_out", "--min", "0.1", "--max", "0.99", "--steps", "10")
    assert result.exit_code == 0
    rows = list(csv.reader(result.stdout.splitlines()))
    assert len(rows) == 1 + 8


def test_sweep_rejects_zero_steps(runner) -> None:
    result = run(runner, "sweep", PHOTON, "--axis", "t", "--min", "0", "--max", "1", "--steps", "0")
    assert result.exit_code == 2


def test_log_level_option(runner) -> None:
    result = run(runner, "--log-level", "debug", "efficiency", PHOTON)
    assert result.exit_code == 0


def test_exit_code_table() -> None:
    verdict = FeasibilityVerdict(Verdict.infeasible, "no", 0.5, 0.9)
    assert exit_code_for(NoSolutionError()) == 2
    assert exit_code_for(PovmValidationError()) == 3
    assert exit_code_for(InfeasibleError(verdict)) == 4
    assert exit_code_for(ZeroProbabilityError()) == 5
    assert exit_code_for(TruncationOverflowError()) == 6
    with pytest.raises(RuntimeError):
        exit_code_for(RuntimeError("unmapped"))
