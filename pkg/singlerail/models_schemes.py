from typing import Any, Union

import numpy as np
from pydantic import BaseModel, Extra, confloat, validator

from .models import (
    Attenuation,
    BeamSplitter,
    Conditional,
    ConversionPlan,
    DensityMatrix2,
    HomodyneSetting,
    PhaseShift,
    SingleRailQubit,
    Stage,
)
from .qubit_model import canonicalize, to_density_matrix

SIGNIFICANT_DIGITS = 12

ComplexPair = tuple[float, float]
# Real entries may be written as bare numbers.
ComplexEntry = Union[ComplexPair, float]


def rounded(value: float) -> float:
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def to_complex(entry: ComplexEntry) -> complex:
    return complex(*entry) if isinstance(entry, tuple) else complex(entry)


def pair(value: complex) -> ComplexPair:
    return rounded(value.real), rounded(value.imag)


def validate_square(field: str, size: int) -> Any:
    @validator(field, allow_reuse=True)
    def square_shape(cls, value) -> list:
        if len(value) == size and all(len(row) == size for row in value):
            return value

        raise ValueError(f"expected a {size}x{size} matrix")

    return square_shape


class BaseScheme(BaseModel):
    class Config:
        extra = Extra.forbid


class QubitScheme(BaseScheme):
    alpha: ComplexEntry
    beta: ComplexEntry
    efficiency: confloat(ge=0.0, le=1.0)  # type: ignore[valid-type]

    @classmethod
    def from_model(cls, q: SingleRailQubit) -> "QubitScheme":
        return cls(alpha=pair(q.alpha), beta=pair(q.beta), efficiency=rounded(q.efficiency))

    def to_model(self) -> SingleRailQubit:
        return canonicalize(to_complex(self.alpha), to_complex(self.beta), self.efficiency)


class DensityMatrixScheme(BaseScheme):
    rho: list[list[ComplexEntry]]

    rho_shape = validate_square("rho", 2)

    @classmethod
    def from_model(cls, d: DensityMatrix2 | SingleRailQubit) -> "DensityMatrixScheme":
        if isinstance(d, SingleRailQubit):
            d = to_density_matrix(d)

        return cls(rho=[[pair(d.rho00), pair(d.rho01)], [pair(d.rho10), pair(d.rho11)]])

    def to_model(self) -> DensityMatrix2:
        return DensityMatrix2.from_array(np.array([[to_complex(entry) for entry in row] for row in self.rho]))


class HomodyneScheme(BaseScheme):
    Q: float
    phi: float = 0.0


class AttenuationStageScheme(BaseScheme):
    attenuation: confloat(gt=0.0, le=1.0)  # type: ignore[valid-type]


class ConditionalStageScheme(BaseScheme):
    beam_splitter_t: confloat(ge=0.0, le=1.0)  # type: ignore[valid-type]
    homodyne: HomodyneScheme | None


class PhaseShiftStageScheme(BaseScheme):
    phase_shift: float


StageScheme = Union[AttenuationStageScheme, ConditionalStageScheme, PhaseShiftStageScheme]


def stage_scheme(stage: Stage) -> StageScheme:
    if isinstance(stage, Attenuation):
        return AttenuationStageScheme(attenuation=rounded(stage.tau))

    if isinstance(stage, PhaseShift):
        return PhaseShiftStageScheme(phase_shift=rounded(stage.chi))

    homodyne = None
    if stage.setting is not None:
        homodyne = HomodyneScheme(Q=rounded(stage.setting.quadrature), phi=rounded(stage.setting.phi))

    return ConditionalStageScheme(beam_splitter_t=rounded(stage.beam_splitter.t), homodyne=homodyne)


def stage_model(scheme: StageScheme) -> Stage:
    if isinstance(scheme, AttenuationStageScheme):
        return Attenuation(scheme.attenuation)

    if isinstance(scheme, PhaseShiftStageScheme):
        return PhaseShift(scheme.phase_shift)

    setting = None
    if scheme.homodyne is not None:
        setting = HomodyneSetting(scheme.homodyne.Q, scheme.homodyne.phi)

    return Conditional(BeamSplitter(scheme.beam_splitter_t), setting)


class PlanScheme(BaseScheme):
    input: QubitScheme | None = None
    stages: list[StageScheme]
    predicted_output: QubitScheme
    predicted_success_density: confloat(ge=0.0)  # type: ignore[valid-type]

    @classmethod
    def from_model(cls, plan: ConversionPlan) -> "PlanScheme":
        return cls(
            input=None if plan.source is None else QubitScheme.from_model(plan.source),
            stages=[stage_scheme(stage) for stage in plan.stages],
            predicted_output=QubitScheme.from_model(plan.predicted_output),
            predicted_success_density=rounded(plan.predicted_success_density),
        )

    def to_model(self) -> ConversionPlan:
        return ConversionPlan(
            stages=tuple(stage_model(stage) for stage in self.stages),
            predicted_output=self.predicted_output.to_model(),
            predicted_success_density=self.predicted_success_density,
            source=None if self.input is None else self.input.to_model(),
        )


def parse_state(data: Any) -> QubitScheme | DensityMatrixScheme:
    if isinstance(data, dict) and "rho" in data:
        return DensityMatrixScheme.parse_obj(data)

    return QubitScheme.parse_obj(data)
