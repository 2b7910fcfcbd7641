from enum import Enum


class Verdict(str, Enum):
    feasible_strict = "FEASIBLE_STRICT"
    feasible_equal_pure = "FEASIBLE_EQUAL_PURE"
    feasible_equal_phase = "FEASIBLE_EQUAL_PHASE"
    feasible_via_attenuation = "FEASIBLE_VIA_ATTENUATION"
    infeasible = "INFEASIBLE"


class SweepAxis(str, Enum):
    quadrature = "Q"
    transmissivity = "t"
    output_efficiency = "E_out"
