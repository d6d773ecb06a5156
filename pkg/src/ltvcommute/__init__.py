"""Commutativity and transitivity of cascaded second-order linear time-varying systems."""

from .commute import (
    CommutativityReport,
    PairConstants,
    TransitivityReport,
    Verdict,
    check_pair,
    check_transitivity,
    compose_constants,
    invert_constants,
    required_ic,
    synthesize_pair,
    transform_invariant,
    transform_structure,
)
from .expr import CoeffExpr, differentiate, evaluate, is_constant, parse, render
from .sim import SimulationConfig, Trajectory, compare, reference_run, simulate_chain
from .system import InitialState, LTVSystem, commutativity_invariant, generate, load, save, structure_function

__version__ = "0.1.0"

__all__ = [
    "CoeffExpr",
    "CommutativityReport",
    "InitialState",
    "LTVSystem",
    "PairConstants",
    "SimulationConfig",
    "Trajectory",
    "TransitivityReport",
    "Verdict",
    "check_pair",
    "check_transitivity",
    "commutativity_invariant",
    "compare",
    "compose_constants",
    "differentiate",
    "evaluate",
    "generate",
    "invert_constants",
    "is_constant",
    "load",
    "parse",
    "reference_run",
    "render",
    "required_ic",
    "save",
    "simulate_chain",
    "structure_function",
    "synthesize_pair",
    "transform_invariant",
    "transform_structure",
]
