"""Finite intersection principle workbench: families, reductions, solvers and audits."""

from .core import (F_PROPERTY, Family, FipError, IndexMap, IntersectionProperty, PropertyKind,
                   StagedSet, WitnessCertificate, check_property, d, dbar, distinct, is_maximal,
                   subfamily_index_of)
from .fileformats import ParseError, format_family, parse_family, read_family
from .oracles import brute_force_maximal
from .reductions import (decode_range, encode_range, hat_transform, hat_transform_bounded,
                         pull_back_solution)
from .replay import replay
from .scenarios import GOLDEN, Scenario, run_scenario
from .solvers import compute_g, solve_greedy, solve_hyperimmune, solve_permitting
from .trace import StageTrace, TraceEvent

__all__ = [
    "F_PROPERTY", "Family", "FipError", "GOLDEN", "IndexMap", "IntersectionProperty", "ParseError",
    "PropertyKind", "Scenario", "StageTrace", "StagedSet", "TraceEvent", "WitnessCertificate",
    "brute_force_maximal", "check_property", "compute_g", "d", "dbar", "decode_range", "distinct",
    "encode_range", "format_family", "hat_transform", "hat_transform_bounded", "is_maximal",
    "parse_family", "pull_back_solution", "read_family", "replay", "run_scenario", "solve_greedy",
    "solve_hyperimmune", "solve_permitting", "subfamily_index_of",
]
