"""LP-based verification of linear assume/guarantee contracts."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .contracts import CascadeTriple, LinearContract, load_contract, save_contract
from .lp import LPOutcome, LPProblem, Status, solve
from .polyhedra import PolyhedronVRep, enumerate_v_rep
from .refinement import (HorizonConfig, RefinementVerdict, check_extendability,
                         check_refinement, oracle_check_implication, suggest_horizons)
from .satisfaction import AffineSystem, InitSet, SatisfactionVerdict, check_satisfaction

__all__ = [
    "AffineSystem", "CascadeTriple", "HorizonConfig", "InitSet", "LPOutcome", "LPProblem",
    "LinearContract", "PolyhedronVRep", "RefinementVerdict", "SatisfactionVerdict", "Status",
    "check_extendability", "check_refinement", "check_satisfaction", "enumerate_v_rep",
    "load_contract", "oracle_check_implication", "save_contract", "solve", "suggest_horizons",
]
