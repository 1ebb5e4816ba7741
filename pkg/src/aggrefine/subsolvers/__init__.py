from .lad_lp import solve_weighted_lad
from .svm_dual import DualSolution, SvmSolution, SvmSolverError, solve_weighted_svm
from .bnb import BnbResult, solve_s3vm_bnb

__all__ = [
    "solve_weighted_lad",
    "solve_weighted_svm",
    "DualSolution",
    "SvmSolution",
    "SvmSolverError",
    "solve_s3vm_bnb",
    "BnbResult",
]
