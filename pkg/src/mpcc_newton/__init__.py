"""Globalized semismooth Newton method for M-stationary points of MPCCs."""
from .diagnostics import (
    StationarityClass,
    active_partition,
    check_mpcc_licq,
    check_mpcc_ssoc,
    check_relaxed_lq_cq,
    classify_stationarity,
)
from .errors import ConfigError, DimensionError, EnumerationLimitError, MpccError, ProblemFormatError
from .merit import MeritEval, assemble_F_fb, merit
from .model import IndexPartition, LagrangianEval, PrimalDual
from .problem import (
    AffineMap,
    LinearQuadraticProblem,
    MpccProblem,
    builtin,
    lagrangian,
    obstacle,
    perturbed,
    reference_point,
    toy,
)
from .residual import ActivePartition, assemble_DF, assemble_F, extract_partition
from .solver import SolveOptions, SolveReport, SolveStatus, StepKind, newton_direction, solve_global, solve_local

__version__ = "0.1.0"
