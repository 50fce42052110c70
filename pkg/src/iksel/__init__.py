"""Numerical inverse kinematics seeded from a precomputed pose database."""
from .errors import (ContractViolation, DatabaseFormatError, DatabaseTooLargeError, IKSelError,
                     IncompatibleModelError, ModelFileError, NoCandidatesError, PoolExhaustedError)
from .kinematics import (JointSpec, Pose, RobotModel, Transform, forward_kinematics, jacobian,
                         pose_error, pose_from_vector, regularized_pinv, within_limits)
from .modelfile import load_model
from .seedstore import (SeedDatabase, SeedRecord, build_database, load_database, query_k_nearest,
                        query_within, save_database)
from .selector import (ReselectPolicy, SelectionMetric, SelectorConfig, SolveReport, SolveStatus,
                       rank_candidates, reselect, solve)
from .solvers import IterationOutcome, SolverConfig, SolverKind, Status, iterate, weighted_error_norm

__version__ = "0.1.0"
