"""Distances between sets of trajectories.

The package provides the extended point metric and trajectory padding, the
classical OSPA and CLEAR MOT baselines, the exact natural distance over
permutation sequences, its convex relaxation over doubly stochastic
matrices, trade-off curves and a synthetic benchmark generator.
"""

from trajdist.core import (
    ABSENT,
    ExtendedMetricParams,
    ExtendedPair,
    Trajectory,
    TrajectorySet,
    d_plus,
    distance_matrices,
    extend_pair,
)
from trajdist.errors import (
    InfeasiblePatternError,
    InstanceTooLargeError,
    InvalidInputError,
    NotConvergedError,
    TrajdistError,
)
from trajdist.permutations import SwitchCost, switch_cost
from trajdist.exact import (
    MetricResult,
    clear_mot_association,
    d_nat_bruteforce,
    motp,
    ospa,
    swi_dist,
)
from trajdist.comp import CompParams, TradeoffCurve, auc, d_comp, tradeoff_curve

__all__ = [
    "ABSENT",
    "CompParams",
    "ExtendedMetricParams",
    "ExtendedPair",
    "InfeasiblePatternError",
    "InstanceTooLargeError",
    "InvalidInputError",
    "MetricResult",
    "NotConvergedError",
    "SwitchCost",
    "TradeoffCurve",
    "Trajectory",
    "TrajectorySet",
    "TrajdistError",
    "auc",
    "clear_mot_association",
    "d_comp",
    "d_nat_bruteforce",
    "d_plus",
    "distance_matrices",
    "extend_pair",
    "motp",
    "ospa",
    "swi_dist",
    "switch_cost",
    "tradeoff_curve",
]

__version__ = "0.1.0"
