"""Relaxed association distance, its solvers and trade-off curves."""

from trajdist.comp.admm import AdmmResult, admm_solve
from trajdist.comp.lp import LPInstance, lp_build, lp_solve
from trajdist.comp.metric import CompParams, d_comp, d_comp_from_matrices, solve_alphas, sparsity_mask
from trajdist.comp.norms import NORMS, dual_norm, matrix_norm, prox_norm
from trajdist.comp.tradeoff import (
    TradeoffCurve,
    auc,
    auc_bounds,
    default_alpha_grid,
    default_thr_grid,
    lower_hull,
    motp_tradeoff,
    motp_tradeoff_from_matrices,
    tradeoff_curve,
    tradeoff_from_matrices,
)

__all__ = [
    "NORMS",
    "AdmmResult",
    "CompParams",
    "LPInstance",
    "TradeoffCurve",
    "admm_solve",
    "auc",
    "auc_bounds",
    "d_comp",
    "d_comp_from_matrices",
    "default_alpha_grid",
    "default_thr_grid",
    "dual_norm",
    "lower_hull",
    "lp_build",
    "lp_solve",
    "matrix_norm",
    "motp_tradeoff",
    "motp_tradeoff_from_matrices",
    "prox_norm",
    "solve_alphas",
    "sparsity_mask",
    "tradeoff_curve",
    "tradeoff_from_matrices",
]
