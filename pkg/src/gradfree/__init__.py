"""Zeroth-order global minimization of parabola-bounded functions."""
from ._backend import BACKEND
from .geometry import Box, GridSpec, build_grid, center, diameter, max_edge, shrink_edge
from .oracles import (ClassReport, GoodClassParams, Levy2D, NoisyQuadratic, OracleHandle,
                      OscillatingParabola, SyntheticVeryGood, UserAnalytic,
                      VeryGoodClassParams, verify_good_class, verify_very_good_class)
from .solvers import (BbsConfig, DirectionBbsConfig, MultiBbsConfig, RunTrace, bbs_1d,
                      direction_bbs, multi_bbs, required_iterations)
from .zogd import (TheoremThreeParams, ZogdBatch, ZogdConfig, ZogdTrace, corollary3_schedule,
                   grad_estimate, noise_floor, sample_sphere, theorem3_rhs, zogd_run,
                   zogd_run_batch)
from .errors import (BudgetExceeded, ConfigError, DegenerateBox, DimensionMismatch,
                     DimensionTooSmall, GradFreeError, InvalidBox, InvalidInterval,
                     NonFiniteValue)

__version__ = "0.1.0"
