"""Finite-difference solvers for supercritical shallow water flow on a rectangle."""

from .algebra import (
    CharData,
    SupercriticalReport,
    char_data,
    check_supercritical,
    e1,
    e1_sym,
    e2,
    e2_sym,
    from_characteristic,
    symmetrizer,
    to_characteristic,
)
from .core import (
    BackgroundFlow,
    Grid,
    Params,
    State,
    Trajectory,
    diff,
    l2_norm,
    linf_l2_distance,
    linf_l2_norm,
    sobolev_norm,
)
from .errors import *  # noqa: F401,F403
from .linear import (
    EnergyReport,
    LinearProblem,
    cfl_dt,
    energy_constant,
    linear_step,
    resolvent_solve,
    solve_linear,
    stable_dt,
)
from .nonlinear import (
    IterationReport,
    direct_nonlinear_step,
    perturbation_forcing,
    picard_solve,
    solve_direct,
)
from .prep import compatibility_residual, compatible_bump, directional_mollify
from .stationary import StationarySolution, constant_state, stationary_residual, y_independent_stationary

__version__ = "0.1.0"
