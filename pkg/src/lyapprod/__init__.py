"""Lyapunov exponents of products of random 2x2 transfer matrices.

The products multiply M(epsilon, Z) = [[1, epsilon], [epsilon*Z, Z]]
with IID positive Z. The package estimates the top Lyapunov exponent
four independent ways and ties them together in the strong-contrast
regime epsilon = e^-k:

- matprod: direct Monte Carlo on the renormalized products;
- projective: the chain X' = z + h_k(X) behind the ergodic average,
  plus the half-line chain and exit times;
- operator: the transfer operator on tail functions, its invariant
  tail, and the Lyapunov functional;
- edge: the sigma-finite edge measure with its slope-1 asymptote;
- asymptotic: the glued tail, the constants kappa1 and kappa2, the
  prediction L ~ kappa1/(k + kappa2), and the comparison table.

The `lyap` console script exposes all of it on the command line.
"""

from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # pragma: no cover - not installed
    __version__ = "0.0.0"

from .asymptotic import (
    ComparisonRow,
    EdgeConstants,
    GluedTail,
    asymptotic_lyap,
    build_glued_tail,
    compare_all,
    edge_constants,
    one_step_residual,
    plateau_density,
    weak_disorder_lyap,
)
from .disorder import (
    BernoulliGaussianMix,
    DisorderModel,
    Gaussian,
    Laplace,
    TabulatedDensity,
    fig2_model,
    load_model,
    model_from_dict,
    sample,
    solve_alpha,
)
from .edge import EdgeMeasure, edge_occupation_check, solve_edge, symmetry_identity_check
from .errors import ConvergenceError, LyapError, NumericalError, ValidationError
from .matprod import (
    LyapEstimate,
    PowerLawFit,
    epsilon_sweep,
    lyapunov_mc,
    power_law_fit,
)
from .operator import (
    GridTail,
    InvariantSolution,
    apply_t,
    apply_t0,
    lyap_functional,
    point_mass_tail,
    solve_invariant,
)
from .projective import (
    ChainConfig,
    ExitTimeResult,
    XTrajectory,
    YTrajectory,
    edge_excess,
    edge_map,
    ergodic_lyapunov,
    exit_time,
    hk,
    hk_deriv,
    hk_inverse,
    simulate_x,
    simulate_y,
    softplus,
)

__all__ = [
    "BernoulliGaussianMix",
    "ChainConfig",
    "ComparisonRow",
    "ConvergenceError",
    "DisorderModel",
    "EdgeConstants",
    "EdgeMeasure",
    "ExitTimeResult",
    "Gaussian",
    "GluedTail",
    "GridTail",
    "InvariantSolution",
    "Laplace",
    "LyapError",
    "LyapEstimate",
    "NumericalError",
    "PowerLawFit",
    "TabulatedDensity",
    "ValidationError",
    "XTrajectory",
    "YTrajectory",
    "apply_t",
    "apply_t0",
    "asymptotic_lyap",
    "build_glued_tail",
    "compare_all",
    "edge_constants",
    "edge_excess",
    "edge_map",
    "edge_occupation_check",
    "epsilon_sweep",
    "ergodic_lyapunov",
    "exit_time",
    "fig2_model",
    "hk",
    "hk_deriv",
    "hk_inverse",
    "load_model",
    "lyap_functional",
    "lyapunov_mc",
    "model_from_dict",
    "one_step_residual",
    "plateau_density",
    "point_mass_tail",
    "power_law_fit",
    "sample",
    "simulate_x",
    "simulate_y",
    "softplus",
    "solve_alpha",
    "solve_edge",
    "solve_invariant",
    "symmetry_identity_check",
    "weak_disorder_lyap",
]
