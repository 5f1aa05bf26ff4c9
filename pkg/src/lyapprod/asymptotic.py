"""Small-epsilon asymptotics from the glued edge measures.

For k = log(1/epsilon) large, the invariant law of the main chain is,
away from the ends, flat at height 1/C_k; its tail is assembled from
the two edge measures by

    G_k(x) = F_right(k - x) / C_k          for x >= 0,
    G_k(x) = 1 - F_left(x + k) / C_k       for x <= 0,

with C_k = F_left(k) + F_right(k), which makes the two branches agree
at 0 by construction. Feeding that tail into the Lyapunov functional
gives the asymptote

    L(epsilon) ~ kappa1 / (k + kappa2),

where kappa1 = (1/2) * integral of F_s(y)/(1 + e^y) dy (the same value
for s = left or right) and kappa2 = (c_left + c_right)/2 from the edge
intercepts. The quality of the gluing is measured by the one-step
residual ||T G_k - G_k||_1, which decays exponentially in k.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .disorder import DisorderModel
from .edge import EdgeMeasure, solve_edge
from .errors import NumericalError, ValidationError
from .matprod import LyapEstimate, lyapunov_mc, max_workers
from .operator import (
    GridTail,
    apply_t,
    kappa1_from_tail,
    l1_distance,
    lyap_functional,
    solve_invariant,
)
from .projective import ChainConfig, ergodic_lyapunov

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.57721566490153286


def _kappa1_side(measure: EdgeMeasure) -> float:
    """(1/2) integral of F(y)/(1 + e^y) dy for one edge measure.

    Simpson on the grid. Beyond xHi the integrand is (y + c) e^-y with
    y >= 80: dropped. Below xLo it is essentially F(y) itself; that tail
    is closed with the fitted exponential decay of F at the boundary,
    a correction of order F(xLo), and skipped entirely once F(xLo) is
    at the float floor.
    """
    x = measure.x
    val = kappa1_from_tail(measure.F, x)
    f_lo = measure.F[0]
    if f_lo > 1e-13:
        probe = int(round(1.0 / measure.spacing))
        f_probe = measure.F[probe]
        if f_probe > f_lo > 0.0:
            rate = math.log(f_probe / f_lo) / (x[probe] - x[0])
            val += f_lo / rate
    return 0.5 * val


@dataclass
class EdgeConstants:
    """The gluing constants of one disorder model."""

    kappa1: float
    kappa2: float
    kappa1_left: float
    kappa1_right: float
    c_left: float
    c_right: float
    rho_left: float
    rho_right: float
    left: EdgeMeasure
    right: EdgeMeasure

    @property
    def kappa1_spread(self) -> float:
        """Quadrature diagnostic: the two kappa1 routes should coincide."""
        return abs(self.kappa1_left - self.kappa1_right)


def edge_constants(
    model: DisorderModel | None = None,
    left: EdgeMeasure | None = None,
    right: EdgeMeasure | None = None,
    **solve_kw,
) -> EdgeConstants:
    """Solve (or accept) both edge measures and extract the constants."""
    if left is None or right is None:
        if model is None:
            raise ValidationError("edge_constants needs a model or both solved edges")
        if left is None:
            left = solve_edge(model, side="left", **solve_kw)
        if right is None:
            right = solve_edge(model, side="right", **solve_kw)
    k1l = _kappa1_side(left)
    k1r = _kappa1_side(right)
    logger.debug("kappa1 forms: left %.12g, right %.12g, spread %.3e", k1l, k1r, abs(k1l - k1r))
    return EdgeConstants(
        kappa1=0.5 * (k1l + k1r),
        kappa2=0.5 * (left.intercept + right.intercept),
        kappa1_left=k1l,
        kappa1_right=k1r,
        c_left=left.intercept,
        c_right=right.intercept,
        rho_left=left.rho_estimate,
        rho_right=right.rho_estimate,
        left=left,
        right=right,
    )


@dataclass
class GluedTail:
    """The glued approximation of the invariant tail at one k."""

    k: float
    ck: float
    tail: GridTail
    kappa1: float
    kappa2: float
    kappa1_left: float
    kappa1_right: float
    left: EdgeMeasure
    right: EdgeMeasure


def build_glued_tail(
    k: float,
    left: EdgeMeasure,
    right: EdgeMeasure,
    grid: tuple[float, float, float] | None = None,
) -> GluedTail:
    """Glue the two edge measures into a probability tail at coupling k.

    The edge grids must extend at least 10 beyond k so both F_s(k) and
    the whole glued profile come from the solved region, not from the
    affine extrapolation.
    """
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError(f"k must be positive and finite, got {k!r}")
    reach = min(left.x_hi, right.x_hi) - 10.0
    if k > reach:
        raise ValidationError(
            f"edge grid too short for k: k={k:g} needs grids past {k + 10.0:g}, "
            f"have ({left.x_hi:g}, {right.x_hi:g})"
        )
    if grid is None:
        grid = (-k - 10.0, k + 10.0, 0.01)
    x_lo, x_hi, spacing = grid
    n = int(round((x_hi - x_lo) / spacing)) + 1
    x = np.linspace(x_lo, x_hi, n)

    ck = float(left.F_at(k) + right.F_at(k))
    values = np.where(
        x >= 0.0,
        right.F_at(k - x) / ck,
        1.0 - left.F_at(x + k) / ck,
    )
    tail = GridTail(x_lo, x_hi, values)
    k1l = _kappa1_side(left)
    k1r = _kappa1_side(right)
    return GluedTail(
        k=k,
        ck=ck,
        tail=tail,
        kappa1=0.5 * (k1l + k1r),
        kappa2=0.5 * (left.intercept + right.intercept),
        kappa1_left=k1l,
        kappa1_right=k1r,
        left=left,
        right=right,
    )


def asymptotic_lyap(source, k: float | None = None, epsilon: float | None = None) -> float:
    """kappa1 / (k + kappa2), with k = log(1/epsilon).

    source is anything carrying kappa1 and kappa2 (EdgeConstants or
    GluedTail). Exactly one of k and epsilon must be given.
    """
    if (k is None) == (epsilon is None):
        raise ValidationError("pass exactly one of k and epsilon")
    if epsilon is not None:
        if not (0.0 < epsilon < 1.0):
            raise ValidationError(f"epsilon out of range (0, 1): got {epsilon!r}")
        k = -math.log(epsilon)
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError(f"k must be positive and finite, got {k!r}")
    denom = k + source.kappa2
    if denom <= 0.0:
        raise NumericalError(
            f"k + kappa2 <= 0: k={k:g} with kappa2={source.kappa2:g} is below the "
            "asymptotic regime"
        )
    return source.kappa1 / denom


def one_step_residual(glued: GluedTail, model: DisorderModel) -> float:
    """||T G_k - G_k||_1 for the glued tail: the gluing defect at this k."""
    image = apply_t(glued.tail, glued.k, model)
    return l1_distance(image, glued.tail)


def plateau_density(glued: GluedTail) -> float:
    """-G_k'(0) by central differences; should match 1/C_k in the bulk."""
    tail = glued.tail
    x = tail.x
    j = int(np.argmin(np.abs(x)))
    return float(-(tail.values[j + 1] - tail.values[j - 1]) / (x[j + 1] - x[j - 1]))


def weak_disorder_lyap(epsilon: float) -> float:
    """The symmetric-Bernoulli baseline 1/(4 (log(1/eps) - log 2 - gamma))."""
    epsilon = float(epsilon)
    if not (0.0 < epsilon < 1.0):
        raise ValidationError(f"epsilon out of range (0, 1): got {epsilon!r}")
    denom = math.log(1.0 / epsilon) - math.log(2.0) - EULER_GAMMA
    if denom <= 0.0:
        raise ValidationError(
            f"denominator nonpositive: log(1/eps) = {math.log(1.0 / epsilon):.6g} "
            "does not exceed log 2 + gamma"
        )
    return 0.25 / denom


@dataclass
class ComparisonRow:
    """All estimates of L at one k, plus the gluing residual."""

    k: float
    mc: LyapEstimate
    ergodic: LyapEstimate
    operator_value: float
    dh_value: float
    residual: float


def compare_all(
    model: DisorderModel,
    ks,
    left: EdgeMeasure | None = None,
    right: EdgeMeasure | None = None,
    mc_steps=2 * 10**6,
    chain_steps=2 * 10**6,
    batches: int = 32,
    seed: int = 0,
    burn_in: int = 100_000,
    tol: float = 1e-8,
) -> list[ComparisonRow]:
    """Monte Carlo, ergodic-chain, operator, and glued-tail values per k.

    Each k gets its own RNG streams (2k-indexed for the product run,
    odd for the chain run), so rows are independent and the table is
    reproducible point by point. mc_steps / chain_steps may be scalars
    or per-k sequences.
    """
    ks = [float(k) for k in ks]
    if left is None:
        left = solve_edge(model, side="left")
    if right is None:
        right = solve_edge(model, side="right")
    mc_list = list(mc_steps) if np.ndim(mc_steps) else [mc_steps] * len(ks)
    chain_list = list(chain_steps) if np.ndim(chain_steps) else [chain_steps] * len(ks)
    if len(mc_list) != len(ks) or len(chain_list) != len(ks):
        raise ValidationError("per-k step lists must match the number of ks")

    def run(item) -> ComparisonRow:
        i, k = item
        mc = lyapunov_mc(
            math.exp(-k), model, steps=int(mc_list[i]), batches=batches,
            seed=seed, stream=2 * i,
        )
        cfg = ChainConfig(
            k=k, model=model, steps=int(chain_list[i]), burn_in=burn_in,
            seed=seed, stream=2 * i + 1,
        )
        ergodic = ergodic_lyapunov(cfg, batches=batches)
        solved = solve_invariant(k, model, tol=tol)
        op_val = lyap_functional(solved.tail, k, form_tol=1e-6)
        glued = build_glued_tail(k, left, right)
        dh_val = asymptotic_lyap(glued, k=k)
        residual = one_step_residual(glued, model)
        return ComparisonRow(
            k=k, mc=mc, ergodic=ergodic, operator_value=op_val,
            dh_value=dh_val, residual=residual,
        )

    items = list(enumerate(ks))
    workers = max_workers()
    if workers == 1 or len(items) <= 1:
        return [run(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, items))
