"""Transfer operator of the projective chain on tail functions.

For a chain step X' = z + h_k(X) and a tail function G(x) = P(X > x),
one step of the law acts as

    (TG)(x) = integral of G(y) h_k'(y) zeta(x - h_k(y)) dy over all y,

where zeta is the density of z. On a uniform grid the integral is a
trapezoid sum; the parts of the y-axis beyond the grid are closed
analytically with the substitution u = h_k(y), which is exact because
G is constant (leftLimit / rightLimit) out there:

    y < xLo:  leftLimit  * sf(x - h_k(xLo))
    y > xHi:  rightLimit * (cdf(x - h_k(xHi)) - cdf(x - k))

The left closure contains the point-mass-at--infinity term
leftLimit * sf(x + k) as its xLo -> -inf limit. The invariant tail is
the fixed point of T; with the closures the discretized equation is
linear, so the default solver assembles the dense kernel matrix and
solves (I - A) G = b directly. Plain damped iteration is kept as an
alternative method and agrees with the direct solve.

The Lyapunov exponent of the underlying products is the functional

    L_k[G] = integral of G(x) / (1 + e^(k-x)) dx
           = integral of (1 - G(x)) / (1 + e^(k+x)) dx,

whose two forms agree exactly on drift-balanced measures (in particular
on the invariant one); their difference equals the drift functional
integral of (x - h_k(x)) d(mu), which is the basis of a consistency
check but must not be asserted on arbitrary tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson
from scipy.special import expit

from .disorder import DisorderModel
from .errors import ConvergenceError, NumericalError, ValidationError
from .projective import hk, hk_deriv, softplus

_BLOCK = 512


@dataclass
class GridTail:
    """A tail function sampled on a uniform grid, with constant limits."""

    x_lo: float
    x_hi: float
    values: np.ndarray
    left_limit: float = 1.0
    right_limit: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValidationError("GridTail needs a 1-d values array with >= 2 nodes")
        if not (math.isfinite(self.x_lo) and math.isfinite(self.x_hi) and self.x_lo < self.x_hi):
            raise ValidationError(f"bad grid bounds ({self.x_lo!r}, {self.x_hi!r})")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("GridTail values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n)

    def copy_with(self, values: np.ndarray) -> "GridTail":
        return replace(self, values=np.asarray(values, dtype=float))

    def check_probability_tail(self, atol: float = 1e-6) -> None:
        """Raise unless this is a monotone 1 -> 0 probability tail."""
        v = self.values
        if self.left_limit != 1.0 or self.right_limit != 0.0:
            raise ValidationError(
                f"not a probability tail: limits ({self.left_limit}, {self.right_limit})"
            )
        if np.any(np.diff(v) > 1e-9):
            raise ValidationError("not a probability tail: values increase along the grid")
        if np.any(v < -1e-9) or np.any(v > 1.0 + 1e-9):
            raise ValidationError("not a probability tail: values leave [0, 1]")
        if abs(v[0] - 1.0) > atol or abs(v[-1]) > atol:
            raise ValidationError(
                f"not a probability tail: ends ({v[0]:.3e}, {v[-1]:.3e}) far from (1, 0)"
            )

    def density(self) -> np.ndarray:
        """-dG/dx by central differences (one-sided at the ends)."""
        # + 0.0 turns the -0.0 of exactly flat stretches into +0.0
        return -np.gradient(self.values, self.spacing) + 0.0


def point_mass_tail(x_lo: float, x_hi: float, n: int, at: float = 0.0) -> GridTail:
    """Tail of the Dirac mass at `at`: 1 strictly left of it, 0 at and right."""
    x = np.linspace(x_lo, x_hi, n)
    return GridTail(x_lo, x_hi, np.where(x < at, 1.0, 0.0))


def default_grid(k: float, model: DisorderModel, spacing: float = 0.01) -> tuple[float, float, float]:
    """(x_lo, x_hi, spacing) covering the invariant support with margin.

    Half-width k + max(10, 8 sigma + 1): the plain k + 10 default until
    the disorder is wide enough to need more room.
    """
    span = max(10.0, 8.0 * model.std() + 1.0)
    return (-(k + span), k + span, spacing)


def _grid_axis(grid: tuple[float, float, float]) -> np.ndarray:
    x_lo, x_hi, spacing = grid
    n = int(round((x_hi - x_lo) / spacing)) + 1
    return np.linspace(x_lo, x_hi, n)


def _check_coverage(tail: GridTail, k: float, model: DisorderModel) -> None:
    need = k + 8.0 * model.std()
    if tail.x_lo > -need or tail.x_hi < need:
        raise ValidationError(
            "grid does not cover support: need at least "
            f"[-{need:.2f}, {need:.2f}], have [{tail.x_lo:.2f}, {tail.x_hi:.2f}]"
        )


def _trap_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


def _integral_part(G: GridTail, k: float, model: DisorderModel, coef: np.ndarray) -> np.ndarray:
    """Rows of the kernel times coef, built in row blocks to bound memory."""
    x = G.x
    hky = hk(x, k)
    out = np.empty(G.n)
    for start in range(0, G.n, _BLOCK):
        stop = min(start + _BLOCK, G.n)
        P = model.pdf(x[start:stop, None] - hky[None, :])
        out[start:stop] = P @ coef
    return out


def apply_t(G: GridTail, k: float, model: DisorderModel) -> GridTail:
    """One application of the transfer operator, same grid and limits."""
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError(f"k must be positive and finite, got {k!r}")
    _check_coverage(G, k, model)
    x = G.x
    coef = _trap_weights(G.n, G.spacing) * hk_deriv(x, k) * G.values
    new = _integral_part(G, k, model, coef)
    if G.left_limit != 0.0:
        new += G.left_limit * model.sf(x - hk(G.x_lo, k))
    if G.right_limit != 0.0:
        new += G.right_limit * (model.cdf(x - hk(G.x_hi, k)) - model.cdf(x - k))
    return GridTail(G.x_lo, G.x_hi, new, G.left_limit, G.right_limit)


def apply_t0(G: GridTail, k: float, model: DisorderModel) -> GridTail:
    """The homogeneous part: T restricted to difference tails (limits 0)."""
    if G.left_limit != 0.0 or G.right_limit != 0.0:
        raise ValidationError(
            f"nonzero limits: apply_t0 needs (0, 0), got ({G.left_limit}, {G.right_limit})"
        )
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError(f"k must be positive and finite, got {k!r}")
    _check_coverage(G, k, model)
    coef = _trap_weights(G.n, G.spacing) * hk_deriv(G.x, k) * G.values
    return GridTail(G.x_lo, G.x_hi, _integral_part(G, k, model, coef), 0.0, 0.0)


def l1_distance(a: GridTail, b: GridTail) -> float:
    """Trapezoid L1 distance between two tails on the same grid."""
    if a.n != b.n or a.x_lo != b.x_lo or a.x_hi != b.x_hi:
        raise ValidationError("L1 distance needs matching grids")
    return float(np.trapezoid(np.abs(a.values - b.values), dx=a.spacing))


def kernel_matrix(k: float, model: DisorderModel, grid: tuple[float, float, float]):
    """Dense discretization (A, b) of G = A G + b on the grid nodes."""
    x = _grid_axis(grid)
    n = x.size
    hky = hk(x, k)
    coef = _trap_weights(n, (grid[1] - grid[0]) / (n - 1)) * hk_deriv(x, k)
    A = model.pdf(x[:, None] - hky[None, :])
    A *= coef[None, :]
    b = model.sf(x - hky[0])
    return A, b


@dataclass
class InvariantSolution:
    """Solved invariant tail plus how it was obtained."""

    tail: GridTail
    k: float
    iterations: int
    residual: float
    method: str


def solve_invariant(
    k: float,
    model: DisorderModel,
    tol: float = 1e-8,
    max_iter: int | None = None,
    method: str = "direct",
    grid: tuple[float, float, float] | None = None,
) -> InvariantSolution:
    """Fixed point of T as a probability tail.

    method "direct" solves the dense linear system of the discretized
    fixed-point equation (the default: one LU solve, seconds at the
    default spacing). method "iterate" repeats G <- TG from the
    point-mass-at-0 tail, halving the update if the L1 residual ever
    grows; it converges to the same tail but needs O(k^2) sweeps.
    The reported residual is always ||TG - G||_1 for the returned G.
    """
    if tol <= 0.0:
        raise ValidationError(f"tol must be positive, got {tol!r}")
    if grid is None:
        grid = default_grid(k, model)
    if max_iter is None:
        max_iter = max(int(50 * k * k), 200)

    if method == "direct":
        A, b = kernel_matrix(k, model, grid)
        n = b.size
        values = np.linalg.solve(np.eye(n) - A, b)
        tail = GridTail(grid[0], grid[1], values)
        residual = l1_distance(apply_t(tail, k, model), tail)
        if residual >= tol:
            raise NumericalError(
                f"no convergence: direct solve residual {residual:.3e} >= tol {tol:.3e}"
            )
        iterations = 0
    elif method == "iterate":
        x = _grid_axis(grid)
        tail = point_mass_tail(grid[0], grid[1], x.size)
        damping = 1.0
        prev_res = math.inf
        residual = math.inf
        for iterations in range(1, max_iter + 1):
            new = apply_t(tail, k, model)
            residual = l1_distance(new, tail)
            if residual > prev_res:
                damping = 0.5
            if damping < 1.0:
                new = new.copy_with(damping * new.values + (1.0 - damping) * tail.values)
            tail = new
            if residual < tol:
                break
            prev_res = residual
        else:
            raise ConvergenceError(
                f"no convergence in maxIter={max_iter}: residual {residual:.3e} at k={k:g}"
            )
    else:
        raise ValidationError(f"unknown method {method!r}, expected 'direct' or 'iterate'")

    tail.check_probability_tail()
    return InvariantSolution(tail=tail, k=k, iterations=iterations, residual=residual, method=method)


def lyap_functional_forms(G: GridTail, k: float) -> tuple[float, float]:
    """Both integral forms of L_k[G].

    Form 1 integrates G(x)/(1 + e^(k-x)); its left closure (G constant
    at leftLimit) is exact: leftLimit * log(1 + e^(xLo - k)). The piece
    dropped beyond xHi is at most G(xHi) * (1 + xHi - k) which is far
    below quadrature error for solved tails. Form 2 integrates
    (1 - G(x))/(1 + e^(k+x)) with the mirrored closure on the right.
    """
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError(f"k must be positive and finite, got {k!r}")
    G.check_probability_tail()
    x = G.x
    sig_right = expit(x - k)
    sig_left = expit(-x - k)
    form1 = float(np.trapezoid(G.values * sig_right, dx=G.spacing))
    form1 += G.left_limit * softplus(G.x_lo - k)
    form2 = float(np.trapezoid((1.0 - G.values) * sig_left, dx=G.spacing))
    form2 += softplus(-k - G.x_hi)
    return form1, form2


def lyap_functional(G: GridTail, k: float, form_tol: float | None = None) -> float:
    """L_k[G], the Lyapunov value of the measure with tail G.

    When form_tol is given the two integral forms must agree within it;
    that is a meaningful demand only for (near-)invariant tails, where
    the drift functional vanishes. On arbitrary tails the forms differ
    by exactly that functional, so the check stays off by default.
    """
    form1, form2 = lyap_functional_forms(G, k)
    if form_tol is not None and abs(form1 - form2) > form_tol:
        raise NumericalError(
            f"form mismatch exceeds tolerance: |{form1:.10e} - {form2:.10e}| "
            f"= {abs(form1 - form2):.3e} > {form_tol:.1e}"
        )
    return form1


def drift_functional(G: GridTail, k: float) -> float:
    """Integral of (x - h_k(x)) against the measure with tail G.

    Stieltjes midpoint sum against -dG; vanishes on invariant measures
    and equals form1 - form2 of the Lyapunov functional in general.
    """
    x = G.x
    mid = 0.5 * (x[:-1] + x[1:])
    dmass = G.values[:-1] - G.values[1:]
    return float(np.sum((mid - hk(mid, k)) * dmass))


def invariant_cdf_distance(tail: GridTail, samples: np.ndarray) -> float:
    """Kolmogorov distance between 1 - tail and an empirical sample CDF."""
    samples = np.sort(np.asarray(samples, dtype=float))
    x = tail.x
    emp = np.searchsorted(samples, x, side="right") / samples.size
    return float(np.max(np.abs(emp - (1.0 - tail.values))))


def kappa1_from_tail(values: np.ndarray, x: np.ndarray) -> float:
    """Simpson integral of values(x)/(1 + e^x) along x (helper for gluing)."""
    return float(simpson(values * expit(-x), x=x))
