"""Distributions of the log-multiplier z = log Z driving the products.

Four families are built in: Gaussian, Laplace, a two-component
Bernoulli-Gaussian mixture, and a tabulated density interpolated linearly
on a user grid. Each family knows its density, CDF and survival function,
exact sampling, exponential moments E[e^(u z)] = E[Z^u], partial first
moments (needed by the boundary closures of the integral solvers),
analytic centering, and mirroring z -> -z.

Models are frozen dataclasses: immutable after construction and safe to
share across threads. An additive `mean_shift` field relocates any family
without touching its shape parameters, so centering is exact arithmetic
on parameters rather than a numerical fit.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import NumericalError, ValidationError
from .streams import make_stream

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _norm_pdf(s):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(s))


def _as_float(name: str, value) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"field {name!r} must be a real number, got {value!r}") from None
    if not math.isfinite(out):
        raise ValidationError(f"field {name!r} must be finite, got {out!r}")
    return out


@dataclass(frozen=True)
class DisorderModel:
    """Shared behavior for all families.

    Subclasses implement the `_pdf0` / `_cdf0` / ... methods in the frame
    where mean_shift = 0; the public methods apply the shift. All public
    array methods accept scalars or arrays and vectorize elementwise.
    """

    family = "abstract"

    # -- frame plumbing ------------------------------------------------

    def _shifted(self, x):
        return np.asarray(x, dtype=float) - self.mean_shift

    def pdf(self, x):
        return self._pdf0(self._shifted(x))

    def cdf(self, x):
        return self._cdf0(self._shifted(x))

    def sf(self, x):
        """Survival function 1 - cdf, accurate in the right tail."""
        return self._sf0(self._shifted(x))

    def partial_moment(self, t):
        """Integral of x * pdf(x) over (-inf, t], elementwise in t.

        With the shift s applied, K_z(t) = K_0(t - s) + s * F_0(t - s).
        """
        t0 = self._shifted(t)
        return self._partial0(t0) + self.mean_shift * self._cdf0(t0)

    def mean(self) -> float:
        return self._mean0() + self.mean_shift

    def variance(self) -> float:
        return self._var0()

    def std(self) -> float:
        return math.sqrt(self._var0())

    def exp_moment(self, u: float) -> float:
        """E[e^(u z)] = E[Z^u], exact per family; raises outside the band."""
        u = float(u)
        lo, hi = self.moment_band()
        if not (lo < u < hi):
            raise NumericalError(
                f"moment diverges: u={u:g} outside the open band ({lo:g}, {hi:g})"
            )
        return math.exp(u * self.mean_shift) * self._exp_moment0(u)

    def moment_band(self) -> tuple[float, float]:
        """Open interval of u with E[e^(u z)] finite."""
        return (-math.inf, math.inf)

    @property
    def tail_rate(self) -> float:
        """Exponential decay rate delta with pdf(x) <= C e^(-delta |x|).

        Infinite when the tails decay faster than every exponential
        (Gaussian, mixture, compactly supported tables).
        """
        return math.inf

    @property
    def holder_theta(self) -> float:
        """Holder exponent of the density; 1 for every built-in family."""
        return 1.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self._draw0(rng, n) + self.mean_shift

    # -- derived constructors -------------------------------------------

    def centered(self) -> "DisorderModel":
        """Same shape, mean moved to 0 exactly (parameter arithmetic)."""
        return dataclasses.replace(self, mean_shift=self.mean_shift - self.mean())

    def mirrored(self) -> "DisorderModel":
        """The model of -z: pdf_mirror(x) = pdf(-x) pointwise."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(DisorderModel):
    mu: float = 0.0
    sigma: float = 1.0
    mean_shift: float = 0.0

    family = "gaussian"

    def __post_init__(self):
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise ValidationError(f"degenerate sigma: {self.sigma!r}")

    def _pdf0(self, x):
        return _norm_pdf((x - self.mu) / self.sigma) / self.sigma

    def _cdf0(self, x):
        return ndtr((x - self.mu) / self.sigma)

    def _sf0(self, x):
        return ndtr(-(x - self.mu) / self.sigma)

    def _partial0(self, x):
        s = (x - self.mu) / self.sigma
        return self.mu * ndtr(s) - self.sigma * _norm_pdf(s)

    def _mean0(self):
        return self.mu

    def _var0(self):
        return self.sigma**2

    def _exp_moment0(self, u):
        return math.exp(u * self.mu + 0.5 * (u * self.sigma) ** 2)

    def _draw0(self, rng, n):
        return self.mu + self.sigma * rng.standard_normal(n)

    def mirrored(self):
        return Gaussian(-self.mu, self.sigma, -self.mean_shift)

    def to_dict(self):
        return {
            "family": "gaussian",
            "mu": self.mu,
            "sigma": self.sigma,
            "meanShift": self.mean_shift,
        }


@dataclass(frozen=True)
class Laplace(DisorderModel):
    mu: float = 0.0
    scale: float = 1.0
    mean_shift: float = 0.0

    family = "laplace"

    def __post_init__(self):
        if not (self.scale > 0.0) or not math.isfinite(self.scale):
            raise ValidationError(f"degenerate scale: {self.scale!r}")

    def _pdf0(self, x):
        return np.exp(-np.abs(x - self.mu) / self.scale) / (2.0 * self.scale)

    def _cdf0(self, x):
        s = (x - self.mu) / self.scale
        return np.where(s <= 0.0, 0.5 * np.exp(np.minimum(s, 0.0)),
                        1.0 - 0.5 * np.exp(-np.maximum(s, 0.0)))

    def _sf0(self, x):
        s = (x - self.mu) / self.scale
        return np.where(s >= 0.0, 0.5 * np.exp(-np.maximum(s, 0.0)),
                        1.0 - 0.5 * np.exp(np.minimum(s, 0.0)))

    def _partial0(self, x):
        s = (x - self.mu) / self.scale
        below = 0.5 * np.exp(np.minimum(s, 0.0)) * (x - self.scale)
        above = self.mu - 0.5 * np.exp(-np.maximum(s, 0.0)) * (x + self.scale)
        return np.where(s <= 0.0, below, above)

    def _mean0(self):
        return self.mu

    def _var0(self):
        return 2.0 * self.scale**2

    def moment_band(self):
        r = 1.0 / self.scale
        return (-r, r)

    def _exp_moment0(self, u):
        return math.exp(u * self.mu) / (1.0 - (u * self.scale) ** 2)

    def _draw0(self, rng, n):
        return self.mu + rng.laplace(0.0, self.scale, n)

    @property
    def tail_rate(self):
        return 1.0 / self.scale

    def mirrored(self):
        return Laplace(-self.mu, self.scale, -self.mean_shift)

    def to_dict(self):
        return {
            "family": "laplace",
            "mu": self.mu,
            "scale": self.scale,
            "meanShift": self.mean_shift,
        }


@dataclass(frozen=True)
class BernoulliGaussianMix(DisorderModel):
    """z = xi * (a + b*eta) + (1 - xi) * (mu2 + sigma2*eta).

    xi is Bernoulli(p) and eta a standard Gaussian, so the law is the
    two-component normal mixture p * N(a, b^2) + (1-p) * N(mu2, sigma2^2).
    """

    p: float = 2.0 / 3.0
    a: float = -0.5
    b: float = 0.3
    mu2: float = 1.0
    sigma2: float = 1.0
    mean_shift: float = 0.0

    family = "mix"

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValidationError(f"mixture weight p={self.p!r} outside [0, 1]")
        if not (self.b > 0.0 and self.sigma2 > 0.0):
            raise ValidationError(
                f"degenerate sigma: component widths b={self.b!r}, sigma2={self.sigma2!r}"
            )

    def _components(self):
        return ((self.p, self.a, self.b), (1.0 - self.p, self.mu2, self.sigma2))

    def _pdf0(self, x):
        out = 0.0
        for w, m, s in self._components():
            out = out + w * _norm_pdf((x - m) / s) / s
        return out

    def _cdf0(self, x):
        out = 0.0
        for w, m, s in self._components():
            out = out + w * ndtr((x - m) / s)
        return out

    def _sf0(self, x):
        out = 0.0
        for w, m, s in self._components():
            out = out + w * ndtr(-(x - m) / s)
        return out

    def _partial0(self, x):
        out = 0.0
        for w, m, s in self._components():
            t = (x - m) / s
            out = out + w * (m * ndtr(t) - s * _norm_pdf(t))
        return out

    def _mean0(self):
        return self.p * self.a + (1.0 - self.p) * self.mu2

    def _var0(self):
        m2 = self.p * (self.a**2 + self.b**2) + (1.0 - self.p) * (self.mu2**2 + self.sigma2**2)
        return m2 - self._mean0() ** 2

    def _exp_moment0(self, u):
        out = 0.0
        for w, m, s in self._components():
            out += w * math.exp(u * m + 0.5 * (u * s) ** 2)
        return out

    def _draw0(self, rng, n):
        pick = rng.random(n) < self.p
        eta = rng.standard_normal(n)
        return np.where(pick, self.a + self.b * eta, self.mu2 + self.sigma2 * eta)

    def mirrored(self):
        return BernoulliGaussianMix(
            self.p, -self.a, self.b, -self.mu2, self.sigma2, -self.mean_shift
        )

    def to_dict(self):
        return {
            "family": "mix",
            "p": self.p,
            "a": self.a,
            "b": self.b,
            "mu2": self.mu2,
            "sigma2": self.sigma2,
            "meanShift": self.mean_shift,
        }


def fig2_model() -> BernoulliGaussianMix:
    """The canonical asymmetric mixture: balanced, skewed, variance ~0.89."""
    return BernoulliGaussianMix(p=2.0 / 3.0, a=-0.5, b=0.3, mu2=1.0, sigma2=1.0)


@dataclass(frozen=True)
class TabulatedDensity(DisorderModel):
    """Piecewise-linear density on a grid, renormalized at construction.

    x and density are stored as tuples (immutability); the quadratic CDF,
    the cubic partial first moment, and the exponential moments of each
    linear cell are exact closed forms, so no quadrature error enters.
    Sampling inverts the piecewise-quadratic CDF exactly. Support is
    compact, so every exponential moment is finite. The field is named
    density, not pdf, so the inherited pdf() method stays callable.
    """

    x: tuple = ()
    density: tuple = ()
    mean_shift: float = 0.0

    family = "table"

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        ps = np.asarray(self.density, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or ps.shape != xs.shape:
            raise ValidationError("table needs matching x and pdf arrays with >= 2 nodes")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ps)):
            raise ValidationError("table entries must be finite")
        if np.any(np.diff(xs) <= 0.0):
            raise ValidationError("table x grid must be strictly increasing")
        if np.any(ps < 0.0):
            raise ValidationError("table pdf must be nonnegative")
        dx = np.diff(xs)
        mass = float(np.sum(0.5 * (ps[:-1] + ps[1:]) * dx))
        if mass <= 0.0:
            raise ValidationError("table pdf has zero total mass")
        object.__setattr__(self, "x", tuple(xs.tolist()))
        object.__setattr__(self, "density", tuple((ps / mass).tolist()))

    # -- precomputed cell tables ----------------------------------------

    @cached_property
    def _cells(self):
        xs = np.asarray(self.x)
        ps = np.asarray(self.density)
        dx = np.diff(xs)
        p_lo, p_hi = ps[:-1], ps[1:]
        slope = (p_hi - p_lo) / dx
        mass = 0.5 * (p_lo + p_hi) * dx
        # first moment of one cell: integral of x * (p_lo + slope*(x - xL))
        s = dx
        mom = p_lo * (xs[:-1] * s + 0.5 * s**2) + slope * (0.5 * xs[:-1] * s**2 + s**3 / 3.0)
        cum = np.concatenate(([0.0], np.cumsum(mass)))
        cum_mom = np.concatenate(([0.0], np.cumsum(mom)))
        return xs, ps, dx, p_lo, slope, mass, cum, cum_mom

    def _locate(self, x0):
        xs = self._cells[0]
        idx = np.searchsorted(xs, x0, side="right") - 1
        return np.clip(idx, 0, xs.size - 2)

    def _pdf0(self, x):
        xs, ps, dx, p_lo, slope, *_ = self._cells
        x0 = np.asarray(x, dtype=float)
        i = self._locate(x0)
        val = p_lo[i] + slope[i] * (x0 - xs[i])
        inside = (x0 >= xs[0]) & (x0 <= xs[-1])
        return np.where(inside, val, 0.0)

    def _cdf0(self, x):
        xs, ps, dx, p_lo, slope, mass, cum, _ = self._cells
        x0 = np.asarray(x, dtype=float)
        i = self._locate(x0)
        xi = np.clip(x0 - xs[i], 0.0, dx[i])
        val = cum[i] + p_lo[i] * xi + 0.5 * slope[i] * xi**2
        val = np.where(x0 < xs[0], 0.0, val)
        return np.where(x0 > xs[-1], cum[-1], val) / cum[-1]

    def _sf0(self, x):
        # accumulate from the right so deep-right-tail values keep precision
        xs, ps, dx, p_lo, slope, mass, cum, _ = self._cells
        x0 = np.asarray(x, dtype=float)
        i = self._locate(x0)
        xi = np.clip(x0 - xs[i], 0.0, dx[i])
        right = cum[-1] - cum[i + 1]
        val = right + (mass[i] - (p_lo[i] * xi + 0.5 * slope[i] * xi**2))
        val = np.where(x0 < xs[0], cum[-1], val)
        return np.where(x0 > xs[-1], 0.0, val) / cum[-1]

    def _partial0(self, x):
        xs, ps, dx, p_lo, slope, mass, cum, cum_mom = self._cells
        x0 = np.asarray(x, dtype=float)
        i = self._locate(x0)
        xi = np.clip(x0 - xs[i], 0.0, dx[i])
        part = p_lo[i] * (xs[i] * xi + 0.5 * xi**2) + slope[i] * (
            0.5 * xs[i] * xi**2 + xi**3 / 3.0
        )
        val = cum_mom[i] + part
        val = np.where(x0 < xs[0], 0.0, val)
        return np.where(x0 > xs[-1], cum_mom[-1], val)

    def _mean0(self):
        return float(self._cells[7][-1])

    def _var0(self):
        # exact second moment of the piecewise-linear density, cell by cell
        xs, ps, dx, p_lo, slope, *_ = self._cells
        xl = xs[:-1]
        s = dx
        m2 = p_lo * (xl**2 * s + xl * s**2 + s**3 / 3.0) + slope * (
            0.5 * xl**2 * s**2 + 2.0 * xl * s**3 / 3.0 + 0.25 * s**4
        )
        return float(np.sum(m2)) - self._mean0() ** 2

    def _exp_moment0(self, u):
        xs, ps, dx, p_lo, slope, *_ = self._cells
        v = u * dx
        eul = np.exp(u * xs[:-1])
        small = np.abs(v) < 1e-4
        with np.errstate(divide="ignore", invalid="ignore"):
            i0 = np.where(small, dx * (1.0 + v * (0.5 + v / 6.0)), np.expm1(v) / u)
            f = (v * np.exp(v) - np.expm1(v)) / np.square(v)
        f_small = 0.5 + v * (1.0 / 3.0 + v * (0.125 + v / 30.0))
        i1 = np.square(dx) * np.where(small, f_small, f)
        return float(np.sum(eul * (p_lo * i0 + slope * i1)))

    def _draw0(self, rng, n):
        xs, ps, dx, p_lo, slope, mass, cum, _ = self._cells
        u = rng.random(n) * cum[-1]
        i = np.clip(np.searchsorted(cum[1:], u, side="right"), 0, mass.size - 1)
        r = u - cum[i]
        # invert p_lo*xi + slope*xi^2/2 = r without cancellation
        disc = np.sqrt(np.maximum(np.square(p_lo[i]) + 2.0 * slope[i] * r, 0.0))
        xi = np.where(disc + p_lo[i] > 0.0, 2.0 * r / (p_lo[i] + disc), 0.0)
        return xs[i] + np.minimum(xi, dx[i])

    def mirrored(self):
        xs = tuple(-v for v in reversed(self.x))
        ps = tuple(reversed(self.density))
        return TabulatedDensity(xs, ps, -self.mean_shift)

    def to_dict(self):
        return {
            "family": "table",
            "x": list(self.x),
            "pdf": list(self.density),
            "meanShift": self.mean_shift,
        }


# -- sampling and root finding ---------------------------------------------


def sample(model: DisorderModel, n: int, seed: int = 0, stream: int = 0) -> np.ndarray:
    """n IID draws of z on the named stream; bit-identical on reruns."""
    if n < 1:
        raise ValidationError(f"sample size must be >= 1, got {n}")
    return model.draw(make_stream(seed, stream), int(n))


def solve_alpha(model: DisorderModel, tol: float = 1e-12) -> float | None:
    """The nonzero root of E[Z^alpha] = 1, or None for balanced models.

    log E[e^(u z)] is convex with slope E[z] at 0, so a nonzero root can
    only sit on the side where the slope at 0 is negative, and bracketing
    by geometric growth is safe. Raises when the function never returns
    to 1 inside the finite-moment band.
    """
    mean = model.mean()
    if abs(mean) <= 1e-10:
        return None
    lo_band, hi_band = model.moment_band()
    side = 1.0 if mean < 0.0 else -1.0
    edge = hi_band if side > 0.0 else lo_band

    def g(u: float) -> float:
        return model.exp_moment(u) - 1.0

    u_prev = 0.0
    u = side * 1e-3
    for _ in range(250):
        val = g(u)
        if val > 0.0:
            break
        u_prev, u_next = u, (2.0 * u if math.isinf(edge) else 0.5 * (u + edge))
        if abs(u_next) > 1e7 or u_next == u:
            raise NumericalError(
                "no nonzero root in moment band: E[Z^u] stays below 1 "
                f"on the {'positive' if side > 0 else 'negative'} side"
            )
        u = u_next
    else:
        raise NumericalError("no nonzero root in moment band: bracket search exhausted")

    lo, hi = (u_prev, u) if side > 0.0 else (u, u_prev)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if side > 0.0:
            if gm > 0.0:
                hi = mid
            else:
                lo = mid
        else:
            if gm > 0.0:
                lo = mid
            else:
                hi = mid
    root = 0.5 * (lo + hi)
    return root


# -- JSON round trip ---------------------------------------------------------

_FAMILIES = {
    "gaussian": (Gaussian, ("mu", "sigma")),
    "laplace": (Laplace, ("mu", "scale")),
    "mix": (BernoulliGaussianMix, ("p", "a", "b", "mu2", "sigma2")),
    "bernoulligaussianmix": (BernoulliGaussianMix, ("p", "a", "b", "mu2", "sigma2")),
}


def model_from_dict(obj: dict) -> DisorderModel:
    if not isinstance(obj, dict):
        raise ValidationError(f"model spec must be a JSON object, got {type(obj).__name__}")
    family = str(obj.get("family", "")).lower()
    shift = obj.get("meanShift", obj.get("mean_shift", 0.0))
    shift = _as_float("meanShift", shift)
    if family == "table":
        if "x" not in obj or "pdf" not in obj:
            raise ValidationError("table spec needs 'x' and 'pdf' arrays")
        return TabulatedDensity(tuple(obj["x"]), tuple(obj["pdf"]), shift)
    if family not in _FAMILIES:
        raise ValidationError(f"unknown disorder family {obj.get('family')!r}")
    cls, names = _FAMILIES[family]
    defaults = cls()
    kwargs = {}
    for name in names:
        kwargs[name] = _as_float(name, obj[name]) if name in obj else getattr(defaults, name)
    return cls(**kwargs, mean_shift=shift)


def load_model(source) -> DisorderModel:
    """Build a model from a dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, DisorderModel):
        return source
    if isinstance(source, dict):
        return model_from_dict(source)
    path = Path(source)
    if not path.exists():
        raise ValidationError(f"modelPath not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ValidationError(f"model file {path} is not valid JSON: {err}") from err
    return model_from_dict(obj)
