"""Monte Carlo Lyapunov exponents of random matrix products.

The products multiply M(epsilon, Z) = [[1, epsilon], [epsilon*Z, Z]] for
IID positive Z = e^z. A direction vector is renormalized every step by
its first component, so the state reduces to the log-ratio of the two
components and the accumulated log norm growth; both stay O(1) in the
kernel regardless of trajectory length.

An estimate's stderr comes from batch means over contiguous segments of
the single post-burn-in trajectory. Independent restarted walkers would
be wrong here: for a balanced model at epsilon = 0 the per-walker mean
is a scaled random-walk endpoint whose spread does not shrink with the
walker length, while contiguous segments of one walk average down like
1/sqrt(steps).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .disorder import DisorderModel
from .errors import NumericalError, ValidationError
from .streams import make_stream

_CHUNK = 1 << 16

_NORMS = {"l1": False, "max": True}


@dataclass(frozen=True)
class LyapEstimate:
    """One Monte Carlo estimate: nats per step, with batch-mean stderr."""

    mean: float
    stderr: float
    steps: int
    batches: int
    seed: int
    epsilon: float | None = None
    k: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise NumericalError(f"estimate mean is not finite: {self.mean!r}")
        if not self.stderr >= 0.0:
            raise NumericalError(f"estimate stderr is negative: {self.stderr!r}")


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r2: float


def max_workers() -> int:
    """Worker cap for sweep fan-out, from LYAP_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("LYAP_THREADS", "1")))
    except ValueError:
        return 1


def lyapunov_mc(
    epsilon: float,
    model: DisorderModel | None = None,
    steps: int = 10**6,
    batches: int = 32,
    seed: int = 0,
    stream: int = 0,
    const_z: float | None = None,
    norm: str = "l1",
) -> LyapEstimate:
    """Estimate the top Lyapunov exponent at coupling epsilon.

    epsilon = 0 is the exactly diagonal case (exponent max(0, E[z])).
    Negative epsilon is mapped to |epsilon| on entry: M(-eps, Z) is
    conjugate to M(eps, Z) by diag(1, -1), so the exponents coincide.
    const_z freezes Z to one positive value (validation mode) instead of
    drawing from a model. Burn-in is 1% of steps; batches are contiguous
    segments of the remainder.
    """
    epsilon = float(epsilon)
    if not (math.isfinite(epsilon) and abs(epsilon) < 1.0):
        raise ValidationError(f"epsilon out of range [0, 1): got {epsilon!r}")
    epsilon = abs(epsilon)
    if batches < 2:
        raise ValidationError(f"batches must be >= 2, got {batches}")
    if steps < batches:
        raise ValidationError(f"steps={steps} smaller than batches={batches}")
    if norm not in _NORMS:
        raise ValidationError(f"unknown norm {norm!r}, expected one of {sorted(_NORMS)}")
    use_max = _NORMS[norm]
    if (model is None) == (const_z is None):
        raise ValidationError("exactly one of model and const_z must be given")
    if const_z is not None:
        if not (math.isfinite(const_z) and const_z > 0.0):
            raise NumericalError(f"nonpositive Z draw: const_z={const_z!r}")
        z0 = math.log(const_z)

    k = math.inf if epsilon == 0.0 else -math.log(epsilon)
    burn = steps // 100
    per = (steps - burn) // batches
    rng = make_stream(seed, stream)

    def draw(m: int) -> np.ndarray:
        if const_z is not None:
            return np.full(m, z0)
        return model.draw(rng, m)

    x = 0.0
    done = 0
    while done < burn:
        m = min(_CHUNK, burn - done)
        x, _ = _kernels.product_chunk(x, k, draw(m), use_max)
        done += m

    means = np.empty(batches, dtype=float)
    for b in range(batches):
        total = 0.0
        done = 0
        while done < per:
            m = min(_CHUNK, per - done)
            x, s = _kernels.product_chunk(x, k, draw(m), use_max)
            total += s
            done += m
        means[b] = total / per
    mean = float(np.mean(means))
    stderr = float(np.std(means, ddof=1) / math.sqrt(batches))
    return LyapEstimate(
        mean=mean,
        stderr=stderr,
        steps=per * batches,
        batches=batches,
        seed=seed,
        epsilon=epsilon,
        k=k,
    )


def epsilon_sweep(
    model: DisorderModel,
    epsilons,
    steps: int = 10**6,
    batches: int = 32,
    seed: int = 0,
    norm: str = "l1",
) -> list[LyapEstimate]:
    """One estimate per epsilon, each on its own stream (seed, index).

    Output order matches input order regardless of how many workers the
    LYAP_THREADS cap allows; points are independent trajectories.
    """
    eps = [float(e) for e in epsilons]
    for e in eps:
        if not (0.0 < e < 1.0):
            raise ValidationError(f"epsilon out of range (0, 1) for sweep: got {e!r}")

    def run(item):
        index, e = item
        return lyapunov_mc(
            e, model, steps=steps, batches=batches, seed=seed, stream=index, norm=norm
        )

    workers = max_workers()
    if workers == 1 or len(eps) <= 1:
        return [run(item) for item in enumerate(eps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, enumerate(eps)))


def power_law_fit(sweep) -> PowerLawFit:
    """Least squares of log(mean) on log(epsilon) across a sweep."""
    points = list(sweep)
    if len(points) < 3:
        raise ValidationError(f"power-law fit needs >= 3 points, got {len(points)}")
    if any(est.mean <= 0.0 for est in points):
        raise NumericalError("nonpositive estimate in sweep")
    if any(est.epsilon is None or not (0.0 < est.epsilon < 1.0) for est in points):
        raise ValidationError("power-law fit needs estimates with epsilon in (0, 1)")
    lx = np.log([est.epsilon for est in points])
    ly = np.log([est.mean for est in points])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0.0 else 1.0
    return PowerLawFit(slope=float(slope), intercept=float(intercept), r2=r2)
