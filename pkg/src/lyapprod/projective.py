"""Projective-coordinate maps and chain simulators.

A positive direction vector (v1, v2) is tracked through its log-ratio
x = log(v2/v1). One random matrix step then acts as x' = z + h_k(x) with

    h_k(x) = log((e^-k + e^x) / (1 + e^(x-k)))
           = softplus(x + k) - softplus(x - k) - k,

an odd, strictly increasing map of R onto (-k, k). Its k -> inf edge
counterpart is h(y) = y + log(1 + e^-y) = softplus(y), acting on the
half-line chain y' = z + h(y). Everything here is written in softplus
form so no intermediate exponential overflows for arguments into the
hundreds.

The simulators consume noise in fixed-size chunks through the compiled
kernels, so trajectories of 10^8 steps run in seconds while the drivers
stay plain numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _kernels
from .disorder import DisorderModel
from .errors import NumericalError, ValidationError
from .matprod import LyapEstimate
from .streams import make_stream

_CHUNK = 1 << 16


def softplus(t):
    """log(1 + e^t), overflow-free on both sides."""
    t = np.asarray(t, dtype=float)
    out = np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))
    return float(out) if out.ndim == 0 else out


def hk(x, k: float):
    """The projective action x -> log((e^-k + e^x)/(1 + e^(x-k)))."""
    if not k > 0.0:
        raise ValidationError(f"k must be positive, got {k!r}")
    x = np.asarray(x, dtype=float)
    out = softplus(x + k) - softplus(x - k) - k
    return float(out) if np.ndim(out) == 0 else out


def hk_deriv(x, k: float):
    """h_k'(x) = sigmoid(x + k) - sigmoid(x - k), in (0, 1)."""
    if not k > 0.0:
        raise ValidationError(f"k must be positive, got {k!r}")
    x = np.asarray(x, dtype=float)
    out = expit(x + k) - expit(x - k)
    return float(out) if out.ndim == 0 else out


def hk_inverse(u, k: float):
    """The unique x with hk(x, k) = u, for u in the image (-k, k).

    Closed form e^x = (e^u - e^-k)/(1 - e^(u-k)), rearranged through
    expm1 so both factors stay accurate as u approaches either endpoint:
    x = u + log(-expm1(-(k + u))) - log(-expm1(u - k)).
    """
    if not k > 0.0:
        raise ValidationError(f"k must be positive, got {k!r}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) >= k):
        raise ValidationError(f"u outside image (-k, k): got u={u!r} at k={k!r}")
    out = u_arr + np.log(-np.expm1(-(k + u_arr))) - np.log(-np.expm1(u_arr - k))
    return float(out) if out.ndim == 0 else out


def edge_map(y):
    """h(y) = y + log(1 + e^-y) = softplus(y), the k -> inf edge map."""
    return softplus(y)


def edge_excess(y):
    """h(y) - y = log(1 + e^-y), computed directly.

    The subtraction h(y) - y rounds to 0 in float64 once y > ~36 even
    though the true gap e^-y is positive; this form keeps it exact.
    """
    y = np.asarray(y, dtype=float)
    out = np.maximum(-y, 0.0) + np.log1p(np.exp(-np.abs(y)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChainConfig:
    """Inputs of one projective-chain run."""

    k: float
    model: DisorderModel
    steps: int
    burn_in: int = 100_000
    seed: int = 0
    stream: int = 0
    x0: float = 0.0

    def __post_init__(self):
        if not (self.k > 0.0 and math.isfinite(self.k)):
            raise ValidationError(f"k must be positive and finite, got {self.k!r}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.burn_in < 0:
            raise ValidationError(f"burn_in must be >= 0, got {self.burn_in}")


@dataclass
class XTrajectory:
    """Post-burn-in summary of the main chain."""

    config: ChainConfig
    edges: np.ndarray
    counts: np.ndarray
    final_x: float
    path: np.ndarray | None = None

    @property
    def density(self) -> np.ndarray:
        width = np.diff(self.edges)
        total = self.counts.sum()
        return self.counts / (total * width) if total else np.zeros_like(width)


def simulate_x(
    cfg: ChainConfig,
    window: tuple[float, float] | None = None,
    bin_width: float = 0.02,
    keep_path: bool = False,
) -> XTrajectory:
    """Iterate X' = z + h_k(X), histogramming the post-burn-in states."""
    if window is None:
        window = (-cfg.k - 10.0, cfg.k + 10.0)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValidationError(f"empty histogram window {window!r}")
    nbins = max(1, int(round((hi - lo) / bin_width)))
    edges = np.linspace(lo, hi, nbins + 1)

    rng = make_stream(cfg.seed, cfg.stream)
    x = float(cfg.x0)
    done = 0
    while done < cfg.burn_in:
        m = min(_CHUNK, cfg.burn_in - done)
        z = cfg.model.draw(rng, m)
        x, _ = _kernels.ergodic_chunk(x, cfg.k, z)
        done += m

    counts = np.zeros(nbins, dtype=np.int64)
    path = np.empty(cfg.steps, dtype=float) if keep_path else None
    buf = np.empty(_CHUNK, dtype=float)
    done = 0
    while done < cfg.steps:
        m = min(_CHUNK, cfg.steps - done)
        z = cfg.model.draw(rng, m)
        x = _kernels.path_chunk(x, cfg.k, z, buf[:m])
        counts += np.histogram(buf[:m], bins=edges)[0]
        if keep_path:
            path[done : done + m] = buf[:m]
        done += m
    return XTrajectory(config=cfg, edges=edges, counts=counts, final_x=x, path=path)


def ergodic_lyapunov(cfg: ChainConfig, batches: int = 32) -> LyapEstimate:
    """Time average of log(1 + e^(-k - X_n)) with batch-mean stderr.

    This is the Lyapunov exponent L(k) = L(epsilon = e^-k) expressed
    through the stationary chain; batches are contiguous segments of the
    single post-burn-in trajectory.
    """
    if batches < 2:
        raise ValidationError(f"batches must be >= 2, got {batches}")
    if cfg.steps < batches:
        raise ValidationError(f"steps={cfg.steps} smaller than batches={batches}")
    per = cfg.steps // batches

    rng = make_stream(cfg.seed, cfg.stream)
    x = float(cfg.x0)
    done = 0
    while done < cfg.burn_in:
        m = min(_CHUNK, cfg.burn_in - done)
        x, _ = _kernels.ergodic_chunk(x, cfg.k, cfg.model.draw(rng, m))
        done += m

    means = np.empty(batches, dtype=float)
    for b in range(batches):
        total = 0.0
        done = 0
        while done < per:
            m = min(_CHUNK, per - done)
            x, s = _kernels.ergodic_chunk(x, cfg.k, cfg.model.draw(rng, m))
            total += s
            done += m
        means[b] = total / per
    mean = float(np.mean(means))
    stderr = float(np.std(means, ddof=1) / math.sqrt(batches))
    if not math.isfinite(mean):
        raise NumericalError(f"chain average is not finite: {mean!r}")
    return LyapEstimate(
        mean=mean,
        stderr=stderr,
        steps=per * batches,
        batches=batches,
        seed=cfg.seed,
        epsilon=math.exp(-cfg.k),
        k=cfg.k,
    )


@dataclass
class YTrajectory:
    """Occupation summary of the half-line chain."""

    steps: int
    window: tuple[float, float]
    edges: np.ndarray
    counts: np.ndarray
    below: int
    above: int
    running_max: dict[int, float]
    final_y: float

    def occupation_cdf(self) -> tuple[np.ndarray, np.ndarray]:
        """Visit counts at or below each bin's right edge (raw, not scaled)."""
        cum = self.below + np.cumsum(self.counts)
        return self.edges[1:], cum


def simulate_y(
    model: DisorderModel,
    steps: int,
    seed: int = 0,
    stream: int = 0,
    y0: float = 0.0,
    window: tuple[float, float] = (-5.0, 20.0),
    bin_width: float = 0.01,
    checkpoints: tuple[int, ...] = (),
) -> YTrajectory:
    """Iterate Y' = z + h(Y), binning visits on a bounded window.

    The chain is null recurrent (its invariant measure has infinite
    mass), so only occupation ratios on compacts are meaningful; the
    histogram plus the below/above counters capture those. running_max
    is recorded at each requested checkpoint step count and at the end.
    """
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    lo, hi = float(window[0]), float(window[1])
    nbins = max(1, int(round((hi - lo) / bin_width)))
    edges = np.linspace(lo, hi, nbins + 1)
    marks = sorted({int(c) for c in checkpoints if 0 < int(c) <= steps})

    rng = make_stream(seed, stream)
    hist = np.zeros(nbins, dtype=np.int64)
    counts = np.zeros(2, dtype=np.int64)
    y = float(y0)
    ymax = y
    running: dict[int, float] = {}
    done = 0
    next_marks = marks + [steps]
    for target in next_marks:
        while done < target:
            m = min(_CHUNK, target - done)
            z = model.draw(rng, m)
            y, cmax = _kernels.edge_chunk(y, z, lo, (hi - lo) / nbins, hist, counts)
            ymax = max(ymax, cmax)
            done += m
        running[target] = ymax
    return YTrajectory(
        steps=steps,
        window=(lo, hi),
        edges=edges,
        counts=hist,
        below=int(counts[0]),
        above=int(counts[1]),
        running_max=running,
        final_y=y,
    )


@dataclass
class ExitTimeResult:
    mean: float
    stderr: float
    taus: np.ndarray
    cap: int


def exit_time(
    k: float,
    model: DisorderModel,
    x0: float = 0.0,
    seed: int = 0,
    replicas: int = 1000,
) -> ExitTimeResult:
    """Monte Carlo of tau_k = first n with |X_n| >= k, from X_0 = x0.

    Replica r draws from stream (seed, r), so replicas are independent
    and, across different k at the same seed, replica r sees identical
    noise (coupled comparisons of exit times are meaningful). A replica
    exceeding the cap of 10^4 * k^2 steps is an error, not a truncation:
    truncating would bias the diffusive-scaling estimate downward.
    """
    if replicas < 2:
        raise ValidationError(f"replicas must be >= 2, got {replicas}")
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError(f"k must be positive and finite, got {k!r}")
    cap = int(round(1e4 * k * k))
    taus = np.zeros(replicas, dtype=np.int64)
    chunk = 8192
    for r in range(replicas):
        if abs(x0) >= k:
            taus[r] = 0
            continue
        rng = make_stream(seed, r)
        x = float(x0)
        tau = 0
        exited = False
        while tau < cap:
            m = min(chunk, cap - tau)
            x, used, exited = _kernels.exit_chunk(x, k, model.draw(rng, m))
            tau += used
            if exited:
                break
        if not exited:
            raise NumericalError(
                f"no exit within cap: replica {r} still inside after {cap} steps at k={k:g}"
            )
        taus[r] = tau
    mean = float(taus.mean())
    stderr = float(taus.std(ddof=1) / math.sqrt(replicas))
    return ExitTimeResult(mean=mean, stderr=stderr, taus=taus, cap=cap)
