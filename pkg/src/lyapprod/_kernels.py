"""Hot loops behind the Monte Carlo drivers.

Every kernel consumes one chunk of pre-drawn noise and carries scalar
state across calls, so the drivers stay in numpy/python while the per-step
arithmetic runs compiled. All math is done in log coordinates with
softplus forms, which keeps every quantity finite for |state| into the
hundreds. Falls back to pure python transparently when numba is missing.
"""

from __future__ import annotations

import math

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def _sp(t: float) -> float:
    # softplus log(1 + e^t) without overflow on either side
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@njit(cache=True)
def _hk(x: float, k: float) -> float:
    return _sp(x + k) - _sp(x - k) - k


@njit(cache=True)
def _laddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@njit(cache=True)
def product_chunk(x: float, k: float, z, use_max_norm: bool):
    """Advance the direction state through one noise chunk.

    State x is the log-ratio of the two components of the propagated
    vector (1, e^x). Each step applies one random matrix, renormalizes,
    and adds the log norm growth to the running sum. k = -log(epsilon);
    k = +inf is the diagonal epsilon = 0 case. Returns (x, sum).
    """
    s = 0.0
    diagonal = math.isinf(k)
    for i in range(z.shape[0]):
        if diagonal:
            lw1 = 0.0
            lw2 = z[i] + x
        else:
            lw1 = _sp(x - k)
            lw2 = z[i] + _sp(x + k) - k
        if use_max_norm:
            top = lw1 if lw1 > lw2 else lw2
            base = x if x > 0.0 else 0.0
            s += top - base
        else:
            s += _laddexp(lw1, lw2) - _sp(x)
        x = lw2 - lw1
    return x, s


@njit(cache=True)
def ergodic_chunk(x: float, k: float, z):
    """Step the projective chain, accumulating log(1 + e^(-k - x))."""
    s = 0.0
    for i in range(z.shape[0]):
        x = z[i] + _hk(x, k)
        s += _sp(-k - x)
    return x, s


@njit(cache=True)
def path_chunk(x: float, k: float, z, out):
    """Step the projective chain, recording every visited state."""
    for i in range(z.shape[0]):
        x = z[i] + _hk(x, k)
        out[i] = x
    return x


@njit(cache=True)
def edge_chunk(y: float, z, lo: float, dx: float, hist, counts):
    """Step the half-line chain y <- z + log(1 + e^y), binning visits.

    hist covers [lo, lo + len(hist)*dx); visits outside increment
    counts[0] (below) or counts[1] (above). Returns (y, running max).
    """
    ymax = y
    nbins = hist.shape[0]
    for i in range(z.shape[0]):
        y = z[i] + _sp(y)
        if y > ymax:
            ymax = y
        j = int(math.floor((y - lo) / dx))
        if 0 <= j < nbins:
            hist[j] += 1
        elif j < 0:
            counts[0] += 1
        else:
            counts[1] += 1
    return y, ymax


@njit(cache=True)
def exit_chunk(x: float, k: float, z):
    """Step until |x| >= k or the chunk ends.

    Returns (x, steps consumed, exited flag).
    """
    for i in range(z.shape[0]):
        x = z[i] + _hk(x, k)
        if x >= k or x <= -k:
            return x, i + 1, True
    return x, z.shape[0], False
