"""Denoising under additive spectral Gaussian noise.

The estimate is the low-pass filter h(lambda) = 1/(1 + tau*lambda) applied
to the observation, computed by solving (I + tau*L) f = g.  The smoothing
strength tau = 2*kappa*sigma^2 can be supplied directly as a tuning knob or
estimated from the observed quadratic forms g'Lg and ||Lg||^2 by the method
of moments.

A note on the estimator's algebraic form: the closed-form ratio can be
grouped either as

    (tr(L) g'Lg - (n-1) ||Lg||^2) / (tr(L) ||Lg||^2 - tr(L^2) g'Lg)

or with both numerator and denominator negated; the two are numerically
identical and this module uses the second grouping, which falls straight
out of solving the 2x2 moment system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, InvalidArgumentError
from .graphs import (
    Graph,
    as_signal,
    laplacian_apply,
    laplacian_squared_trace,
    laplacian_trace,
)
from .result import DenoiseResult
from .solvers import SddOperator, cg_solve

__all__ = [
    "GaussianParams",
    "denoise_gaussian",
    "estimate_tau",
    "estimate_tau_multi",
    "nonneg_moment_fit",
]


@dataclass(frozen=True)
class GaussianParams:
    """Smoothing strength tau = 2*kappa*sigma^2, with the factors if known."""

    tau: float
    kappa: float | None = None
    sigma2: float | None = None

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidArgumentError("tau must be nonnegative")

    @classmethod
    def from_kappa_sigma2(cls, kappa: float, sigma2: float) -> "GaussianParams":
        if kappa < 0 or sigma2 < 0:
            raise InvalidArgumentError("kappa and sigma2 must be nonnegative")
        return cls(tau=2.0 * kappa * sigma2, kappa=kappa, sigma2=sigma2)


def denoise_gaussian(
    g_signal,
    graph: Graph,
    tau: float,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> DenoiseResult:
    """Solve (I + tau*L) f = g; equivalent to filtering with 1/(1 + tau*lambda).

    The solve preserves the signal mean (the zero-frequency coefficient is
    passed through unchanged).  ``tau=0`` returns the observation; an
    infinite tau returns the constant mean signal.
    """
    g = as_signal(g_signal, graph.n)
    if tau < 0 or math.isnan(tau):
        raise InvalidArgumentError("tau must be nonnegative")
    if tau == 0.0:
        return DenoiseResult(signal=g.copy(), iterations=0)
    if math.isinf(tau):
        mean = np.full(graph.n, g.mean())
        return DenoiseResult(signal=mean, iterations=0)
    op = SddOperator.shifted_laplacian(graph, np.ones(graph.n), tau)
    report = cg_solve(op, g, tol=tol, max_iter=max_iter)
    return DenoiseResult(
        signal=report.solution,
        iterations=report.iterations,
        trace=report.residual_history,
    )


def _moments(g: np.ndarray, graph: Graph) -> tuple[float, float]:
    lg = laplacian_apply(graph, g)
    return float(np.dot(g, lg)), float(np.dot(lg, lg))


def _tau_from_moments(m1: float, m2: float, graph: Graph) -> float:
    n = graph.n
    tr = laplacian_trace(graph)
    tr2 = laplacian_squared_trace(graph)
    det = tr * tr - (n - 1) * tr2
    if det != 0.0:
        sigma2 = (tr * m1 - (n - 1) * m2) / det
        inv2kappa = (tr * m2 - tr2 * m1) / det
        if sigma2 > 0.0 and inv2kappa > 0.0:
            return sigma2 / inv2kappa
    sigma2, inv2kappa = nonneg_moment_fit(m1, m2, graph)
    if inv2kappa == 0.0:
        if sigma2 == 0.0:
            warnings.warn(
                "moment fit returned zero for both parameters; "
                "falling back to tau=0 (no smoothing)",
                stacklevel=3,
            )
            return 0.0
        # all observed variation is attributed to noise: smooth to the mean
        return math.inf
    return sigma2 / inv2kappa


def estimate_tau(g_signal, graph: Graph) -> float:
    """Method-of-moments estimate of tau = 2*kappa*sigma^2 from one signal.

    Solves the 2x2 system matching g'Lg and ||Lg||^2 to their model
    expectations; if the implied (sigma^2, 1/(2*kappa)) are not both
    positive, falls back to the nonnegative fit of
    :func:`nonneg_moment_fit`.
    """
    g = as_signal(g_signal, graph.n)
    if np.ptp(g) == 0.0:
        raise DegenerateSignalError(
            "constant signal: both moment targets are zero"
        )
    m1, m2 = _moments(g, graph)
    if m2 == 0.0:
        raise DegenerateSignalError(
            "constant signal: both moment targets are zero"
        )
    return _tau_from_moments(m1, m2, graph)


def estimate_tau_multi(signals, graph: Graph) -> float:
    """Moment estimate pooled over independently generated signals.

    Accepts a sequence of length-n signals or an (n, k) column matrix; the
    two quadratic-form targets are averaged over the k signals before the
    backsolve, so the estimate is consistent as k grows.
    """
    arr = np.asarray(signals, dtype=np.float64)
    if arr.ndim == 1:
        cols = [arr]
    elif arr.ndim == 2:
        # a 2-D input is a sequence of row signals; fall back to columns
        # only when the row length cannot be a signal
        if arr.shape[1] == graph.n:
            cols = list(arr)
        elif arr.shape[0] == graph.n:
            cols = list(arr.T)
        else:
            raise InvalidArgumentError(
                f"signal matrix shape {arr.shape} does not match n={graph.n}"
            )
    else:
        raise InvalidArgumentError("signals must be a vector or a 2-D array")
    if not cols:
        raise InvalidArgumentError("need at least one signal")
    m1_sum = 0.0
    m2_sum = 0.0
    for c in cols:
        m1, m2 = _moments(as_signal(c, graph.n), graph)
        m1_sum += m1
        m2_sum += m2
    k = len(cols)
    m1_bar, m2_bar = m1_sum / k, m2_sum / k
    if m2_bar == 0.0:
        raise DegenerateSignalError("all signals constant: moment targets are zero")
    return _tau_from_moments(m1_bar, m2_bar, graph)


def nonneg_moment_fit(m1: float, m2: float, graph: Graph) -> tuple[float, float]:
    """Nonnegative least-squares fit of the 2x2 moment system.

    Returns (sigma2_hat, inv2kappa_hat) minimizing the residual of

        [tr(L)    n-1  ] [sigma2   ]   [m1]
        [tr(L^2)  tr(L)] [1/(2kappa)] ~ [m2]

    over the nonnegative quadrant.  If the target lies inside the cone
    spanned by the columns this is the exact solve; otherwise the target is
    projected onto the nearer column's ray.
    """
    if not (np.isfinite(m1) and np.isfinite(m2)):
        raise InvalidArgumentError("moment targets must be finite")
    n = graph.n
    tr = laplacian_trace(graph)
    tr2 = laplacian_squared_trace(graph)
    b = np.array([m1, m2])
    c1 = np.array([tr, tr2])
    c2 = np.array([float(n - 1), tr])
    det = tr * tr - (n - 1) * tr2
    if det != 0.0:
        x1 = (tr * m1 - (n - 1) * m2) / det
        x2 = (tr * m2 - tr2 * m1) / det
        if x1 >= 0.0 and x2 >= 0.0:
            return float(x1), float(x2)
    a1 = max(float(np.dot(c1, b)), 0.0) / float(np.dot(c1, c1))
    a2 = max(float(np.dot(c2, b)), 0.0) / float(np.dot(c2, c2))
    r1 = float(np.linalg.norm(b - a1 * c1))
    r2 = float(np.linalg.norm(b - a2 * c2))
    if r2 <= r1:
        return 0.0, float(a2)
    return float(a1), 0.0
