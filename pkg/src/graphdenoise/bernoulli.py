"""Denoising of partial observations and Bernoulli dropout.

Given a suspicion set zeta of vertices whose observations may have been
replaced (each independently with probability p), the estimate keeps the
trusted complement bitwise and adjusts only f(zeta) = g(zeta) + x, where x
minimizes

    || B(:, zeta) x + B g ||^2 + tau * penalty(x)

with penalty the l1 norm (LASSO via coordinate descent) or the l0 count
(deterministic stepwise search).  The penalty weight tau = (log(1-p) - log p)
/ kappa is nonpositive once p >= 1/2; in that regime nothing inside zeta is
trusted and the estimate is the harmonic interpolation of the complement's
values, matching the known-set case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .graphs import Graph, VertexSet, as_signal, incidence_apply, incidence_columns
from .result import DenoiseResult
from .solvers import harmonic_interpolate, pcg

__all__ = [
    "BernoulliConfig",
    "SparseUpdate",
    "bernoulli_denoise",
    "no_trust_denoise",
    "lasso_coordinate_descent",
    "l0_greedy",
    "lasso_kkt_violation",
]

SUPPORT_ZERO_THRESHOLD = 1e-10
MODES = ("l1", "l0")


def _canonical_mode(mode: str) -> str:
    mode = {"l0-greedy": "l0"}.get(mode, mode)
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class BernoulliConfig:
    """Suspicion set plus the sparsity penalty, given directly or via (p, kappa)."""

    zeta: VertexSet
    tau: float | None = None
    p: float | None = None
    kappa: float | None = None
    mode: str = "l1"

    def __post_init__(self):
        object.__setattr__(self, "mode", _canonical_mode(self.mode))
        has_tau = self.tau is not None
        if has_tau == (self.p is not None or self.kappa is not None):
            raise InvalidArgumentError(
                "supply exactly one of tau or the pair (p, kappa)"
            )
        if not has_tau:
            if self.p is None or self.kappa is None:
                raise InvalidArgumentError("p and kappa must be supplied together")
            if not (0.0 < self.p < 1.0):
                raise InvalidArgumentError("p must be in (0, 1)")
            if not self.kappa > 0:
                raise InvalidArgumentError("kappa must be positive")

    @property
    def effective_tau(self) -> float:
        if self.tau is not None:
            return float(self.tau)
        return (math.log(1.0 - self.p) - math.log(self.p)) / self.kappa


@dataclass(frozen=True)
class SparseUpdate:
    """Deviation on the suspicion set, hard-thresholded at 1e-10."""

    x: np.ndarray
    support: np.ndarray
    iterations: int
    converged: bool = True

    @classmethod
    def from_raw(cls, x, iterations, converged=True) -> "SparseUpdate":
        x = np.asarray(x, dtype=np.float64).copy()
        x[np.abs(x) < SUPPORT_ZERO_THRESHOLD] = 0.0
        return cls(
            x=x,
            support=np.flatnonzero(x),
            iterations=int(iterations),
            converged=converged,
        )


def _column_arrays(design: sp.spmatrix):
    """Per-column (row indices, values, squared norm) views of a sparse design."""
    csc = sp.csc_matrix(design)
    cols = []
    for j in range(csc.shape[1]):
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        idx = csc.indices[lo:hi]
        val = csc.data[lo:hi]
        cols.append((idx, val, float(np.dot(val, val))))
    return csc, cols


def lasso_coordinate_descent(
    design,
    target,
    tau: float,
    tol: float = 1e-10,
    max_sweeps: int = 1000,
) -> SparseUpdate:
    """Cyclic coordinate descent for ||A x - y||^2 + tau * ||x||_1.

    Each coordinate update is the exact scalar soft-threshold minimizer; a
    residual vector is maintained so a sweep costs O(nnz(A)).  Exhausting
    ``max_sweeps`` returns the best iterate with ``converged=False``.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    csc, cols = _column_arrays(design)
    y = np.asarray(target, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != csc.shape[0]:
        raise InvalidArgumentError(
            f"target shape {y.shape} does not match design rows {csc.shape[0]}"
        )
    p = csc.shape[1]
    x = np.zeros(p)
    r = y.copy()
    half_tau = tau / 2.0
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            idx, val, sq = cols[j]
            if sq == 0.0:
                continue
            rho = float(np.dot(val, r[idx])) + sq * x[j]
            if rho > half_tau:
                xj = (rho - half_tau) / sq
            elif rho < -half_tau:
                xj = (rho + half_tau) / sq
            else:
                xj = 0.0
            delta = xj - x[j]
            if delta != 0.0:
                r[idx] -= delta * val
                x[j] = xj
                max_delta = max(max_delta, abs(delta))
        if max_delta <= tol * max(1.0, float(np.max(np.abs(x)))):
            converged = True
            break
    return SparseUpdate.from_raw(x, sweeps, converged)


def lasso_kkt_violation(design, target, tau: float, x) -> float:
    """Worst-coordinate KKT violation of ||A x - y||^2 + tau * ||x||_1 at x."""
    a = sp.csc_matrix(design)
    y = np.asarray(target, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    grad = 2.0 * (a.T @ (a @ x - y))
    worst = 0.0
    for j in range(a.shape[1]):
        if x[j] != 0.0:
            worst = max(worst, abs(grad[j] + tau * np.sign(x[j])))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - tau))
    return float(worst)


def _refit_least_squares(
    csc: sp.csc_matrix, support: list[int], y: np.ndarray, x0=None
):
    """Least-squares coefficients on the support via CG on the normal equations."""
    sub = csc[:, support]
    b = sub.T @ y
    matvec = lambda v: sub.T @ (sub @ v)
    gram_diag = np.asarray(sub.multiply(sub).sum(axis=0)).ravel()
    x, _, _, _ = pcg(
        matvec,
        b,
        diag=np.maximum(gram_diag, np.finfo(float).tiny),
        tol=1e-12,
        max_iter=max(200, 10 * len(support)),
        x0=x0,
    )
    # a full-support design with B * 1 = 0 leaves the coefficient mean free;
    # pin the minimal-norm representative
    if len(support) == csc.shape[1]:
        ones = np.ones(csc.shape[1])
        if float(np.max(np.abs(csc @ ones))) <= 1e-12 * max(
            1.0, float(abs(csc).max())
        ):
            x = x - x.mean()
    return x


class _StepwiseSearch:
    """Deterministic stepwise support search for the l0-penalized objective."""

    # designs wider than this skip the expensive full-support and
    # complement descents; the pairwise stall escape is always capped
    SMALL_DESIGN = 64
    PAIR_CANDIDATES = 12
    SWAP_CANDIDATES = 64
    N_SINGLE_STARTS = 7

    def __init__(self, csc, col_sq, y, tau):
        self.csc = csc
        self.col_sq = col_sq
        self.usable = col_sq > 0.0
        self.y = y
        self.tau = tau
        self.p = csc.shape[1]
        self.moves = 0

    def residual(self, support):
        if not support:
            return self.y.copy()
        coeffs = _refit_least_squares(self.csc, sorted(support), self.y)
        r = self.y.copy()
        r -= self.csc[:, sorted(support)] @ coeffs
        return r

    def objective(self, support):
        r = self.residual(support)
        return float(r @ r) + self.tau * len(support)

    def gains(self, support, r):
        corr = self.csc.T @ r
        g = np.where(self.usable, corr**2 / np.where(self.usable, self.col_sq, 1.0), -np.inf)
        if support:
            g[sorted(support)] = -np.inf
        return g

    def forward(self, support):
        support = list(support)
        r = self.residual(support)
        while len(support) < self.p:
            g = self.gains(support, r)
            j = int(np.argmax(g))
            if g[j] >= self.tau:
                support.append(j)
                self.moves += 1
                r = self.residual(support)
                continue
            # single additions stalled: try the best pair among the
            # strongest remaining candidates
            cand = [
                int(c)
                for c in np.argsort(-g, kind="stable")[: self.PAIR_CANDIDATES]
                if np.isfinite(g[c])
            ]
            cur = float(r @ r) + self.tau * len(support)
            best = (cur, None)
            for i in range(len(cand)):
                for j2 in range(i + 1, len(cand)):
                    o = self.objective(support + [cand[i], cand[j2]])
                    if o < best[0] - 1e-12:
                        best = (o, (cand[i], cand[j2]))
            if best[1] is None:
                break
            support.extend(best[1])
            self.moves += 1
            r = self.residual(support)
        return support

    def prune(self, support):
        support = list(support)
        while support:
            cur = self.objective(support)
            best = (cur, None)
            for j in support:
                o = self.objective([t for t in support if t != j])
                if o < best[0] - 1e-12:
                    best = (o, j)
            if best[1] is None:
                break
            support.remove(best[1])
            self.moves += 1
        return support

    def swap(self, support):
        support = list(support)
        for _ in range(20):
            cur = self.objective(support)
            r = self.residual(support)
            corr = np.abs(self.csc.T @ r)
            if support:
                corr[sorted(support)] = -np.inf
            cand = np.argsort(-corr, kind="stable")[: self.SWAP_CANDIDATES]
            improved = False
            for j in list(support):
                for c in cand:
                    c = int(c)
                    if c in support:
                        continue
                    o = self.objective([t for t in support if t != j] + [c])
                    if o < cur - 1e-12:
                        support.remove(j)
                        support.append(c)
                        self.moves += 1
                        improved = True
                        break
                if improved:
                    break
            if not improved:
                break
        return support

    def run(self):
        g0 = self.gains([], self.y)
        order = np.argsort(-g0, kind="stable")
        starts: list[list[int]] = [[]]
        for j in order[: self.N_SINGLE_STARTS]:
            if g0[j] >= self.tau:
                starts.append([int(j)])
        small = self.p <= self.SMALL_DESIGN
        if small:
            starts.append(list(range(self.p)))
        best = (np.inf, [])
        for start in starts:
            base = self.prune(start) if len(start) > 1 else self.forward(start)
            candidates = [base]
            if small:
                candidates.append([j for j in range(self.p) if j not in base])
            for cand in candidates:
                t = self.prune(cand)
                if small:
                    t = self.swap(t)
                t = self.forward(t)
                t = self.prune(t)
                o = self.objective(t)
                if o < best[0]:
                    best = (o, sorted(t))
        return best[1]


def l0_greedy(design, target, tau: float) -> SparseUpdate:
    """Deterministic stepwise search for ||A x - y||^2 + tau * ||x||_0.

    Forward selection drives the search: repeatedly add the coordinate with
    the largest residual reduction (c_j^2 / ||A_j||^2), refit least squares
    on the support via CG on the normal equations, and stop when no single
    addition gains at least tau.  Plain forward selection is easily trapped,
    so the search also restarts from the strongest single columns, prunes
    unhelpful members, escapes stalls with bounded pairwise additions, and,
    on designs of at most 64 columns, descends from the full support and
    from complements of found supports with bounded exchange moves.  The
    best support found wins; the result is never worse than keeping x = 0.
    Still a heuristic: global optimality is not guaranteed.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    csc, cols = _column_arrays(design)
    y = np.asarray(target, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != csc.shape[0]:
        raise InvalidArgumentError(
            f"target shape {y.shape} does not match design rows {csc.shape[0]}"
        )
    col_sq = np.array([sq for _, _, sq in cols])
    search = _StepwiseSearch(csc, col_sq, y, tau)
    support = search.run()
    x = np.zeros(csc.shape[1])
    if support:
        x[support] = _refit_least_squares(csc, support, y)
    return SparseUpdate.from_raw(x, search.moves)


def bernoulli_denoise(g_signal, graph: Graph, cfg: BernoulliConfig) -> DenoiseResult:
    """Dropout-model estimate; trusted vertices are passed through bitwise.

    With a positive penalty (p < 1/2) the suspicious entries move by the
    sparse-regression deviation; with a nonpositive penalty (p >= 1/2) every
    suspicious entry is refilled by harmonic interpolation from the trusted
    complement.
    """
    g = as_signal(g_signal, graph.n)
    if len(cfg.zeta) and cfg.zeta.members[-1] >= graph.n:
        raise InvalidArgumentError("zeta out of range")
    if len(cfg.zeta) == 0:
        return DenoiseResult(signal=g.copy(), iterations=0)
    tau = cfg.effective_tau
    if tau <= 0.0:
        comp = cfg.zeta.complement(graph.n)
        if len(comp) == 0:
            raise InvalidArgumentError(
                "zeta covers every vertex with a nonpositive penalty: nothing "
                "is trusted and every value would be discarded"
            )
        f = harmonic_interpolate(graph, comp, g[comp.members])
        return DenoiseResult(signal=f, iterations=0)
    design = incidence_columns(graph, cfg.zeta)
    yv = -incidence_apply(graph, g)
    if cfg.mode == "l1":
        update = lasso_coordinate_descent(design, yv, tau)
    else:
        update = l0_greedy(design, yv, tau)
    f = g.copy()
    f[cfg.zeta.members] += update.x
    return DenoiseResult(
        signal=f, iterations=update.iterations, converged=update.converged
    )


def no_trust_denoise(g_signal, graph: Graph, tau: float, mode: str = "l1") -> DenoiseResult:
    """Dropout estimate with every vertex suspected (zeta = V)."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    mode = _canonical_mode(mode)
    zeta = VertexSet(np.arange(graph.n, dtype=np.int64))
    cfg = BernoulliConfig(zeta=zeta, tau=tau, mode=mode)
    return bernoulli_denoise(g_signal, graph, cfg)
