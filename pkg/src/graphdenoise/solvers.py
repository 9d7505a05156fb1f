"""Preconditioned conjugate-gradient solving for the denoisers' SDD systems.

Every estimator in the package reduces to systems of the form
(diag(d) + tau*L) x = b or to a principal Laplacian submatrix
L(U, U) x = b.  Both are handled by :class:`SddOperator` plus Jacobi
(diagonal) preconditioned CG.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConvergenceError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
    NumericalFailureError,
    SingularSystemError,
)
from .graphs import Graph, VertexSet, as_signal, restrict_adjacency

__all__ = ["SddOperator", "SolveReport", "cg_solve", "harmonic_interpolate", "pcg"]


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    iterations: int
    relative_residual: float
    residual_history: np.ndarray


@dataclass(frozen=True)
class SddOperator:
    """The SPD operator (diag(d) + tau*L), optionally restricted to U x U.

    With ``rows=None`` the operator acts on all n vertices and is positive
    definite iff some d entry is positive (tau > 0) or all are (tau = 0).
    With ``rows=U`` a proper subset of a connected graph, L(U, U) itself is
    already positive definite.
    """

    graph: Graph
    diag_shift: np.ndarray
    scale: float
    rows: VertexSet | None = None

    @classmethod
    def shifted_laplacian(cls, graph: Graph, diag_shift, scale: float) -> "SddOperator":
        d = as_signal(diag_shift, graph.n)
        if np.any(d < 0):
            raise InvalidArgumentError("diagonal shift must be nonnegative")
        if scale < 0:
            raise InvalidArgumentError("Laplacian scale must be nonnegative")
        op = cls(graph=graph, diag_shift=d, scale=float(scale), rows=None)
        op._check_definite()
        return op

    @classmethod
    def laplacian_submatrix(cls, graph: Graph, rows: VertexSet) -> "SddOperator":
        if len(rows) == 0:
            raise InvalidArgumentError("submatrix support must be nonempty")
        if rows.members[-1] >= graph.n:
            raise InvalidArgumentError("vertex set out of range")
        op = cls(
            graph=graph,
            diag_shift=np.zeros(graph.n),
            scale=1.0,
            rows=rows,
        )
        op._check_definite()
        return op

    def _check_definite(self) -> None:
        if self.rows is None or len(self.rows) == self.graph.n:
            d = self.diag_shift
            if self.scale == 0.0:
                if np.any(d <= 0):
                    raise NotPositiveDefiniteError(
                        "diagonal operator with a nonpositive entry is singular"
                    )
            elif not np.any(d > 0):
                raise NotPositiveDefiniteError(
                    "pure Laplacian system is singular; constants are in the "
                    "null space"
                )

    @property
    def size(self) -> int:
        return self.graph.n if self.rows is None else len(self.rows)

    @cached_property
    def _matrix(self) -> sp.csr_matrix:
        mat = sp.diags(self.diag_shift) + self.scale * self.graph.laplacian
        if self.rows is not None and len(self.rows) != self.graph.n:
            idx = self.rows.members
            mat = mat.tocsr()[idx][:, idx]
        return mat.tocsr()

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self._matrix @ x

    def diagonal(self) -> np.ndarray:
        return self._matrix.diagonal()


def pcg(
    matvec,
    b: np.ndarray,
    diag: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 1000,
    x0: np.ndarray | None = None,
):
    """Jacobi-preconditioned CG on a matrix-free SPD operator.

    Returns (x, iterations, relative_residual, residual_history).  Raises
    :class:`NotPositiveDefiniteError` on a nonpositive curvature direction
    and :class:`NumericalFailureError` on NaN/Inf.  Does not raise on
    hitting ``max_iter``; the caller decides how to treat that.
    """
    b = np.asarray(b, dtype=np.float64)
    bnorm = float(np.linalg.norm(b))
    history: list[float] = []
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0, np.empty(0)
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = b - matvec(x) if np.any(x) else b.copy()
    minv = None if diag is None else 1.0 / diag
    z = r if minv is None else minv * r
    p = z.copy()
    rz = float(np.dot(r, z))
    relres = float(np.linalg.norm(r)) / bnorm if bnorm else 0.0
    best_x, best_res = x.copy(), relres
    k = 0
    while relres > tol and k < max_iter:
        ap = matvec(p)
        pap = float(np.dot(p, ap))
        if not np.isfinite(pap):
            raise NumericalFailureError(
                "CG produced a non-finite curvature", trace=np.asarray(history)
            )
        if pap <= 0.0:
            raise NotPositiveDefiniteError(
                f"operator is not positive definite (p'Ap = {pap:.3e})"
            )
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        k += 1
        relres = float(np.linalg.norm(r)) / bnorm
        history.append(relres)
        if not np.isfinite(relres):
            raise NumericalFailureError(
                "CG residual diverged", trace=np.asarray(history)
            )
        if relres < best_res:
            best_x, best_res = x.copy(), relres
        z = r if minv is None else minv * r
        rz_new = float(np.dot(r, z))
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    if relres > tol:
        x, relres = best_x, best_res
    return x, k, relres, np.asarray(history)


def cg_solve(
    op: SddOperator,
    b,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> SolveReport:
    """Solve op x = b to a relative residual of ``tol``.

    Raises :class:`ConvergenceError` (carrying the best iterate's report)
    if the tolerance is not met within ``max_iter`` (default 10n).
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != op.size:
        raise InvalidArgumentError(
            f"expected a length-{op.size} right-hand side, got shape {b.shape}"
        )
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    if max_iter is None:
        max_iter = 10 * op.size
    op._check_definite()
    x, k, relres, history = pcg(
        op.apply, b, diag=op.diagonal(), tol=tol, max_iter=max_iter
    )
    report = SolveReport(
        solution=x, iterations=k, relative_residual=relres, residual_history=history
    )
    if relres > tol:
        raise ConvergenceError(
            f"CG did not reach tol={tol:g} in {max_iter} iterations "
            f"(best relative residual {relres:.3e})",
            report=report,
        )
    return report


def harmonic_interpolate(
    graph: Graph,
    s: VertexSet,
    obs,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> np.ndarray:
    """Extend values given on s to the whole graph with minimal energy.

    ``obs`` holds the known values in the order of ``s.members``.  On the
    complement every output value is the degree-weighted average of its
    neighbors, so the result obeys the maximum principle.
    """
    if s is None or len(s) == 0:
        raise SingularSystemError("cannot interpolate from an empty known set")
    if s.members[-1] >= graph.n:
        raise InvalidArgumentError("known set out of range")
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim != 1 or obs.shape[0] != len(s):
        raise InvalidArgumentError(
            f"expected {len(s)} observed values, got shape {obs.shape}"
        )
    out = np.empty(graph.n)
    out[s.members] = obs
    comp = s.complement(graph.n)
    if len(comp) == 0:
        return out
    rhs = restrict_adjacency(graph, comp, s) @ obs
    op = SddOperator.laplacian_submatrix(graph, comp)
    report = cg_solve(op, rhs, tol=tol, max_iter=max_iter)
    out[comp.members] = report.solution
    return out
