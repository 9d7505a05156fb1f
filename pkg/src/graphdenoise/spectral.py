"""Dense spectral reference path: eigenbasis, transforms, filters, prior.

The eigendecomposition here is the testing/reference route; production
denoising goes through the sparse solvers.  It is capped at a configurable
size because nothing in the package needs a full spectrum at scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, TooLargeError
from .graphs import Graph, as_signal

__all__ = [
    "SpectralBasis",
    "FilterSpec",
    "eigendecompose",
    "gft",
    "igft",
    "apply_filter",
    "sample_prior",
    "map_error_covariance_diag",
]

DEFAULT_EIG_CAP = 3000


@dataclass(frozen=True)
class SpectralBasis:
    """Ascending Laplacian eigenvalues and orthonormal eigenvectors.

    ``lambdas[0] == 0`` and ``psi[:, 0]`` is the constant vector 1/sqrt(n).
    Eigenvector signs are fixed so each column's largest-magnitude entry is
    positive, which keeps test expectations reproducible.
    """

    lambdas: np.ndarray
    psi: np.ndarray

    @property
    def n(self) -> int:
        return int(self.lambdas.size)


def eigendecompose(g: Graph, cap: int = DEFAULT_EIG_CAP) -> SpectralBasis:
    """Full dense eigendecomposition of the Laplacian (reference path)."""
    if g.n > cap:
        raise TooLargeError(
            f"dense eigendecomposition refused for n={g.n} > cap={cap}; "
            "use the sparse solver path instead"
        )
    lam, psi = np.linalg.eigh(g.laplacian.toarray())
    lam = np.where(np.abs(lam) < 1e-12 * max(1.0, abs(lam[-1])), 0.0, lam)
    lam[0] = 0.0
    # sign convention: largest-|entry| coordinate positive
    pivot = np.argmax(np.abs(psi), axis=0)
    signs = np.sign(psi[pivot, np.arange(g.n)])
    signs[signs == 0] = 1.0
    psi = psi * signs
    psi[:, 0] = 1.0 / math.sqrt(g.n)
    return SpectralBasis(lambdas=lam, psi=psi)


def gft(basis: SpectralBasis, f) -> np.ndarray:
    """Graph Fourier transform: coefficients <f, psi_i>."""
    f = as_signal(f, basis.n)
    return basis.psi.T @ f


def igft(basis: SpectralBasis, coeffs) -> np.ndarray:
    """Inverse graph Fourier transform."""
    coeffs = as_signal(coeffs, basis.n)
    return basis.psi @ coeffs


@dataclass(frozen=True)
class FilterSpec:
    """A frequency response h applied coefficientwise in the eigenbasis.

    Variants: ``gaussian-map`` (h = 1/(1 + tau*lambda)), ``magic``
    (h = (1 - lambda/2)^t), index-based band selectors ``band-low`` /
    ``band-high`` keeping the k lowest/highest frequencies, and ``table``
    for an interpolated custom response.
    """

    kind: str
    param: float = 0.0
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    @classmethod
    def gaussian_map(cls, tau: float) -> "FilterSpec":
        if tau < 0:
            raise InvalidArgumentError("tau must be nonnegative")
        return cls(kind="gaussian-map", param=float(tau))

    @classmethod
    def magic(cls, t: int) -> "FilterSpec":
        if t < 0:
            raise InvalidArgumentError("t must be nonnegative")
        return cls(kind="magic", param=float(t))

    @classmethod
    def band_low(cls, k: int) -> "FilterSpec":
        if k < 0:
            raise InvalidArgumentError("k must be nonnegative")
        return cls(kind="band-low", param=float(k))

    @classmethod
    def band_high(cls, k: int) -> "FilterSpec":
        if k < 0:
            raise InvalidArgumentError("k must be nonnegative")
        return cls(kind="band-high", param=float(k))

    @classmethod
    def from_table(cls, lambdas, values) -> "FilterSpec":
        xs = tuple(float(x) for x in lambdas)
        ys = tuple(float(y) for y in values)
        if len(xs) != len(ys) or not xs:
            raise InvalidArgumentError("table needs matching nonempty abscissae/values")
        if any(not np.isfinite(v) for v in xs + ys):
            raise InvalidArgumentError("table entries must be finite")
        return cls(kind="table", table=(xs, ys))

    def response(self, lambdas: np.ndarray) -> np.ndarray:
        """Per-frequency gain evaluated on an ascending eigenvalue array."""
        lam = np.asarray(lambdas, dtype=np.float64)
        if self.kind == "gaussian-map":
            if math.isinf(self.param):
                return np.where(lam == 0.0, 1.0, 0.0)
            return 1.0 / (1.0 + self.param * lam)
        if self.kind == "magic":
            # integer exponent: the base goes negative past lambda = 2
            return (1.0 - lam / 2.0) ** int(self.param)
        if self.kind == "band-low":
            k = int(self.param)
            out = np.zeros_like(lam)
            out[:k] = 1.0
            return out
        if self.kind == "band-high":
            k = int(self.param)
            out = np.zeros_like(lam)
            if k > 0:
                out[-k:] = 1.0
            return out
        if self.kind == "table":
            xs, ys = self.table
            return np.interp(lam, xs, ys)
        raise InvalidArgumentError(f"unknown filter kind {self.kind!r}")


def apply_filter(basis: SpectralBasis, spec: FilterSpec, f) -> np.ndarray:
    """Filter a signal: sum_i h(lambda_i) <f, psi_i> psi_i."""
    coeffs = gft(basis, f)
    return basis.psi @ (spec.response(basis.lambdas) * coeffs)


def sample_prior(
    basis: SpectralBasis,
    kappa: float,
    mean_coeff: float = 0.0,
    rng_seed: int | None = None,
) -> np.ndarray:
    """Draw a signal from the smoothness prior.

    Nonzero frequencies get independent N(0, 1/(2*kappa*lambda_i))
    coefficients; the mean frequency is pinned to ``mean_coeff`` because the
    prior leaves it unconstrained.
    """
    if not kappa > 0:
        raise InvalidArgumentError("kappa must be positive")
    rng = np.random.default_rng(rng_seed)
    coeffs = np.empty(basis.n)
    coeffs[0] = mean_coeff
    std = np.sqrt(1.0 / (2.0 * kappa * basis.lambdas[1:]))
    coeffs[1:] = rng.standard_normal(basis.n - 1) * std
    return basis.psi @ coeffs


def map_error_covariance_diag(
    basis: SpectralBasis, kappa: float, sigma2: float
) -> np.ndarray:
    """Spectral-domain error variance of the Gaussian-model estimate.

    Entry i >= 2 is sigma^2 / (2*kappa*sigma^2*lambda_i + 1); the mean
    frequency is exact, so entry 1 is zero.
    """
    if kappa < 0:
        raise InvalidArgumentError("kappa must be nonnegative")
    if sigma2 < 0:
        raise InvalidArgumentError("sigma2 must be nonnegative")
    out = np.zeros(basis.n)
    out[1:] = sigma2 / (2.0 * kappa * sigma2 * basis.lambdas[1:] + 1.0)
    return out
