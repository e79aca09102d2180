"""Truncated Gaussian log-likelihood of the functional SAC model and its profiles.

    y = rho W y + Z_K beta_K + u,    u = lambda M u + eps,    eps ~ N(0, sigma^2 I)

With A = I - rho W and B = I - lambda M, eps = B (A y - Z_K beta_K) and the
Jacobian of y -> eps is |A||B|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from fsac.exceptions import (
    DegenerateVariance,
    InvalidWeights,
    LengthMismatch,
    SingularInformation,
    SingularShift,
)
from fsac.models.fpls import FplsBasis
from fsac.spatial.weights import WeightMatrix, log_det_dense

MAX_CONDITION = 1e12
SHIFT_FLOOR = 1e-14
VARIANCE_FLOOR = 1e-300
VARIANCE_RTOL = 1e-20

LogDetMethod = Literal["eigen", "lu"]


@dataclass(frozen=True, eq=False)
class FsacSpec:
    y: np.ndarray
    Z: np.ndarray
    W: WeightMatrix
    M: WeightMatrix
    basis: FplsBasis | None = None

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float).ravel()
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.shape[0] != y.size:
            raise LengthMismatch(f"score matrix has {Z.shape[0]} rows for {y.size} responses")
        for name, w in (("W", self.W), ("M", self.M)):
            if not w.row_normalized:
                raise InvalidWeights(f"{name} must be row-normalized")
            if w.n != y.size:
                raise LengthMismatch(f"{name} is {w.n}x{w.n} but the response has {y.size} values")
        if self.basis is not None and self.basis.K != Z.shape[1]:
            raise LengthMismatch(f"basis has {self.basis.K} components, scores have {Z.shape[1]}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "Z", Z)

    @classmethod
    def from_basis(
        cls, y: np.ndarray, basis: FplsBasis, W: WeightMatrix, M: WeightMatrix | None = None
    ) -> FsacSpec:
        return cls(y=y, Z=basis.scores, W=W, M=W if M is None else M, basis=basis)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def K(self) -> int:
        return self.Z.shape[1]

    def spatial_filter(self, rho: float) -> np.ndarray:
        """A y = y - rho W y."""
        return self.y - rho * self.W.lag(self.y)


@dataclass(frozen=True, eq=False)
class Profile:
    """beta_hat, sigma2_hat and Sigma_K at one (rho, lambda)."""

    rho: float
    lam: float
    beta: np.ndarray
    sigma2: float
    sigma_k: np.ndarray
    innovations: np.ndarray


def omega(lam: float, M: WeightMatrix) -> np.ndarray:
    """Omega(lambda) = (I - lambda M)^T (I - lambda M)."""
    B = np.eye(M.n) - lam * M.values
    return B.T @ B


def log_det_shift(a: float, S: WeightMatrix, method: LogDetMethod = "eigen") -> float:
    """log|I - a S| from the cached eigenvalues of S (or a dense LU with ``method="lu"``)."""
    if a == 0.0:
        return 0.0
    if method == "lu" or S.eigenvalues is None:
        return log_det_dense(a, S)

    moduli = np.abs(1.0 - a * S.eigenvalues)
    if np.any(moduli < SHIFT_FLOOR):
        raise SingularShift(f"I - {a:g} S is singular")
    return float(np.sum(np.log(moduli)))


def _information(BZ: np.ndarray) -> tuple[np.ndarray, tuple]:
    sigma_k = BZ.T @ BZ
    if np.linalg.cond(sigma_k) > MAX_CONDITION:
        raise SingularInformation("Z_K' Omega Z_K is numerically singular")
    try:
        factor = scipy.linalg.cho_factor(sigma_k)
    except np.linalg.LinAlgError as e:
        raise SingularInformation(f"Z_K' Omega Z_K is not positive definite: {e}") from e
    return sigma_k, factor


def profile(rho: float, lam: float, spec: FsacSpec) -> Profile:
    """Closed-form maximizers of l_K in beta_K and sigma^2 for fixed (rho, lambda)."""
    B = np.eye(spec.n) - lam * spec.M.values
    BZ = B @ spec.Z
    BAy = B @ spec.spatial_filter(rho)

    sigma_k, factor = _information(BZ)
    beta = scipy.linalg.cho_solve(factor, BZ.T @ BAy)
    innovations = BAy - BZ @ beta
    sigma2 = float(innovations @ innovations) / spec.n

    return Profile(
        rho=rho, lam=lam, beta=beta, sigma2=sigma2, sigma_k=sigma_k, innovations=innovations
    )


def beta_hat(rho: float, lam: float, spec: FsacSpec) -> np.ndarray:
    """[Z' Omega Z]^{-1} Z' Omega A y."""
    return profile(rho, lam, spec).beta


def sigma2_hat(rho: float, lam: float, spec: FsacSpec) -> float:
    """(A y - Z beta_hat)' Omega (A y - Z beta_hat) / n."""
    return profile(rho, lam, spec).sigma2


def _jacobian(rho: float, lam: float, spec: FsacSpec, method: LogDetMethod) -> float:
    return log_det_shift(rho, spec.W, method) + log_det_shift(lam, spec.M, method)


def concentrated_from_sigma2(
    sigma2: float, rho: float, lam: float, spec: FsacSpec, method: LogDetMethod = "eigen"
) -> float:
    n = spec.n
    if sigma2 < max(VARIANCE_FLOOR, VARIANCE_RTOL * float(spec.y @ spec.y) / n):
        raise DegenerateVariance(f"sigma2_hat={sigma2:.3e} at rho={rho:g}, lambda={lam:g}")
    return (
        -n / 2.0
        - (n / 2.0) * np.log(2.0 * np.pi)
        - (n / 2.0) * np.log(sigma2)
        + _jacobian(rho, lam, spec, method)
    )


def concentrated_loglik(
    rho: float, lam: float, spec: FsacSpec, method: LogDetMethod = "eigen"
) -> float:
    """l_c(rho, lambda) with beta_K and sigma^2 profiled out."""
    return concentrated_from_sigma2(profile(rho, lam, spec).sigma2, rho, lam, spec, method)


def full_loglik(
    beta: np.ndarray,
    sigma2: float,
    rho: float,
    lam: float,
    spec: FsacSpec,
    method: LogDetMethod = "eigen",
) -> float:
    """Truncated log-likelihood l_K at arbitrary parameter values."""
    n = spec.n
    resid = spec.spatial_filter(rho) - spec.Z @ np.asarray(beta, dtype=float)
    quad = float(resid @ omega(lam, spec.M) @ resid)
    return (
        -(n / 2.0) * np.log(2.0 * np.pi)
        - (n / 2.0) * np.log(sigma2)
        - quad / (2.0 * sigma2)
        + _jacobian(rho, lam, spec, method)
    )


def score_beta(beta: np.ndarray, sigma2: float, rho: float, lam: float, spec: FsacSpec) -> np.ndarray:
    """d l_K / d beta_K = Z' Omega (A y - Z beta) / sigma^2."""
    resid = spec.spatial_filter(rho) - spec.Z @ np.asarray(beta, dtype=float)
    return spec.Z.T @ omega(lam, spec.M) @ resid / sigma2


def score_sigma2(beta: np.ndarray, sigma2: float, rho: float, lam: float, spec: FsacSpec) -> float:
    """d l_K / d sigma^2 = (-n sigma^2 + Q) / (2 sigma^4)."""
    resid = spec.spatial_filter(rho) - spec.Z @ np.asarray(beta, dtype=float)
    quad = float(resid @ omega(lam, spec.M) @ resid)
    return (-spec.n * sigma2 + quad) / (2.0 * sigma2**2)


def reduced_form(
    signal: np.ndarray, eps: np.ndarray, rho: float, lam: float, W: WeightMatrix, M: WeightMatrix
) -> np.ndarray:
    """y = A^{-1} signal + A^{-1} B^{-1} eps."""
    n = W.n
    A = np.eye(n) - rho * W.values
    B = np.eye(n) - lam * M.values
    u = scipy.linalg.solve(B, eps)
    return scipy.linalg.solve(A, np.asarray(signal, dtype=float) + u)
