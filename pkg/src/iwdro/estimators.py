"""Conditional-distribution estimators used as Wasserstein-ball centers.

Covers the kernel-weighted empirical distribution, the k-nearest-neighbor
distribution, the regression-residual distribution, and the adaptive
mixture of the last two families, together with the closed-form radius
formulas whose unknown leading constants are caller inputs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .wasserstein import DiscreteDistribution


class DegenerateEstimateError(RuntimeError):
    """Raised when every kernel weight vanishes at the query point.

    Compactly supported kernels produce this when no training sample lies
    within the bandwidth; callers fall back to a non-local estimator.
    """


@dataclass(frozen=True)
class Dataset:
    """Paired covariate/outcome training samples."""

    covariates: np.ndarray   # (n, d_x)
    outcomes: np.ndarray     # (n, d_y)

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=np.float64)
        Y = np.asarray(self.outcomes, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("covariates and outcomes must be 2-D arrays")
        if X.shape[0] != Y.shape[0]:
            raise ValueError("covariates and outcomes disagree on sample count")
        if X.shape[0] < 1:
            raise ValueError("dataset needs at least one sample")
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "outcomes", Y)

    @property
    def n_samples(self):
        return self.covariates.shape[0]

    @property
    def d_x(self):
        return self.covariates.shape[1]

    @property
    def d_y(self):
        return self.outcomes.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.covariates[index], self.outcomes[index])


class KernelKind(enum.Enum):
    NAIVE = "naive"
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    bandwidth: float

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", KernelKind(self.kind.lower()))
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "bandwidth", float(self.bandwidth))


def kernel_eval(spec: KernelSpec, tau) -> float:
    """Kernel value at the (already bandwidth-scaled) offset tau."""
    r2 = float(np.sum(np.square(np.asarray(tau, dtype=np.float64))))
    if spec.kind is KernelKind.NAIVE:
        return 1.0 if r2 <= 1.0 else 0.0
    if spec.kind is KernelKind.EPANECHNIKOV:
        return max(1.0 - r2, 0.0)
    return math.exp(-r2)


def _kernel_weights(data: Dataset, x, spec: KernelSpec) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size != data.d_x:
        raise ValueError("query point dimension does not match the data")
    sq = np.sum((data.covariates - x) ** 2, axis=1) / spec.bandwidth ** 2
    if spec.kind is KernelKind.NAIVE:
        return (sq <= 1.0).astype(np.float64)
    if spec.kind is KernelKind.EPANECHNIKOV:
        return np.maximum(1.0 - sq, 0.0)
    return np.exp(-sq)


def nw_estimate(data: Dataset, x, spec: KernelSpec) -> DiscreteDistribution:
    """Kernel-weighted empirical conditional distribution at x."""
    k = _kernel_weights(data, x, spec)
    total = k.sum()
    if total <= 0.0:
        raise DegenerateEstimateError(
            "all kernel weights vanish at the query point")
    return DiscreteDistribution(data.outcomes, k / total)


def effective_samples(data: Dataset, x, spec: KernelSpec) -> float:
    """Total kernel mass near x, a covariate-shift diagnostic."""
    return float(_kernel_weights(data, x, spec).sum())


def knn_estimate(data: Dataset, x, k: int) -> DiscreteDistribution:
    """Uniform distribution over the outcomes of the k nearest samples.

    Distance ties are broken by ascending sample index.
    """
    if int(k) != k or not 1 <= k <= data.n_samples:
        raise ValueError(f"k must lie in [1, {data.n_samples}]")
    k = int(k)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size != data.d_x:
        raise ValueError("query point dimension does not match the data")
    dist = np.sqrt(np.sum((data.covariates - x) ** 2, axis=1))
    chosen = np.argsort(dist, kind="stable")[:k]
    return DiscreteDistribution(data.outcomes[chosen], np.full(k, 1.0 / k))


@dataclass(frozen=True)
class RegressionModel:
    """Least-squares linear model with an intercept row."""

    coefficients: np.ndarray      # (d_x + 1, d_y), intercept first
    fitted_residuals: np.ndarray  # (n, d_y)
    rank_deficient: bool = False

    def predict(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return self.coefficients[0] + x @ self.coefficients[1:]


def fit_ols(data: Dataset) -> RegressionModel:
    """Ordinary least squares of outcomes on covariates plus intercept.

    Rank-deficient designs are resolved by the least-norm solution and
    flagged on the returned model.
    """
    n = data.n_samples
    X = np.hstack([np.ones((n, 1)), data.covariates])
    theta, _, rank, _ = np.linalg.lstsq(X, data.outcomes, rcond=None)
    residuals = data.outcomes - X @ theta
    return RegressionModel(theta, residuals, rank_deficient=rank < X.shape[1])


def ols_residual_estimate(model: RegressionModel, data: Dataset, x) -> DiscreteDistribution:
    """Prediction-plus-residual distribution with uniform weights."""
    pred = model.predict(x)
    supports = pred[None, :] + model.fitted_residuals
    n = supports.shape[0]
    return DiscreteDistribution(supports, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class MixtureParams:
    """Interpolation-weight exponents for the adaptive mixture."""

    tau: float
    r_me: float
    p: int
    d_y: int

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        expected = -self.p ** 2 / self.d_y if self.p < self.d_y / 2 else -self.p / 2
        if abs(self.r_me - expected) > 1e-12:
            raise ValueError(f"r_me must equal {expected} for p={self.p}, d_y={self.d_y}")

    @staticmethod
    def for_orders(p: int, d_y: int, tau: float = 1.0) -> "MixtureParams":
        r_me = -p ** 2 / d_y if p < d_y / 2 else -p / 2
        return MixtureParams(tau=tau, r_me=r_me, p=p, d_y=d_y)


def mixture_weight(data: Dataset, x, spec: KernelSpec, r: float,
                   params: MixtureParams) -> float:
    """Interpolation weight toward the local estimator.

    Counts samples within radius r * bandwidth of x; zero nearby samples
    give weight 0 (the fully non-local regime).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    dist = np.sqrt(np.sum((data.covariates - x) ** 2, axis=1))
    count = int(np.sum(dist <= r * spec.bandwidth))
    if count == 0:
        return 0.0
    return float(max(1.0 - params.tau * count ** params.r_me, 0.0))


def mixture_estimate(np_dist: DiscreteDistribution, p_dist: DiscreteDistribution,
                     kappa: float) -> DiscreteDistribution:
    """Convex combination of two discrete distributions (stacked atoms)."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    if np_dist.dim != p_dist.dim:
        raise ValueError("distributions live in different ambient dimensions")
    supports = np.vstack([np_dist.supports, p_dist.supports])
    weights = np.concatenate([kappa * np_dist.weights,
                              (1.0 - kappa) * p_dist.weights])
    return DiscreteDistribution(supports, weights)


def mixture_radius(eps_np: float, eps_p: float, kappa: float, p: int) -> float:
    """Interpolated ball radius matching the mixture center."""
    if eps_np < 0 or eps_p < 0:
        raise ValueError("radii must be nonnegative")
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    return float((kappa * eps_np ** p + (1.0 - kappa) * eps_p ** p) ** (1.0 / p))


def theoretical_radius_np(n: int, density_proxy: float, h: float, alpha: float,
                          *, c0: float, c1: float, c2: float, lipschitz: float,
                          beta: float, d_x: int) -> float:
    """Closed-form radius for the kernel-estimator ball (p > d_y/2 case).

    The leading constants are not computable from data; callers supply
    them (or calibrate radii empirically instead).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if min(n, density_proxy, h) <= 0:
        raise ValueError("n, density_proxy, h must be positive")
    fluct = (math.log(2.0 * c1 / alpha) / (c2 * n * density_proxy * h ** d_x)) ** 0.5
    return float(fluct + c0 * lipschitz * h ** beta)


def theoretical_radius_p(n: int, alpha: float, eps_apx: float,
                         *, c4: float, c5: float) -> float:
    """Closed-form radius for the regression-estimator ball (p > d_y/2 case)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n <= 0 or eps_apx < 0:
        raise ValueError("n must be positive and eps_apx nonnegative")
    return float((math.log(2.0 * c4 / alpha) / (c5 * n)) ** 0.5 + eps_apx)
