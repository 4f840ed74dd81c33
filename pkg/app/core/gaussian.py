"""Gaussian density and conditioning primitives.

Every density in the library goes through this module. Densities are evaluated
in log space from the Cholesky factor stored on each GaussianComponent; the
conditional (regression) form is precomputed per component so whole sequences
can be conditioned with one matrix product.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from .exceptions import DimensionMismatchError, SingularBlockError
from .models import FeatureSchema, GaussianComponent, readonly_array

LOG_2PI = math.log(2.0 * math.pi)
DEFAULT_REG_SCALE = 1e-6
MAX_CONDITION_NUMBER = 1e12


def regularize_covariance(covariance: np.ndarray, scale: float = DEFAULT_REG_SCALE) -> np.ndarray:
    """Symmetrize a covariance and add eps * I with eps = scale * trace / D.

    A zero-trace matrix (all frames identical) gets eps = scale so the result
    is still positive definite.

    Args:
        covariance: D x D sample covariance
        scale: Relative regularization strength

    Returns:
        New regularized D x D matrix
    """
    covariance = np.asarray(covariance, dtype=float)
    symmetric = 0.5 * (covariance + covariance.T)
    D = symmetric.shape[0]
    base = float(np.trace(symmetric)) / D
    if not np.isfinite(base) or base <= 0.0:
        base = 1.0
    return symmetric + scale * base * np.eye(D)


def gaussian_logpdf(x, g: GaussianComponent) -> float:
    """Exact log-density log N(x | mean, covariance).

    Raises:
        DimensionMismatchError: If len(x) differs from the component dimension
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (g.D,):
        raise DimensionMismatchError(
            f"Point has shape {x.shape}, component dimension is {g.D}",
            expected=g.D,
            actual=x.shape[0] if x.ndim else 0,
        )
    z = linalg.solve_triangular(g.cholesky, x - g.mean, lower=True)
    return float(-0.5 * (g.D * LOG_2PI + g.log_det + z @ z))


def gaussian_logpdf_frames(X: np.ndarray, g: GaussianComponent) -> np.ndarray:
    """Log-density of every row of a T x D block under one component."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != g.D:
        raise DimensionMismatchError(
            f"Frames have shape {X.shape}, component dimension is {g.D}",
            expected=g.D,
            actual=X.shape[1] if X.ndim == 2 else 0,
        )
    Z = linalg.solve_triangular(g.cholesky, (X - g.mean).T, lower=True)
    return -0.5 * (g.D * LOG_2PI + g.log_det + np.sum(Z * Z, axis=0))


@dataclass(frozen=True, eq=False)
class ConditionalRegressor:
    """Precomputed conditional of one component given its input block.

    mean(x_in) = output_mean + coefficient @ (x_in - input_mean)

    Attributes:
        input_mean: mu^I
        output_mean: mu^O
        coefficient: Sigma^OI (Sigma^II)^-1, shape |O| x |I|
        covariance: Sigma^OO - Sigma^OI (Sigma^II)^-1 Sigma^IO, shape |O| x |O|
    """

    input_mean: np.ndarray
    output_mean: np.ndarray
    coefficient: np.ndarray
    covariance: np.ndarray

    def mean(self, x_in: np.ndarray) -> np.ndarray:
        """Conditional mean for one input vector."""
        return self.output_mean + self.coefficient @ (np.asarray(x_in, dtype=float) - self.input_mean)

    def means(self, X_in: np.ndarray) -> np.ndarray:
        """Conditional means for a T x |I| input block, shape T x |O|."""
        return self.output_mean + (np.asarray(X_in, dtype=float) - self.input_mean) @ self.coefficient.T


def conditional_regressor(g: GaussianComponent, schema: FeatureSchema) -> ConditionalRegressor:
    """Decompose a component into the input/output blocks of a schema.

    Raises:
        SingularBlockError: If Sigma^II has condition number above 1e12
    """
    in_idx = list(schema.input_indices)
    out_idx = list(schema.output_indices)
    sigma = g.covariance
    sigma_oo = sigma[np.ix_(out_idx, out_idx)]

    if not in_idx:
        return ConditionalRegressor(
            input_mean=readonly_array(np.zeros(0)),
            output_mean=readonly_array(g.mean[out_idx]),
            coefficient=readonly_array(np.zeros((len(out_idx), 0))),
            covariance=readonly_array(sigma_oo),
        )

    sigma_ii = sigma[np.ix_(in_idx, in_idx)]
    sigma_io = sigma[np.ix_(in_idx, out_idx)]
    condition = float(np.linalg.cond(sigma_ii))
    if not np.isfinite(condition) or condition > MAX_CONDITION_NUMBER:
        raise SingularBlockError(
            f"Input covariance block is near-singular (condition number {condition:.3e})",
            condition_number=condition,
        )

    factor = linalg.cho_factor(sigma_ii, lower=True)
    # (Sigma^II)^-1 Sigma^IO, transposed gives Sigma^OI (Sigma^II)^-1
    coefficient = linalg.cho_solve(factor, sigma_io).T
    conditional = sigma_oo - coefficient @ sigma_io
    conditional = 0.5 * (conditional + conditional.T)

    return ConditionalRegressor(
        input_mean=readonly_array(g.mean[in_idx]),
        output_mean=readonly_array(g.mean[out_idx]),
        coefficient=readonly_array(coefficient),
        covariance=readonly_array(conditional),
    )


def condition_gaussian(
    g: GaussianComponent, schema: FeatureSchema, x_in
) -> Tuple[np.ndarray, np.ndarray]:
    """Condition a component on its input block.

    Args:
        g: Joint Gaussian over the schema's features
        schema: Schema defining the input (I) and output (O) blocks
        x_in: Input vector of length |I|

    Returns:
        Tuple of (mu_hat, sigma_hat): conditional mean of the output block and
        conditional covariance Sigma^{O|I}

    Raises:
        DimensionMismatchError: If x_in does not have length |I|
        SingularBlockError: If Sigma^II is near-singular
    """
    x_in = np.asarray(x_in, dtype=float)
    n_inputs = len(schema.input_indices)
    if x_in.shape != (n_inputs,):
        raise DimensionMismatchError(
            f"Input vector has shape {x_in.shape}, schema input block has {n_inputs}",
            expected=n_inputs,
            actual=x_in.shape[0] if x_in.ndim else 0,
        )
    regressor = conditional_regressor(g, schema)
    return regressor.mean(x_in), np.array(regressor.covariance)
