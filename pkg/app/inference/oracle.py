"""Brute-force enumeration oracle for small HMM instances.

Sums the joint probability p(X, Z | theta) over every state path, which is
exponential in T. Used only to cross-check the scaled recursions in tests.
"""

from itertools import product

import numpy as np
from scipy.special import logsumexp

from app.core.models import HmmModel

from .exceptions import StateSpaceTooLargeError
from .forward_backward import Observations, as_observations, emission_log_densities
from .models import OracleResult

MAX_PATHS = 1_000_000


def enumerate_oracle(model: HmmModel, seq: Observations) -> OracleResult:
    """Exact likelihood and posteriors by summing over all K**T state paths.

    Raises:
        StateSpaceTooLargeError: If K**T exceeds one million paths
    """
    X = as_observations(model, seq)
    log_densities = emission_log_densities(model, X)
    T, K = log_densities.shape
    n_paths = K**T
    if n_paths > MAX_PATHS:
        raise StateSpaceTooLargeError(
            f"{K}**{T} = {n_paths} state paths exceed the oracle limit of {MAX_PATHS}",
            n_paths=n_paths,
        )

    paths = np.array(list(product(range(K), repeat=T)), dtype=int).reshape(n_paths, T)
    with np.errstate(divide="ignore"):
        log_pi = np.log(model.pi)
        log_trans = np.log(model.trans)

    log_joint = log_pi[paths[:, 0]] + log_densities[0, paths[:, 0]]
    for t in range(1, T):
        log_joint = (
            log_joint
            + log_trans[paths[:, t - 1], paths[:, t]]
            + log_densities[t, paths[:, t]]
        )

    log_likelihood = float(logsumexp(log_joint))
    weights = np.exp(log_joint - log_likelihood)

    gamma = np.zeros((T, K))
    xi = np.zeros((max(T - 1, 0), K, K))
    for t in range(T):
        np.add.at(gamma[t], paths[:, t], weights)
    for t in range(1, T):
        np.add.at(xi[t - 1], (paths[:, t - 1], paths[:, t]), weights)

    return OracleResult(
        likelihood=float(np.exp(log_likelihood)),
        log_likelihood=log_likelihood,
        gamma=gamma,
        xi=xi,
    )
