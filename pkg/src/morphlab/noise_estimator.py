"""Cumulative-loss tracking and noise-rate estimation.

The per-sample training loss summed over epochs stays bimodal (clean vs
mislabeled) long after the instantaneous loss decays, so a two-component 1-D
Gaussian mixture fitted to it by EM yields the corrupted fraction as the
expected posterior of the larger-mean component.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import (DegenerateFitError, DimensionError, InsufficientDataError,
                     NumericalFailureError)


class AulAccumulator:
    """Per-sample running sum of nonnegative epoch losses."""

    def __init__(self, n_samples):
        self.values = np.zeros(n_samples)
        self.epochs = 0

    def accumulate(self, per_sample_losses):
        losses = np.asarray(per_sample_losses, dtype=float)
        if losses.shape != self.values.shape:
            raise DimensionError(
                f"expected {self.values.shape[0]} losses, got {losses.shape}")
        if (losses < 0).any():
            raise NumericalFailureError("negative loss passed to accumulator")
        self.values += losses
        self.epochs += 1
        return self


@dataclass
class GmmFit:
    """Two 1-D Gaussians; component 0 is the larger-mean one."""
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    ll_trace: list = field(default_factory=list, repr=False)


def _log_densities(values, means, variances, weights):
    """(n, 2) weighted component log-densities."""
    sd = np.sqrt(variances)
    return np.log(weights) + norm.logpdf(values[:, None], means, sd)


def gmm_fit_em(values, tol=1e-6, max_iter=100, seed=0):
    """EM for a two-component 1-D Gaussian mixture.

    Initialization is deterministic (means at the 10th/90th percentiles,
    equal weights, shared sample variance), so the seed only tags the fit.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 4:
        raise InsufficientDataError(f"need >= 4 values, got {values.size}")
    if np.ptp(values) == 0:
        raise DegenerateFitError("all values identical")
    del seed  # deterministic init; kept for interface stability

    var0 = float(np.var(values))
    floor = 1e-8 * (var0 + 1e-12)
    # component 0 starts (and stays, via sorting) as the larger-mean one
    means = np.array([np.percentile(values, 90), np.percentile(values, 10)])
    variances = np.array([var0, var0])
    weights = np.array([0.5, 0.5])

    ll_prev = -np.inf
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        logd = _log_densities(values, means, variances, weights)
        m = logd.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logd - m).sum(axis=1))
        ll = float(lse.sum())
        trace.append(ll)
        resp = np.exp(logd - lse[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        means = (resp * values[:, None]).sum(axis=0) / nk
        variances = (resp * (values[:, None] - means) ** 2).sum(axis=0) / nk
        variances = np.maximum(variances, floor)
        weights = nk / values.size
        if ll - ll_prev < tol and np.isfinite(ll_prev):
            converged = True
            break
        ll_prev = ll

    order = np.argsort(-means)
    fit = GmmFit(means[order], variances[order], weights[order],
                 trace[-1], it, converged, trace)
    return fit


def posterior_large(fit, v):
    """Posterior probability of the larger-mean component at value(s) v."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    logd = _log_densities(v, fit.means, fit.variances, fit.weights)
    m = logd.max(axis=1, keepdims=True)
    post = np.exp(logd[:, 0] - (m[:, 0] + np.log(np.exp(logd - m).sum(axis=1))))
    return post if post.size > 1 else float(post[0])


def estimate_tau(fit, values, clamp=(0.0, 0.9)):
    """Estimated noise rate: mean posterior of the larger-mean component,
    clamped to `clamp` (the transition condition degenerates as tau -> 1)."""
    values = np.asarray(values, dtype=float).ravel()
    tau = float(np.mean(np.atleast_1d(posterior_large(fit, values))))
    return float(np.clip(tau, clamp[0], clamp[1]))
