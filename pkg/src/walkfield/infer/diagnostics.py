"""DIC and the split-half convergence diagnostic."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .specs import DICResult, PosteriorSamples

MIN_DIC_DRAWS = 100
MIN_SPLIT_DRAWS = 200
SPLIT_FLAG_SD = 0.2


def compute_dic(samples: PosteriorSamples, loglik_fn) -> DICResult:
    """Deviance information criterion over the retained draws.

    The deviance is -2 log L conditional on every sampled parameter
    (including the spatial effect), evaluated per draw for dbar and at the
    component-wise posterior mean for d_at_mean.
    """
    if samples.n_draws < MIN_DIC_DRAWS:
        raise DataError(
            f"need at least {MIN_DIC_DRAWS} retained draws for a stable p_D, "
            f"got {samples.n_draws}"
        )
    dbar = float(np.mean(-2.0 * samples.loglik))
    d_at_mean = -2.0 * float(loglik_fn(samples.mean()))
    return DICResult(dbar=dbar, d_at_mean=d_at_mean)


def split_half_diagnostic(samples: PosteriorSamples) -> dict:
    """Compare first-half vs second-half marginals per parameter.

    A parameter is flagged when its half-means differ by more than 0.2
    pooled standard deviations.  Returns {name: report dict}.
    """
    n = samples.n_draws
    if n < MIN_SPLIT_DRAWS:
        raise DataError(f"need at least {MIN_SPLIT_DRAWS} retained draws, got {n}")
    half = n // 2
    first = samples.draws[:half]
    second = samples.draws[half:]
    out = {}
    for j, name in enumerate(samples.names):
        a, b = first[:, j], second[:, j]
        pooled_sd = np.sqrt(0.5 * (a.var(ddof=1) + b.var(ddof=1)))
        gap = abs(a.mean() - b.mean())
        flagged = bool(pooled_sd > 0 and gap > SPLIT_FLAG_SD * pooled_sd)
        out[name] = {
            "mean_first": float(a.mean()),
            "mean_second": float(b.mean()),
            "q025_first": float(np.quantile(a, 0.025)),
            "q025_second": float(np.quantile(b, 0.025)),
            "q975_first": float(np.quantile(a, 0.975)),
            "q975_second": float(np.quantile(b, 0.975)),
            "pooled_sd": float(pooled_sd),
            "flagged": flagged,
        }
    return out
