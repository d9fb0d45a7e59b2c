"""Gibbs/Metropolis sampler for the Gaussian response models.

Model: c = mu*1 + beta*x + sigma*eta + eps, eps ~ N(0, tau^2 I), with eta
an intrinsic field (precision QQ', sum-zero) on the neighborhood graph.
Under the GraphDiffusion variant x is the covariate smoothed once through
the constrained inverse of Q'; otherwise x is the covariate itself.

The sampler works in the eigenbasis of QQ': the sum-zero constraint is the
first eigenvector, so constrained sampling of eta reduces to independent
Gaussian draws on the remaining M-1 coordinates.  Conjugate Gibbs updates
for (mu, beta), tau^2, and eta; adaptive random-walk Metropolis on log
sigma (half-normal prior breaks conjugacy), with adaptation frozen when
burn-in ends so the retained chain preserves detailed balance.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DataError, NumericalError
from ..field import constrained_solve, stationary_precision
from ..graph import GeneratorMatrix, RateParams, build_generator, check_irreducible, edge_rates_loglinear
from .specs import DIFFUSION, GaussianModelSpec, PosteriorSamples

SIGMA_TARGET_ACC = 0.44


def graph_generator(graph) -> GeneratorMatrix:
    """Generator implied by the graph at zero rate coefficients (alpha = 1/d)."""
    rates = edge_rates_loglinear(graph, RateParams((0.0, 0.0, 0.0)))
    return build_generator(graph, rates)


def smooth_covariate(Q: GeneratorMatrix, h) -> np.ndarray:
    """Covariate smoothed by the constrained inverse of Q'; sums to zero."""
    return constrained_solve(Q, np.asarray(h, dtype=float))


def _design_column(spec: GaussianModelSpec, Q: GeneratorMatrix) -> np.ndarray:
    x = spec.covariate
    if spec.standardize:
        sd = x.std(ddof=1)
        if sd == 0:
            raise DataError("covariate is constant; cannot standardize")
        x = (x - x.mean()) / sd
    if spec.variant == DIFFUSION:
        # The smoothed column keeps its natural scale so that beta stays
        # comparable with the unsmoothed regression coefficient.
        x = smooth_covariate(Q, x)
    return x


def gaussian_loglik_fn(spec: GaussianModelSpec):
    """Log-likelihood of the response conditional on all sampled parameters.

    Returns a callable over a {name: value} dict with keys mu, beta, sigma,
    tau and eta_0..eta_{M-1}; used for the per-draw log-likelihood and DIC.
    """
    Q = graph_generator(spec.graph)
    x = _design_column(spec, Q)
    c = spec.response
    m = c.size

    def loglik(params: dict) -> float:
        eta = np.array([params[f"eta_{i}"] for i in range(m)])
        mean = params["mu"] + params["beta"] * x + params["sigma"] * eta
        tau2 = params["tau"] ** 2
        resid = c - mean
        return -0.5 * m * math.log(2.0 * math.pi * tau2) - 0.5 * float(resid @ resid) / tau2

    return loglik


def fit_gaussian(
    spec: GaussianModelSpec,
    iterations: int,
    burnin: int,
    seed: int,
    thin: int = 1,
    include_likelihood: bool = True,
) -> PosteriorSamples:
    """Sample (mu, beta, sigma, tau, eta) from the posterior.

    ``include_likelihood=False`` disables the data terms in every update,
    turning the sweep into a prior sampler (used by the Gibbs audit).
    """
    if iterations <= burnin:
        raise DataError("iterations must exceed burnin")
    pr = spec.priors
    c = spec.response
    m = c.size
    Q = graph_generator(spec.graph)
    if not check_irreducible(Q):
        raise DataError("neighborhood graph must be connected (Q irreducible)")
    x = _design_column(spec, Q)

    # eigenbasis of the intrinsic precision; first column spans the constraint
    P = stationary_precision(Q).toarray()
    evals, evecs = np.linalg.eigh(P)
    if evals[1] <= 1e-10 * evals[-1]:
        raise NumericalError("intrinsic precision has rank below M-1")
    U = evecs[:, 1:]
    d_pos = evals[1:]

    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(m), x])
    like = 1.0 if include_likelihood else 0.0

    # initialization: least squares for (mu, beta), eta = 0, tau2 at residual variance
    coef, *_ = np.linalg.lstsq(X, c, rcond=None)
    mu, beta = float(coef[0]), float(coef[1])
    resid0 = c - X @ coef
    tau2 = float(resid0 @ resid0) / max(m - 2, 1)
    sigma = 1.0
    w = np.zeros(m - 1)

    log_step = math.log(0.5)
    prior_prec_reg = 1.0 / pr.regression_sd**2
    n_keep = (iterations - burnin + thin - 1) // thin
    names = ["mu", "beta", "sigma", "tau"] + [f"eta_{i}" for i in range(m)]
    draws = np.empty((n_keep, len(names)))
    logliks = np.empty(n_keep)
    acc_count = 0
    sigma_tries = 0
    kept = 0

    def half_normal_logpdf(s):
        return -0.5 * s * s / pr.re_sd_scale**2

    for it in range(iterations):
        eta = U @ w

        # (mu, beta): conjugate bivariate Gaussian
        y_reg = c - sigma * eta
        A = like * (X.T @ X) / tau2 + prior_prec_reg * np.eye(2)
        bvec = like * (X.T @ y_reg) / tau2
        chol = np.linalg.cholesky(A)
        mean_reg = np.linalg.solve(A, bvec)
        z2 = rng.standard_normal(2)
        coef = mean_reg + np.linalg.solve(chol.T, z2)
        mu, beta = float(coef[0]), float(coef[1])

        # eta coordinates: independent in the eigenbasis
        y_eta = c - mu - beta * x
        proj = U.T @ y_eta
        prec_w = d_pos + like * sigma * sigma / tau2
        mean_w = like * (sigma / tau2) * proj / prec_w
        w = mean_w + rng.standard_normal(m - 1) / np.sqrt(prec_w)
        eta = U @ w

        # tau2: conjugate inverse-gamma
        resid = c - mu - beta * x - sigma * eta
        shape = pr.tau2_shape + like * 0.5 * m
        rate = pr.tau2_scale + like * 0.5 * float(resid @ resid)
        gdraw = rng.gamma(shape, 1.0 / rate)
        if gdraw <= 0.0:
            raise NumericalError(
                f"inverse-gamma draw underflowed (shape={shape:g}); "
                "shapes this small are only reachable in prior-only runs"
            )
        tau2 = 1.0 / gdraw

        # sigma: random-walk Metropolis on log sigma (Jacobian included)
        sigma_tries += 1
        resid_base = c - mu - beta * x
        prop = sigma * math.exp(math.exp(log_step) * rng.standard_normal())
        r_cur = resid_base - sigma * eta
        r_prop = resid_base - prop * eta
        logp_cur = (-0.5 * like * float(r_cur @ r_cur) / tau2
                    + half_normal_logpdf(sigma) + math.log(sigma))
        logp_prop = (-0.5 * like * float(r_prop @ r_prop) / tau2
                     + half_normal_logpdf(prop) + math.log(prop))
        accept = math.log(rng.random()) < logp_prop - logp_cur
        if accept:
            sigma = prop
            acc_count += 1
        if it < burnin:
            # Robbins-Monro adaptation toward the scalar-update target rate
            gain = 1.0 / math.sqrt(it + 1.0)
            log_step += gain * ((1.0 if accept else 0.0) - SIGMA_TARGET_ACC)

        if it >= burnin and (it - burnin) % thin == 0:
            tau = math.sqrt(tau2)
            draws[kept, 0] = mu
            draws[kept, 1] = beta
            draws[kept, 2] = sigma
            draws[kept, 3] = tau
            draws[kept, 4:] = eta
            r = c - mu - beta * x - sigma * eta
            logliks[kept] = (-0.5 * m * math.log(2.0 * math.pi * tau2)
                             - 0.5 * float(r @ r) / tau2)
            kept += 1

    meta = {
        "seed": seed,
        "iterations": iterations,
        "burnin": burnin,
        "thin": thin,
        "variant": spec.variant,
        "acceptance": {"sigma": acc_count / max(sigma_tries, 1)},
        "include_likelihood": include_likelihood,
    }
    return PosteriorSamples(tuple(names), draws[:kept], logliks[:kept], meta)
