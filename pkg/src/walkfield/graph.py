"""Spatial graphs, covariate-driven edge rates, and the sparse generator matrix.

The generator Q follows the sign convention with positive diagonal:
Q_ii = sum_k alpha_ik and Q_ij = -alpha_ij for i != j, so every row sums
to zero and the limiting density obeys dz/dt = -Q'z + (b - d).  Most CTMC
texts use the negated matrix; everything downstream of this module assumes
the positive-diagonal form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError, DataError, NumericalError

# |linear predictor| beyond this would overflow exp; hard error, never inf
LINPRED_LIMIT = 700.0


@dataclass(frozen=True)
class EdgeCovariates:
    """Covariates attached to one directed edge."""

    distance: float
    downstream: int = 0
    barrier: int = 0
    extras: tuple = ()  # ordered (name, value) pairs

    def __post_init__(self):
        if not self.distance > 0:
            raise DataError(f"edge distance must be positive, got {self.distance}")
        if self.downstream not in (0, 1) or self.barrier not in (0, 1):
            raise DataError("downstream/barrier indicators must be 0 or 1")


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    cov: EdgeCovariates


@dataclass(frozen=True)
class SpatialGraph:
    """Directed weighted graph of areal nodes.

    Nodes are dense 0-based indices; ``labels`` carries the external names.
    At most one directed edge per ordered pair, no self-edges.
    """

    node_count: int
    labels: tuple
    edges: tuple
    coords: tuple | None = None  # optional (x, y) per node

    def __post_init__(self):
        m = self.node_count
        if m <= 0:
            raise DataError("graph needs at least one node")
        if len(self.labels) != m:
            raise DataError("label count does not match node_count")
        if self.coords is not None and len(self.coords) != m:
            raise DataError("coordinate count does not match node_count")
        seen = set()
        for e in self.edges:
            if not (0 <= e.src < m and 0 <= e.dst < m):
                raise DataError(f"edge ({e.src},{e.dst}) has an endpoint outside 0..{m-1}")
            if e.src == e.dst:
                raise DataError(f"self-edge at node {e.src}")
            if (e.src, e.dst) in seen:
                raise DataError(f"duplicate edge ({e.src},{e.dst})")
            seen.add((e.src, e.dst))

    @property
    def edge_count(self):
        return len(self.edges)


@dataclass(frozen=True)
class RateParams:
    """Log-linear rate coefficients: (intercept, downstream, barrier, *extras)."""

    beta: tuple
    extra_names: tuple = ()

    def __post_init__(self):
        if len(self.beta) != 3 + len(self.extra_names):
            raise ConfigError(
                f"expected {3 + len(self.extra_names)} coefficients "
                f"(intercept, downstream, barrier + {len(self.extra_names)} extras), "
                f"got {len(self.beta)}"
            )
        if not all(math.isfinite(b) for b in self.beta):
            raise ConfigError("rate coefficients must be finite")


def edge_rates_loglinear(graph: SpatialGraph, params: RateParams) -> dict:
    """Per-edge transition rates alpha = (1/d) * exp{b0 + b1*u + b2*v + extras}.

    Returns a dict keyed by (src, dst).  Raises on missing extra covariates
    and on linear predictors that would overflow exp.
    """
    b0, b1, b2 = params.beta[:3]
    rates = {}
    for e in graph.edges:
        extras = dict(e.cov.extras)
        lp = b0 + b1 * e.cov.downstream + b2 * e.cov.barrier
        for name, coef in zip(params.extra_names, params.beta[3:]):
            if name not in extras:
                raise ConfigError(
                    f"edge ({e.src},{e.dst}) is missing covariate '{name}'"
                )
            lp += coef * extras[name]
        if abs(lp) > LINPRED_LIMIT:
            raise NumericalError(
                f"linear predictor {lp:.3g} on edge ({e.src},{e.dst}) "
                f"exceeds the overflow guard ({LINPRED_LIMIT:g})"
            )
        rates[(e.src, e.dst)] = math.exp(lp) / e.cov.distance
    return rates


@dataclass(frozen=True)
class GeneratorMatrix:
    """Sparse CTMC generator in the positive-diagonal convention.

    ``matrix`` is CSR with Q_ii = sum_k alpha_ik and Q_ij = -alpha_ij.
    Built only through :func:`build_generator` / :func:`generator_from_rates`,
    which enforce the exact zero row sums.
    """

    dim: int
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def rates(self) -> sp.csr_matrix:
        """Nonnegative rate matrix alpha (off-diagonal part, sign flipped)."""
        a = -self.matrix.copy()
        a.setdiag(0.0)
        a.eliminate_zeros()
        return a.tocsr()

    @property
    def out_rates(self) -> np.ndarray:
        """Total exit rate per node, alpha_i = sum_k alpha_ik."""
        return np.asarray(self.rates.sum(axis=1)).ravel()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def generator_from_rates(dim: int, rates: dict) -> GeneratorMatrix:
    """Assemble Q from a dict of (i, j) -> alpha_ij >= 0.

    Zero rates are dropped from the sparsity pattern.  The diagonal is the
    negated off-diagonal row sum, so Q @ 1 == 0 holds exactly.
    """
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    for (i, j) in sorted(rates):
        a = rates[(i, j)]
        if not (0 <= i < dim and 0 <= j < dim) or i == j:
            raise DataError(f"invalid rate key ({i},{j}) for dimension {dim}")
        if a < 0:
            raise DataError(f"negative rate {a} on edge ({i},{j})")
        if a == 0:
            continue
        rows.append(i)
        cols.append(j)
        vals.append(-a)
        diag[i] += a
    for i in range(dim):
        if diag[i] > 0:
            rows.append(i)
            cols.append(i)
            vals.append(diag[i])
    q = sp.csr_matrix(
        (np.array(vals, dtype=float), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=(dim, dim),
    )
    q.sort_indices()
    return GeneratorMatrix(dim=dim, matrix=q)


def build_generator(graph: SpatialGraph, rates: dict) -> GeneratorMatrix:
    """Build the generator for a graph from a per-edge rate map."""
    edge_set = {(e.src, e.dst) for e in graph.edges}
    for key in rates:
        if key not in edge_set:
            raise DataError(f"rate given for ({key[0]},{key[1]}), which is not an edge")
    dropped = [k for k, a in rates.items() if a == 0]
    if dropped:
        warnings.warn(
            f"{len(dropped)} edge(s) with zero rate dropped from the generator "
            f"(first: {dropped[0]}); re-check irreducibility",
            stacklevel=2,
        )
    return generator_from_rates(graph.node_count, rates)


def check_irreducible(Q: GeneratorMatrix) -> bool:
    """True iff the digraph of strictly positive rates is strongly connected."""
    a = Q.rates
    if Q.dim == 1:
        return True
    n, _ = connected_components(a, directed=True, connection="strong")
    return n == 1


def to_sar(Q: GeneratorMatrix):
    """Express Q as an intrinsic SAR pair (B, lam).

    B_ij = alpha_ji / alpha_i and lam_i = 1 / alpha_i**2 (the diagonal of
    the SAR noise covariance), so that (I - B)' diag(1/lam) (I - B) == Q Q'.
    Returned dense; every node must have at least one out-edge.
    """
    alpha_i = Q.out_rates
    dead = np.flatnonzero(alpha_i == 0)
    if dead.size:
        raise DataError(f"node {dead[0]} has no out-edges; SAR form undefined")
    a = Q.rates.toarray()
    b = a.T / alpha_i[:, None]
    np.fill_diagonal(b, 0.0)
    lam = 1.0 / alpha_i**2
    return b, lam
