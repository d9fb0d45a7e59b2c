"""The intrinsic random field pi ~ N(0, (QQ')^-) restricted to sum(pi) = 0.

The precision QQ' has rank M-1 for irreducible Q, with null vector 1.
All subspace computations are exact: constrained solves go through a
bordered linear system and the normalizing constant uses the pseudo-
determinant, never a jitter on the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DataError, NumericalError
from .graph import GeneratorMatrix

DENSE_EIG_LIMIT = 2000


def stationary_precision(Q: GeneratorMatrix) -> sp.csr_matrix:
    """Sparse precision P = Q Q', symmetrized to kill roundoff asymmetry."""
    p = (Q.matrix @ Q.matrix.T).tocsr()
    p = (p + p.T) * 0.5
    return p.tocsr()


def log_pseudo_det(P) -> float:
    """Log product of the nonzero eigenvalues of a PSD matrix with null vector 1.

    Dense symmetric eigendecomposition (desk scale, M <= 2000).  Exactly one
    eigenvalue may be numerically zero; more than one signals a reducible
    graph and raises.
    """
    dense = P.toarray() if sp.issparse(P) else np.asarray(P, dtype=float)
    m = dense.shape[0]
    if m > DENSE_EIG_LIMIT:
        raise NumericalError(f"dense eigendecomposition limited to M <= {DENSE_EIG_LIMIT}")
    ones = np.ones(m)
    if np.max(np.abs(dense @ ones)) > 1e-8 * max(1.0, np.max(np.abs(dense))):
        raise DataError("matrix does not annihilate the constant vector")
    w = np.linalg.eigvalsh(dense)
    tol = 1e-10 * w[-1]
    null = int(np.sum(w <= tol))
    if null > 1:
        raise NumericalError(
            f"{null} near-zero eigenvalues: precision is rank-deficient "
            "beyond the intrinsic constraint (reducible graph?)"
        )
    return float(np.sum(np.log(w[null:])))


def constrained_solve(Q: GeneratorMatrix, r: np.ndarray) -> np.ndarray:
    """Solve Q' pi = r on the sum-zero subspace.

    r is first projected onto range(Q') by removing its mean; the unique
    pi with 1'pi = 0 comes from the bordered system [[Q', 1], [1', 0]].
    This is the constrained generalized inverse applied to r.
    """
    m = Q.dim
    r = np.asarray(r, dtype=float)
    if r.shape != (m,):
        raise DataError(f"right-hand side must have length {m}")
    r_tilde = r - r.mean()
    ones = sp.csr_matrix(np.ones((m, 1)))
    bordered = sp.bmat(
        [[Q.matrix.T, ones], [ones.T, None]], format="csc"
    )
    rhs = np.concatenate([r_tilde, [0.0]])
    try:
        sol = spla.spsolve(bordered, rhs)
    except RuntimeError as exc:  # pragma: no cover - singular factorization
        raise NumericalError(f"bordered solve failed ({exc}); is Q irreducible?") from exc
    pi = sol[:m]
    resid = np.max(np.abs(Q.matrix.T @ pi - r_tilde))
    scale = max(np.max(np.abs(r_tilde)), 1e-300)
    if not np.isfinite(pi).all() or resid > 1e-10 * max(scale, 1.0):
        raise NumericalError(
            "constrained solve did not converge; check that Q is irreducible"
        )
    return pi


@dataclass(frozen=True)
class IntrinsicField:
    """Immutable field object with eagerly cached precision and log pseudo-det.

    sigma is the standard deviation of the driving noise.  The genetics
    model fixes sigma = 1; the precision itself carries no free scale.
    """

    Q: GeneratorMatrix
    sigma: float = 1.0
    precision: sp.csr_matrix = field(init=False, repr=False)
    logpdet: float = field(init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise DataError("sigma must be positive")
        p = stationary_precision(self.Q)
        object.__setattr__(self, "precision", p)
        object.__setattr__(self, "logpdet", log_pseudo_det(p))

    @property
    def dim(self):
        return self.Q.dim

    def _bordered_solver(self):
        """Cached LU factor of [[Q', 1], [1', 0]] for repeated sampling."""
        solver = getattr(self, "_solver", None)
        if solver is None:
            m = self.dim
            ones = sp.csr_matrix(np.ones((m, 1)))
            bordered = sp.bmat([[self.Q.matrix.T, ones], [ones.T, None]], format="csc")
            try:
                solver = spla.splu(bordered)
            except RuntimeError as exc:
                raise NumericalError(
                    f"bordered factorization failed ({exc}); is Q irreducible?"
                ) from exc
            object.__setattr__(self, "_solver", solver)
        return solver


@dataclass(frozen=True)
class FieldSample:
    pi: np.ndarray
    seed: int


def sample_field(fld: IntrinsicField, seed: int) -> FieldSample:
    """Draw one realization of the intrinsic field.

    gamma ~ N(0, sigma^2 I) conditioned on 1'gamma = 0 (mean subtraction is
    exact for exchangeable Gaussian noise), then pi solves Q'pi = gamma.
    """
    rng = np.random.default_rng(seed)
    gamma = rng.normal(0.0, fld.sigma, fld.dim)
    gamma -= gamma.mean()
    rhs = np.concatenate([gamma, [0.0]])
    pi = fld._bordered_solver().solve(rhs)[: fld.dim]
    if not np.isfinite(pi).all():
        raise NumericalError("field solve produced non-finite values")
    return FieldSample(pi=pi, seed=seed)


def sample_fields(fld: IntrinsicField, n_draws: int, seed: int) -> np.ndarray:
    """Draw n_draws independent field realizations as an (n_draws, M) array.

    One RNG stream, one matrix factorization: equivalent in law to repeated
    sample_field calls but far cheaper for Monte Carlo studies.
    """
    if n_draws <= 0:
        raise DataError("n_draws must be positive")
    m = fld.dim
    rng = np.random.default_rng(seed)
    gamma = rng.normal(0.0, fld.sigma, (n_draws, m))
    gamma -= gamma.mean(axis=1, keepdims=True)
    rhs = np.concatenate([gamma.T, np.zeros((1, n_draws))], axis=0)
    out = fld._bordered_solver().solve(rhs)[:m].T
    if not np.isfinite(out).all():
        raise NumericalError("field solve produced non-finite values")
    return out


def log_density(pi: np.ndarray, fld: IntrinsicField) -> float:
    """Proper log density of the field on the sum-zero subspace.

    -(M-1)/2 log(2 pi sigma^2) + 1/2 logpdet(QQ') - pi'QQ'pi / (2 sigma^2).
    The normalizing constant is exact, which matters for inference on Q.
    """
    pi = np.asarray(pi, dtype=float)
    m = fld.dim
    if pi.shape != (m,):
        raise DataError(f"field vector must have length {m}")
    if abs(pi.sum()) > 1e-8 * max(1.0, np.max(np.abs(pi)) * m):
        raise DataError("field vector violates the sum-to-zero constraint")
    quad = float(pi @ (fld.precision @ pi))
    if not math.isfinite(quad):
        raise NumericalError("non-finite quadratic form")
    s2 = fld.sigma**2
    return -0.5 * (m - 1) * math.log(2.0 * math.pi * s2) + 0.5 * fld.logpdet - quad / (2.0 * s2)
