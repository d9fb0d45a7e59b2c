"""Event-driven simulation of the open population process and its ODE limit.

The finite-N process is simulated exactly (event by event): births arrive
at rate N*b_i, removals at rate N*d_i, and moves i -> j at rate n_i*alpha_ij.
Removal rates do not depend on n_i, which would let counts go negative, so
removal events at empty nodes are suppressed; a node re-enters the removal
rate sum as soon as it is occupied.  As N grows, n(t)/N converges to the
deterministic flow dz/dt = -Q'z + (b - d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .graph import GeneratorMatrix

DEFAULT_EVENT_CAP = 50_000_000


@dataclass(frozen=True)
class DemographyRates:
    """Per-node birth and death intensity multipliers of N."""

    b: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if b.shape != d.shape or b.ndim != 1:
            raise DataError("b and d must be 1-d arrays of equal length")
        if not (np.isfinite(b).all() and np.isfinite(d).all()):
            raise DataError("demography rates must be finite")
        if (b < 0).any() or (d < 0).any():
            raise DataError("demography rates must be nonnegative")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class PopulationTrajectory:
    """Snapshots of a population path on a time grid.

    ``values`` holds integer counts for the jump process (kind="counts",
    with ``scale`` = N) or normalized densities for the ODE (kind="density").
    """

    times: np.ndarray
    values: np.ndarray
    kind: str
    scale: int | None = None
    event_count: int = 0
    rng_seed: int | None = None
    ended_early: bool = False

    def density(self) -> np.ndarray:
        if self.kind == "density":
            return self.values
        return self.values / self.scale


def _snapshot_grid(t_end, snapshot_every):
    grid = np.arange(0.0, t_end, snapshot_every)
    if grid.size == 0 or grid[-1] < t_end:
        grid = np.append(grid, t_end)
    return grid


def simulate_population(
    Q: GeneratorMatrix,
    demo: DemographyRates,
    n0,
    N: int,
    t_end: float,
    seed: int,
    snapshot_every: float,
    max_events: int = DEFAULT_EVENT_CAP,
) -> PopulationTrajectory:
    """Exact stochastic simulation of the finite-N process (fixed seed, bit-reproducible)."""
    m = Q.dim
    n = np.asarray(n0, dtype=np.int64).copy()
    if n.shape != (m,) or (n < 0).any():
        raise DataError("n0 must be a nonnegative integer vector of length M")
    if demo.b.shape != (m,):
        raise DataError("demography rate length does not match the graph")
    if not t_end > 0:
        raise DataError("t_end must be positive")

    alpha = Q.rates.toarray()
    alpha_i = alpha.sum(axis=1)
    birth = N * demo.b
    birth_total = birth.sum()
    death = N * demo.d

    rng = np.random.default_rng(seed)
    grid = _snapshot_grid(t_end, snapshot_every)
    snaps = np.empty((grid.size, m), dtype=np.int64)
    gi = 0
    t = 0.0
    events = 0
    ended_early = False

    while True:
        occupied = n > 0
        death_rates = np.where(occupied, death, 0.0)
        move_rates = n * alpha_i
        total = birth_total + death_rates.sum() + move_rates.sum()
        if total <= 0.0:
            ended_early = t < t_end
            break
        t_next = t + rng.exponential(1.0 / total)
        while gi < grid.size and grid[gi] <= t_next:
            snaps[gi] = n  # process is piecewise constant: carry state forward
            gi += 1
        if gi >= grid.size:
            break
        t = t_next
        u = rng.random() * total
        if u < birth_total:
            i = int(np.searchsorted(np.cumsum(birth), u, side="right"))
            n[i] += 1
        elif u < birth_total + death_rates.sum():
            v = u - birth_total
            i = int(np.searchsorted(np.cumsum(death_rates), v, side="right"))
            n[i] -= 1
        else:
            v = u - birth_total - death_rates.sum()
            i = int(np.searchsorted(np.cumsum(move_rates), v, side="right"))
            w = rng.random() * alpha_i[i]
            j = int(np.searchsorted(np.cumsum(alpha[i]), w, side="right"))
            n[i] -= 1
            n[j] += 1
        events += 1
        if events > max_events:
            exc = NumericalError(
                f"event cap {max_events} exceeded at t={t:.4g} "
                f"({gi} of {grid.size} snapshots recorded)"
            )
            exc.partial = PopulationTrajectory(
                times=grid[:gi], values=snaps[:gi], kind="counts", scale=N,
                event_count=events, rng_seed=seed, ended_early=True,
            )
            raise exc

    # remaining grid points see the final (constant) state
    while gi < grid.size:
        snaps[gi] = n
        gi += 1

    return PopulationTrajectory(
        times=grid,
        values=snaps,
        kind="counts",
        scale=N,
        event_count=events,
        rng_seed=seed,
        ended_early=ended_early,
    )


def integrate_limit_ode(
    Q: GeneratorMatrix,
    demo: DemographyRates,
    z0,
    t_end: float,
    dt: float | None = None,
    snapshot_every: float | None = None,
) -> PopulationTrajectory:
    """Classic fixed-step 4th-order integration of dz/dt = -Q'z + (b - d).

    Steps are shortened to land exactly on each snapshot time and on t_end,
    so recorded states need no interpolation.
    """
    m = Q.dim
    z = np.asarray(z0, dtype=float).copy()
    if z.shape != (m,):
        raise DataError("z0 must have length M")
    if dt is None:
        qmax = float(np.max(Q.matrix.diagonal())) if m else 1.0
        dt = min(0.01, 0.1 / qmax) if qmax > 0 else 0.01
    if not dt > 0:
        raise DataError("dt must be positive")
    if snapshot_every is None:
        snapshot_every = dt
    grid = _snapshot_grid(t_end, snapshot_every)

    qt = Q.matrix.T.tocsr()
    drift = demo.b - demo.d

    def f(state):
        return -(qt @ state) + drift

    snaps = np.empty((grid.size, m))
    snaps[0] = z
    t = 0.0
    for gi in range(1, grid.size):
        target = grid[gi]
        while t < target - 1e-15:
            h = min(dt, target - t)
            k1 = f(z)
            k2 = f(z + 0.5 * h * k1)
            k3 = f(z + 0.5 * h * k2)
            k4 = f(z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            if not np.isfinite(z).all():
                raise NumericalError(f"ODE state diverged at t={t:.6g}")
        snaps[gi] = z
    return PopulationTrajectory(times=grid, values=snaps, kind="density")


def convergence_gap(
    Q: GeneratorMatrix,
    demo: DemographyRates,
    z0,
    t_end: float,
    N_list,
    replicates: int,
    seed: int,
    snapshot_every: float = 0.1,
) -> dict:
    """Median sup-norm gap between n(t)/N and the ODE limit, per N.

    Each replicate starts from n0 = round(N*z0) and derives an independent
    RNG stream from (seed, N, replicate).
    """
    N_list = list(N_list)
    if any(b >= a for a, b in zip(N_list[1:], N_list)):
        raise DataError("N_list must be strictly increasing")
    z0 = np.asarray(z0, dtype=float)
    ode = integrate_limit_ode(Q, demo, z0, t_end, snapshot_every=snapshot_every)
    z_ref = ode.values
    out = {}
    for N in N_list:
        n0 = np.rint(N * z0).astype(np.int64)
        gaps = []
        for rep in range(replicates):
            stream_seed = np.random.SeedSequence((seed, N, rep)).generate_state(1)[0]
            traj = simulate_population(
                Q, demo, n0, N, t_end, int(stream_seed), snapshot_every
            )
            gaps.append(float(np.max(np.abs(traj.density() - z_ref))))
        out[N] = float(np.median(gaps))
    return out
