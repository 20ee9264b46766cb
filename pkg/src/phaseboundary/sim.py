"""Event-driven simulation of the two annihilating particle phases.

Particles are tracked in the initial frame: a particle with initial
coordinate y and velocity v sits at y + v*t.  Only the frontier particle of
each type can take part in the next collision, so the state is one
coordinate per type.  Frontier pair (i, k) meets at time
(X_k - Y_i) / (v_i^- - v_k^+); after the collision both types retreat to
their next particle, drawn lazily from the type's spacing stream.
"""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BadFamilyParams, StopTooSmall
from .flow import check_on_manifold
from .params import SPACING_FAMILIES, Spacing, SystemParams

log = logging.getLogger(__name__)

TIE_TOL = 1e-12
BLOCK_SIZE = 4096
MINUS, PLUS = 0, 1


def stream_rng(seed: int, side: int, index: int) -> np.random.Generator:
    """Independent generator for one particle type.

    The stream depends only on (seed, side, index), so adding a type leaves
    the other types' spacings unchanged.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(side, index))
    return np.random.Generator(np.random.PCG64(ss))


class SpacingSampler:
    """Reproducible stream of i.i.d. positive spacings with mean ``mean``."""

    def __init__(
        self,
        family: str,
        mean: float,
        rng: np.random.Generator,
        shape: float | None = None,
        block: int = BLOCK_SIZE,
    ):
        if family not in SPACING_FAMILIES:
            raise BadFamilyParams(f"unknown spacing family {family!r}")
        if not (mean > 0 and math.isfinite(mean)):
            raise BadFamilyParams(f"spacing mean must be positive and finite, got {mean}")
        if family == "gamma" and not (shape is not None and shape > 0 and math.isfinite(shape)):
            raise BadFamilyParams("gamma spacing needs a finite shape > 0")
        self.family = family
        self.mean = float(mean)
        self.shape = shape
        self.rng = rng
        self.block = block

    def draw(self, n: int) -> np.ndarray:
        """Next ``n`` spacings as an array."""
        if self.family == "exponential":
            out = self.rng.exponential(self.mean, n)
        elif self.family == "uniform":
            out = self.rng.uniform(0.0, 2.0 * self.mean, n)
        else:
            out = self.rng.gamma(self.shape, self.mean / self.shape, n)
        # a draw of exactly 0 has probability zero but is possible in floating point
        while np.any(out <= 0.0):
            bad = out <= 0.0
            out[bad] = self.draw(int(bad.sum()))
        return out

    def __iter__(self) -> Iterator[float]:
        while True:
            yield from self.draw(self.block).tolist()


def make_spacing_sampler(
    family: str, mean: float, seed: int, shape: float | None = None, side: int = MINUS, index: int = 0
) -> SpacingSampler:
    return SpacingSampler(family, mean, stream_rng(seed, side, index), shape)


def type_samplers(p: SystemParams, seed: int) -> tuple[list[SpacingSampler], list[SpacingSampler]]:
    """Samplers for every minus and plus type of ``p``."""

    def build(side: int, spacings: Sequence[Spacing], means: Sequence[float]) -> list[SpacingSampler]:
        return [
            make_spacing_sampler(sp.family, mu, seed, sp.shape, side, j)
            for j, (sp, mu) in enumerate(zip(spacings, means))
        ]

    return build(MINUS, p.minus_spacing, p.minus_means), build(PLUS, p.plus_spacing, p.plus_means)


def initial_coordinates(p: SystemParams, seed: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Initial coordinates of the first ``n`` particles of every type.

    Returns arrays of shape (L, n) (negative, nearest the origin first) and
    (K, n) (positive), generated from the same streams as :func:`simulate`.
    """
    minus, plus = type_samplers(p, seed)
    ym = -np.cumsum([s.draw(n) for s in minus], axis=1)
    xp = np.cumsum([s.draw(n) for s in plus], axis=1)
    return ym, xp


@dataclass(eq=False)
class SimOutput:
    """Everything recorded by one run of :func:`simulate`."""

    seed: int
    L: int
    K: int
    event_times: np.ndarray
    event_positions: np.ndarray
    event_pairs: np.ndarray  # flat pair codes i*K + k
    counts: np.ndarray  # (L, K) collision counts
    sample_times: np.ndarray
    distances: np.ndarray  # (n_samples, L, K)
    end_time: float
    ties: int = 0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def total_collisions(self) -> int:
        return int(self.event_times.size)

    @property
    def pair_indices(self) -> np.ndarray:
        """(n_events, 2) array of 0-based (i, k) per collision."""
        return np.stack(np.divmod(self.event_pairs, self.K), axis=1)

    def boundary_at(self, t: float | np.ndarray) -> np.ndarray:
        """Position of the last collision strictly before ``t`` (0 before the first one)."""
        idx = np.searchsorted(self.event_times, t, side="left") - 1
        pos = np.concatenate([[0.0], self.event_positions])
        return pos[np.asarray(idx) + 1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimOutput):
            return NotImplemented
        arrays = ("event_times", "event_positions", "event_pairs", "counts", "sample_times", "distances")
        return (
            (self.seed, self.L, self.K, self.end_time, self.ties)
            == (other.seed, other.L, other.K, other.end_time, other.ties)
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
        )


def simulate(
    p: SystemParams,
    seed: int,
    *,
    collisions: int | None = None,
    time: float | None = None,
    checkpoints: int = 0,
    sample_times: Sequence[float] | None = None,
    initial_frontiers: tuple[Sequence[float], Sequence[float]] | None = None,
    recenter_every: int = 10**9,
    require_events: bool = True,
) -> SimOutput:
    """Run the annihilation process until ``collisions`` events or time ``time``.

    Distances are recorded at ``checkpoints`` evenly spaced fractions of the
    stop criterion and at every entry of ``sample_times``.  Time samples
    see the state just before any collision at that instant; collision-count
    checkpoints see the state just after the checkpoint event.

    ``initial_frontiers`` = (Y, X) places the first particle of each type;
    the particles behind it follow the usual spacings.
    """
    if (collisions is None) == (time is None):
        raise ValueError("give exactly one of collisions= or time=")
    if collisions is not None and collisions <= 0:
        raise StopTooSmall(f"collision budget must be positive, got {collisions}")
    if time is not None and not time > 0:
        raise StopTooSmall(f"time horizon must be positive, got {time}")
    if checkpoints < 0:
        raise ValueError("checkpoints must be >= 0")

    started = _time.perf_counter()
    L, K = p.L, p.K
    vm = list(p.minus_velocities)
    vp = list(p.plus_velocities)
    minus, plus = type_samplers(p, seed)
    draw_m = [iter(s).__next__ for s in minus]
    draw_p = [iter(s).__next__ for s in plus]
    if initial_frontiers is None:
        Y = [-d() for d in draw_m]
        X = [d() for d in draw_p]
    else:
        Y = [float(y) for y in initial_frontiers[0]]
        X = [float(x) for x in initial_frontiers[1]]
        if len(Y) != L or len(X) != K:
            raise ValueError("initial_frontiers lengths must match (L, K)")
        if max(Y) > min(X):
            raise ValueError("initial frontiers overlap: every minus frontier must lie left of every plus one")

    closing = [vm[i] - vp[k] for i in range(L) for k in range(K)]
    times = [(X[k] - Y[i]) / closing[i * K + k] for i in range(L) for k in range(K)]
    row_of = [j // K for j in range(L * K)]
    col_of = [j % K for j in range(L * K)]
    rows = [[(i * K + k, k) for k in range(K)] for i in range(L)]
    cols = [[(i * K + k, i) for i in range(L)] for k in range(K)]
    check_ties = L * K > 1

    n_max = collisions if collisions is not None else math.inf
    t_max = time if time is not None else math.inf
    if time is not None:
        marks = [time * j / checkpoints for j in range(1, checkpoints + 1)]
        requested = sorted(list(sample_times or ()) + marks)
        event_marks: set[int] = set()
    else:
        requested = sorted(sample_times or ())
        event_marks = {max(1, round(collisions * j / checkpoints)) for j in range(1, checkpoints + 1)}
    n_req = len(requested)
    s_idx = 0

    # origin of the local frame; shifted when recentring
    t0 = 0.0
    x0 = 0.0
    ev_t: list[float] = []
    ev_x: list[float] = []
    ev_j: list[int] = []
    counts = [0] * (L * K)
    rec_t: list[float] = []
    rec_d: list[list[float]] = []
    ties = 0
    n = 0
    since_recenter = 0

    def snapshot(t_local: float) -> list[float]:
        return [(X[k] - Y[i]) - closing[i * K + k] * t_local for i in range(L) for k in range(K)]

    while n < n_max:
        tl = min(times)
        te = t0 + tl
        if te > t_max:
            break
        j = times.index(tl)
        if check_ties:
            thr = tl + TIE_TOL * abs(te)
            near = [q for q, s in enumerate(times) if s <= thr]
            if len(near) > 1:
                j = near[0]
                ties += 1
                log.debug("near-tie at t=%.17g among pairs %s; taking %d", te, near, j)
        while s_idx < n_req and requested[s_idx] <= te:
            rec_t.append(requested[s_idx])
            rec_d.append(snapshot(requested[s_idx] - t0))
            s_idx += 1

        i = row_of[j]
        k = col_of[j]
        ev_t.append(te)
        ev_x.append(x0 + Y[i] + vm[i] * tl)
        ev_j.append(j)
        counts[j] += 1
        Y[i] -= draw_m[i]()
        X[k] += draw_p[k]()
        yi = Y[i]
        for q, kk in rows[i]:
            times[q] = (X[kk] - yi) / closing[q]
        xk = X[k]
        for q, ii in cols[k]:
            times[q] = (xk - Y[ii]) / closing[q]
        n += 1

        if n in event_marks:
            rec_t.append(te)
            rec_d.append(snapshot(tl))

        since_recenter += 1
        if since_recenter >= recenter_every:
            # move the frame origin to the current event to keep magnitudes small
            shift = ev_x[-1] - x0
            for ii in range(L):
                Y[ii] += vm[ii] * tl - shift
            for kk in range(K):
                X[kk] += vp[kk] * tl - shift
            times = [s - tl for s in times]
            t0 = te
            x0 += shift
            since_recenter = 0

    end_time = t_max if time is not None else (ev_t[-1] if ev_t else 0.0)
    while s_idx < n_req and requested[s_idx] <= end_time:
        rec_t.append(requested[s_idx])
        rec_d.append(snapshot(requested[s_idx] - t0))
        s_idx += 1

    if n == 0 and require_events:
        raise StopTooSmall(f"no collision before the stop criterion (horizon {end_time})")
    if ties:
        log.info("%d near-tie collision times resolved lexicographically", ties)

    order = np.argsort(np.asarray(rec_t, dtype=float), kind="stable")
    distances = np.asarray(rec_d, dtype=float).reshape(-1, L, K)[order]
    return SimOutput(
        seed=int(seed),
        L=L,
        K=K,
        event_times=np.asarray(ev_t, dtype=float),
        event_positions=np.asarray(ev_x, dtype=float),
        event_pairs=np.asarray(ev_j, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64).reshape(L, K),
        sample_times=np.asarray(rec_t, dtype=float)[order],
        distances=distances,
        end_time=float(end_time),
        ties=ties,
        wall_time=_time.perf_counter() - started,
    )


def frontiers_for(x0: np.ndarray, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Frontier coordinates (Y, X) whose gap matrix X_k - Y_i equals ``scale * x0``.

    Any point on the state manifold splits as x_ik = a_i + c_k with a, c >= 0.
    """
    x0 = np.asarray(x0, dtype=float)
    a = x0[:, 0] - x0[:, 0].min()
    c = x0[0, :] - a[0]
    return -scale * a, scale * c


@dataclass
class ScaledPath:
    t_grid: np.ndarray
    values: np.ndarray  # (len(t_grid), L, K): D(tM)/M
    M: float
    output: SimOutput


def scaled_distance_path(
    p: SystemParams, x0: np.ndarray, M: float, t_grid: Sequence[float], seed: int
) -> ScaledPath:
    """Sample D(tM)/M on ``t_grid`` for a run started from the distances M*x0."""
    if M < 1:
        raise ValueError(f"scale M must be >= 1, got {M}")
    x0 = np.asarray(x0, dtype=float)
    check_on_manifold(x0)
    grid = np.asarray(sorted(t_grid), dtype=float)
    if grid.size == 0 or grid[0] < 0:
        raise ValueError("t_grid must be nonempty and nonnegative")
    Y, X = frontiers_for(x0, M)
    horizon = max(float(grid[-1]) * M, 1.0)
    out = simulate(
        p,
        seed,
        time=horizon,
        sample_times=(grid * M).tolist(),
        initial_frontiers=(Y, X),
        require_events=False,
    )
    return ScaledPath(grid, out.distances / M, float(M), out)
