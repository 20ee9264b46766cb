"""Piecewise-linear flow of the distance vector driven by induced vectors.

On an ergodic face the state moves with that face's induced vector; on a
non-ergodic face it leaves immediately along the minimal outgoing face.
Integration is exact: each segment ends when a positive coordinate with
negative velocity reaches zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import build_chain
from .errors import InternalInconsistency, NotOnManifold
from .faces import (
    Face,
    face_vector,
    canonicalize_face,
    final_face,
    is_ergodic_face,
    minimal_outgoing_face,
)
from .params import SystemParams

MANIFOLD_TOL = 1e-9
ZERO_TOL = 1e-9


class FlowStatus(str, enum.Enum):
    AT_ORIGIN = "AtOrigin"
    ON_FINAL_FACE = "OnFinalFace"
    BUDGET_EXHAUSTED = "BudgetExhausted"


@dataclass(frozen=True)
class Segment:
    start_time: float
    duration: float  # math.inf for the last segment on the final face
    face: Face  # the ergodic face whose vector drives the segment
    velocity: np.ndarray
    start: np.ndarray

    @property
    def end(self) -> np.ndarray:
        if math.isinf(self.duration):
            return np.where(self.velocity > 0, np.inf, self.start)
        return self.start + self.velocity * self.duration


@dataclass
class Trajectory:
    segments: list[Segment]
    status: FlowStatus
    end_time: float
    end_point: np.ndarray
    # first time each chain group's coordinates are all zero (None if never)
    chain_hit_times: list[float | None] = field(default_factory=list)
    closure_violations: list[str] = field(default_factory=list)

    def position(self, t: float) -> np.ndarray:
        """Point on the trajectory at time ``t``."""
        if t < 0:
            raise ValueError("t must be >= 0")
        for seg in self.segments:
            if t <= seg.start_time + seg.duration:
                return seg.start + seg.velocity * (t - seg.start_time)
        if self.status is FlowStatus.AT_ORIGIN:
            return np.zeros_like(self.end_point)
        raise ValueError(f"trajectory only integrated up to t={self.end_time}")


def conservation_residual(x: np.ndarray) -> float:
    """max |x_11 + x_nm - x_1m - x_n1| over the grid."""
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(x[0, 0] + x - x[:1, :] - x[:, :1])))


def check_on_manifold(x: np.ndarray, tol: float = MANIFOLD_TOL) -> None:
    x = np.asarray(x, dtype=float)
    scale = 1.0 + float(np.max(np.abs(x)))
    if np.any(x < -tol * scale):
        raise NotOnManifold(f"negative distance in {x}")
    if conservation_residual(x) > tol * scale:
        raise NotOnManifold(f"conservation laws violated by {conservation_residual(x):.3e}")


def face_of(x: np.ndarray, zero_tol: float = 0.0) -> Face:
    zeros = np.argwhere(np.asarray(x) <= zero_tol)
    return canonicalize_face(map(tuple, zeros))


def _drive(p: SystemParams, f: Face) -> tuple[Face, np.ndarray]:
    if not is_ergodic_face(p, f):
        f = minimal_outgoing_face(p, f)
    return f, face_vector(p, f)


def field_at(p: SystemParams, x: np.ndarray) -> tuple[Face, np.ndarray]:
    """Face of ``x`` and the velocity of the flow there."""
    x = np.asarray(x, dtype=float)
    check_on_manifold(x)
    face = face_of(x, ZERO_TOL * (1.0 + float(np.max(x))))
    return face, _drive(p, face)[1]


def integrate_flow(
    p: SystemParams,
    x0: np.ndarray,
    max_time: float = math.inf,
    max_segments: int | None = None,
) -> Trajectory:
    """Follow the flow from ``x0`` until the origin or the final face is reached."""
    x = np.array(x0, dtype=float)
    if x.shape != (p.L, p.K):
        raise ValueError(f"x0 must have shape {(p.L, p.K)}, got {x.shape}")
    check_on_manifold(x)
    if max_segments is None:
        max_segments = 16 * p.L * p.K
    zero_tol = ZERO_TOL * (1.0 + float(np.linalg.norm(x)))
    target = final_face(p)
    at_origin_is_final = target.is_origin(p.L, p.K)
    chain_masks = [Face.from_group(g).zero_mask(p.L, p.K) for g in build_chain(p).groups]
    hits: list[float | None] = [None] * len(chain_masks)
    violations: list[str] = []
    segments: list[Segment] = []
    t = 0.0

    while True:
        x[x <= zero_tol] = 0.0
        face = face_of(x)
        x[face.zero_mask(p.L, p.K)] = 0.0
        drive_face, vel = _drive(p, face)

        for r, mask in enumerate(chain_masks):
            if hits[r] is None and np.all(x[mask] == 0.0):
                hits[r] = t
            if hits[r] is not None and (np.any(x[mask] != 0.0) or np.any(vel[mask] != 0.0)):
                violations.append(f"left closure of chain face {r} at t={t}")

        if face.is_origin(p.L, p.K) and at_origin_is_final:
            status = FlowStatus.AT_ORIGIN
            break
        if drive_face == target and not at_origin_is_final:
            segments.append(Segment(t, math.inf, drive_face, vel, x.copy()))
            status = FlowStatus.ON_FINAL_FACE
            break
        if len(segments) >= max_segments:
            status = FlowStatus.BUDGET_EXHAUSTED
            break

        falling = (x > 0) & (vel < 0)
        if not falling.any():
            raise InternalInconsistency(f"flow escapes along non-final face {drive_face} from {x}")
        dt = float(np.min(x[falling] / -vel[falling]))
        if t + dt > max_time:
            dt = max_time - t
            segments.append(Segment(t, dt, drive_face, vel, x.copy()))
            x = x + vel * dt
            t = max_time
            status = FlowStatus.BUDGET_EXHAUSTED
            break
        segments.append(Segment(t, dt, drive_face, vel, x.copy()))
        hit = falling & (x <= -vel * dt * (1 + 1e-12))
        x = x + vel * dt
        x[hit] = 0.0
        t += dt

    return Trajectory(segments, status, t, x, hits, violations)
