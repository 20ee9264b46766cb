"""Faces of the distance orthant, induced vectors and Lyapunov quantities.

A face is identified by its zero set.  Only "appropriate" faces matter on the
state manifold: those whose zero set is a product J- x J+.  They are stored
as the pair (J-, J+); the interior (nothing zero) has both sides empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator

import numpy as np

from .analytic import Group, Regime, boundary_velocity, group_velocity, velocity_above
from .errors import (
    FaceIsErgodic,
    InternalInconsistency,
    NotErgodicFace,
    NotErgodicProcess,
)
from .params import SystemParams


@dataclass(frozen=True)
class Face:
    zero_minus: tuple[int, ...] = ()
    zero_plus: tuple[int, ...] = ()

    def __post_init__(self):
        zm = tuple(sorted(set(self.zero_minus)))
        zp = tuple(sorted(set(self.zero_plus)))
        if not zm or not zp:
            zm, zp = (), ()
        object.__setattr__(self, "zero_minus", zm)
        object.__setattr__(self, "zero_plus", zp)

    @classmethod
    def interior(cls) -> "Face":
        return cls()

    @classmethod
    def origin(cls, L: int, K: int) -> "Face":
        return cls(tuple(range(L)), tuple(range(K)))

    @classmethod
    def from_group(cls, g: Group) -> "Face":
        return cls(g.minus, g.plus)

    @property
    def is_interior(self) -> bool:
        return not self.zero_minus

    def is_origin(self, L: int, K: int) -> bool:
        return len(self.zero_minus) == L and len(self.zero_plus) == K

    @property
    def group(self) -> Group:
        return Group(self.zero_minus, self.zero_plus)

    def zero_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset(product(self.zero_minus, self.zero_plus))

    def positive_pairs(self, L: int, K: int) -> frozenset[tuple[int, int]]:
        return frozenset(product(range(L), range(K))) - self.zero_pairs()

    def zero_mask(self, L: int, K: int) -> np.ndarray:
        m = np.zeros((L, K), dtype=bool)
        if not self.is_interior:
            m[np.ix_(self.zero_minus, self.zero_plus)] = True
        return m

    def bitmask(self, L: int, K: int) -> int:
        """Positive coordinates as bits, bit ``i*K + k`` for pair (i, k)."""
        return sum(1 << (i * K + k) for i, k in self.positive_pairs(L, K))

    def contains(self, other: "Face") -> bool:
        """True when this face's positive set includes ``other``'s (as pair sets)."""
        return self.zero_pairs() <= other.zero_pairs()

    def to_dict(self, L: int | None = None, K: int | None = None) -> dict:
        """1-based zero sets; with (L, K) also the sorted positive pairs."""
        d = {"zero_minus": [i + 1 for i in self.zero_minus], "zero_plus": [k + 1 for k in self.zero_plus]}
        if L is not None and K is not None:
            d["positive"] = [[i + 1, k + 1] for i, k in sorted(self.positive_pairs(L, K))]
        return d


def canonicalize_face(zero_pairs: Iterable[tuple[int, int]]) -> Face:
    """Close an arbitrary zero set to the product of its row and column sets.

    On the state manifold the two zero sets coincide, so the product face is
    the one that describes the dynamics.
    """
    pairs = list(zero_pairs)
    return Face(tuple(int(i) for i, _ in pairs), tuple(int(k) for _, k in pairs))


def appropriate_faces(L: int, K: int) -> Iterator[Face]:
    """Every appropriate face: the interior, then all nonempty products."""
    yield Face.interior()
    for a, b in product(range(1, 1 << L), range(1, 1 << K)):
        yield Face(
            tuple(i for i in range(L) if a >> i & 1),
            tuple(k for k in range(K) if b >> k & 1),
        )


def is_ergodic_face(p: SystemParams, f: Face) -> bool:
    """Whether the process restricted to the zero-set types is positive recurrent.

    The slowest minus type of the group must outrun the group velocity and the
    slowest plus type must be outrun by it.  The interior is always ergodic.
    """
    if f.is_interior:
        return True
    V = group_velocity(p, f.group)
    return velocity_above(p.minus_velocities[f.zero_minus[-1]], V) and velocity_above(
        V, p.plus_velocities[f.zero_plus[-1]]
    )


@dataclass(frozen=True)
class CollisionRateSolution:
    """Collision rates per type for the process restricted to a face's group.

    Arrays have one entry per type; types outside the group have rate 0.
    """

    V: float
    r_minus: np.ndarray
    r_plus: np.ndarray
    pi_minus: np.ndarray
    pi_plus: np.ndarray


def collision_rates(p: SystemParams, f: Face | None = None) -> CollisionRateSolution:
    """Solve the balance system: r_i = v_i - V for minus types, r_k = V - v_k for plus types."""
    g = Group.full(p) if f is None or f.is_interior else f.group
    V = group_velocity(p, g)
    r_minus = np.zeros(p.L)
    r_plus = np.zeros(p.K)
    for i in g.minus:
        r_minus[i] = p.minus_velocities[i] - V
    for k in g.plus:
        r_plus[k] = V - p.plus_velocities[k]
    pi_minus = r_minus * np.asarray(p.minus_densities)
    pi_plus = r_plus * np.asarray(p.plus_densities)
    return CollisionRateSolution(V, r_minus, r_plus, pi_minus, pi_plus)


def face_vector(p: SystemParams, f: Face) -> np.ndarray:
    """Induced-vector formula for ``f`` without checking that ``f`` is ergodic."""
    vm = np.asarray(p.minus_velocities)
    vp = np.asarray(p.plus_velocities)
    if f.is_interior:
        return -vm[:, None] + vp[None, :]
    V = group_velocity(p, f.group)
    # additive form: (-v_i + r_i [i in J-]) + (v_k + r_k [k in J+])
    row = -vm.copy()
    col = vp.copy()
    row[list(f.zero_minus)] = -V
    col[list(f.zero_plus)] = V
    v = row[:, None] + col[None, :]
    v[f.zero_mask(p.L, p.K)] = 0.0
    return v


def induced_vector(p: SystemParams, f: Face) -> np.ndarray:
    """Fluid velocity of the distances on an ergodic face, shape (L, K)."""
    if not is_ergodic_face(p, f):
        raise NotErgodicFace(f"face with zero set {f.group} is not ergodic")
    return face_vector(p, f)


def outgoing_indices(p: SystemParams, f: Face) -> tuple[int, int]:
    """(q, r): how many leading minus and plus types of the zero set are kept."""
    im, mp = f.zero_minus, f.zero_plus
    vm, vp = p.minus_velocities, p.plus_velocities
    q = max(
        n for n in range(1, len(im) + 1)
        if velocity_above(vm[im[n - 1]], group_velocity(p, Group(im[:n], mp)))
    )
    r = max(
        j for j in range(1, len(mp) + 1)
        if velocity_above(group_velocity(p, Group(im, mp[:j])), vp[mp[j - 1]])
    )
    return q, r


def minimal_outgoing_face(p: SystemParams, f: Face) -> Face:
    """Smallest ergodic face containing ``f`` whose vector points out of ``f``."""
    if f.is_interior:
        raise FaceIsErgodic("the interior is ergodic")
    q, r = outgoing_indices(p, f)
    if q == len(f.zero_minus) and r == len(f.zero_plus):
        raise FaceIsErgodic(f"face with zero set {f.group} is ergodic")
    return Face(f.zero_minus[:q], f.zero_plus[:r])


def final_face(p: SystemParams) -> Face:
    """Face the flow settles on: the origin when ergodic, else the lagging types' block."""
    rep = boundary_velocity(p)
    L, K = p.L, p.K
    if rep.regime is Regime.ERGODIC:
        return Face.origin(L, K)
    if rep.regime is Regime.TRANSIENT_PLUS_LAG:
        face = Face(tuple(range(L)), tuple(range(rep.K1)))
    else:
        face = Face(tuple(range(rep.L1)), tuple(range(K)))
    v = induced_vector(p, face)
    positive = ~face.zero_mask(L, K)
    if not np.all(v[positive] > 0):
        raise InternalInconsistency(f"final face velocity not positive: {v}")
    return face


def lyapunov_weights(p: SystemParams) -> np.ndarray:
    """Weights p_{i,m} = pi_i^- pi_m^+ / C of the linear Lyapunov function."""
    sol = collision_rates(p)
    if not (np.all(sol.pi_minus > 0) and np.all(sol.pi_plus > 0)):
        raise NotErgodicProcess("the full process is not ergodic; weights undefined")
    C = sol.pi_minus.sum()
    return np.outer(sol.pi_minus, sol.pi_plus) / C


def lyapunov_drift(p: SystemParams, f: Face) -> float:
    """Inner product of the Lyapunov weights with the induced vector of ``f``."""
    if f.is_origin(p.L, p.K):
        raise ValueError("the origin carries no drift")
    w = lyapunov_weights(p)
    return float(np.sum(w * induced_vector(p, f)))


def drift_as_quadratic_form(p: SystemParams, f: Face) -> float:
    """Same drift written as -(y, Ay) with y = weights minus the face's collision rates."""
    full = collision_rates(p)
    restricted = collision_rates(p, f) if not f.is_interior else None
    ym = full.pi_minus - (restricted.pi_minus if restricted else 0.0)
    yp = full.pi_plus - (restricted.pi_plus if restricted else 0.0)
    return -float(np.dot(p.minus_means, ym**2) + np.dot(p.plus_means, yp**2))


def balance_matrix(p: SystemParams) -> np.ndarray:
    """A[(i,k),(n,m)] = [n == i] mu_i^- + [m == k] mu_k^+, pairs flattened row-major."""
    L, K = p.L, p.K
    mu_m = np.asarray(p.minus_means)
    mu_p = np.asarray(p.plus_means)
    same_i = np.kron(np.eye(L), np.ones((K, K)))
    same_k = np.kron(np.ones((L, L)), np.eye(K))
    return same_i * np.repeat(mu_m, K)[:, None] + same_k * np.tile(mu_p, L)[:, None]


def quadratic_form(p: SystemParams, y: np.ndarray) -> np.ndarray:
    """(Ay, y) for one flattened vector or a stack of them (last axis = L*K)."""
    A = balance_matrix(p)
    y = np.asarray(y, dtype=float)
    return np.einsum("...i,ij,...j->...", y, A, y)


def quadratic_form_closed(p: SystemParams, y: np.ndarray) -> np.ndarray:
    """(Ay, y) via row and column sums of y; manifestly nonnegative."""
    y = np.asarray(y, dtype=float)
    grid = y.reshape(y.shape[:-1] + (p.L, p.K))
    rows = grid.sum(axis=-1)
    cols = grid.sum(axis=-2)
    return rows**2 @ np.asarray(p.minus_means) + cols**2 @ np.asarray(p.plus_means)
