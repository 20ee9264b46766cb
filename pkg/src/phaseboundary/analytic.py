"""Closed-form boundary speed, critical indices and the group chain."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from scipy.optimize import bisect

from .errors import DegenerateParameters, EmptyGroup, InternalInconsistency, ToleranceNotReached
from .params import SystemParams, is_near

BISECTION_MAX_ITER = 200


class Regime(str, enum.Enum):
    ERGODIC = "Ergodic"
    TRANSIENT_PLUS_LAG = "TransientPlusLag"
    TRANSIENT_MINUS_LAG = "TransientMinusLag"


@dataclass(frozen=True)
class Group:
    """A pair (J-, J+) of type index sets, stored sorted and 0-based."""

    minus: tuple[int, ...]
    plus: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "minus", tuple(sorted(set(self.minus))))
        object.__setattr__(self, "plus", tuple(sorted(set(self.plus))))

    @classmethod
    def prefix(cls, b: int, a: int) -> "Group":
        """The group of the ``b`` fastest minus types and ``a`` fastest plus types."""
        return cls(tuple(range(b)), tuple(range(a)))

    @classmethod
    def full(cls, p: SystemParams) -> "Group":
        return cls.prefix(p.L, p.K)

    def __str__(self) -> str:
        m = ",".join(str(i + 1) for i in reversed(self.minus))
        q = ",".join(str(k + 1) for k in self.plus)
        return f"({m}|{q})"


def group_velocity(p: SystemParams, g: Group) -> float:
    """Density-weighted mean velocity of the types in ``g``."""
    if not g.minus or not g.plus:
        raise EmptyGroup(f"group velocity needs both sides nonempty, got {g}")
    vm, rm = p.minus_velocities, p.minus_densities
    vp, rp = p.plus_velocities, p.plus_densities
    num = sum(vm[i] * rm[i] for i in g.minus) + sum(vp[k] * rp[k] for k in g.plus)
    den = sum(rm[i] for i in g.minus) + sum(rp[k] for k in g.plus)
    return num / den


def velocity_above(a: float, b: float, what: str = "") -> bool:
    """Strict ``a > b`` where one side is a group velocity; ties raise."""
    if is_near(a, b):
        raise DegenerateParameters(f"velocity tie {a!r} ~ {b!r} {what}".rstrip())
    return a > b


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    V: float
    W: float
    L1: int
    K1: int


def _plus_profile(p: SystemParams) -> list[float]:
    return [group_velocity(p, Group(tuple(range(p.L)), tuple(range(k)))) for k in range(1, p.K + 1)]


def _minus_profile(p: SystemParams) -> list[float]:
    return [group_velocity(p, Group(tuple(range(l)), tuple(range(p.K)))) for l in range(1, p.L + 1)]


def critical_indices(p: SystemParams) -> tuple[int, int]:
    """Largest prefixes (L1, K1) of minus/plus types that still reach the boundary."""
    g = _minus_profile(p)
    f = _plus_profile(p)
    L1 = max(l for l in range(1, p.L + 1) if velocity_above(p.minus_velocities[l - 1], g[l - 1], f"(minus type {l})"))
    K1 = max(k for k in range(1, p.K + 1) if velocity_above(f[k - 1], p.plus_velocities[k - 1], f"(plus type {k})"))
    return L1, K1


def boundary_velocity(p: SystemParams) -> RegimeReport:
    """Asymptotic speed W of the boundary and the regime it belongs to."""
    L1, K1 = critical_indices(p)
    W = group_velocity(p, Group.prefix(L1, K1))
    V = group_velocity(p, Group.full(p))
    v_slow_minus = p.minus_velocities[-1]
    v_slow_plus = p.plus_velocities[-1]
    band = 1e-12 * max(1.0, abs(W))

    if velocity_above(V, v_slow_plus, "(V vs slowest plus)") and velocity_above(v_slow_minus, V, "(V vs slowest minus)"):
        regime = Regime.ERGODIC
        if (L1, K1) != (p.L, p.K):
            raise InternalInconsistency(f"ergodic regime but (L1, K1) = {(L1, K1)}")
    elif v_slow_plus > V:
        regime = Regime.TRANSIENT_PLUS_LAG
        best = min(_plus_profile(p))
        if not (L1 == p.L and K1 < p.K and W < V < 0 and abs(W - best) <= band):
            raise InternalInconsistency(f"plus-lag identities fail: W={W}, V={V}, min={best}, L1={L1}, K1={K1}")
    else:
        regime = Regime.TRANSIENT_MINUS_LAG
        best = max(_minus_profile(p))
        if not (K1 == p.K and L1 < p.L and W > V > 0 and abs(W - best) <= band):
            raise InternalInconsistency(f"minus-lag identities fail: W={W}, V={V}, max={best}, L1={L1}, K1={K1}")
    return RegimeReport(regime, V, W, L1, K1)


def balance_excess(p: SystemParams, w: float) -> float:
    """Minus-particle arrival rate minus plus-particle arrival rate at a boundary moving at ``w``."""
    lhs = sum(r * (v - w) for v, r in zip(p.minus_velocities, p.minus_densities) if v > w)
    rhs = sum(r * (w - v) for v, r in zip(p.plus_velocities, p.plus_densities) if v < w)
    return lhs - rhs


def balance_root(p: SystemParams, tol: float = 1e-12) -> float:
    """Root of the flux balance between the two phases, by bisection.

    The excess is continuous and strictly decreasing, positive at the fastest
    plus velocity and negative at the fastest minus velocity.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = p.plus_velocities[0], p.minus_velocities[0]
    try:
        return bisect(lambda w: balance_excess(p, w), lo, hi, xtol=tol, maxiter=BISECTION_MAX_ITER)
    except RuntimeError as exc:
        raise ToleranceNotReached(str(exc)) from exc


@dataclass(frozen=True)
class Profiles:
    f: tuple[float, ...]
    g: tuple[float, ...]
    unimodal: bool


def _strict_pattern(values: Iterable[float], turn: int, down_first: bool) -> bool:
    vals = list(values)
    for j in range(len(vals) - 1):
        falling = j + 1 < turn
        if not down_first:
            falling = not falling
        if falling and not vals[j + 1] < vals[j]:
            return False
        if not falling and not vals[j + 1] > vals[j]:
            return False
    return True


def prefix_profiles(p: SystemParams) -> Profiles:
    """f(k) = V(I-, {1..k}) and g(l) = V({1..l}, I+).

    f falls down to index K1 and rises after it; g rises up to L1 and falls
    after it.
    """
    f = tuple(_plus_profile(p))
    g = tuple(_minus_profile(p))
    L1, K1 = critical_indices(p)
    unimodal = _strict_pattern(f, K1, down_first=True) and _strict_pattern(g, L1, down_first=False)
    if not unimodal:
        raise InternalInconsistency(f"prefix profiles not unimodal: f={f}, g={g}, K1={K1}, L1={L1}")
    return Profiles(f, g, unimodal)


@dataclass(frozen=True)
class Chain:
    groups: tuple[Group, ...]
    velocities: tuple[float, ...]
    # moves[r] says how groups[r] was obtained: None for the first group,
    # "plus" when a plus type was added, "minus" when a minus type was added
    moves: tuple[str | None, ...]

    @property
    def final(self) -> Group:
        return self.groups[-1]

    @property
    def final_shape(self) -> tuple[int, int]:
        """(b, a): numbers of minus and plus types in the final group."""
        return len(self.final.minus), len(self.final.plus)


def build_chain(p: SystemParams) -> Chain:
    """Grow prefix groups one type at a time until the final group is reached.

    A group velocity of exactly zero is handled on the negative branch.
    """
    vm, vp = p.minus_velocities, p.plus_velocities
    L, K = p.L, p.K
    b, a = 1, 1
    groups, velocities, moves = [Group.prefix(1, 1)], [], [None]
    while True:
        V = group_velocity(p, groups[-1])
        velocities.append(V)
        if a == K and b == L:
            break
        if a == K:
            if not velocity_above(vm[b], V, f"(minus type {b + 1})"):
                break
            move = "minus"
        elif b == L:
            if not velocity_above(V, vp[a], f"(plus type {a + 1})"):
                break
            move = "plus"
        elif V <= 0:
            move = "plus" if velocity_above(V, vp[a], f"(plus type {a + 1})") else "minus"
        else:
            move = "minus" if velocity_above(vm[b], V, f"(minus type {b + 1})") else "plus"
        if move == "plus":
            a += 1
        else:
            b += 1
        groups.append(Group.prefix(b, a))
        moves.append(move)
    return Chain(tuple(groups), tuple(velocities), tuple(moves))
