"""Model parameters: velocities, densities and spacing laws of the two phases.

Minus types move right (``v >= 0``), ordered fastest first; plus types move
left (``v <= 0``), ordered fastest first.  Types are 0-based internally and
1-based in every emitted file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .errors import (
    BadFamilyParams,
    ClosingSpeedViolation,
    DensityViolation,
    OrderingViolation,
    ParamsError,
    SignViolation,
)

# |V - v| <= VELOCITY_TOL * max(1, |v|) counts as a tie between a group
# velocity and an individual velocity.
VELOCITY_TOL = 1e-9
DEFAULT_PAIR_BUDGET = 10**6

SPACING_FAMILIES = ("exponential", "uniform", "gamma")


@dataclass(frozen=True)
class Spacing:
    """Law of the gaps between neighbouring particles of one type."""

    family: str = "exponential"
    shape: float | None = None

    def __post_init__(self):
        if self.family not in SPACING_FAMILIES:
            raise BadFamilyParams(f"unknown spacing family {self.family!r}")
        if self.family == "gamma":
            if self.shape is None or not (self.shape > 0 and math.isfinite(self.shape)):
                raise BadFamilyParams("gamma spacing needs a finite shape > 0")
        elif self.shape is not None:
            raise BadFamilyParams(f"{self.family} spacing takes no shape parameter")


@dataclass(frozen=True)
class SystemParams:
    minus_velocities: tuple[float, ...]
    minus_densities: tuple[float, ...]
    plus_velocities: tuple[float, ...]
    plus_densities: tuple[float, ...]
    minus_spacing: tuple[Spacing, ...] = ()
    plus_spacing: tuple[Spacing, ...] = ()

    def __post_init__(self):
        for name in ("minus_velocities", "minus_densities", "plus_velocities", "plus_densities"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if not self.minus_spacing:
            object.__setattr__(self, "minus_spacing", (Spacing(),) * len(self.minus_velocities))
        if not self.plus_spacing:
            object.__setattr__(self, "plus_spacing", (Spacing(),) * len(self.plus_velocities))
        object.__setattr__(self, "minus_spacing", tuple(self.minus_spacing))
        object.__setattr__(self, "plus_spacing", tuple(self.plus_spacing))

    @classmethod
    def from_lists(
        cls,
        minus_v: Sequence[float],
        minus_rho: Sequence[float],
        plus_v: Sequence[float],
        plus_rho: Sequence[float],
    ) -> "ValidatedParams":
        """Build and validate parameters with exponential spacings."""
        return validate_params(cls(tuple(minus_v), tuple(minus_rho), tuple(plus_v), tuple(plus_rho)))

    @property
    def L(self) -> int:
        return len(self.minus_velocities)

    @property
    def K(self) -> int:
        return len(self.plus_velocities)

    @property
    def minus_means(self) -> tuple[float, ...]:
        return tuple(1.0 / r for r in self.minus_densities)

    @property
    def plus_means(self) -> tuple[float, ...]:
        return tuple(1.0 / r for r in self.plus_densities)

    def scaled_densities(self, c: float) -> "SystemParams":
        return type(self)(
            self.minus_velocities,
            tuple(c * r for r in self.minus_densities),
            self.plus_velocities,
            tuple(c * r for r in self.plus_densities),
            self.minus_spacing,
            self.plus_spacing,
        )


class ValidatedParams(SystemParams):
    """SystemParams whose invariants have been checked by :func:`validate_params`."""


def validate_params(raw: SystemParams) -> ValidatedParams:
    """Check ordering, signs, densities and closing speeds.

    A zero velocity is admitted only for the slowest type of each side.
    """
    if isinstance(raw, ValidatedParams):
        return raw
    vm, vp = raw.minus_velocities, raw.plus_velocities
    rm, rp = raw.minus_densities, raw.plus_densities
    if not vm or not vp:
        raise ParamsError("both phases need at least one type")
    if len(rm) != len(vm) or len(rp) != len(vp):
        raise ParamsError("velocity and density lists differ in length")
    if len(raw.minus_spacing) != len(vm) or len(raw.plus_spacing) != len(vp):
        raise ParamsError("spacing list length does not match the number of types")
    for v in vm + vp:
        if not math.isfinite(v):
            raise ParamsError(f"non-finite velocity {v}")
    if any(v < 0 for v in vm):
        raise SignViolation("minus velocities must be >= 0")
    if any(v > 0 for v in vp):
        raise SignViolation("plus velocities must be <= 0")
    if any(a <= b for a, b in zip(vm, vm[1:])):
        raise OrderingViolation(f"minus velocities must be strictly decreasing: {vm}")
    if any(a >= b for a, b in zip(vp, vp[1:])):
        raise OrderingViolation(f"plus velocities must be strictly increasing: {vp}")
    for r in rm + rp:
        if not (r > 0 and math.isfinite(r)):
            raise DensityViolation(f"densities must be positive and finite, got {r}")
    # slowest pair decides: every other closing speed is larger
    if vm[-1] - vp[-1] <= 0:
        raise ClosingSpeedViolation("a minus and a plus type both stand still")
    return ValidatedParams(vm, rm, vp, rp, raw.minus_spacing, raw.plus_spacing)


def is_near(value: float, velocity: float, tol: float = VELOCITY_TOL) -> bool:
    return abs(value - velocity) <= tol * max(1.0, abs(velocity))


@dataclass(frozen=True)
class Violation:
    minus_set: tuple[int, ...]
    plus_set: tuple[int, ...]
    velocity: float
    gap: float

    def to_dict(self) -> dict:
        return {
            "minus_set": [i + 1 for i in self.minus_set],
            "plus_set": [k + 1 for k in self.plus_set],
            "velocity": self.velocity,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class GenericityReport:
    checked_pairs: int
    mode: str
    violations: tuple[Violation, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "checked_pairs": self.checked_pairs,
            "mode": self.mode,
            "violations": [v.to_dict() for v in self.violations],
        }


def _subset_sums(values: np.ndarray) -> np.ndarray:
    # entry m is the sum over the bits set in m
    out = np.zeros(1 << len(values))
    for j, x in enumerate(values):
        step = 1 << j
        out[step : 2 * step] = out[:step] + x
    return out


def _members(mask: int) -> tuple[int, ...]:
    return tuple(j for j in range(mask.bit_length()) if mask >> j & 1)


def genericity_check(
    p: SystemParams, budget: int = DEFAULT_PAIR_BUDGET, tol: float = VELOCITY_TOL
) -> GenericityReport:
    """Report group velocities that coincide with an individual velocity.

    All nonempty (J-, J+) pairs are checked when there are at most ``budget``
    of them; otherwise only the prefix groups ({1..l}, {1..k}).
    """
    L, K = p.L, p.K
    rm = np.asarray(p.minus_densities)
    rp = np.asarray(p.plus_densities)
    vm = np.asarray(p.minus_velocities)
    vp = np.asarray(p.plus_velocities)
    velocities = np.concatenate([vm, vp])

    n_pairs = ((1 << L) - 1) * ((1 << K) - 1)
    if n_pairs <= budget:
        mode = "exhaustive"
        m_masks = np.arange(1, 1 << L)
        p_masks = np.arange(1, 1 << K)
        m_num, m_den = _subset_sums(vm * rm)[1:], _subset_sums(rm)[1:]
        p_num, p_den = _subset_sums(vp * rp)[1:], _subset_sums(rp)[1:]
    else:
        mode = "prefix-only"
        n_pairs = L * K
        m_masks = (1 << np.arange(1, L + 1)) - 1
        p_masks = (1 << np.arange(1, K + 1)) - 1
        m_num, m_den = np.cumsum(vm * rm), np.cumsum(rm)
        p_num, p_den = np.cumsum(vp * rp), np.cumsum(rp)

    V = (m_num[:, None] + p_num[None, :]) / (m_den[:, None] + p_den[None, :])
    violations = []
    for v in velocities:
        gap = V - v
        hits = np.argwhere(np.abs(gap) <= tol * max(1.0, abs(v)))
        for a, b in hits:
            violations.append(
                Violation(_members(int(m_masks[a])), _members(int(p_masks[b])), float(v), float(gap[a, b]))
            )
    violations.sort(key=lambda w: (w.minus_set, w.plus_set, w.velocity))
    return GenericityReport(n_pairs, mode, tuple(violations))


def all_groups(L: int, K: int):
    """Yield every (J-, J+) pair of nonempty index tuples."""
    for a, b in product(range(1, 1 << L), range(1, 1 << K)):
        yield _members(a), _members(b)
