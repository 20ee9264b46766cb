"""Shared instance generators for the test suite."""

from __future__ import annotations

import numpy as np

from phaseboundary.analytic import Regime, boundary_velocity, build_chain, prefix_profiles
from phaseboundary.errors import DegenerateParameters
from phaseboundary.params import SystemParams, genericity_check

PLUS_LAG = dict(minus_v=[0.0], minus_rho=[1.0], plus_v=[-2.0, -0.5], plus_rho=[1.0, 1.0])
ERGODIC_1X1 = dict(minus_v=[2.0], minus_rho=[1.0], plus_v=[-1.0], plus_rho=[3.0])
MINUS_LAG = dict(minus_v=[2.0, 0.5], minus_rho=[1.0, 1.0], plus_v=[-0.1], plus_rho=[2.0])


def make(values: dict) -> SystemParams:
    return SystemParams.from_lists(values["minus_v"], values["minus_rho"], values["plus_v"], values["plus_rho"])


def plus_lag() -> SystemParams:
    return make(PLUS_LAG)


def ergodic_1x1() -> SystemParams:
    return make(ERGODIC_1X1)


def minus_lag() -> SystemParams:
    return make(MINUS_LAG)


def draw_params(rng: np.random.Generator, max_L: int = 5, max_K: int = 5) -> SystemParams:
    """One instance with uniform velocities and densities, ordered as required."""
    L = int(rng.integers(1, max_L + 1))
    K = int(rng.integers(1, max_K + 1))
    vm = np.sort(rng.uniform(0.01, 3.0, L))[::-1]
    vp = np.sort(-rng.uniform(0.01, 3.0, K))
    return SystemParams.from_lists(vm, rng.uniform(0.1, 3.0, L), vp, rng.uniform(0.1, 3.0, K))


def is_generic(p: SystemParams) -> bool:
    try:
        boundary_velocity(p)
        build_chain(p)
        prefix_profiles(p)
    except DegenerateParameters:
        return False
    return genericity_check(p).ok


def random_generic(rng: np.random.Generator, max_L: int = 5, max_K: int = 5, regime: Regime | None = None) -> SystemParams:
    """Draw until the instance is generic (and in ``regime`` when given)."""
    while True:
        p = draw_params(rng, max_L, max_K)
        if not is_generic(p):
            continue
        if regime is None or boundary_velocity(p).regime is regime:
            return p


def random_state(rng: np.random.Generator, L: int, K: int) -> np.ndarray:
    """Point on the state manifold: x_ik = a_i + c_k with a, c >= 0, some entries zero."""
    a = rng.uniform(0.0, 3.0, L) * (rng.random(L) > 0.25)
    c = rng.uniform(0.0, 3.0, K) * (rng.random(K) > 0.25)
    x = a[:, None] + c[None, :]
    if not x.any():
        x[:] = 1.0
    return x
