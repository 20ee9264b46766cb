import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ergodic_1x1, minus_lag, random_generic, plus_lag
from phaseboundary.analytic import (
    Group,
    Regime,
    balance_excess,
    balance_root,
    boundary_velocity,
    build_chain,
    critical_indices,
    group_velocity,
    prefix_profiles,
)
from phaseboundary.errors import DegenerateParameters, EmptyGroup, ToleranceNotReached
from phaseboundary.params import SystemParams, validate_params

seeds = st.integers(0, 2**32 - 1)


def piecewise_root(p: SystemParams) -> float:
    """Solve the flux balance exactly on each interval between sorted velocities."""
    vm, rm = np.array(p.minus_velocities), np.array(p.minus_densities)
    vp, rp = np.array(p.plus_velocities), np.array(p.plus_densities)
    knots = np.unique(np.concatenate([vm, vp]))
    for lo, hi in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (lo + hi)
        am, ap = vm > mid, vp < mid
        # sum rm (vm - w) over am == sum rp (w - vp) over ap, linear in w
        w = (np.dot(rm[am], vm[am]) + np.dot(rp[ap], vp[ap])) / (rm[am].sum() + rp[ap].sum())
        if lo - 1e-12 <= w <= hi + 1e-12:
            return float(w)
    raise AssertionError("no root found")


def test_group_velocity_examples():
    assert group_velocity(ergodic_1x1(), Group.full(ergodic_1x1())) == -0.25
    sym = SystemParams.from_lists([1], [1], [-1], [1])
    assert group_velocity(sym, Group.full(sym)) == 0.0
    p = plus_lag()
    assert group_velocity(p, Group.prefix(1, 1)) == -1.0
    assert group_velocity(p, Group.full(p)) == pytest.approx(-5 / 6, abs=1e-15)


def test_group_velocity_needs_both_sides():
    with pytest.raises(EmptyGroup):
        group_velocity(plus_lag(), Group((), (0,)))


def test_group_normalizes_and_prints_one_based():
    g = Group((1, 0, 1), (0,))
    assert g.minus == (0, 1)
    assert str(g) == "(2,1|1)"


def test_critical_indices_examples():
    assert critical_indices(plus_lag()) == (1, 1)
    assert critical_indices(ergodic_1x1()) == (1, 1)
    assert critical_indices(minus_lag()) == (1, 1)


def test_boundary_velocity_plus_lag():
    rep = boundary_velocity(plus_lag())
    assert rep.regime is Regime.TRANSIENT_PLUS_LAG
    assert rep.W == -1.0
    assert rep.V == pytest.approx(-5 / 6, abs=1e-15)
    assert rep.W < rep.V < 0


def test_boundary_velocity_ergodic():
    rep = boundary_velocity(ergodic_1x1())
    assert rep.regime is Regime.ERGODIC and rep.W == rep.V == -0.25


def test_boundary_velocity_minus_lag():
    rep = boundary_velocity(minus_lag())
    assert rep.regime is Regime.TRANSIENT_MINUS_LAG
    assert rep.W == pytest.approx(0.6, abs=1e-15)
    assert rep.V == pytest.approx(0.575, abs=1e-15)


def test_degenerate_comparison_raises():
    # V(I-, {1}) = (1 - 3)/4 = -0.5 equals v_2^+
    p = SystemParams.from_lists([1], [1], [-1, -0.5], [3, 1])
    with pytest.raises(DegenerateParameters):
        boundary_velocity(p)


@pytest.mark.parametrize("factory, expected", [(plus_lag, -1.0), (ergodic_1x1, -0.25), (minus_lag, 0.6)])
def test_balance_root_examples(factory, expected):
    p = factory()
    assert balance_root(p) == pytest.approx(expected, abs=1e-11)
    assert balance_excess(p, expected) == pytest.approx(0.0, abs=1e-12)


def test_balance_root_symmetric_and_tolerance():
    sym = SystemParams.from_lists([1], [1], [-1], [1])
    assert abs(balance_root(sym)) <= 1e-12
    with pytest.raises(ValueError):
        balance_root(sym, tol=0)


def test_balance_root_iteration_cap(monkeypatch):
    import phaseboundary.analytic as analytic

    monkeypatch.setattr(analytic, "BISECTION_MAX_ITER", 2)
    with pytest.raises(ToleranceNotReached):
        analytic.balance_root(minus_lag())


def test_prefix_profiles_examples():
    prof = prefix_profiles(plus_lag())
    assert prof.f == pytest.approx((-1.0, -5 / 6), abs=1e-15) and prof.unimodal
    assert len(prefix_profiles(ergodic_1x1()).f) == 1
    assert prefix_profiles(minus_lag()).g == pytest.approx((0.6, 0.575), abs=1e-15)


def test_chain_examples():
    for factory in (plus_lag, ergodic_1x1, minus_lag):
        chain = build_chain(factory())
        assert chain.groups == (Group.prefix(1, 1),)
        assert chain.moves == (None,)
    assert build_chain(plus_lag()).velocities == (-1.0,)


def test_chain_zero_velocity_takes_plus_branch():
    # V({1},{1}) = 0 exactly; the plus branch is tried first and v_2^+ < 0 = V
    p = SystemParams.from_lists([1, 0.5], [1, 1], [-1, -0.2], [1, 1])
    chain = build_chain(p)
    assert chain.velocities[0] == 0.0
    assert chain.moves[1] == "plus"


def test_random_chain_shapes_match_regime():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = random_generic(rng)
        rep = boundary_velocity(p)
        assert build_chain(p).final_shape == {
            Regime.ERGODIC: (p.L, p.K),
            Regime.TRANSIENT_PLUS_LAG: (p.L, rep.K1),
            Regime.TRANSIENT_MINUS_LAG: (rep.L1, p.K),
        }[rep.regime]


@settings(max_examples=200, deadline=None)
@given(seed=seeds)
def test_balance_root_matches_exact_piecewise_solution(seed):
    p = random_generic(np.random.default_rng(seed))
    w = piecewise_root(p)
    assert abs(balance_root(p, 1e-10) - w) <= 1e-8
    assert abs(boundary_velocity(p).W - w) <= 1e-8


@settings(max_examples=200, deadline=None)
@given(seed=seeds)
def test_W_is_prefix_group_velocity(seed):
    p = random_generic(np.random.default_rng(seed))
    rep = boundary_velocity(p)
    assert rep.W == group_velocity(p, Group.prefix(rep.L1, rep.K1))


@settings(max_examples=100, deadline=None)
@given(seed=seeds, c=st.floats(0.05, 20.0))
def test_scale_invariance(seed, c):
    p = random_generic(np.random.default_rng(seed))
    q = validate_params(p.scaled_densities(c))
    a, b = boundary_velocity(p), boundary_velocity(q)
    assert (a.regime, a.L1, a.K1) == (b.regime, b.L1, b.K1)
    assert b.W == pytest.approx(a.W, rel=1e-12, abs=1e-12)
    assert b.V == pytest.approx(a.V, rel=1e-12, abs=1e-12)
    assert build_chain(p).groups == build_chain(q).groups


@settings(max_examples=200, deadline=None)
@given(seed=seeds)
def test_chain_grows_one_type_per_step(seed):
    chain = build_chain(random_generic(np.random.default_rng(seed)))
    shapes = [(len(g.minus), len(g.plus)) for g in chain.groups]
    assert shapes[0] == (1, 1)
    for (b0, a0), (b1, a1), move in zip(shapes, shapes[1:], chain.moves[1:]):
        assert b1 >= b0 and a1 >= a0 and (a1 + b1) - (a0 + b0) == 1
        assert move == ("plus" if a1 > a0 else "minus")
    assert all(g == Group.prefix(*s) for g, s in zip(chain.groups, shapes))


@settings(max_examples=200, deadline=None)
@given(seed=seeds)
def test_profile_sign_equivalences(seed):
    p = random_generic(np.random.default_rng(seed))
    prof = prefix_profiles(p)
    f, g = prof.f, prof.g
    for k in range(len(f) - 1):
        assert np.sign(p.plus_velocities[k + 1] - f[k + 1]) == np.sign(f[k + 1] - f[k])
    for l in range(len(g) - 1):
        assert np.sign(p.minus_velocities[l + 1] - g[l + 1]) == np.sign(g[l + 1] - g[l])
    L1, K1 = critical_indices(p)
    assert min(f) == f[K1 - 1] and max(g) == g[L1 - 1]
