import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ergodic_1x1, minus_lag, random_generic, plus_lag
from phaseboundary.analytic import Regime, boundary_velocity
from phaseboundary.errors import FaceIsErgodic, NotErgodicFace, NotErgodicProcess
from phaseboundary.faces import (
    Face,
    appropriate_faces,
    balance_matrix,
    canonicalize_face,
    collision_rates,
    drift_as_quadratic_form,
    final_face,
    induced_vector,
    is_ergodic_face,
    lyapunov_drift,
    lyapunov_weights,
    minimal_outgoing_face,
    outgoing_indices,
    quadratic_form,
    quadratic_form_closed,
)

seeds = st.integers(0, 2**32 - 1)


def test_canonicalize_examples():
    corner = canonicalize_face([(0, 0), (1, 1)])
    assert corner == Face((0, 1), (0, 1)) and corner.is_origin(2, 2)
    product_face = Face((0,), (0, 1))
    assert canonicalize_face(product_face.zero_pairs()) == product_face
    assert canonicalize_face([]) == Face.interior()


def test_face_bookkeeping():
    f = Face((0,), (1,))
    assert f.positive_pairs(1, 2) == {(0, 0)}
    assert f.bitmask(1, 2) == 1
    assert Face.interior().bitmask(1, 2) == 3
    assert f.to_dict(1, 2) == {"zero_minus": [1], "zero_plus": [2], "positive": [[1, 1]]}
    assert Face.interior().contains(f) and not f.contains(Face.interior())
    assert Face((0,), ()) == Face.interior()
    faces = list(appropriate_faces(2, 3))
    assert len(faces) == 1 + 3 * 7 and faces[0].is_interior


def test_ergodicity_examples():
    p = plus_lag()
    assert is_ergodic_face(p, Face((0,), (0,)))
    assert not is_ergodic_face(p, Face((0,), (0, 1)))
    assert is_ergodic_face(ergodic_1x1(), Face.origin(1, 1))
    assert is_ergodic_face(p, Face.interior())


def test_induced_vector_examples():
    p = plus_lag()
    assert induced_vector(p, Face((0,), (0,))).tolist() == [[0.0, 0.5]]
    assert induced_vector(p, Face((0,), (1,))).tolist() == [[-1.75, 0.0]]
    assert induced_vector(p, Face.interior()).tolist() == [[-2.0, -0.5]]
    with pytest.raises(NotErgodicFace):
        induced_vector(p, Face((0,), (0, 1)))


def test_minimal_outgoing_example():
    p = plus_lag()
    corner = Face((0,), (0, 1))
    assert outgoing_indices(p, corner) == (1, 1)
    out = minimal_outgoing_face(p, corner)
    assert out == Face((0,), (0,))
    assert induced_vector(p, out)[0, 1] == 0.5
    with pytest.raises(FaceIsErgodic):
        minimal_outgoing_face(p, Face((0,), (0,)))
    with pytest.raises(FaceIsErgodic):
        minimal_outgoing_face(p, Face.interior())


def test_final_face_examples():
    assert final_face(plus_lag()).positive_pairs(1, 2) == {(0, 1)}
    assert final_face(ergodic_1x1()).is_origin(1, 1)
    assert final_face(minus_lag()).positive_pairs(2, 1) == {(1, 0)}


def test_lyapunov_examples():
    p = ergodic_1x1()
    sol = collision_rates(p)
    assert sol.pi_minus.tolist() == [2.25] and sol.pi_plus.tolist() == [2.25]
    assert lyapunov_weights(p).tolist() == [[2.25]]
    assert lyapunov_drift(p, Face.interior()) == pytest.approx(-6.75, abs=1e-12)
    assert drift_as_quadratic_form(p, Face.interior()) == pytest.approx(-6.75, abs=1e-12)
    assert quadratic_form(p, np.array([1.0])) == pytest.approx(4 / 3, abs=1e-15)
    assert quadratic_form(p, np.zeros(1)) == 0.0
    with pytest.raises(ValueError):
        lyapunov_drift(p, Face.origin(1, 1))
    with pytest.raises(NotErgodicProcess):
        lyapunov_weights(plus_lag())


def test_balance_matrix_entries():
    p = random_generic(np.random.default_rng(4), 3, 3)
    A = balance_matrix(p)
    for a, (i, k) in enumerate(np.ndindex(p.L, p.K)):
        for b, (n, m) in enumerate(np.ndindex(p.L, p.K)):
            expected = (p.minus_means[i] if n == i else 0.0) + (p.plus_means[k] if m == k else 0.0)
            assert A[a, b] == expected


@settings(max_examples=150, deadline=None)
@given(seed=seeds)
def test_induced_vectors_satisfy_conservation_and_genericity(seed):
    p = random_generic(np.random.default_rng(seed))
    for f in appropriate_faces(p.L, p.K):
        if not is_ergodic_face(p, f) or f.is_origin(p.L, p.K):
            continue
        v = induced_vector(p, f)
        resid = v[0, 0] + v - v[:1, :] - v[:, :1]
        assert np.max(np.abs(resid)) <= 1e-12
        assert np.all(v[~f.zero_mask(p.L, p.K)] != 0)
        assert np.all(v[f.zero_mask(p.L, p.K)] == 0)


@settings(max_examples=150, deadline=None)
@given(seed=seeds)
def test_collision_rate_identity(seed):
    p = random_generic(np.random.default_rng(seed))
    for f in [Face.interior()] + [g for g in appropriate_faces(p.L, p.K) if not g.is_interior][:10]:
        sol = collision_rates(p, f)
        g = f.group if not f.is_interior else None
        minus = g.minus if g else range(p.L)
        plus = g.plus if g else range(p.K)
        for i in minus:
            assert abs(p.minus_velocities[i] - sol.r_minus[i] - sol.V) <= 1e-12
        for k in plus:
            assert abs(p.plus_velocities[k] + sol.r_plus[k] - sol.V) <= 1e-12
        flux_m = np.dot(p.minus_densities, sol.r_minus)
        flux_p = np.dot(p.plus_densities, sol.r_plus)
        assert abs(flux_m - flux_p) <= 1e-12 * max(1.0, abs(flux_m))


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_quadratic_form_nonnegative_and_closed_form(seed):
    rng = np.random.default_rng(seed)
    p = random_generic(rng)
    y = rng.normal(size=(200, p.L * p.K))
    q = quadratic_form(p, y)
    assert np.all(q >= -1e-12)
    assert np.allclose(q, quadratic_form_closed(p, y), rtol=1e-10, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_drift_negative_and_matches_quadratic_form(seed):
    p = random_generic(np.random.default_rng(seed), regime=Regime.ERGODIC)
    for f in appropriate_faces(p.L, p.K):
        if f.is_origin(p.L, p.K) or not is_ergodic_face(p, f):
            continue
        d = lyapunov_drift(p, f)
        assert d < -1e-12
        assert d == pytest.approx(drift_as_quadratic_form(p, f), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_final_face_velocity_positive(seed):
    p = random_generic(np.random.default_rng(seed))
    f = final_face(p)
    if boundary_velocity(p).regime is Regime.ERGODIC:
        assert f.is_origin(p.L, p.K)
    else:
        assert np.all(induced_vector(p, f)[~f.zero_mask(p.L, p.K)] > 0)
