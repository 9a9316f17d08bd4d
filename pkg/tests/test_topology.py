import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from formsim.errors import IsolatedFollower, MissingReference
from formsim.scenarios import SQUARE_BIASES, WIDE_BIASES
from formsim.topology import (
    BiasSchedule,
    CircleReference,
    FeedforwardFilter,
    FormationSpec,
    PolylineReference,
    active_biases,
    formation_error,
    generate_setpoint,
    inter_distance,
    neighbor_graph,
    neighbor_set,
    reference,
)

from . import oracles

SQUARE = FormationSpec(4, {0}, SQUARE_BIASES, 3.0)


def random_case(rng, n=None):
    """Random formation with a connected sensing graph."""
    n = int(rng.integers(2, 9)) if n is None else n
    while True:
        pos = rng.uniform(-10, 10, size=(n, 2))
        radius = float(rng.uniform(3, 15))
        if oracles.connected(pos.tolist(), radius):
            break
    biases = rng.uniform(-5, 5, size=(n, 2))
    k = int(rng.integers(1, n + 1))
    leaders = set(rng.choice(n, size=k, replace=False).tolist())
    r = rng.uniform(-5, 5, size=2)
    return FormationSpec(n, leaders, biases, radius), pos, r


def test_square_neighbor_sets():
    pos = SQUARE_BIASES
    assert neighbor_set(pos, 2, 3.0) == {1, 3}
    assert neighbor_set(pos, 0, 3.0) == {1, 3}
    g = neighbor_graph(pos, 0.0)
    assert all(len(g[i]) == 0 for i in range(4))


def test_neighbor_radius_inclusive():
    pos = np.array([[0.0, 0.0], [3.0, 0.0]])
    assert neighbor_set(pos, 0, 3.0) == {1}
    assert neighbor_set(pos, 0, math.nextafter(3.0, 0.0)) == set()


def test_inter_distance_example_and_antisymmetry():
    np.testing.assert_array_equal(inter_distance(SQUARE, 2, 1), [2.0, -2.0])
    for i in range(4):
        for j in range(4):
            np.testing.assert_array_equal(inter_distance(SQUARE, i, j), -inter_distance(SQUARE, j, i))


def test_follower_example():
    g = neighbor_graph(SQUARE_BIASES, 3.0)
    sp = generate_setpoint(2, SQUARE_BIASES, g, SQUARE)
    np.testing.assert_allclose(sp.position, [0.0, -2.0], atol=1e-15)
    assert sp.altitude == 5.0


def test_leader_example():
    # at t=0 the leader's slot has moved to r + d_10 = (0, 5)
    g = neighbor_graph(SQUARE_BIASES, 3.0)
    r0, _ = CircleReference()(0.0)
    sp = generate_setpoint(0, SQUARE_BIASES, g, SQUARE, r0)
    np.testing.assert_allclose(sp.position, [0.0, 3.0], atol=1e-15)


def test_isolated_follower_raises():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [50.0, 0.0], [2.0, 0.0]])
    g = neighbor_graph(pos, 3.0)
    with pytest.raises(IsolatedFollower) as info:
        generate_setpoint(2, pos, g, SQUARE)
    assert info.value.agent == 2
    assert "follower 3" in str(info.value)


def test_missing_reference():
    g = neighbor_graph(SQUARE_BIASES, 3.0)
    with pytest.raises(MissingReference):
        generate_setpoint(0, SQUARE_BIASES, g, SQUARE)


def test_isolated_leader_tracks_reference():
    pos = np.array([[0.0, 0.0], [30.0, 0.0], [40.0, 0.0], [50.0, 0.0]])
    g = neighbor_graph(pos, 3.0)
    sp = generate_setpoint(0, pos, g, SQUARE, np.array([1.0, 1.0]))
    np.testing.assert_allclose(sp.position, [1.0, 3.0])


def test_oracle_equivalence_1000(rng):
    for _ in range(1000):
        spec, pos, r = random_case(rng)
        g = neighbor_graph(pos, spec.sensing_radius)
        for i in range(spec.n):
            got = generate_setpoint(i, pos, g, spec, r if spec.is_leader(i) else None).position
            want = oracles.setpoint_brute_force(
                i, pos.tolist(), spec.biases.tolist(), spec.leaders, spec.sensing_radius, r
            )
            assert abs(got[0] - want[0]) <= 1e-12 and abs(got[1] - want[1]) <= 1e-12


def test_fixed_point(rng):
    for _ in range(200):
        spec, _, r = random_case(rng)
        pos = r + spec.biases
        g = neighbor_graph(pos, 1e3)
        for i in range(spec.n):
            got = generate_setpoint(i, pos, g, spec, r).position
            np.testing.assert_allclose(got, r + spec.biases[i], rtol=0, atol=1e-12)


def test_translation_equivariance(rng):
    for _ in range(200):
        spec, pos, r = random_case(rng)
        c = rng.uniform(-20, 20, size=2)
        g = neighbor_graph(pos, spec.sensing_radius)
        g_shift = neighbor_graph(pos + c, spec.sensing_radius)
        for i in range(spec.n):
            a = generate_setpoint(i, pos, g, spec, r).position
            b = generate_setpoint(i, pos + c, g_shift, spec, r + c).position
            np.testing.assert_allclose(b, a + c, rtol=0, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    pos=arrays(float, (6, 2), elements=st.floats(-20, 20)),
    d=st.floats(0.0, 30.0),
)
def test_neighbor_symmetry(pos, d):
    g = neighbor_graph(pos, d)
    for i in range(6):
        assert i not in g[i]
        for j in g[i]:
            assert i in g[j]


def test_reference_initial_values():
    r, v = reference(CircleReference(), 0.0)
    np.testing.assert_allclose(r, [0.0, 3.0], atol=1e-15)
    np.testing.assert_allclose(v, [0.3, 0.0], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(0.0, 500.0))
def test_reference_period_and_norm(t):
    ref = CircleReference(3.0, 0.1)
    r, _ = ref(t)
    r2, _ = ref(t + 2 * math.pi / 0.1)
    np.testing.assert_allclose(r2, r, atol=1e-9)
    assert np.linalg.norm(r) == pytest.approx(3.0, abs=1e-12)


def test_reference_negative_time():
    with pytest.raises(ValueError):
        reference(CircleReference(), -0.01)


def test_polyline_reference():
    ref = PolylineReference([0.0, 10.0], [[0.0, 0.0], [10.0, 5.0]])
    r, v = ref(4.0)
    np.testing.assert_allclose(r, [4.0, 2.0])
    np.testing.assert_allclose(v, [1.0, 0.5])
    r, v = ref(20.0)
    np.testing.assert_allclose(r, [10.0, 5.0])
    np.testing.assert_allclose(v, [0.0, 0.0])


def test_formation_error_examples():
    r = np.array([0.0, 3.0])
    err, emax = formation_error(SQUARE_BIASES, r, SQUARE)
    assert err[0] == pytest.approx(3.0)
    assert emax == pytest.approx(3.0)
    err, _ = formation_error(r + SQUARE_BIASES + [1.0, 0.0], r, SQUARE)
    np.testing.assert_allclose(err, 1.0)


def test_formation_error_relabeling(rng):
    for _ in range(50):
        spec, pos, r = random_case(rng)
        perm = rng.permutation(spec.n)
        relabeled = FormationSpec(spec.n, {0}, spec.biases[perm], spec.sensing_radius)
        _, a = formation_error(pos, r, spec)
        _, b = formation_error(pos[perm], r, relabeled)
        assert a == pytest.approx(b, abs=1e-12)


def test_active_biases_switch():
    sched = BiasSchedule([0.0, 60.0], [SQUARE_BIASES, WIDE_BIASES])
    np.testing.assert_array_equal(active_biases(sched, 59.99), SQUARE_BIASES)
    np.testing.assert_array_equal(active_biases(sched, 60.0), WIDE_BIASES)
    np.testing.assert_array_equal(active_biases(sched, 0.0), SQUARE_BIASES)


def test_bias_schedule_validation():
    with pytest.raises(ValueError):
        BiasSchedule([1.0], [SQUARE_BIASES])
    with pytest.raises(ValueError):
        BiasSchedule([0.0, 0.0], [SQUARE_BIASES, WIDE_BIASES])


def test_formation_spec_validation():
    with pytest.raises(ValueError):
        FormationSpec(4, set(), SQUARE_BIASES, 3.0)
    with pytest.raises(ValueError):
        FormationSpec(4, {4}, SQUARE_BIASES, 3.0)
    with pytest.raises(ValueError):
        FormationSpec(4, {0}, SQUARE_BIASES[:3], 3.0)


def test_feedforward_filter():
    f = FeedforwardFilter(0.1)
    np.testing.assert_array_equal(f.update([1.0, 1.0]), [0.0, 0.0])
    np.testing.assert_allclose(f.update([2.0, 1.0]), [1.0, 0.0])
    np.testing.assert_allclose(f.update([3.0, 1.0]), [1.9, 0.0])
