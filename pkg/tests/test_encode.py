import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclassify.encode import FeatureMapSpec, build_feature_map, encode, encode_batch
from qclassify.qstate import apply_circuit, new_zero_state, probabilities

from oracles import cx_matrix, feature_map_state, ry_matrix


def describe(circuit):
    return [(g.kind, g.target, g.control, None if g.angle is None else round(g.angle, 12)) for g in circuit.gates]


class TestSpec:
    @pytest.mark.parametrize("kwargs", [dict(n_features=0), dict(n_features=21),
                                        dict(n_features=2, repetitions=0), dict(n_features=2, repetitions=5)])
    def test_bounds(self, kwargs):
        with pytest.raises(ValueError):
            FeatureMapSpec(**kwargs)

    def test_dict_round_trip(self):
        spec = FeatureMapSpec(3, False, 2)
        assert FeatureMapSpec.from_dict(spec.to_dict()) == spec


class TestBuild:
    def test_single_rotation(self):
        circ = build_feature_map([0.5], FeatureMapSpec(1, False, 1))
        assert describe(circ) == [("RY", 0, None, 0.5)]

    def test_entangled_pair(self):
        circ = build_feature_map([0.1, 0.2], FeatureMapSpec(2, True, 1))
        assert describe(circ) == [("RY", 0, None, 0.1), ("RY", 1, None, 0.2), ("CX", 1, 0, None)]

    def test_repetitions_add_angles(self, backend):
        spec = FeatureMapSpec(1, False, 2)
        assert describe(build_feature_map([0.1], spec)) == [("RY", 0, None, 0.1), ("RY", 0, None, 0.1)]
        assert np.allclose(encode([0.1], spec).amplitudes, ry_matrix(0.2) @ [1, 0], atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            build_feature_map([0.1, 0.2], FeatureMapSpec(3))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            encode([math.nan], FeatureMapSpec(1))


class TestEncode:
    def test_zero_input(self, backend):
        for n in (1, 3):
            s = encode(np.zeros(n), FeatureMapSpec(n, False))
            assert np.array_equal(s.amplitudes, new_zero_state(n).amplitudes)

    def test_pi_flips(self, backend):
        assert np.allclose(encode([math.pi], FeatureMapSpec(1)).amplitudes, [0, 1], atol=1e-15)

    def test_entangled_against_dense(self, backend):
        x = [math.pi / 2, math.pi / 2]
        s = encode(x, FeatureMapSpec(2, True))
        U = cx_matrix(0, 1, 2) @ np.kron(ry_matrix(x[1]), ry_matrix(x[0]))
        want = U @ np.array([1, 0, 0, 0])
        assert np.allclose(s.amplitudes, want, atol=1e-15)
        assert np.allclose(probabilities(s), [0.25] * 4, atol=1e-15)

    @pytest.mark.parametrize("n,ent,reps", [(1, True, 1), (3, True, 2), (4, False, 3), (5, True, 4)])
    def test_matches_oracle(self, backend, rng, n, ent, reps):
        for _ in range(5):
            x = rng.uniform(-3, 3, n)
            assert np.allclose(encode(x, FeatureMapSpec(n, ent, reps)).amplitudes,
                               feature_map_state(x, ent, reps), atol=1e-12)

    def test_circuit_and_encode_agree(self, backend, rng):
        spec = FeatureMapSpec(4, True, 2)
        x = rng.normal(size=4)
        s = apply_circuit(new_zero_state(4), build_feature_map(x, spec))
        assert np.allclose(s.amplitudes, encode(x, spec).amplitudes, atol=1e-14)

    def test_batch_matches_single(self, backend, rng):
        spec = FeatureMapSpec(3, True, 2)
        X = rng.normal(size=(6, 3))
        batch = encode_batch(X, spec)
        real = encode_batch(X, spec, np.float64)
        for row, r, x in zip(batch, real, X):
            assert np.array_equal(row, encode(x, spec).amplitudes)
            assert np.array_equal(r, row.real)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=5))
def test_product_state_factorises(x):
    n = len(x)
    p = probabilities(encode(x, FeatureMapSpec(n, entangling=False)))
    want = np.ones(1)
    for q in reversed(range(n)):
        want = np.kron(want, [math.cos(x[q] / 2) ** 2, math.sin(x[q] / 2) ** 2])
    assert np.allclose(p, want, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5), st.data())
def test_period_four_pi(x, data):
    n = len(x)
    i = data.draw(st.integers(0, n - 1))
    spec = FeatureMapSpec(n, entangling=data.draw(st.booleans()))
    shifted = list(x)
    shifted[i] += 4 * math.pi
    a, b = encode(x, spec), encode(shifted, spec)
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-10)
    assert abs(a.norm() - 1) < 1e-12
    assert np.array_equal(a.amplitudes, encode(x, spec).amplitudes)
