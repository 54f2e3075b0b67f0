import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qclassify.prep import (
    PcaModel,
    ScalerParams,
    apply_scaler,
    fit_pca,
    fit_scaler,
    pca_inverse,
    pca_transform,
    stratified_split,
    subsample,
)

X_AXIS = np.array([[-1.0, 0.0], [1.0, 0.0], [-2.0, 0.0], [2.0, 0.0]])


def labelled(n_pos, n_neg, d=3, seed=0):
    rng = np.random.default_rng(seed)
    y = np.array([1] * n_pos + [-1] * n_neg)
    return rng.normal(size=(n_pos + n_neg, d)), y


class TestScaler:
    def test_two_values(self):
        p = fit_scaler([[1.0], [3.0]])
        assert p.means[0] == 2.0 and p.stddevs[0] == 1.0
        assert apply_scaler([[1.0], [3.0]], p)[:, 0].tolist() == [-1.0, 1.0]

    def test_constant_column(self):
        X = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        assert np.array_equal(apply_scaler(X, fit_scaler(X))[:, 0], [0, 0, 0])

    def test_refit_is_standard(self, rng):
        Z = apply_scaler(X := rng.normal(3, 5, size=(50, 4)), fit_scaler(X))
        p = fit_scaler(Z)
        assert np.all(np.abs(p.means) < 1e-12) and np.all(np.abs(p.stddevs - 1) < 1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_scaler(np.empty((0, 2)))
        with pytest.raises(ValueError):
            apply_scaler([[1.0, 2.0, 3.0]], fit_scaler([[1.0, 2.0]]))

    def test_dict_round_trip(self, rng):
        p = fit_scaler(rng.normal(size=(10, 3)))
        q = ScalerParams.from_dict(p.to_dict())
        assert np.array_equal(p.means, q.means) and np.array_equal(p.stddevs, q.stddevs)


class TestPca:
    def test_x_axis_example(self):
        m = fit_pca(X_AXIS, 2)
        assert np.allclose(m.components[0], [1, 0], atol=1e-15)
        assert abs(m.explained_variance[0] - 10 / 3) < 1e-12
        assert abs(m.explained_variance[1]) < 1e-12
        assert np.allclose(pca_transform(X_AXIS, fit_pca(X_AXIS, 1))[:, 0], [-1, 1, -2, 2], atol=1e-12)

    def test_sign_rule(self):
        m = fit_pca(-X_AXIS[:, ::-1], 1)
        assert np.allclose(m.components[0], [0, 1], atol=1e-15)

    def test_center_maps_to_zero(self, rng):
        X = rng.normal(size=(20, 4))
        m = fit_pca(X, 3)
        assert np.allclose(pca_transform(m.center[None, :], m), 0, atol=1e-15)

    def test_full_rank_round_trip(self, rng):
        X = rng.normal(size=(30, 5)) @ rng.normal(size=(5, 5))
        m = fit_pca(X, 5)
        Z = pca_transform(X, m)
        assert np.max(np.abs(pca_inverse(Z, m) - X)) < 1e-10
        dx = np.linalg.norm(X[:, None] - X[None], axis=2)
        dz = np.linalg.norm(Z[:, None] - Z[None], axis=2)
        assert np.max(np.abs(dx - dz)) < 1e-10

    def test_isotropic(self):
        X = np.random.default_rng(7).normal(size=(10_000, 2))
        ev = fit_pca(X, 2).explained_variance
        assert ev[1] / ev[0] > 0.8

    def test_rank_deficient(self, rng):
        X = rng.normal(size=(10, 2)) @ rng.normal(size=(2, 4))
        m = fit_pca(X, 4)
        assert np.all(m.explained_variance[2:] > -1e-12) and np.all(m.explained_variance[2:] < 1e-10)

    def test_errors(self, rng):
        X = rng.normal(size=(5, 3))
        for k in (0, 4):
            with pytest.raises(ValueError):
                fit_pca(X, k)
        with pytest.raises(ValueError):
            fit_pca(X[:1], 1)
        with pytest.raises(ValueError):
            pca_transform(rng.normal(size=(2, 2)), fit_pca(X, 2))

    def test_dict_round_trip(self, rng):
        m = fit_pca(rng.normal(size=(10, 3)), 2)
        q = PcaModel.from_dict(m.to_dict())
        assert np.array_equal(m.components, q.components) and np.array_equal(m.center, q.center)


class TestSplit:
    def test_rounding_example(self):
        X, y = labelled(73, 27)
        s = stratified_split(X, y, 0.25, 0)
        assert (np.sum(s.y_test == 1), np.sum(s.y_test == -1)) == (18, 7)
        assert s.X_train.shape[0] == 75

    def test_balanced_half(self):
        X, y = labelled(4, 4)
        s = stratified_split(X, y, 0.5, 3)
        assert (np.sum(s.y_test == 1), np.sum(s.y_test == -1)) == (2, 2)

    def test_partition_and_determinism(self):
        X, y = labelled(30, 11)
        a, b = stratified_split(X, y, 0.3, 9), stratified_split(X, y, 0.3, 9)
        assert np.array_equal(a.test_idx, b.test_idx)
        both = np.concatenate([a.train_idx, a.test_idx])
        assert sorted(both.tolist()) == list(range(41))
        assert np.array_equal(a.X_test, X[a.test_idx]) and np.array_equal(a.y_train, y[a.train_idx])

    def test_clamped_to_keep_both_sides(self):
        X, y = labelled(3, 2)
        s = stratified_split(X, y, 0.1, 0)
        assert set(s.y_test.tolist()) == {1, -1} and set(s.y_train.tolist()) == {1, -1}

    def test_errors(self):
        X, y = labelled(5, 1)
        with pytest.raises(ValueError):
            stratified_split(X, y, 0.25, 0)
        X, y = labelled(5, 5)
        for f in (0.0, 1.0):
            with pytest.raises(ValueError):
                stratified_split(X, y, f, 0)


class TestSubsample:
    def test_stratified_counts(self):
        X, y = labelled(73, 27)
        _, ys = subsample(X, y, 20, 1)
        assert (np.sum(ys == 1), np.sum(ys == -1)) == (15, 5)

    def test_full_size_is_permutation(self):
        X, y = labelled(6, 4)
        Xs, ys = subsample(X, y, 10, 2)
        assert sorted(map(tuple, Xs)) == sorted(map(tuple, X))
        assert sorted(ys.tolist()) == sorted(y.tolist())

    def test_deterministic(self):
        X, y = labelled(40, 20)
        a, b = subsample(X, y, 17, 5), subsample(X, y, 17, 5)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        assert not np.array_equal(a[0], subsample(X, y, 17, 6)[0])

    def test_unstratified(self):
        X, y = labelled(40, 20)
        Xs, ys = subsample(X, y, 30, 5, stratified=False)
        assert Xs.shape == (30, 3)

    def test_too_large(self):
        X, y = labelled(3, 3)
        with pytest.raises(ValueError):
            subsample(X, y, 7, 0)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)), elements=finite))
def test_scaler_output_standard(X):
    Z = apply_scaler(X, p := fit_scaler(X))
    for j in range(X.shape[1]):
        if p.stddevs[j] < 1e-12:
            assert np.all(Z[:, j] == 0)
        elif p.stddevs[j] > 1e-6 * max(1.0, np.max(np.abs(X[:, j]))):
            assert abs(Z[:, j].mean()) < 1e-10 and abs(Z[:, j].std() - 1) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 40), st.integers(1, 6))
def test_pca_properties(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * rng.uniform(0.1, 5, size=d)
    k = min(n, d)
    m = fit_pca(X, k)
    assert np.max(np.abs(m.components @ m.components.T - np.eye(k))) < 1e-10
    assert np.all(np.diff(m.explained_variance) <= 1e-12)
    if k == d:
        assert abs(m.explained_variance.sum() - np.trace(np.cov(X.T, ddof=1).reshape(d, d))) < 1e-8
        Xc = X - m.center
        assert np.max(np.abs(pca_transform(X, m) @ m.components - Xc)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(2, 40), st.floats(0.05, 0.95), st.integers(0, 10 ** 6))
def test_split_counts(n_pos, n_neg, frac, seed):
    X, y = labelled(n_pos, n_neg, 2)
    s = stratified_split(X, y, frac, seed)
    for label, count in ((1, n_pos), (-1, n_neg)):
        want = min(max(int(np.floor(count * frac + 0.5)), 1), count - 1)
        assert np.sum(s.y_test == label) == want
    assert np.intersect1d(s.train_idx, s.test_idx).size == 0
