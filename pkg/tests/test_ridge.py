import numpy as np
import pytest
from scipy import sparse

from snpformer.errors import ConfigError
from snpformer.pipeline.data import Dataset
from snpformer.pipeline.ridge import RidgeModel, locus_one_hot, ridge_baseline, ridge_fit

sklearn_linear = pytest.importorskip("sklearn.linear_model")


def test_one_hot_layout():
    X = locus_one_hot(np.array([[0, 2], [1, 1]]), 3).toarray()
    assert X.tolist() == [[1, 0, 0, 0, 0, 1], [0, 1, 0, 0, 1, 0]]


@pytest.mark.parametrize("n,p", [(40, 10), (15, 60)])
def test_matches_sklearn_regression(n, p):
    rng = np.random.default_rng(0)
    X, y, Xt = rng.normal(size=(n, p)), rng.normal(size=n), rng.normal(size=(7, p))
    ref = sklearn_linear.Ridge(alpha=2.5).fit(X, y)
    ours = RidgeModel(2.5).fit(X, y)
    assert np.allclose(ours.predict(Xt), ref.predict(Xt), atol=1e-10)
    W, b = ridge_fit(X, y, 2.5)
    assert np.allclose(W, ref.coef_, atol=1e-10) and np.isclose(b, ref.intercept_)
    sp = RidgeModel(2.5).fit(sparse.csr_matrix(X), y)
    assert np.allclose(sp.predict(sparse.csr_matrix(Xt)), ref.predict(Xt), atol=1e-10)


def test_matches_sklearn_one_vs_rest():
    rng = np.random.default_rng(1)
    X, y, Xt = rng.normal(size=(30, 12)), rng.integers(0, 3, 30), rng.normal(size=(9, 12))
    ref = sklearn_linear.RidgeClassifier(alpha=0.7).fit(X, y)
    ours = RidgeModel(0.7, "classification", 3).fit(X, y)
    assert np.allclose(ours.decision_function(Xt), ref.decision_function(Xt), atol=1e-10)
    assert np.array_equal(ours.predict(Xt), ref.predict(Xt))


def test_perfectly_linear_target():
    rng = np.random.default_rng(2)
    codes = rng.integers(0, 5, size=(400, 30))
    X = locus_one_hot(codes, 5).toarray()
    y = X @ rng.normal(size=X.shape[1])
    ds = Dataset([f"s{i}" for i in range(400)], codes, y, "regression")
    report = ridge_baseline(ds, l2=1e-3, features="letter")
    assert min(report.values) >= 0.99


def test_needs_positive_l2():
    with pytest.raises(ConfigError):
        RidgeModel(0.0)
