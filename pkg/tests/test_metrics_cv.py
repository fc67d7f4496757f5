import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from snpformer.errors import ConfigError, DegenerateInput, ShapeError
from snpformer.pipeline.cv import five_fold_split
from snpformer.pipeline.metrics import accuracy, mean_std, pcc

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_pcc_units():
    x = np.arange(10.0)
    assert pcc(x, x) == pytest.approx(1.0, abs=1e-12)
    assert pcc(-x, x) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(DegenerateInput):
        pcc(np.ones(5), x[:5])
    with pytest.raises(ShapeError):
        pcc(x, x[:3])


@given(arrays(np.float64, 12, elements=finite), arrays(np.float64, 12, elements=finite),
       st.floats(0.1, 100), st.floats(-100, 100))
def test_pcc_affine_invariant_and_matches_scipy(a, b, scale, shift):
    assume(np.ptp(a) > 1e-3 and np.ptp(b) > 1e-3)
    r = pcc(a, b)
    assert abs(pcc(a * scale + shift, b) - r) < 1e-9
    assert abs(r - stats.pearsonr(a, b)[0]) < 1e-9
    assert -1 - 1e-12 <= r <= 1 + 1e-12


def test_accuracy_units():
    assert accuracy([0, 1, 2, 2], [0, 1, 2, 2]) == 1.0
    assert accuracy([0, 1, 2, 2], [1, 1, 0, 2]) == 0.5
    assert accuracy([3], [1]) == 0.0
    with pytest.raises(ShapeError):
        accuracy([1, 2], [1])


def test_mean_std():
    assert mean_std([1.0, 2.0, 3.0]) == (2.0, 1.0)


def test_partition_3024():
    folds = five_fold_split(3024, seed=0)
    assert sorted(len(f.test) for f in folds) == [604, 605, 605, 605, 605]


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 400), st.integers(0, 2**31))
def test_partition_laws(n, seed):
    folds = five_fold_split(n, seed)
    tests = [f.test for f in folds]
    everything = np.concatenate(tests)
    assert np.array_equal(np.sort(everything), np.arange(n))
    sizes = [len(t) for t in tests]
    assert max(sizes) - min(sizes) <= 1
    for f in folds:
        assert not set(f.train) & set(f.val)
        assert not (set(f.train) | set(f.val)) & set(f.test)
        assert len(f.train) + len(f.val) + len(f.test) == n
    assert all(np.array_equal(a.test, b.test) for a, b in zip(folds, five_fold_split(n, seed)))


def test_partition_too_small():
    with pytest.raises(ConfigError):
        five_fold_split(4, 0)
