import numpy as np
import pytest
from sklearn.base import clone
from sklearn.decomposition import PCA
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from powerspd import (
    FrechetMean,
    PowerAlphaEstimator,
    PowerEuclideanTransformer,
    SimDesign,
    dist_power,
    fit_alpha,
    frechet_mean,
    sample_tensors,
)
from powerspd.estimators import check_matrices

from conftest import random_spd


@pytest.fixture(scope="module")
def sample():
    S, _ = sample_tensors(SimDesign(), 60, np.random.default_rng(3))
    return S


def test_check_matrices():
    assert check_matrices(np.eye(3)).shape == (1, 3, 3)
    with pytest.raises(ValueError):
        check_matrices(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        check_matrices(np.array([[[1.0, 2.0], [0.0, 1.0]]]))


@pytest.mark.parametrize("est", [PowerEuclideanTransformer(0.3), PowerAlphaEstimator(alpha_step=0.05), FrechetMean(2)])
def test_clone_and_params(est):
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    twin.set_params(**{next(iter(est.get_params())): 0.0})
    assert twin.get_params() != est.get_params()


@pytest.mark.parametrize("est", [PowerEuclideanTransformer(), PowerAlphaEstimator(), FrechetMean()])
def test_not_fitted(est):
    with pytest.raises(NotFittedError):
        est.transform(np.eye(3)[None])


def test_transformer_round_trip(rng):
    X = random_spd(rng, 3, size=8)
    for alpha in (-0.5, 0.0, 0.5):
        t = PowerEuclideanTransformer(alpha).fit(X)
        Z = t.transform(X)
        assert Z.shape == (8, 6)
        assert np.allclose(t.inverse_transform(Z), X, rtol=1e-9)


def test_transformer_coordinates_give_power_distance(rng):
    X = random_spd(rng, 3, size=2)
    Z = PowerEuclideanTransformer(0.5).fit_transform(X)
    # vech counts off-diagonals once; restore the full-matrix norm
    w = np.array([1, 2, 2, 1, 2, 1])
    assert np.sqrt(np.sum(w * (Z[0] - Z[1]) ** 2)) == pytest.approx(dist_power(X[0], X[1], 0.5))


def test_transformer_dimension_check(rng):
    t = PowerEuclideanTransformer().fit(random_spd(rng, 3, size=3))
    with pytest.raises(ValueError):
        t.transform(random_spd(rng, 2, size=3))


def test_pipeline_with_pca(rng):
    X = random_spd(rng, 3, size=30)
    pipe = make_pipeline(PowerEuclideanTransformer(0.5), PCA(n_components=2))
    assert pipe.fit_transform(X).shape == (30, 2)


def test_alpha_estimator_matches_function(sample):
    est = PowerAlphaEstimator().fit(sample)
    fit = fit_alpha(sample)
    assert est.alpha_ == fit.alpha_hat and est.ci_ == (fit.ci_lo, fit.ci_hi)
    assert np.array_equal(est.loglik_, fit.loglik)
    assert est.mean_.shape == (6,) and est.covariance_.shape == (6, 6)
    assert est.transform(sample).shape == (60, 6)
    scores = est.score_samples(sample)
    assert scores.sum() == pytest.approx(np.nanmax(fit.loglik), rel=1e-10)
    assert est.score(sample) == pytest.approx(scores.mean())


def test_frechet_mean_estimator(rng):
    X = random_spd(rng, 3, size=5)
    est = FrechetMean(0.5).fit(X)
    assert np.allclose(est.mean_, frechet_mean(X, 0.5).mean)
    d = est.transform(X)
    assert d.shape == (5, 1)
    assert np.allclose(d[:, 0], [dist_power(S, est.mean_, 0.5) for S in X])
