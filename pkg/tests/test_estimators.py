import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from berwald import identities as ident
from berwald import metric as mt
from berwald.estimators import BerwaldInvariants, IdentityVerifier, MetricClassifier
from berwald.frame import INVARIANT_COLUMNS


@pytest.fixture(scope="module")
def X():
    return ident.sample_points(mt.catalog_entry("funk"), 12, seed=4)


def test_invariant_transformer(X):
    t = BerwaldInvariants(metric="funk", columns=["K", "I"])
    Z = t.fit_transform(X)
    assert Z.shape == (12, 2)
    np.testing.assert_allclose(Z[:, 0], -0.25, atol=1e-8)
    assert list(t.get_feature_names_out()) == ["K", "I"]
    full = BerwaldInvariants(metric="funk", chunk=5).fit(X).transform(X)
    assert full.shape == (12, len(INVARIANT_COLUMNS))
    np.testing.assert_allclose(full[:, INVARIANT_COLUMNS.index("I")], Z[:, 1], rtol=1e-12)


def test_params_and_clone():
    t = BerwaldInvariants(metric="randers-flat", params={"b": 0.25})
    c = clone(t)
    assert c.get_params()["params"] == {"b": 0.25}
    c.set_params(metric="euclidean", params=None)
    assert c.metric == "euclidean"


def test_pipeline(X):
    pipe = make_pipeline(BerwaldInvariants(metric="funk", columns=["I", "J"]), StandardScaler())
    Z = pipe.fit_transform(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)


def test_input_validation(X):
    with pytest.raises(ValueError):
        BerwaldInvariants().fit(X[:, :3])
    with pytest.raises(ValueError):
        BerwaldInvariants(columns=["nope"]).fit(X)
    with pytest.raises(ValueError):
        BerwaldInvariants(metric=mt.catalog_entry("funk"), params={"b": 1}).fit(X)
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        BerwaldInvariants().transform(X)


def test_verifier(X):
    v = IdentityVerifier(metric="funk").fit(X)
    assert v.summary_["bianchi.2"]["pass"]
    assert not v.summary_["dj.omega21"]["pass"]
    assert v.score(X) == 0.0
    loose = IdentityVerifier(metric="funk", tolerances={"dj.omega21": 100}).fit(X)
    assert loose.predict(X).all() and loose.score(X) == 1.0


def test_classifier(X):
    c = MetricClassifier(metric=mt.catalog_entry("funk")).fit(X)
    assert c.flags_["constant_K"] and not c.flags_["landsberg"]
    assert all(p.verdict != "VIOLATION" for p in c.probes_.values())
