"""scikit-learn style wrappers.

Inputs are arrays of tangent points with columns (x1, x2, y1, y2). The metric is a
hyperparameter, so these compose with ``Pipeline`` and ``clone`` but there is
nothing to learn: ``fit`` only validates and, for the verifier and classifier,
records diagnostics.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import classify as cls
from . import identities as ident
from .frame import INVARIANT_COLUMNS
from .geometry import Geometry
from .metric import MetricSpec, catalog_entry


def _resolve(metric, params) -> MetricSpec:
    if isinstance(metric, MetricSpec):
        if params:
            raise ValueError("params apply to catalog names only")
        return metric
    return catalog_entry(metric, **(params or {}))


def _points(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != 4:
        raise ValueError(f"expected 4 columns (x1, x2, y1, y2), got {X.shape[1]}")
    return X


class BerwaldInvariants(TransformerMixin, BaseEstimator):
    """Map tangent points to the invariant table (one column per name in ``columns``)."""

    def __init__(self, metric="euclidean", params=None, columns=None, chunk=ident.CHUNK):
        self.metric = metric
        self.params = params
        self.columns = columns
        self.chunk = chunk

    def fit(self, X, y=None):
        _points(X)
        self.spec_ = _resolve(self.metric, self.params)
        cols = tuple(self.columns) if self.columns is not None else INVARIANT_COLUMNS
        unknown = set(cols) - set(INVARIANT_COLUMNS)
        if unknown:
            raise ValueError(f"unknown invariant columns {sorted(unknown)}")
        self.columns_ = cols
        self.n_features_in_ = 4
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = _points(X)
        out = []
        for start in range(0, len(X), self.chunk):
            t = Geometry(self.spec_, X[start:start + self.chunk]).invariant_table()
            out.append(np.column_stack([t[c] for c in self.columns_]))
        return np.concatenate(out)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "columns_")
        return np.asarray(self.columns_, dtype=object)


class IdentityVerifier(BaseEstimator):
    """Run the identity suite; ``predict`` flags points where every identity passes."""

    def __init__(self, metric="euclidean", params=None, tolerances=None):
        self.metric = metric
        self.params = params
        self.tolerances = tolerances

    def fit(self, X, y=None):
        X = _points(X)
        self.spec_ = _resolve(self.metric, self.params)
        self.tolerances_ = ident.tolerance_table(self.tolerances)
        self.reports_ = ident.run_suite(self.spec_, X, self.tolerances_)
        self.summary_ = ident.summarize(self.reports_)
        self.n_features_in_ = 4
        return self

    def predict(self, X):
        check_is_fitted(self, "spec_")
        X = _points(X)
        return np.array([r.passed for r in ident.run_suite(self.spec_, X, self.tolerances_)])

    def score(self, X, y=None):
        """Fraction of points at which every identity passes."""
        return float(np.mean(self.predict(X)))


class MetricClassifier(BaseEstimator):
    """Curvature-condition flags and theorem probes from a sample of tangent points.

    This classifies the metric, not the points, so there is no ``predict``.
    """

    def __init__(self, metric="euclidean", params=None, threshold=cls.DEFAULT_THRESHOLD):
        self.metric = metric
        self.params = params
        self.threshold = threshold

    def fit(self, X, y=None):
        X = _points(X)
        self.spec_ = _resolve(self.metric, self.params)
        stats = cls.sample_statistics(self.spec_, X)
        c = cls.classify(self.spec_, X, self.threshold, stats=stats)
        self.flags_ = c.flags
        self.statistics_ = c.statistics
        self.probes_ = {k: cls.theorem_probe(self.spec_, k, X, self.threshold, stats=stats)
                        for k in cls.THEOREMS}
        self.n_features_in_ = 4
        return self
