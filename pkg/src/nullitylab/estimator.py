"""scikit-learn style wrapper: rows of X are chart points."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analyzer as AN
from . import catalog as C
from .bilinear import FLAT_TOL
from .subspace import DEFAULT_TOL

FEATURES = ("mu", "nu_g", "dim_delta_beta", "dim_s_beta", "ell", "k")


class NullityProfiler(TransformerMixin, BaseEstimator):
    """Per-point nullity profile of a catalog immersion.

    ``fit`` only validates the points and records the case histogram seen;
    there is nothing to learn. ``transform`` returns the integer invariants
    in ``FEATURES`` order and ``predict`` returns the case labels.
    """

    def __init__(self, immersion="clifford_torus", tol_rank=DEFAULT_TOL, tol_flat=FLAT_TOL, seed=0):
        self.immersion = immersion
        self.tol_rank = tol_rank
        self.tol_flat = tol_flat
        self.seed = seed

    def _defn(self):
        if isinstance(self.immersion, C.ImmersionDef):
            return self.immersion
        return C.get(self.immersion)

    def _reports(self, X):
        X = check_array(X, dtype=float)
        d = self._defn()
        if X.shape[1] != d.n:
            raise ValueError(f"X has {X.shape[1]} columns but {d.name} has dimension {d.n}")
        return [AN.analyze_point(d, x, self.tol_rank, self.tol_flat, self.seed).report for x in X]

    def fit(self, X, y=None):
        reports = self._reports(X)
        self.n_features_in_ = self._defn().n
        cases, counts = np.unique([r.case for r in reports], return_counts=True)
        self.case_counts_ = dict(zip(cases.tolist(), counts.tolist()))
        return self

    def transform(self, X):
        check_is_fitted(self, "case_counts_")
        reports = self._reports(X)
        return np.array([[getattr(r, f) for f in FEATURES] for r in reports], dtype=int).reshape(-1, len(FEATURES))

    def predict(self, X):
        check_is_fitted(self, "case_counts_")
        return np.array([r.case for r in self._reports(X)], dtype=object)

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURES, dtype=object)
