"""scikit-learn style wrappers around the sample-based estimators.

Points are passed as ``(n, 2)`` arrays of (re, im) coordinates so the objects
slot into pipelines; the underlying functions work on complex arrays.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ifs import IFSSystem
from .measure import empirical_Dq
from .projection import AtomicMeasure1D, as_direction, density, inner
from .slices import code_points


def _to_complex(X) -> np.ndarray:
    X = check_array(X, ensure_min_features=2)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns (re, im), got {X.shape[1]}")
    return X[:, 0] + 1j * X[:, 1]


def _weights(sample_weight, n):
    if sample_weight is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(sample_weight, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("sample_weight must be nonnegative with positive sum and one entry per row")
    return w / w.sum()


class ProjectionTransformer(TransformerMixin, BaseEstimator):
    """Maps planar points to ``<z, w>``.  Stateless; ``fit`` only checks the direction."""

    def __init__(self, angle: float = 0.0):
        self.angle = angle

    def fit(self, X, y=None):
        _to_complex(X)
        self.direction_ = as_direction(complex(np.exp(1j * self.angle)))
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "direction_")
        return inner(self.direction_, _to_complex(X))[:, None]


class HistogramDensity(BaseEstimator):
    """Fixed-width histogram of projected points; ``score_samples`` returns log density."""

    def __init__(self, angle: float = 0.0, h: float = 0.01, support: tuple[float, float] | None = None):
        self.angle = angle
        self.h = h
        self.support = support

    def fit(self, X, y=None, sample_weight=None):
        w = _to_complex(X)
        z = as_direction(complex(np.exp(1j * self.angle)))
        x = inner(z, w)
        wts = _weights(sample_weight, len(x))
        lo, hi = self.support if self.support is not None else (x.min() - self.h, x.max() + self.h)
        self.grid_ = density(AtomicMeasure1D(x, wts), lo, hi, self.h)
        self.direction_ = z
        self.n_features_in_ = 2
        return self

    def score_samples(self, X):
        check_is_fitted(self, "grid_")
        g = self.grid_.value_at(inner(self.direction_, _to_complex(X)))
        with np.errstate(divide="ignore"):
            return np.log(g)


class LqDimension(BaseEstimator):
    """Box-moment estimate of ``D_q``; results land in ``dimension_`` and ``ci_``."""

    def __init__(self, q: float = 2.0, scale_range: tuple[float, float] = (1e-3, 1e-1), n_scales=None):
        self.q = q
        self.scale_range = scale_range
        self.n_scales = n_scales

    def fit(self, X, y=None, sample_weight=None):
        pts = _to_complex(X)
        est = empirical_Dq(pts, self.q, self.scale_range, self.n_scales, weights=sample_weight,
                           with_correlation=False)
        self.estimate_ = est
        self.dimension_ = est.value
        self.ci_ = est.ci
        self.n_features_in_ = 2
        return self


class CorrelationDimension(BaseEstimator):
    """Pair-count estimate of ``D_2`` on an unweighted sample."""

    def __init__(self, scale_range: tuple[float, float] = (1e-3, 1e-1), n_scales=None):
        self.scale_range = scale_range
        self.n_scales = n_scales

    def fit(self, X, y=None):
        est = empirical_Dq(_to_complex(X), 2.0, self.scale_range, self.n_scales)
        self.estimate_ = est
        self.dimension_ = est.correlation_value
        self.ci_ = est.correlation_ci
        self.n_features_in_ = 2
        return self


class CodingTransformer(TransformerMixin, BaseEstimator):
    """Symbolic coding of points: row ``j`` holds the first ``depth`` symbols, -1 where coding fails."""

    def __init__(self, system: IFSSystem | None = None, depth: int = 8):
        self.system = system
        self.depth = depth

    def fit(self, X, y=None):
        if self.system is None:
            raise ValueError("a system is required")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        _to_complex(X)
        self.n_features_in_ = 2
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        words, _, ok = code_points(self.system, _to_complex(X), self.depth)
        words[~ok] = -1
        return words
