"""Thin scikit-learn-style wrappers over the functional pipeline.

These exist for interoperability (get_params/set_params, pipeline
composition); the underlying work lives in :mod:`ttradar.decomp` and
:mod:`ttradar.estimate`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .decomp import cpd_als, cpd_to_tt, reconstruct, tt_mdl, tt_recompress
from .errors import InvalidArgumentError
from .estimate import SmoothingPlan, estimate

__all__ = ["TensorTrainDenoiser", "RadarParameterEstimator"]


def _check_tensor(X, min_order=3):
    X = np.asarray(X)
    if X.ndim < min_order:
        raise InvalidArgumentError(
            f"expected a tensor of order >= {min_order}, got order {X.ndim}"
        )
    return np.ascontiguousarray(X, dtype=np.complex128)


class TensorTrainDenoiser(BaseEstimator, TransformerMixin):
    """Denoise complex tensors by TT-SVD with MDL rank selection.

    Parameters
    ----------
    method : {'tt_mdl', 'cpd_als', 'cpd_recompress'}
        Decomposition route used by :meth:`transform`.
    rank : int, optional
        CP rank for the ALS routes (required there, ignored by 'tt_mdl').
    recompress_eps : float
        Relative per-bond tolerance of the recompression route.
    """

    def __init__(self, method="tt_mdl", rank=None, recompress_eps=1e-2):
        self.method = method
        self.rank = rank
        self.recompress_eps = recompress_eps

    def fit(self, X, y=None):
        _check_tensor(X)
        self.n_modes_ = np.asarray(X).ndim
        return self

    def transform(self, X):
        X = _check_tensor(X)
        if self.method == "tt_mdl":
            result = tt_mdl(X)
            self.model_ = result.model
            self.diagnostics_ = result.diagnostics
            return result.denoised
        if self.method in ("cpd_als", "cpd_recompress"):
            if not self.rank:
                raise InvalidArgumentError(f"method {self.method!r} needs rank")
            cpd = cpd_als(X, R=self.rank)
            if self.method == "cpd_als":
                self.model_ = cpd
                return reconstruct(cpd)
            tt = tt_recompress(cpd_to_tt(cpd), self.recompress_eps)
            self.model_ = tt
            return reconstruct(tt)
        raise InvalidArgumentError(f"unknown method {self.method!r}")

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)


class RadarParameterEstimator(BaseEstimator):
    """Joint range/velocity/azimuth/elevation estimator.

    Parameters
    ----------
    config : RadarConfig
        Waveform and array geometry of the data.
    sub_dims : tuple of int
        Spatial-smoothing sub-aperture sizes.
    n_targets : int, optional
        Model order; chosen by MDL when omitted.
    """

    def __init__(self, config=None, sub_dims=(2, 2, 2, 2), n_targets=None):
        self.config = config
        self.sub_dims = sub_dims
        self.n_targets = n_targets

    def fit(self, X, y=None):
        if self.config is None:
            raise InvalidArgumentError("RadarParameterEstimator needs a config")
        X = _check_tensor(X, min_order=4)
        result = estimate(
            X, self.config, SmoothingPlan(self.sub_dims), n_targets=self.n_targets
        )
        self.result_ = result
        self.targets_ = result.targets
        return self

    def predict(self, X=None):
        """Array of shape (n_targets, 4): range m, velocity m/s, az rad, el rad."""
        if X is not None and not hasattr(self, "result_"):
            self.fit(X)
        return np.array(
            [
                [t.range_m, t.velocity_mps, t.azimuth_rad, t.elevation_rad]
                for t in self.targets_
            ]
        )
