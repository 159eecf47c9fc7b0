"""scikit-learn style wrapper around the splitting recovery."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .model import SamplingScheme, forward_sample
from .recovery import RecoveryConfig, recover, recover_noisy

__all__ = ["SplittingRecovery"]


class SplittingRecovery(BaseEstimator):
    """Fit a discrete measure to radial-line Fourier samples.

    ``fit(Y)`` takes the ``(T, L)`` measurement matrix for the scheme
    given by ``directions``, ``freqs`` and ``bandwidth`` (``freqs=None``
    means all of ``-N..N``).  ``lam > 0`` selects the noisy variant.

    Fitted attributes: ``positions_``, ``amplitudes_``, ``result_``.
    """

    def __init__(self, directions=None, bandwidth=1, freqs=None, lprime=None, lam=0.0, sdp_tol=1e-12,
                 noise_level=None):
        self.directions = directions
        self.bandwidth = bandwidth
        self.freqs = freqs
        self.lprime = lprime
        self.lam = lam
        self.sdp_tol = sdp_tol
        self.noise_level = noise_level

    def _scheme(self) -> SamplingScheme:
        N = int(self.bandwidth)
        freqs = np.arange(-N, N + 1) if self.freqs is None else self.freqs
        return SamplingScheme(self.directions, freqs, N)

    def fit(self, Y, y=None):
        scheme = self._scheme()
        cfg = RecoveryConfig(lprime=self.lprime, lam=float(self.lam), sdp_tol=self.sdp_tol)
        if self.lam > 0 or self.noise_level is not None:
            res = recover_noisy(Y, scheme, cfg, noise_level=self.noise_level)
        else:
            res = recover(Y, scheme, cfg)
        self.result_ = res
        self.positions_ = res.measure.positions
        self.amplitudes_ = res.measure.amplitudes
        self.n_atoms_ = res.measure.M
        return self

    def predict(self, X=None):
        """Samples of the fitted measure on the scheme (``X`` is ignored)."""
        check_is_fitted(self, "result_")
        return forward_sample(self.result_.measure, self._scheme())

    def score(self, Y, y=None) -> float:
        """Negative relative residual of the fitted samples against ``Y``."""
        Y = np.asarray(Y, dtype=complex)
        return -float(np.linalg.norm(self.predict() - Y) / np.linalg.norm(Y))
