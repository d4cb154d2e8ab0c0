"""scikit-learn style wrappers around the beam selection, precoders and
power allocation.

``fit`` takes a channel; ``transform`` maps rows of data symbols to
beam-domain transmit vectors (or scaled symbols for the allocator). The
wrappers hold no state beyond fitted attributes, so ``get_params`` /
``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_channel, check_positive, check_symbols
from .beamspace import VcmBasis, preselect, project, vcm_basis
from .channel import CellGeometry
from .mutual_info import qam
from .opgpa import QosTarget, opgpa_gains
from .precoding import effective_singular_values, vaac_pgp, zf_pgp, zfp_mi

__all__ = [
    "BeamspaceSelector",
    "ZFPrecoder",
    "ZFPGPPrecoder",
    "VAACPGPPrecoder",
    "OPGPAAllocator",
]


def _as_vc(H_v):
    from .beamspace import virtual_channel

    H_v = check_channel(H_v, "H_v")
    n_g, n_d = H_v.shape
    return virtual_channel(H_v, np.arange(n_g), np.arange(n_d))


class BeamspaceSelector(TransformerMixin, BaseEstimator):
    """Project antenna-domain channels on the DFT beams and keep the
    ``n_v_init`` strongest ones.

    Attributes
    ----------
    beams_ : ndarray
        Selected beam indices, strongest first.
    power_fraction_ : float
        Share of the total channel power on the selected beams.
    """

    def __init__(self, n_v_init=20, n_ux=10, n_uz=10, spacing=0.5):
        self.n_v_init = n_v_init
        self.n_ux = n_ux
        self.n_uz = n_uz
        self.spacing = spacing

    def _basis(self) -> VcmBasis:
        return vcm_basis(CellGeometry(n_ux=self.n_ux, n_uz=self.n_uz, spacing=self.spacing))

    def fit(self, H_d, y=None):
        H_d = check_channel(H_d, "H_d", min_cols=self.n_ux * self.n_uz)
        self.basis_ = self._basis()
        ps = preselect(project(H_d, self.basis_), self.n_v_init)
        self.preselection_ = ps
        self.beams_ = ps.v_ps
        self.power_fraction_ = ps.p_f
        return self

    def transform(self, H_d):
        check_is_fitted(self, "beams_")
        H_d = check_channel(H_d, "H_d")
        return project(H_d, self.basis_)[:, self.beams_]


class _PrecoderBase(TransformerMixin, BaseEstimator):
    def __init__(self, snr0=100.0, M=16, L=10):
        self.snr0 = snr0
        self.M = M
        self.L = L

    def _build(self, vc):  # pragma: no cover - abstract
        raise NotImplementedError

    def fit(self, H_v, y=None):
        check_positive(self.snr0, "snr0")
        vc = _as_vc(H_v)
        self.factors_, mi = self._build(vc)
        self.precoder_ = self.factors_.matrix
        self.mi_ = np.asarray(mi, dtype=float)
        self.n_ue_ = vc.H_v.shape[0]
        return self

    def transform(self, X):
        """Transmit vectors ``P x`` for each row ``x`` of data symbols."""
        check_is_fitted(self, "precoder_")
        X = check_symbols(X, self.precoder_.shape[1])
        return X @ self.precoder_.T

    def score(self, H_v=None, y=None) -> float:
        """Sum mutual information (bits per channel use) of the fitted group."""
        check_is_fitted(self, "mi_")
        return float(self.mi_.sum())


class ZFPrecoder(_PrecoderBase):
    """Zero-forcing precoder with unit power per UE on average."""

    def _build(self, vc):
        P, mi = zfp_mi(vc, self.snr0, qam(self.M), self.L)
        return P, mi


class ZFPGPPrecoder(_PrecoderBase):
    """Zero forcing followed by one optimized 2x2 PGP block per UE."""

    def __init__(self, snr0=100.0, M=16, L=10, exact=False):
        super().__init__(snr0, M, L)
        self.exact = exact

    def _build(self, vc):
        return zf_pgp(vc, self.snr0, qam(self.M), self.L, exact=self.exact)


class VAACPGPPrecoder(_PrecoderBase):
    """PGP blocks on the right singular vectors of the group channel."""

    def __init__(self, snr0=100.0, M=16, L=10, exact=False):
        super().__init__(snr0, M, L)
        self.exact = exact

    def _build(self, vc):
        return vaac_pgp(vc, self.snr0, qam(self.M), self.L, exact=self.exact)


class OPGPAAllocator(TransformerMixin, BaseEstimator):
    """Per-UE gains equalizing ZF-PGP throughput at ``I_S`` bits.

    ``fit`` takes the unit-SNR group channel; ``transform`` scales the
    symbol pair of UE ``m`` (columns ``2m, 2m+1``) by ``sqrt(k_m)``.
    """

    def __init__(self, I_S=3.0, snr0=100.0, snr1=None, M=16, L=10):
        self.I_S = I_S
        self.snr0 = snr0
        self.snr1 = snr1
        self.M = M
        self.L = L

    def fit(self, H_v, y=None):
        check_positive(self.snr0, "snr0")
        vc = _as_vc(H_v)
        c = qam(self.M)
        target = QosTarget(self.I_S, self.snr0, self.snr1)
        target.check(c.M)
        self.result_ = opgpa_gains(effective_singular_values(vc), target, c, self.L)
        self.k_ = self.result_.k
        self.snr_req_ = self.result_.snr_req
        self.feasible_ = self.result_.feasible
        return self

    def transform(self, X):
        check_is_fitted(self, "k_")
        X = check_symbols(X, 2 * self.k_.size)
        return X * np.repeat(np.sqrt(self.k_), 2)
