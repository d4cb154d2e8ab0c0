"""DFT beamspace (virtual channel model) and power-ranked beam pre-selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import dft

from .channel import CellGeometry

__all__ = [
    "VcmBasis",
    "PreselectionResult",
    "VirtualChannel",
    "vcm_basis",
    "project",
    "inverse_project",
    "beam_powers",
    "preselect",
    "beams_for_fraction",
    "virtual_channel",
]


@dataclass(frozen=True)
class VcmBasis:
    B: np.ndarray

    @property
    def n_t(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class PreselectionResult:
    """Outcome of beam pre-selection.

    Attributes
    ----------
    v_ps : ndarray of int
        Selected beam indices (0-based), strongest first.
    p_ps : ndarray
        Powers of the selected beams, descending.
    p_f : float
        Fraction of the total power captured by the selection.
    m_v_ps : ndarray of int, shape (n_ue, n_selected)
        For each UE, the selected beams re-ordered by that UE's power.
    """

    v_ps: np.ndarray
    p_ps: np.ndarray
    p_f: float
    m_v_ps: np.ndarray


@dataclass(frozen=True)
class VirtualChannel:
    """Channel of a set of UEs restricted to a set of beams, with its SVD.

    ``H_v = U @ diag(s) @ Vh``; ``U`` is indexed by UE along its rows.
    """

    H_v: np.ndarray
    U: np.ndarray
    s: np.ndarray
    Vh: np.ndarray
    beam_indices: np.ndarray
    ue_indices: np.ndarray

    @property
    def shape(self):
        return self.H_v.shape


def vcm_basis(geom: CellGeometry) -> VcmBasis:
    """Unitary Kronecker-DFT basis ``F_{n_uz} kron F_{n_ux}``."""
    B = np.kron(dft(geom.n_uz, scale="sqrtn"), dft(geom.n_ux, scale="sqrtn"))
    return VcmBasis(B=B)


def project(H_d: np.ndarray, basis: VcmBasis) -> np.ndarray:
    H_d = np.asarray(H_d)
    if H_d.shape[-1] != basis.n_t:
        raise ValueError(
            f"channel has {H_d.shape[-1]} antenna columns, basis expects {basis.n_t}"
        )
    return H_d @ basis.B


def inverse_project(H_dv: np.ndarray, basis: VcmBasis) -> np.ndarray:
    H_dv = np.asarray(H_dv)
    if H_dv.shape[-1] != basis.n_t:
        raise ValueError(
            f"beamspace channel has {H_dv.shape[-1]} columns, basis expects {basis.n_t}"
        )
    return H_dv @ basis.B.conj().T


def beam_powers(H_v: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(H_v) ** 2, axis=0)


def _descending(p: np.ndarray) -> np.ndarray:
    # stable sort on -p: ties resolve to the lower beam index
    return np.argsort(-p, kind="stable")


def preselect(H_v: np.ndarray, n_v_init: int) -> PreselectionResult:
    """Keep the ``n_v_init`` beams carrying the most power over all UEs."""
    H_v = np.asarray(H_v)
    n_t = H_v.shape[1]
    if not 1 <= n_v_init <= n_t:
        raise ValueError(f"n_v_init must lie in [1, {n_t}], got {n_v_init}")
    P = beam_powers(H_v)
    order = _descending(P)
    v_ps = order[:n_v_init]
    p_ps = P[v_ps]
    total = P.sum()
    p_f = float(p_ps.sum() / total) if total > 0 else 0.0
    if n_v_init == n_t:
        p_f = 1.0 if total > 0 else 0.0
    per_ue = np.abs(H_v[:, v_ps]) ** 2
    m_v_ps = np.empty((H_v.shape[0], n_v_init), dtype=int)
    for n in range(H_v.shape[0]):
        m_v_ps[n] = v_ps[_descending(per_ue[n])]
    return PreselectionResult(v_ps=v_ps, p_ps=p_ps, p_f=p_f, m_v_ps=m_v_ps)


def beams_for_fraction(H_v: np.ndarray, fraction: float) -> int:
    """Smallest beam count whose strongest beams capture ``fraction`` of the power."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    P = np.sort(beam_powers(np.asarray(H_v)))[::-1]
    cum = np.cumsum(P) / P.sum()
    # guard the comparison against round-off in the cumulative sum
    return int(min(np.searchsorted(cum, fraction - 1e-12) + 1, P.size))


def virtual_channel(H_dv: np.ndarray, ue_indices, beam_indices) -> VirtualChannel:
    """Restrict a beamspace channel to some UEs and beams and factor it."""
    ue_indices = np.asarray(ue_indices, dtype=int)
    beam_indices = np.asarray(beam_indices, dtype=int)
    H = np.asarray(H_dv)[np.ix_(ue_indices, beam_indices)]
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    return VirtualChannel(
        H_v=H, U=U, s=s, Vh=Vh, beam_indices=beam_indices, ue_indices=ue_indices
    )
