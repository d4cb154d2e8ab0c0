"""Inter-sub-group interference (MAI) for JSDM-FA sub-groups sharing a subcarrier."""

from __future__ import annotations

import numpy as np

from .precoding import PrecoderFactors

__all__ = [
    "MaiReport",
    "mai_covariance",
    "mai_powers",
    "effective_snr_jsdm",
    "effective_snr_sinr",
    "mai_report",
]


def mai_covariance(H_cross, P_int) -> np.ndarray:
    """Covariance ``H P P^H H^H`` of the interference from one sub-group.

    ``H_cross`` holds the victim UEs' unit-SNR channels over the interferer's
    beams; ``P_int`` is the interferer's precoder (array or factors). Input
    symbols are uncorrelated with unit power.
    """
    P = P_int.matrix if isinstance(P_int, PrecoderFactors) else np.asarray(P_int)
    H = np.atleast_2d(np.asarray(H_cross))
    if H.shape[1] != P.shape[0]:
        raise ValueError(
            f"cross channel has {H.shape[1]} beam columns, precoder has {P.shape[0]} rows"
        )
    A = H @ P
    K = A @ A.conj().T
    return 0.5 * (K + K.conj().T)


def mai_powers(Ks) -> np.ndarray:
    """Total MAI power per victim UE: sum of the covariance diagonals."""
    Ks = list(Ks)
    if not Ks:
        raise ValueError("need at least one covariance")
    return np.sum([np.real(np.diag(K)) for K in Ks], axis=0)


def effective_snr_jsdm(snr0: float, p_total) -> np.ndarray:
    """Per-UE effective SNR ``(1/snr0 + 1/p)^-1``.

    A UE with zero MAI keeps ``snr0``.
    """
    if snr0 <= 0:
        raise ValueError("snr0 must be positive")
    p = np.asarray(p_total, dtype=float)
    with np.errstate(divide="ignore"):
        inv_p = np.where(p > 0, 1.0 / np.where(p > 0, p, 1.0), 0.0)
    return 1.0 / (1.0 / snr0 + inv_p)


def effective_snr_sinr(snr0: float, p_total) -> np.ndarray:
    """Conventional alternative: ``snr0 / (1 + snr0 p)``, with the interference
    scaled by the same ``snr0`` as the signal and added to the unit noise."""
    if snr0 <= 0:
        raise ValueError("snr0 must be positive")
    p = np.asarray(p_total, dtype=float)
    return snr0 / (1.0 + snr0 * p)


class MaiReport:
    """Covariances, per-pair and total MAI powers and effective SNRs of one victim."""

    def __init__(self, covariances: dict, snr0: float, convention: str = "printed"):
        self.covariances = covariances
        self.p_pair = {key: np.real(np.diag(K)) for key, K in covariances.items()}
        self.p_total = mai_powers(covariances.values()) if covariances else None
        if convention not in ("printed", "sinr"):
            raise ValueError(f"unknown convention {convention!r}")
        self.convention = convention
        if self.p_total is None:
            self.snr_eff = None
        elif convention == "printed":
            self.snr_eff = effective_snr_jsdm(snr0, self.p_total)
        else:
            self.snr_eff = effective_snr_sinr(snr0, self.p_total)


def mai_report(H_dv, victim, interferers, snr0: float, convention: str = "printed") -> MaiReport:
    """MAI seen by the ``victim`` sub-group from each of ``interferers``.

    ``victim`` supplies ``ue_indices``; each interferer is a pair
    ``(sub-group, PrecoderFactors)`` whose sub-group supplies ``vcmb_set``.
    """
    H_dv = np.asarray(H_dv)
    covs = {}
    for idx, (sg, P) in enumerate(interferers):
        H_cross = H_dv[np.ix_(victim.ue_indices, sg.vcmb_set)]
        covs[idx] = mai_covariance(H_cross, P)
    return MaiReport(covs, snr0, convention)
