"""Per-block power allocation that gives every UE of a ZF-PGP group the same
mutual information target.

All PGP blocks share one receive model once normalized by their effective
SNR, so a single inversion ``SNR_req(I_S)`` serves the whole group and the
gains follow in closed form: ``k_m = SNR_req / (2 s_m^2)``.

Effective singular values passed to this module are the SNR_0-scaled ones,
``s_m = sqrt(snr0) * s_eff[m]``, where ``s_eff`` comes from
:func:`mmwave_pgp.precoding.effective_singular_values` on the unit-SNR
channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mutual_info import Constellation
from .precoding import EffectiveChannel, PgpBlockOptimizer, get_optimizer

__all__ = [
    "InfeasibleTargetError",
    "QosTarget",
    "OpgpaResult",
    "snr_required",
    "opgpa_gains",
    "average_snrs",
    "normalized_noise_variance",
    "BRACKET_DB",
    "MI_TOL",
]

BRACKET_DB = (-20.0, 60.0)
MI_TOL = 0.005


class InfeasibleTargetError(ValueError):
    pass


@dataclass(frozen=True)
class QosTarget:
    """Per-UE throughput target ``I_S`` (bits) with initial and cap SNRs (linear)."""

    I_S: float
    snr0: float
    snr1: float | None = None

    def check(self, M: int) -> None:
        top = 2 * math.log2(M)
        if not 0.0 <= self.I_S <= top:
            raise ValueError(f"I_S must lie in [0, {top}], got {self.I_S}")
        if self.snr0 <= 0:
            raise ValueError("snr0 must be positive")
        if self.snr1 is not None and not self.snr1 > self.snr0:
            raise ValueError("snr1 must exceed snr0")


@dataclass(frozen=True)
class OpgpaResult:
    k: np.ndarray
    snr_req: float
    snr_eff: np.ndarray
    snr_opgpa: float
    snr_nopgpa: float
    feasible: bool

    @property
    def savings_db(self) -> float:
        return 10 * math.log10(self.snr_nopgpa / self.snr_opgpa)


def snr_required(
    I_S: float,
    c: Constellation,
    L: int = 10,
    optimizer: PgpBlockOptimizer | None = None,
    tol: float = MI_TOL,
) -> float:
    """Effective SNR at which the optimized PGP block reaches ``I_S`` bits.

    Bisection in dB over ``BRACKET_DB``; stops once the achieved mutual
    information is within ``tol`` of the target. Results are memoized on the
    optimizer.
    """
    top = 2 * c.bits
    if I_S < 0:
        raise ValueError("I_S must be non-negative")
    if I_S >= top - tol:
        raise InfeasibleTargetError(
            f"I_S = {I_S} is not reachable at finite SNR (saturation at {top} bits)"
        )
    opt = optimizer or get_optimizer(c, L)
    cache = opt.__dict__.setdefault("_snr_req", {})
    key = (round(float(I_S), 12), tol)
    if key in cache:
        return cache[key]

    lo, hi = BRACKET_DB

    def mi(db):
        return opt.best(10 ** (db / 10)).mi

    if I_S <= mi(lo) + tol:
        cache[key] = 10 ** (lo / 10)
        return cache[key]
    if mi(hi) < I_S - tol:
        raise InfeasibleTargetError(f"I_S = {I_S} needs more than {hi} dB effective SNR")
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        v = mi(mid)
        if abs(v - I_S) <= tol:
            lo = hi = mid
            break
        if v < I_S:
            lo = mid
        else:
            hi = mid
    cache[key] = 10 ** (hi / 10)
    return cache[key]


def _scaled(eff, snr0: float) -> np.ndarray:
    s = eff.s_eff if isinstance(eff, EffectiveChannel) else np.asarray(eff, dtype=float)
    if np.any(s <= 0):
        raise ValueError("effective singular values must be positive")
    return math.sqrt(snr0) * s


def average_snrs(eff, target: QosTarget, snr_req: float) -> tuple[float, float]:
    """Average SNR used with and without per-block allocation.

    ``SNR_OPGPA = snr0 SNR_req / N_g * sum_m 1 / s_m^2`` and
    ``SNR_NOPGPA = snr0 SNR_req / min_m s_m^2``.
    """
    s = _scaled(eff, target.snr0)
    base = target.snr0 * snr_req
    return float(base * np.mean(1.0 / s**2)), float(base / np.min(s) ** 2)


def opgpa_gains(
    eff,
    target: QosTarget,
    c: Constellation | None = None,
    L: int = 10,
    snr_req: float | None = None,
    optimizer: PgpBlockOptimizer | None = None,
) -> OpgpaResult:
    """Closed-form gains ``k_m`` bringing every block to ``SNR_req(I_S)``.

    Either ``snr_req`` or the constellation ``c`` (to compute it) must be
    given. Under a cap ``snr1`` the allocation is feasible iff
    ``min_m s_m >= sqrt(snr0 SNR_req / snr1)``; infeasibility is reported in
    the result, gains are never clipped.
    """
    if snr_req is None:
        if c is None:
            raise ValueError("need either snr_req or a constellation")
        target.check(c.M)
        snr_req = snr_required(target.I_S, c, L, optimizer)
    s = _scaled(eff, target.snr0)
    k = snr_req / (2 * s**2)
    feasible = True
    if target.snr1 is not None:
        feasible = bool(np.min(s) >= math.sqrt(target.snr0 * snr_req / target.snr1))
    snr_op, snr_nop = average_snrs(eff, target, snr_req)
    return OpgpaResult(
        k=k,
        snr_req=float(snr_req),
        snr_eff=2 * k * s**2,
        snr_opgpa=snr_op,
        snr_nopgpa=snr_nop,
        feasible=feasible,
    )


def normalized_noise_variance(s_m: float, k_m: float) -> float:
    """Noise variance per component after dividing block ``m`` by ``sqrt(2 k_m) s_m``."""
    return 1.0 / (2 * k_m * s_m**2)
